#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace oltc {

/// Exact rational number over 64-bit integers, used for tap-step arithmetic
/// where decimal inputs like "0.005" must not drift.
class Rational {
 public:
  Rational() = default;
  Rational(std::int64_t num, std::int64_t den);

  /// Parses a plain decimal literal ("0.95", "-1.5", "1e-3" is rejected).
  static Rational parse_decimal(std::string_view text);

  /// Shortest round-trip decimal of a double, parsed exactly.
  static Rational from_double(double value);

  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }
  bool is_integer() const { return den_ == 1; }
  double to_double() const;
  std::string str() const;

  friend Rational operator+(const Rational& a, const Rational& b);
  friend Rational operator-(const Rational& a, const Rational& b);
  friend Rational operator*(const Rational& a, const Rational& b);
  friend Rational operator/(const Rational& a, const Rational& b);
  friend bool operator==(const Rational& a, const Rational& b) = default;
  friend bool operator<(const Rational& a, const Rational& b);

 private:
  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

}  // namespace oltc
