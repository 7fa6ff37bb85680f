#include "oltc/rational.hpp"

#include <charconv>
#include <numeric>
#include <stdexcept>

namespace oltc {

namespace {

std::int64_t checked_mul(std::int64_t a, std::int64_t b) {
  std::int64_t out = 0;
  if (__builtin_mul_overflow(a, b, &out)) {
    throw std::overflow_error("rational overflow");
  }
  return out;
}

std::int64_t checked_add(std::int64_t a, std::int64_t b) {
  std::int64_t out = 0;
  if (__builtin_add_overflow(a, b, &out)) {
    throw std::overflow_error("rational overflow");
  }
  return out;
}

}  // namespace

Rational::Rational(std::int64_t num, std::int64_t den) {
  if (den == 0) throw std::domain_error("rational with zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  const std::int64_t g = std::gcd(num, den);
  num_ = num / g;
  den_ = den / g;
}

Rational Rational::parse_decimal(std::string_view text) {
  if (text.empty()) throw std::invalid_argument("empty decimal");
  bool negative = false;
  std::size_t pos = 0;
  if (text[0] == '-' || text[0] == '+') {
    negative = text[0] == '-';
    pos = 1;
  }
  std::int64_t num = 0;
  std::int64_t den = 1;
  bool seen_point = false;
  bool seen_digit = false;
  for (; pos < text.size(); ++pos) {
    const char ch = text[pos];
    if (ch == '.') {
      if (seen_point) throw std::invalid_argument("malformed decimal: " + std::string(text));
      seen_point = true;
      continue;
    }
    if (ch < '0' || ch > '9') {
      throw std::invalid_argument("malformed decimal: " + std::string(text));
    }
    seen_digit = true;
    num = checked_add(checked_mul(num, 10), ch - '0');
    if (seen_point) den = checked_mul(den, 10);
  }
  if (!seen_digit) throw std::invalid_argument("malformed decimal: " + std::string(text));
  return Rational(negative ? -num : num, den);
}

Rational Rational::from_double(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::fixed);
  if (ec != std::errc()) throw std::invalid_argument("cannot format double");
  return parse_decimal(std::string_view(buf, static_cast<std::size_t>(end - buf)));
}

double Rational::to_double() const {
  return static_cast<double>(num_) / static_cast<double>(den_);
}

std::string Rational::str() const {
  return den_ == 1 ? std::to_string(num_) : std::to_string(num_) + "/" + std::to_string(den_);
}

Rational operator+(const Rational& a, const Rational& b) {
  const std::int64_t g = std::gcd(a.den_, b.den_);
  const std::int64_t den = checked_mul(a.den_ / g, b.den_);
  return Rational(checked_add(checked_mul(a.num_, b.den_ / g), checked_mul(b.num_, a.den_ / g)), den);
}

Rational operator-(const Rational& a, const Rational& b) { return a + Rational(-b.num_, b.den_); }

Rational operator*(const Rational& a, const Rational& b) {
  const Rational x(a.num_, b.den_);
  const Rational y(b.num_, a.den_);
  return Rational(checked_mul(x.num_, y.num_), checked_mul(x.den_, y.den_));
}

Rational operator/(const Rational& a, const Rational& b) {
  if (b.num_ == 0) throw std::domain_error("rational division by zero");
  return a * Rational(b.den_, b.num_);
}

bool operator<(const Rational& a, const Rational& b) { return (a - b).num_ < 0; }

}  // namespace oltc
