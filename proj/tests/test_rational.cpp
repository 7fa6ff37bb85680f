#include <gtest/gtest.h>

#include <stdexcept>

#include "oltc/rational.hpp"

using oltc::Rational;

TEST(Rational, DecimalParsingIsExact) {
  EXPECT_EQ(Rational::parse_decimal("0.005"), Rational(1, 200));
  EXPECT_EQ(Rational::parse_decimal("-1.50"), Rational(-3, 2));
  EXPECT_EQ(Rational::parse_decimal("1.05") - Rational::parse_decimal("0.95"), Rational(1, 10));
  EXPECT_THROW(Rational::parse_decimal("1e-3"), std::invalid_argument);
  EXPECT_THROW(Rational::parse_decimal("1.2.3"), std::invalid_argument);
  EXPECT_THROW(Rational::parse_decimal(""), std::invalid_argument);
}

TEST(Rational, StepDividesRangeExactly) {
  const Rational range = Rational::from_double(1.05) - Rational::from_double(0.95);
  for (auto [step, k] : {std::pair{"0.02", 5}, {"0.01", 10}, {"0.005", 20}, {"0.002", 50}, {"0.001", 100}}) {
    const Rational q = range / Rational::parse_decimal(step);
    EXPECT_TRUE(q.is_integer()) << step;
    EXPECT_EQ(q.num(), k) << step;
  }
  EXPECT_FALSE((range / Rational::parse_decimal("0.003")).is_integer());
}

TEST(Rational, ArithmeticNormalizes) {
  EXPECT_EQ(Rational(2, 4), Rational(1, 2));
  EXPECT_EQ(Rational(1, -2), Rational(-1, 2));
  EXPECT_EQ(Rational(1, 3) + Rational(1, 6), Rational(1, 2));
  EXPECT_EQ(Rational(2, 3) * Rational(3, 4), Rational(1, 2));
  EXPECT_TRUE(Rational(1, 3) < Rational(1, 2));
  EXPECT_DOUBLE_EQ(Rational(1, 8).to_double(), 0.125);
  EXPECT_THROW(Rational(1, 0), std::domain_error);
  EXPECT_THROW(Rational(1, 2) / Rational(0, 1), std::domain_error);
}
