// Copyright 2026 The bimath Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef BIMATH_RATIONAL_H_
#define BIMATH_RATIONAL_H_

#include <optional>
#include <string>
#include <string_view>

#include <boost/multiprecision/cpp_int.hpp>

namespace bimath {

// Exact arbitrary-precision rational. Always kept in lowest terms with a
// positive denominator, so equality is structural.
class Rational {
 public:
  using Int = boost::multiprecision::cpp_int;

  Rational() = default;
  explicit Rational(long long value) : value_(value) {}
  Rational(const Int& numerator, const Int& denominator);

  // Parses "p" or "p/q" with optional leading '-'. No whitespace, no
  // decimals. This is the canonical wire form written by to_string().
  static std::optional<Rational> FromString(std::string_view text);

  // Parses a terminating decimal such as "-12.5", ".75" or "3." exactly.
  static std::optional<Rational> FromDecimal(std::string_view text);

  Int numerator() const { return boost::multiprecision::numerator(value_); }
  Int denominator() const {
    return boost::multiprecision::denominator(value_);
  }
  bool is_integer() const { return denominator() == 1; }
  bool is_zero() const { return value_ == 0; }

  std::string to_string() const;
  double to_double() const;

  Rational operator-() const { return Rational(-value_); }
  friend Rational operator+(const Rational& a, const Rational& b) {
    return Rational(a.value_ + b.value_);
  }
  friend Rational operator-(const Rational& a, const Rational& b) {
    return Rational(a.value_ - b.value_);
  }
  friend Rational operator*(const Rational& a, const Rational& b) {
    return Rational(a.value_ * b.value_);
  }
  // Throws std::domain_error on division by zero.
  friend Rational operator/(const Rational& a, const Rational& b);

  friend bool operator==(const Rational& a, const Rational& b) {
    return a.value_ == b.value_;
  }
  friend bool operator<(const Rational& a, const Rational& b) {
    return a.value_ < b.value_;
  }

 private:
  explicit Rational(boost::multiprecision::cpp_rational value)
      : value_(std::move(value)) {}

  boost::multiprecision::cpp_rational value_;
};

}  // namespace bimath

#endif  // BIMATH_RATIONAL_H_
