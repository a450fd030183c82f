// Copyright 2026 The bimath Authors
// SPDX-License-Identifier: Apache-2.0

#include "bimath/rational.h"

#include <cctype>
#include <stdexcept>

namespace bimath {
namespace {

bool AllDigits(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

Rational::Int ParseDigits(std::string_view digits) {
  Rational::Int value = 0;
  for (char c : digits) {
    value *= 10;
    value += c - '0';
  }
  return value;
}

}  // namespace

Rational::Rational(const Int& numerator, const Int& denominator) {
  if (denominator == 0) throw std::domain_error("zero denominator");
  value_ = boost::multiprecision::cpp_rational(numerator, denominator);
}

std::optional<Rational> Rational::FromString(std::string_view text) {
  bool negative = false;
  if (!text.empty() && text.front() == '-') {
    negative = true;
    text.remove_prefix(1);
  }
  const auto slash = text.find('/');
  std::string_view num = text.substr(0, slash);
  if (!AllDigits(num)) return std::nullopt;
  Int n = ParseDigits(num);
  Int d = 1;
  if (slash != std::string_view::npos) {
    std::string_view den = text.substr(slash + 1);
    if (!AllDigits(den)) return std::nullopt;
    d = ParseDigits(den);
    if (d == 0) return std::nullopt;
  }
  if (negative) n = -n;
  return Rational(n, d);
}

std::optional<Rational> Rational::FromDecimal(std::string_view text) {
  bool negative = false;
  if (!text.empty() && (text.front() == '-' || text.front() == '+')) {
    negative = text.front() == '-';
    text.remove_prefix(1);
  }
  const auto dot = text.find('.');
  std::string_view whole = text.substr(0, dot);
  std::string_view frac;
  if (dot != std::string_view::npos) frac = text.substr(dot + 1);
  if (whole.empty() && frac.empty()) return std::nullopt;
  if (!whole.empty() && !AllDigits(whole)) return std::nullopt;
  if (!frac.empty() && !AllDigits(frac)) return std::nullopt;

  Int n = whole.empty() ? Int(0) : ParseDigits(whole);
  Int d = 1;
  for (char c : frac) {
    n = n * 10 + (c - '0');
    d *= 10;
  }
  if (negative) n = -n;
  return Rational(n, d);
}

std::string Rational::to_string() const {
  if (is_integer()) return numerator().str();
  return numerator().str() + "/" + denominator().str();
}

double Rational::to_double() const {
  return value_.convert_to<double>();
}

Rational operator/(const Rational& a, const Rational& b) {
  if (b.value_ == 0) throw std::domain_error("division by zero");
  return Rational(a.value_ / b.value_);
}

}  // namespace bimath
