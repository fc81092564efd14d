#pragma once

// Exact-rational reference values for the unit tests. Nothing here touches
// the library's own Fraction type or scaled-integer helpers.

#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace oracle {

using Rational = boost::multiprecision::cpp_rational;
using Integer = boost::multiprecision::cpp_int;

/// Σ_j d_j B^{-(j+1)}.
inline Rational digit_value(std::span<const std::uint8_t> digits, int base) {
  Rational v = 0;
  Rational scale(1, base);
  for (auto d : digits) {
    v += scale * d;
    scale /= base;
  }
  return v;
}

/// The binary64 value x as an exact rational.
inline Rational exact(double x) {
  int e = 0;
  const double m = std::frexp(x, &e);
  const auto mant = static_cast<std::int64_t>(std::ldexp(m, 53));
  Rational r(mant);
  const int shift = e - 53;
  if (shift >= 0) return r * Rational(Integer(1) << shift);
  return r / Rational(Integer(1) << -shift);
}

/// First K base-B digits of x by exact long division.
inline std::vector<std::uint8_t> long_division_digits(double x, int base, std::size_t K) {
  Rational r = exact(x);
  std::vector<std::uint8_t> out;
  for (std::size_t j = 0; j < K; ++j) {
    r *= base;
    const Integer whole = boost::multiprecision::numerator(r) / boost::multiprecision::denominator(r);
    out.push_back(static_cast<std::uint8_t>(whole));
    r -= Rational(whole);
  }
  return out;
}

inline Rational power(int base, int exponent) {
  Rational r = 1;
  for (int i = 0; i < std::abs(exponent); ++i) r *= base;
  return exponent >= 0 ? r : 1 / r;
}

}  // namespace oracle
