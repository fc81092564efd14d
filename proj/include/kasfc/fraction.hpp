#pragma once

#include <compare>
#include <cstdint>
#include <numeric>
#include <ostream>

#include "kasfc/errors.hpp"

namespace kasfc {

/// Small exact rational with 64-bit numerator and denominator.
///
/// Only what the encodings need: values are sums of B-adic fractions whose
/// denominators are bounded by the digit budget. Intermediate products run in
/// 128-bit arithmetic; a result that does not reduce back into 64 bits throws
/// CapacityError instead of wrapping.
class Fraction {
 public:
  constexpr Fraction() = default;

  Fraction(std::int64_t num, std::int64_t den = 1) {  // NOLINT(google-explicit-constructor)
    if (den == 0) throw ParameterError("Fraction: zero denominator");
    *this = reduce(num, den);
  }

  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }

  double to_double() const {
    constexpr std::int64_t kExact = std::int64_t{1} << 53;
    if (num_ < kExact && num_ > -kExact && den_ < kExact) {
      return static_cast<double>(num_) / static_cast<double>(den_);
    }
    return static_cast<double>(static_cast<long double>(num_) / static_cast<long double>(den_));
  }

  friend Fraction operator+(const Fraction& a, const Fraction& b) {
    return reduce(static_cast<__int128>(a.num_) * b.den_ + static_cast<__int128>(b.num_) * a.den_,
                  static_cast<__int128>(a.den_) * b.den_);
  }
  friend Fraction operator-(const Fraction& a, const Fraction& b) {
    return reduce(static_cast<__int128>(a.num_) * b.den_ - static_cast<__int128>(b.num_) * a.den_,
                  static_cast<__int128>(a.den_) * b.den_);
  }
  friend Fraction operator*(const Fraction& a, const Fraction& b) {
    return reduce(static_cast<__int128>(a.num_) * b.num_, static_cast<__int128>(a.den_) * b.den_);
  }
  Fraction operator-() const { return reduce(-static_cast<__int128>(num_), den_); }

  friend bool operator==(const Fraction& a, const Fraction& b) {
    return a.num_ == b.num_ && a.den_ == b.den_;
  }
  friend std::strong_ordering operator<=>(const Fraction& a, const Fraction& b) {
    const __int128 lhs = static_cast<__int128>(a.num_) * b.den_;
    const __int128 rhs = static_cast<__int128>(b.num_) * a.den_;
    return lhs <=> rhs;
  }

  friend std::ostream& operator<<(std::ostream& os, const Fraction& f) {
    os << f.num_;
    if (f.den_ != 1) os << '/' << f.den_;
    return os;
  }

 private:
  static __int128 gcd128(__int128 a, __int128 b) {
    if (a < 0) a = -a;
    if (b < 0) b = -b;
    while (b != 0) {
      const __int128 t = a % b;
      a = b;
      b = t;
    }
    return a;
  }

  static Fraction reduce(__int128 n, __int128 d) {
    if (d < 0) {
      n = -n;
      d = -d;
    }
    const __int128 g = gcd128(n, d);
    if (g > 1) {
      n /= g;
      d /= g;
    }
    constexpr __int128 kMax = INT64_MAX;
    if (n > kMax || n < -kMax || d > kMax) throw CapacityError("Fraction: value exceeds 64-bit budget");
    Fraction f;
    f.num_ = static_cast<std::int64_t>(n);
    f.den_ = static_cast<std::int64_t>(d);
    return f;
  }

  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

}  // namespace kasfc
