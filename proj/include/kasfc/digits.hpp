#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "kasfc/errors.hpp"
#include "kasfc/fraction.hpp"

namespace kasfc {

inline constexpr int kMaxBase = 256;

/// B^K, or CapacityError when it does not fit in 64 bits.
inline std::uint64_t checked_power(std::uint64_t base, std::size_t exponent) {
  std::uint64_t result = 1;
  for (std::size_t i = 0; i < exponent; ++i) {
    if (result > UINT64_MAX / base) {
      throw CapacityError("B^K = " + std::to_string(base) + "^" + std::to_string(exponent) +
                          " exceeds the 64-bit digit budget");
    }
    result *= base;
  }
  return result;
}

/// Finite base-B expansion [0.d_1 d_2 ... d_K]_B of a unit-interval scalar.
///
/// Digits past size() are zero. The value 1 has no terminating expansion; it
/// is stored as the all-(B-1) sequence with the saturated flag set, and every
/// value accessor then reports exactly 1.
class DigitSequence {
 public:
  DigitSequence(int base, std::vector<std::uint8_t> digits, bool saturated = false)
      : base_(base), digits_(std::move(digits)), saturated_(saturated) {
    if (base < 2 || base > kMaxBase) throw ParameterError("DigitSequence: base must lie in [2, 256]");
    for (auto d : digits_) {
      if (d >= base) throw ParameterError("DigitSequence: digit out of range for base");
    }
    if (saturated_ && std::any_of(digits_.begin(), digits_.end(), [&](auto d) { return d != base - 1; })) {
      throw ParameterError("DigitSequence: a saturated sequence must consist of base-1 digits");
    }
  }

  static DigitSequence zeros(int base, std::size_t length) {
    return DigitSequence(base, std::vector<std::uint8_t>(length, 0));
  }

  /// The value 1 at the given length.
  static DigitSequence one(int base, std::size_t length) {
    return DigitSequence(base, std::vector<std::uint8_t>(length, static_cast<std::uint8_t>(base - 1)), true);
  }

  int base() const { return base_; }
  std::size_t size() const { return digits_.size(); }
  bool saturated() const { return saturated_; }
  std::span<const std::uint8_t> digits() const { return digits_; }

  /// 0-based digit access; positions past the end read as zero (or base-1 when saturated).
  std::uint8_t operator[](std::size_t j) const {
    if (j < digits_.size()) return digits_[j];
    return saturated_ ? static_cast<std::uint8_t>(base_ - 1) : 0;
  }

  /// First `length` digits (zero padded). The result is a plain finite
  /// expansion: truncating the value 1 gives 1 - B^{-length}.
  DigitSequence truncated(std::size_t length) const {
    std::vector<std::uint8_t> out(length, 0);
    for (std::size_t j = 0; j < length; ++j) out[j] = (*this)[j];
    return DigitSequence(base_, std::move(out));
  }

  /// Σ d_j B^{K-1-j}, i.e. value·B^K as an integer. Saturated sequences give B^K.
  std::uint64_t scaled() const {
    const std::uint64_t denom = checked_power(static_cast<std::uint64_t>(base_), digits_.size());
    if (saturated_) return denom;
    std::uint64_t acc = 0;
    for (auto d : digits_) acc = acc * static_cast<std::uint64_t>(base_) + d;
    return acc;
  }

  std::uint64_t denominator() const { return checked_power(static_cast<std::uint64_t>(base_), digits_.size()); }

  Fraction exact() const {
    const std::uint64_t den = denominator();
    if (den > static_cast<std::uint64_t>(INT64_MAX)) throw CapacityError("DigitSequence: exact value exceeds 64-bit budget");
    return Fraction(static_cast<std::int64_t>(scaled()), static_cast<std::int64_t>(den));
  }

  /// Correctly rounded while B^K < 2^53; long-double division up to 2^64;
  /// Horner accumulation past that.
  double value() const {
    if (saturated_) return 1.0;
    constexpr std::uint64_t kExact = std::uint64_t{1} << 53;
    bool fits = true;
    std::uint64_t den = 1;
    for (std::size_t i = 0; i < digits_.size() && fits; ++i) {
      if (den > UINT64_MAX / static_cast<std::uint64_t>(base_)) fits = false;
      else den *= static_cast<std::uint64_t>(base_);
    }
    if (fits) {
      const std::uint64_t num = scaled();
      if (den < kExact) return static_cast<double>(num) / static_cast<double>(den);
      return static_cast<double>(static_cast<long double>(num) / static_cast<long double>(den));
    }
    long double acc = 0.0L;
    for (std::size_t j = digits_.size(); j-- > 0;) acc = (acc + digits_[j]) / base_;
    return static_cast<double>(acc);
  }

  /// Value order; sequences of different length compare with zero padding.
  friend std::strong_ordering operator<=>(const DigitSequence& a, const DigitSequence& b) {
    if (a.base_ != b.base_) return a.base_ <=> b.base_;
    if (a.saturated_ != b.saturated_) return a.saturated_ <=> b.saturated_;
    const std::size_t n = std::max(a.size(), b.size());
    for (std::size_t j = 0; j < n; ++j) {
      if (auto c = a[j] <=> b[j]; c != 0) return c;
    }
    return std::strong_ordering::equal;
  }
  friend bool operator==(const DigitSequence& a, const DigitSequence& b) { return (a <=> b) == 0; }

 private:
  int base_;
  std::vector<std::uint8_t> digits_;
  bool saturated_ = false;
};

/// First K digits of the terminating expansion of x in base B.
///
/// Works on the exact binary64 value x = m·2^{-s}: each step multiplies the
/// integer remainder by B and splits off the integer part, so no floating
/// rounding enters. x = 1 yields DigitSequence::one.
inline DigitSequence digits_from_real(double x, int base, std::size_t length) {
  if (base < 2 || base > kMaxBase) throw ParameterError("digits_from_real: base must lie in [2, 256]");
  if (!(x >= 0.0 && x <= 1.0)) throw DomainError("digits_from_real: x must lie in [0, 1]");
  (void)checked_power(static_cast<std::uint64_t>(base), length);
  if (x == 1.0) return DigitSequence::one(base, length);

  std::vector<std::uint8_t> out(length, 0);
  // Below 2^-64 every one of the (at most 64 base-2-equivalent) digits is zero.
  if (x < 0x1p-64) return DigitSequence(base, std::move(out));

  int exponent = 0;
  const double mantissa = std::frexp(x, &exponent);  // x = mantissa·2^exponent, mantissa in [1/2, 1)
  using u128 = unsigned __int128;
  u128 remainder = static_cast<u128>(std::ldexp(mantissa, 53));
  const int shift = 53 - exponent;  // x = remainder·2^{-shift}, shift <= 117
  const u128 mask = (u128{1} << shift) - 1;
  for (std::size_t j = 0; j < length && remainder != 0; ++j) {
    const u128 t = remainder * static_cast<u128>(base);
    out[j] = static_cast<std::uint8_t>(t >> shift);
    remainder = t & mask;
  }
  return DigitSequence(base, std::move(out));
}

/// First K digits of a rational in [0, 1], by exact long division. This is
/// the round-trip path for bases whose grid values are not binary64 numbers.
inline DigitSequence digits_from_fraction(const Fraction& x, int base, std::size_t length) {
  if (base < 2 || base > kMaxBase) throw ParameterError("digits_from_fraction: base must lie in [2, 256]");
  if (x < Fraction(0) || Fraction(1) < x) throw DomainError("digits_from_fraction: x must lie in [0, 1]");
  if (x == Fraction(1)) return DigitSequence::one(base, length);
  std::vector<std::uint8_t> out(length, 0);
  using i128 = __int128;
  i128 remainder = x.num();
  const i128 den = x.den();
  for (std::size_t j = 0; j < length && remainder != 0; ++j) {
    const i128 t = remainder * base;
    out[j] = static_cast<std::uint8_t>(t / den);
    remainder = t % den;
  }
  return DigitSequence(base, std::move(out));
}

inline double real_from_digits(const DigitSequence& s) { return s.value(); }

/// Exact representative of a point of [0,1]^d: d digit sequences sharing base and length.
class GridPoint {
 public:
  explicit GridPoint(std::vector<DigitSequence> coordinates) : coords_(std::move(coordinates)) {
    if (coords_.empty()) throw ParameterError("GridPoint: dimension must be at least 1");
    for (const auto& c : coords_) {
      if (c.base() != coords_.front().base()) throw ParameterError("GridPoint: coordinates must share a base");
      if (c.size() != coords_.front().size()) throw ParameterError("GridPoint: coordinates must share a length");
    }
  }

  static GridPoint from_reals(std::span<const double> x, int base, std::size_t length) {
    std::vector<DigitSequence> coords;
    coords.reserve(x.size());
    for (double v : x) coords.push_back(digits_from_real(v, base, length));
    return GridPoint(std::move(coords));
  }

  std::size_t dimension() const { return coords_.size(); }
  int base() const { return coords_.front().base(); }
  std::size_t length() const { return coords_.front().size(); }
  const DigitSequence& operator[](std::size_t p) const { return coords_[p]; }
  std::span<const DigitSequence> coordinates() const { return coords_; }

  std::vector<double> to_reals() const {
    std::vector<double> out;
    out.reserve(coords_.size());
    for (const auto& c : coords_) out.push_back(c.value());
    return out;
  }

  friend bool operator==(const GridPoint& a, const GridPoint& b) { return a.coords_ == b.coords_; }

 private:
  std::vector<DigitSequence> coords_;
};

}  // namespace kasfc
