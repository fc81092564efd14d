#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "kasfc/digits.hpp"
#include "kasfc/errors.hpp"
#include "kasfc/fraction.hpp"

namespace kasfc {

/// Base-B code of length K·d whose digit (j-1)d+p is the j-th digit of coordinate p.
class MortonCode {
 public:
  MortonCode(DigitSequence digits, std::size_t dimension) : digits_(std::move(digits)), dimension_(dimension) {
    if (dimension_ == 0) throw ParameterError("MortonCode: dimension must be at least 1");
    if (digits_.size() % dimension_ != 0) throw ParameterError("MortonCode: length must be a multiple of d");
  }

  const DigitSequence& digits() const { return digits_; }
  std::size_t dimension() const { return dimension_; }
  std::size_t size() const { return digits_.size(); }
  double value() const { return digits_.value(); }

  friend bool operator==(const MortonCode&, const MortonCode&) = default;

 private:
  DigitSequence digits_;
  std::size_t dimension_;
};

/// Ternary code with digits in {0, 2}: a point of the Cantor set.
class CantorCode {
 public:
  explicit CantorCode(DigitSequence digits) : digits_(std::move(digits)) {
    if (digits_.base() != 3) throw ParameterError("CantorCode: base must be 3");
    for (auto d : digits_.digits()) {
      if (d == 1) throw NotCantorPointError("CantorCode: digit 1 is not allowed in a Cantor code");
    }
  }

  /// Code with integer value `numerator`/3^length; CapacityError past 3^40.
  static CantorCode from_numerator(std::uint64_t numerator, std::size_t length) {
    const std::uint64_t den = checked_power(3, length);
    if (numerator == den) return one(length);
    if (numerator > den) throw DomainError("CantorCode: value exceeds 1");
    std::vector<std::uint8_t> d(length, 0);
    for (std::size_t j = length; j-- > 0;) {
      d[j] = static_cast<std::uint8_t>(numerator % 3);
      numerator /= 3;
    }
    return CantorCode(DigitSequence(3, std::move(d)));
  }

  /// The point 1 = [0.222...]_3.
  static CantorCode one(std::size_t length) { return CantorCode(DigitSequence::one(3, length)); }

  const DigitSequence& digits() const { return digits_; }
  std::size_t size() const { return digits_.size(); }
  std::uint8_t operator[](std::size_t j) const { return digits_[j]; }
  std::uint64_t numerator() const { return digits_.scaled(); }
  double value() const { return digits_.value(); }
  Fraction exact() const { return digits_.exact(); }

  friend bool operator==(const CantorCode&, const CantorCode&) = default;

 private:
  DigitSequence digits_;
};

/// Digits spread d apart: position d(j-1)+1 holds the j-th source digit
/// (scaled by `multiplier`), every other position is zero.
///
/// The digit sequence stores B^{-1} times the spread value, so its first
/// digit is the integer digit of the fragment. fragment_value() returns the
/// fragment itself, which can exceed 1.
struct SpreadDigits {
  DigitSequence digits;

  Fraction fragment_value() const { return Fraction(digits.base()) * digits.exact(); }
};

namespace detail {

inline SpreadDigits spread(const DigitSequence& x, std::size_t d, std::size_t count, int out_base, int multiplier) {
  if (d == 0) throw ParameterError("spread: dimension must be at least 1");
  std::vector<std::uint8_t> out(count * d, 0);
  for (std::size_t j = 0; j < count; ++j) out[j * d] = static_cast<std::uint8_t>(multiplier * x[j]);
  return SpreadDigits{DigitSequence(out_base, std::move(out))};
}

}  // namespace detail

/// ψ(x) = Σ_j a_j B^{-d(j-1)}.
inline SpreadDigits psi(const DigitSequence& x, std::size_t d) {
  if (x.saturated()) throw DomainError("psi: the value 1 has no finite spread expansion");
  return detail::spread(x, d, x.size(), x.base(), 1);
}

/// Ψ(x_1..x_d) = [0.a_1^{x_1} a_1^{x_2} ... a_1^{x_d} a_2^{x_1} ...]_B.
///
/// The value 1 is accepted only when every coordinate is 1, which maps to 1.
inline MortonCode psi_interleave(const GridPoint& p) {
  const std::size_t d = p.dimension();
  const std::size_t k = p.length();
  std::size_t saturated = 0;
  for (const auto& c : p.coordinates()) saturated += c.saturated() ? 1 : 0;
  if (saturated == d) return MortonCode(DigitSequence::one(p.base(), k * d), d);
  if (saturated != 0) throw DomainError("psi_interleave: a coordinate equal to 1 has no finite interleaving");
  std::vector<std::uint8_t> out(k * d);
  for (std::size_t j = 0; j < k; ++j) {
    for (std::size_t q = 0; q < d; ++q) out[j * d + q] = p[q][j];
  }
  return MortonCode(DigitSequence(p.base(), std::move(out)), d);
}

inline GridPoint psi_deinterleave(const DigitSequence& m, std::size_t d) {
  if (d == 0 || m.size() % d != 0) throw ParameterError("psi_deinterleave: code length must be a multiple of d");
  const std::size_t k = m.size() / d;
  std::vector<DigitSequence> coords;
  coords.reserve(d);
  for (std::size_t q = 0; q < d; ++q) {
    if (m.saturated()) {
      coords.push_back(DigitSequence::one(m.base(), k));
      continue;
    }
    std::vector<std::uint8_t> digits(k);
    for (std::size_t j = 0; j < k; ++j) digits[j] = m[j * d + q];
    coords.emplace_back(m.base(), std::move(digits));
  }
  return GridPoint(std::move(coords));
}

inline GridPoint psi_deinterleave(const MortonCode& m) { return psi_deinterleave(m.digits(), m.dimension()); }

/// φ(x) = Σ_j 2a_j 3^{-d(j-1)} over the stored binary digits of x.
inline SpreadDigits phi(const DigitSequence& x, std::size_t d) {
  if (x.base() != 2) throw ParameterError("phi: input must be a binary digit sequence");
  if (x.saturated()) throw DomainError("phi: the value 1 has no finite Cantor expansion");
  return detail::spread(x, d, x.size(), 3, 2);
}

/// φ_K: φ applied to the first K binary digits.
inline SpreadDigits phi_K(const DigitSequence& x, std::size_t d, std::size_t K) {
  if (K == 0) throw ParameterError("phi_K: K must be at least 1");
  if (x.base() != 2) throw ParameterError("phi_K: input must be a binary digit sequence");
  return detail::spread(x.truncated(K), d, K, 3, 2);
}

/// Φ_K(x) = Σ_p 3^{-p} φ_K(x_p): ternary digit (j-1)d+p is 2a_j^{x_p}.
/// Coordinates are truncated (or zero padded) to K digits, i.e. anchored at
/// the lower-left corner of their dyadic cell.
inline CantorCode phi_combine(const GridPoint& p, std::size_t K) {
  if (p.base() != 2) throw ParameterError("phi_combine: coordinates must be binary");
  if (K == 0) throw ParameterError("phi_combine: K must be at least 1");
  const std::size_t d = p.dimension();
  std::vector<std::uint8_t> out(K * d);
  for (std::size_t j = 0; j < K; ++j) {
    for (std::size_t q = 0; q < d; ++q) {
      out[j * d + q] = static_cast<std::uint8_t>(2 * p[q][j]);
    }
  }
  return CantorCode(DigitSequence(3, std::move(out)));
}

/// Φ^{-1}: [0.c_1 c_2 ...]_3 -> ([0.(c_1/2)(c_{d+1}/2)...]_2, ..., [0.(c_d/2)(c_{2d}/2)...]_2).
inline GridPoint phi_inverse(const CantorCode& c, std::size_t d) {
  if (d == 0 || c.size() % d != 0) throw ParameterError("phi_inverse: code length must be a multiple of d");
  const std::size_t k = c.size() / d;
  std::vector<DigitSequence> coords;
  coords.reserve(d);
  for (std::size_t q = 0; q < d; ++q) {
    if (c.digits().saturated()) {
      coords.push_back(DigitSequence::one(2, k));
      continue;
    }
    std::vector<std::uint8_t> digits(k);
    for (std::size_t j = 0; j < k; ++j) digits[j] = static_cast<std::uint8_t>(c[j * d + q] / 2);
    coords.emplace_back(2, std::move(digits));
  }
  return GridPoint(std::move(coords));
}

/// Validating overload for raw ternary sequences.
inline GridPoint phi_inverse(const DigitSequence& ternary, std::size_t d) { return phi_inverse(CantorCode(ternary), d); }

/// |x - y| from the integer numerators; codes of equal length only. Exact
/// up to the final division, so gaps far below an ulp of x survive.
inline long double cantor_gap(const CantorCode& x, const CantorCode& y) {
  if (x.size() != y.size()) throw ParameterError("cantor_gap: codes must have equal length");
  const std::uint64_t nx = x.numerator();
  const std::uint64_t ny = y.numerator();
  const std::uint64_t diff = nx > ny ? nx - ny : ny - nx;
  return static_cast<long double>(diff) / static_cast<long double>(checked_power(3, x.size()));
}

struct CantorHolderAudit {
  double lhs = 0.0;  ///< |Φ^{-1}(x) - Φ^{-1}(y)|_∞
  double rhs = 0.0;  ///< 2|x - y|^{log 2 / (d log 3)}
  std::size_t common_prefix = 0;
  bool holds = true;
};

/// Both sides of |Φ^{-1}(x) - Φ^{-1}(y)|_∞ <= 2|x - y|^{log2/(d log3)}.
///
/// The left side and |x - y| are exact integers over 2^{n/d} and 3^n; only the
/// power on the right is floating, so `holds` allows a relative 1e-12 for it.
inline CantorHolderAudit cantor_holder_bound(const CantorCode& x, const CantorCode& y, std::size_t d) {
  if (x.size() != y.size()) throw ParameterError("cantor_holder_bound: codes must have equal length");
  const GridPoint px = phi_inverse(x, d);
  const GridPoint py = phi_inverse(y, d);

  CantorHolderAudit audit;
  while (audit.common_prefix < x.size() && x[audit.common_prefix] == y[audit.common_prefix]) ++audit.common_prefix;

  std::uint64_t max_diff = 0;
  for (std::size_t q = 0; q < d; ++q) {
    const std::uint64_t a = px[q].scaled();
    const std::uint64_t b = py[q].scaled();
    max_diff = std::max(max_diff, a > b ? a - b : b - a);
  }
  audit.lhs = std::ldexp(static_cast<double>(max_diff), -static_cast<int>(px.length()));

  const std::uint64_t nx = x.numerator();
  const std::uint64_t ny = y.numerator();
  const std::uint64_t diff = nx > ny ? nx - ny : ny - nx;
  if (diff == 0) {
    audit.rhs = 0.0;
  } else {
    const long double exponent = std::log(2.0L) / (static_cast<long double>(d) * std::log(3.0L));
    const long double log_gap = std::log(static_cast<long double>(diff)) - static_cast<long double>(x.size()) * std::log(3.0L);
    audit.rhs = static_cast<double>(2.0L * std::exp(exponent * log_gap));
  }
  audit.holds = audit.lhs <= audit.rhs * (1.0 + 1e-12);
  return audit;
}

}  // namespace kasfc
