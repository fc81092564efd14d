#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "kasfc/digits.hpp"
#include "kasfc/encodings.hpp"
#include "kasfc/errors.hpp"
#include "kasfc/random.hpp"

namespace kasfc {

using PointFunction = std::function<double(std::span<const double>)>;

/// A d-variate function on [0,1]^d with its smoothness metadata:
/// |f(x) - f(y)| <= Q |x - y|_∞^β and |f| <= sup_norm.
///
/// The metadata is trusted input; audit_holder() spot-checks it.
struct HolderFunction {
  std::string name;
  std::size_t dimension = 1;
  double beta = 1.0;
  double Q = 0.0;
  double sup_norm = 0.0;
  PointFunction evaluate;
  /// Set for functions that are constant on the 2^{kd} half-open dyadic
  /// cells of side 2^{-k}. Such functions carry no finite Hölder constant
  /// (Q is +inf), but their truncated representation is exact once K >= k.
  std::optional<std::size_t> dyadic_resolution;

  double operator()(std::span<const double> x) const {
    if (x.size() != dimension) throw ShapeError("HolderFunction: point dimension mismatch");
    return evaluate(x);
  }
};

struct HolderAuditReport {
  std::size_t samples = 0;
  std::size_t violations = 0;
  double max_ratio = 0.0;  ///< max |f(x)-f(y)| / (Q |x-y|^β), rounding included
  double max_abs = 0.0;    ///< max |f| over all evaluated points
  bool sup_norm_ok = true;
  bool ok() const { return violations == 0 && sup_norm_ok; }
};

/// Random-pair check of the Hölder and sup-norm metadata. Pairs are drawn at
/// separations spread over many dyadic scales.
inline HolderAuditReport audit_holder(const HolderFunction& f, std::size_t samples, std::uint64_t seed) {
  Rng rng(seed);
  HolderAuditReport report;
  report.samples = samples;
  std::vector<double> x(f.dimension), y(f.dimension);
  for (std::size_t s = 0; s < samples; ++s) {
    const double scale = std::ldexp(1.0, -static_cast<int>(rng.below(40)));
    double dist = 0.0;
    for (std::size_t q = 0; q < f.dimension; ++q) {
      x[q] = rng.unit();
      y[q] = std::clamp(x[q] + scale * (2.0 * rng.unit() - 1.0), 0.0, 1.0);
      dist = std::max(dist, std::abs(x[q] - y[q]));
    }
    const double fx = f(x);
    const double fy = f(y);
    report.max_abs = std::max({report.max_abs, std::abs(fx), std::abs(fy)});
    if (dist == 0.0) continue;
    const double envelope = f.Q * std::pow(dist, f.beta);
    report.max_ratio = std::max(report.max_ratio, std::abs(fx - fy) / envelope);
    // Slack of a few ulps of |f| absorbs rounding in evaluating f itself.
    const double slack = 8.0 * std::numeric_limits<double>::epsilon() * std::max({std::abs(fx), std::abs(fy), 1.0});
    if (std::abs(fx - fy) > envelope * (1.0 + 1e-9) + slack) ++report.violations;
  }
  report.sup_norm_ok = report.max_abs <= f.sup_norm;
  return report;
}

/// Table of 2^{kd} values, constant on the half-open cells ×_j [ℓ_j 2^{-k}, (ℓ_j+1) 2^{-k}).
/// Index layout: ℓ_1 is the most significant base-2^k digit. x_j = 1 falls in the last cell.
class PiecewiseConstantFunction {
 public:
  PiecewiseConstantFunction(std::size_t k, std::size_t d, std::vector<double> values)
      : k_(k), d_(d), values_(std::move(values)) {
    if (k == 0 || d == 0) throw ParameterError("PiecewiseConstantFunction: k and d must be positive");
    if (k * d > 30) throw CapacityError("PiecewiseConstantFunction: 2^{kd} table too large");
    if (values_.size() != (std::size_t{1} << (k * d))) throw ParameterError("PiecewiseConstantFunction: table must hold 2^{kd} values");
  }

  /// Values uniform on [-1, 1), reproducible from the seed.
  static PiecewiseConstantFunction random(std::size_t k, std::size_t d, std::uint64_t seed) {
    if (k * d > 30) throw CapacityError("PiecewiseConstantFunction: 2^{kd} table too large");
    Rng rng(seed);
    std::vector<double> values(std::size_t{1} << (k * d));
    for (auto& v : values) v = 2.0 * rng.unit() - 1.0;
    return {k, d, std::move(values)};
  }

  std::size_t resolution() const { return k_; }
  std::size_t dimension() const { return d_; }
  std::span<const double> values() const { return values_; }

  double sup_norm() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
  }

  std::size_t cell_index(std::span<const double> x) const {
    if (x.size() != d_) throw ShapeError("PiecewiseConstantFunction: point dimension mismatch");
    const std::size_t side = std::size_t{1} << k_;
    std::size_t index = 0;
    for (double v : x) {
      if (!(v >= 0.0 && v <= 1.0)) throw DomainError("PiecewiseConstantFunction: point outside [0,1]^d");
      const auto l = std::min(static_cast<std::size_t>(std::ldexp(v, static_cast<int>(k_))), side - 1);
      index = index * side + l;
    }
    return index;
  }

  /// Cell from the first k binary digits of each coordinate, no floating point.
  std::size_t cell_index(const GridPoint& p) const {
    if (p.dimension() != d_ || p.base() != 2) throw ShapeError("PiecewiseConstantFunction: expected a binary point of matching dimension");
    std::size_t index = 0;
    for (std::size_t q = 0; q < d_; ++q) {
      std::size_t l = 0;
      for (std::size_t j = 0; j < k_; ++j) l = 2 * l + p[q][j];
      index = (index << k_) | l;
    }
    return index;
  }

  double operator()(std::span<const double> x) const { return values_[cell_index(x)]; }
  double operator()(const GridPoint& p) const { return values_[cell_index(p)]; }

  HolderFunction as_function(std::string name) const {
    HolderFunction f;
    f.name = std::move(name);
    f.dimension = d_;
    f.beta = 1.0;
    f.Q = std::numeric_limits<double>::infinity();
    f.sup_norm = sup_norm();
    f.dyadic_resolution = k_;
    f.evaluate = [table = *this](std::span<const double> x) { return table(x); };
    return f;
  }

 private:
  std::size_t k_;
  std::size_t d_;
  std::vector<double> values_;
};

/// g(c) = f(Φ^{-1}(c)); g lives on the Cantor set only.
inline double outer_g_eval(const HolderFunction& f, const CantorCode& c) {
  const std::vector<double> x = phi_inverse(c, f.dimension).to_reals();
  return f(x);
}

/// g(m) = f(Ψ^{-1}(m)) for the Morton (base-B interleave) encoding.
inline double morton_outer_eval(const HolderFunction& f, const MortonCode& m) {
  if (m.dimension() != f.dimension) throw ShapeError("morton_outer_eval: code dimension mismatch");
  const std::vector<double> x = psi_deinterleave(m).to_reals();
  return f(x);
}

/// g(Σ_p 3^{-p} φ_K(x_p)): f evaluated at the lower-left corner of the
/// dyadic cell of side 2^{-K} containing x.
inline double ka_approx_eval(const HolderFunction& f, const GridPoint& x, std::size_t K) {
  if (x.dimension() != f.dimension) throw ShapeError("ka_approx_eval: point dimension mismatch");
  return outer_g_eval(f, phi_combine(x, K));
}

inline double ka_approx_eval(const HolderFunction& f, std::span<const double> x, std::size_t K) {
  if (K == 0) throw ParameterError("ka_approx_eval: K must be at least 1");
  return ka_approx_eval(f, GridPoint::from_reals(x, 2, K), K);
}

/// Largest K·d for which the 2^{Kd}+1 breakpoints are materialised.
inline constexpr std::size_t kMaxBreakpointDigits = 24;

/// Breakpoints scaled by 3^{Kd}: numerators of {Σ_{j<=Kd} 2t_j 3^{-j}} ∪ {1} in ascending order.
/// Entry i < 2^{Kd} is the code whose binary pattern t is the Kd-bit expansion of i.
inline std::vector<std::uint64_t> breakpoint_numerators(std::size_t K, std::size_t d) {
  const std::size_t n = K * d;
  if (K == 0 || d == 0) throw ParameterError("breakpoints: K and d must be positive");
  if (n > kMaxBreakpointDigits) throw CapacityError("breakpoints: K·d = " + std::to_string(n) + " exceeds the budget of " + std::to_string(kMaxBreakpointDigits));
  const std::size_t count = std::size_t{1} << n;
  std::vector<std::uint64_t> out(count + 1);
  for (std::size_t i = 0; i < count; ++i) {
    std::uint64_t acc = 0;
    for (std::size_t j = 0; j < n; ++j) acc = 3 * acc + 2 * ((i >> (n - 1 - j)) & 1U);
    out[i] = acc;
  }
  out[count] = checked_power(3, n);
  return out;
}

inline std::vector<double> breakpoints(std::size_t K, std::size_t d) {
  const auto numerators = breakpoint_numerators(K, d);
  const auto den = static_cast<double>(numerators.back());
  std::vector<double> out(numerators.size());
  for (std::size_t i = 0; i < numerators.size(); ++i) out[i] = static_cast<double>(numerators[i]) / den;
  return out;
}

/// Cantor code of breakpoint i (the last one is the point 1).
inline CantorCode breakpoint_code(std::size_t i, std::size_t K, std::size_t d) {
  const std::size_t n = K * d;
  if (i == (std::size_t{1} << n)) return CantorCode::one(n);
  std::vector<std::uint8_t> digits(n);
  for (std::size_t j = 0; j < n; ++j) digits[j] = static_cast<std::uint8_t>(2 * ((i >> (n - 1 - j)) & 1U));
  return CantorCode(DigitSequence(3, std::move(digits)));
}

/// Piecewise-linear g̃ through (x_j, g(x_j)) on [0, 1].
class PiecewiseLinearG {
 public:
  PiecewiseLinearG(std::vector<double> knots, std::vector<double> values)
      : knots_(std::move(knots)), values_(std::move(values)) {
    if (knots_.size() < 2 || knots_.size() != values_.size()) throw ParameterError("PiecewiseLinearG: need matching knot and value lists");
    if (knots_.front() != 0.0 || knots_.back() != 1.0) throw ParameterError("PiecewiseLinearG: knots must span [0, 1]");
    if (!std::is_sorted(knots_.begin(), knots_.end(), std::less_equal<>())) throw ParameterError("PiecewiseLinearG: knots must increase strictly");
  }

  std::span<const double> knots() const { return knots_; }
  std::span<const double> values() const { return values_; }
  std::size_t size() const { return knots_.size(); }

  double operator()(double x) const {
    if (!(x >= 0.0 && x <= 1.0)) throw DomainError("PiecewiseLinearG: argument outside [0, 1]");
    const auto it = std::upper_bound(knots_.begin(), knots_.end(), x);
    const auto j = static_cast<std::size_t>(std::distance(knots_.begin(), it)) - 1;
    if (knots_[j] == x || j + 1 == knots_.size()) return values_[j];
    const double t = (x - knots_[j]) / (knots_[j + 1] - knots_[j]);
    return values_[j] + t * (values_[j + 1] - values_[j]);
  }

  double sup_norm() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
  }

 private:
  std::vector<double> knots_;
  std::vector<double> values_;
};

/// Interpolates g = f∘Φ^{-1} at the 2^{Kd}+1 Cantor breakpoints.
inline PiecewiseLinearG build_interpolant(const HolderFunction& f, std::size_t K) {
  const std::size_t d = f.dimension;
  auto knots = breakpoints(K, d);
  std::vector<double> values(knots.size());
  for (std::size_t i = 0; i < knots.size(); ++i) values[i] = outer_g_eval(f, breakpoint_code(i, K, d));
  return {std::move(knots), std::move(values)};
}

struct LipschitzAudit {
  std::size_t pairs = 0;
  std::size_t same_cell_pairs = 0;
  double max_ratio = 0.0;           ///< max |g(x)-g(y)| / |x-y|
  double same_cell_max_diff = 0.0;  ///< max |g(x)-g(y)| over pairs sharing the first kd digits
  double bound = 0.0;               ///< 2 |f|_∞ 3^{kd}
  bool holds = true;
};

/// Random Cantor pairs against the Lipschitz bound 2|f|_∞ 3^{kd} of g = f∘Φ^{-1}
/// for a piecewise-constant f. Codes carry kd + 12 ternary digits; g is read
/// from the table through the first k binary digits of Φ^{-1}, exactly.
inline LipschitzAudit lipschitz_audit_pwc(const PiecewiseConstantFunction& f, std::size_t samples, std::uint64_t seed) {
  const std::size_t d = f.dimension();
  const std::size_t kd = f.resolution() * d;
  const std::size_t length = kd + 12;
  (void)checked_power(3, length);
  Rng rng(seed);

  LipschitzAudit audit;
  audit.pairs = samples;
  audit.bound = 2.0 * f.sup_norm() * std::pow(3.0, static_cast<double>(kd));
  const double scale = std::pow(3.0, static_cast<double>(length));

  std::vector<std::uint8_t> a(length), b(length);
  for (std::size_t s = 0; s < samples; ++s) {
    const std::size_t shared = rng.below(length + 1);
    for (std::size_t j = 0; j < length; ++j) {
      a[j] = static_cast<std::uint8_t>(rng.coin() ? 2 : 0);
      b[j] = j < shared ? a[j] : static_cast<std::uint8_t>(rng.coin() ? 2 : 0);
    }
    const CantorCode x(DigitSequence(3, a));
    const CantorCode y(DigitSequence(3, b));
    const double gx = f(phi_inverse(x, d));
    const double gy = f(phi_inverse(y, d));
    const bool same_cell = std::equal(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(kd), b.begin());
    if (same_cell) {
      ++audit.same_cell_pairs;
      audit.same_cell_max_diff = std::max(audit.same_cell_max_diff, std::abs(gx - gy));
    }
    const std::uint64_t nx = x.numerator();
    const std::uint64_t ny = y.numerator();
    if (nx == ny) continue;
    const double gap = static_cast<double>(nx > ny ? nx - ny : ny - nx) / scale;
    audit.max_ratio = std::max(audit.max_ratio, std::abs(gx - gy) / gap);
  }
  audit.holds = audit.max_ratio <= audit.bound && audit.same_cell_max_diff == 0.0;
  return audit;
}

}  // namespace kasfc
