#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kasfc/errors.hpp"
#include "kasfc/outer.hpp"

namespace kasfc {

/// Bumped whenever a registered function or its metadata changes.
inline constexpr const char* kRegistryVersion = "kasfc-registry/1";

enum class RegistryKind {
  Holder,   ///< finite (β, Q); subject to every Hölder-based certification
  Fixture,  ///< constant or dyadic table; exactly representable once K is large enough
};

struct RegistryEntry {
  std::string name;
  RegistryKind kind;
  std::string formula;
  std::string smoothness;  ///< human-readable (β, Q, sup) summary
};

namespace detail {

/// Σ_{n<60} 2^{-nβ} dist(2^n x, Z); 2^n x is exact, and vanishes mod 1 past n = 53.
inline double takagi(double x, double beta) {
  double sum = 0.0;
  double scale = 1.0;
  double y = x;
  const double decay = std::exp2(-beta);
  for (int n = 0; n < 60; ++n) {
    const double frac = y - std::floor(y);
    sum += scale * std::min(frac, 1.0 - frac);
    y *= 2.0;
    scale *= decay;
  }
  return sum;
}

/// Hölder constant of the β-Takagi sum in one variable:
/// 1/(2^{1-β} - 1) + 2^β / (2(1 - 2^{-β})).
inline double takagi_Q(double beta) {
  return 1.0 / (std::exp2(1.0 - beta) - 1.0) + std::exp2(beta) / (2.0 * (1.0 - std::exp2(-beta)));
}

inline double takagi_sup(double beta) { return 1.0 / (2.0 * (1.0 - std::exp2(-beta))); }

inline HolderFunction dist_inf(std::string name, std::size_t d, double beta) {
  HolderFunction f;
  f.name = std::move(name);
  f.dimension = d;
  f.beta = beta;
  f.Q = 1.0;
  f.sup_norm = std::pow(0.5, beta);
  f.evaluate = [beta](std::span<const double> x) {
    double m = 0.0;
    for (double v : x) m = std::max(m, std::abs(v - 0.5));
    return std::pow(m, beta);
  };
  return f;
}

}  // namespace detail

inline std::vector<RegistryEntry> registry_entries() {
  return {
      {"coord1", RegistryKind::Holder, "x_1", "beta=1 Q=1 sup=1"},
      {"coord_last", RegistryKind::Holder, "x_d", "beta=1 Q=1 sup=1"},
      {"dist_inf_1", RegistryKind::Holder, "|x - c|_inf, c = (1/2,...,1/2)", "beta=1 Q=1 sup=1/2"},
      {"dist_inf_05", RegistryKind::Holder, "|x - c|_inf^0.5, c = (1/2,...,1/2)", "beta=0.5 Q=1 sup=2^-0.5"},
      {"sines", RegistryKind::Holder, "(1/d) sum_q sin(2 pi x_q)", "beta=1 Q=2pi sup=1"},
      {"product", RegistryKind::Holder, "prod_q x_q", "beta=1 Q=d sup=1"},
      {"takagi_05", RegistryKind::Holder, "(1/d) sum_q sum_{n<60} 2^{-n/2} dist(2^n x_q, Z)",
       "beta=0.5 Q=1/(sqrt2-1)+sqrt2/(2-sqrt2) sup=1/(2-sqrt2)"},
      {"constant", RegistryKind::Fixture, "3/4", "beta=1 Q=0 sup=3/4"},
      {"pwc", RegistryKind::Fixture, "random table on 2^{kd} dyadic cells, values in [-1,1) (--seed, --pwc-k)",
       "beta=1 Q=inf sup=max|table|"},
  };
}

/// Names of the registered functions with finite Hölder metadata.
inline std::vector<std::string> holder_registry_names() {
  std::vector<std::string> out;
  for (const auto& e : registry_entries()) {
    if (e.kind == RegistryKind::Holder) out.push_back(e.name);
  }
  return out;
}

struct RegistryOptions {
  std::uint64_t seed = 1;        ///< pwc table seed
  std::size_t pwc_resolution = 2;  ///< pwc cell side 2^{-k}
};

inline HolderFunction make_registry_function(const std::string& name, std::size_t d, const RegistryOptions& options = {}) {
  if (d == 0) throw ParameterError("registry: d must be positive");
  HolderFunction f;
  f.name = name;
  f.dimension = d;
  if (name == "coord1" || name == "coord_last") {
    const std::size_t q = name == "coord1" ? 0 : d - 1;
    f.beta = 1.0;
    f.Q = 1.0;
    f.sup_norm = 1.0;
    f.evaluate = [q](std::span<const double> x) { return x[q]; };
  } else if (name == "dist_inf_1") {
    return detail::dist_inf(name, d, 1.0);
  } else if (name == "dist_inf_05") {
    return detail::dist_inf(name, d, 0.5);
  } else if (name == "sines") {
    f.beta = 1.0;
    f.Q = 2.0 * std::numbers::pi;
    f.sup_norm = 1.0;
    f.evaluate = [](std::span<const double> x) {
      double s = 0.0;
      for (double v : x) s += std::sin(2.0 * std::numbers::pi * v);
      return s / static_cast<double>(x.size());
    };
  } else if (name == "product") {
    f.beta = 1.0;
    f.Q = static_cast<double>(d);
    f.sup_norm = 1.0;
    f.evaluate = [](std::span<const double> x) {
      double s = 1.0;
      for (double v : x) s *= v;
      return s;
    };
  } else if (name == "takagi_05") {
    f.beta = 0.5;
    f.Q = detail::takagi_Q(0.5);
    f.sup_norm = detail::takagi_sup(0.5);
    f.evaluate = [](std::span<const double> x) {
      double s = 0.0;
      for (double v : x) s += detail::takagi(v, 0.5);
      return s / static_cast<double>(x.size());
    };
  } else if (name == "constant") {
    f.beta = 1.0;
    f.Q = 0.0;
    f.sup_norm = 0.75;
    f.evaluate = [](std::span<const double>) { return 0.75; };
  } else if (name == "pwc") {
    return PiecewiseConstantFunction::random(options.pwc_resolution, d, options.seed).as_function("pwc");
  } else {
    throw ParameterError("registry: unknown function '" + name + "'");
  }
  return f;
}

}  // namespace kasfc
