#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "kasfc/errors.hpp"
#include "kasfc/outer.hpp"

namespace kasfc {

inline constexpr const char* kBuilderVersion = "kasfc-builder/1";

enum class Activation { Relu, Identity };

/// Fully connected layer y = σ(W x + b); W is row-major (outputs × inputs).
struct Layer {
  std::size_t inputs = 0;
  std::size_t outputs = 0;
  std::vector<double> weights;
  std::vector<double> bias;
  Activation activation = Activation::Relu;

  Layer() = default;
  Layer(std::size_t in, std::size_t out, Activation act)
      : inputs(in), outputs(out), weights(in * out, 0.0), bias(out, 0.0), activation(act) {}

  double& weight(std::size_t row, std::size_t col) { return weights[row * inputs + col]; }
  double weight(std::size_t row, std::size_t col) const { return weights[row * inputs + col]; }

  double max_abs_parameter() const {
    double m = 0.0;
    for (double w : weights) m = std::max(m, std::abs(w));
    for (double b : bias) m = std::max(m, std::abs(b));
    return m;
  }
};

/// (L, (p_0, ..., p_{L+1})): L hidden layers, p_0 inputs, p_{L+1} outputs.
struct Architecture {
  std::vector<std::size_t> widths;

  std::size_t hidden_layers() const { return widths.size() - 2; }

  std::string to_string() const {
    std::ostringstream os;
    os << '(' << hidden_layers() << ",(";
    for (std::size_t i = 0; i < widths.size(); ++i) os << (i ? "," : "") << widths[i];
    os << "))";
    return os.str();
  }

  friend bool operator==(const Architecture&, const Architecture&) = default;
};

/// Provenance recorded with a constructed network.
struct NetworkMeta {
  std::size_t d = 0;
  std::size_t K = 0;
  double p = 0.0;
  double beta = 0.0;
  double Q = 0.0;
  double sup_norm = 0.0;
  int r = 0;
  std::string function;
  std::string builder_version = kBuilderVersion;

  friend bool operator==(const NetworkMeta&, const NetworkMeta&) = default;
};

/// Feedforward network: rectifier hidden layers, identity output layer.
/// Immutable after construction.
class ReluNetwork {
 public:
  ReluNetwork(std::size_t input_dim, std::vector<Layer> layers, NetworkMeta meta = {})
      : input_dim_(input_dim), layers_(std::move(layers)), meta_(std::move(meta)) {
    if (input_dim_ == 0) throw ShapeError("ReluNetwork: input dimension must be positive");
    if (layers_.empty()) throw ShapeError("ReluNetwork: at least an output layer is required");
    std::size_t width = input_dim_;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      const Layer& l = layers_[i];
      if (l.inputs != width || l.outputs == 0) throw ShapeError("ReluNetwork: layer " + std::to_string(i) + " does not chain");
      if (l.weights.size() != l.inputs * l.outputs || l.bias.size() != l.outputs) {
        throw ShapeError("ReluNetwork: layer " + std::to_string(i) + " has inconsistent parameter sizes");
      }
      const Activation expected = i + 1 == layers_.size() ? Activation::Identity : Activation::Relu;
      if (l.activation != expected) throw ShapeError("ReluNetwork: hidden layers must be rectifiers and the output layer identity");
      width = l.outputs;
    }
  }

  /// Zero hidden layers, identity map on R^n.
  static ReluNetwork identity(std::size_t n) {
    Layer out(n, n, Activation::Identity);
    for (std::size_t i = 0; i < n; ++i) out.weight(i, i) = 1.0;
    return ReluNetwork(n, {std::move(out)});
  }

  std::size_t input_dim() const { return input_dim_; }
  std::size_t output_dim() const { return layers_.back().outputs; }
  std::span<const Layer> layers() const { return layers_; }
  const NetworkMeta& meta() const { return meta_; }

  Architecture architecture() const {
    Architecture a;
    a.widths.push_back(input_dim_);
    for (const auto& l : layers_) a.widths.push_back(l.outputs);
    return a;
  }

  double max_abs_weight() const {
    double m = 0.0;
    for (const auto& l : layers_) m = std::max(m, l.max_abs_parameter());
    return m;
  }

  /// Evaluates with caller-owned scratch buffers; the returned span views one of them.
  std::span<const double> eval(std::span<const double> input, std::vector<double>& a, std::vector<double>& b) const {
    if (input.size() != input_dim_) throw ShapeError("ReluNetwork::eval: input length does not match p_0");
    a.assign(input.begin(), input.end());
    for (const auto& l : layers_) {
      b.resize(l.outputs);
      apply(l, a, b);
      std::swap(a, b);
    }
    return a;
  }

  std::vector<double> eval(std::span<const double> input) const {
    std::vector<double> a, b;
    eval(input, a, b);
    return a;
  }

 private:
  static void apply(const Layer& l, std::span<const double> in, std::span<double> out) {
    const bool relu = l.activation == Activation::Relu;
    if (l.inputs == 1) {
      const double x = in[0];
      for (std::size_t i = 0; i < l.outputs; ++i) {
        const double v = l.bias[i] + l.weights[i] * x;
        out[i] = relu ? std::max(v, 0.0) : v;
      }
      return;
    }
    for (std::size_t i = 0; i < l.outputs; ++i) {
      const double* w = l.weights.data() + i * l.inputs;
      // Four interleaved partial sums; fixed order, so results are reproducible.
      double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
      std::size_t k = 0;
      for (; k + 4 <= l.inputs; k += 4) {
        s0 += w[k] * in[k];
        s1 += w[k + 1] * in[k + 1];
        s2 += w[k + 2] * in[k + 2];
        s3 += w[k + 3] * in[k + 3];
      }
      for (; k < l.inputs; ++k) s0 += w[k] * in[k];
      const double v = l.bias[i] + ((s0 + s1) + (s2 + s3));
      out[i] = relu ? std::max(v, 0.0) : v;
    }
  }

  std::size_t input_dim_;
  std::vector<Layer> layers_;
  NetworkMeta meta_;
};

/// Largest digit budget K·max(d, pβ) the builders accept.
inline constexpr double kMaxExponentBudget = 40.0;

/// Slope exponent r of the bit-extraction ramps: the largest integer with 2^r <= 2K·2^{Kβp}.
struct BitExtractorPlan {
  std::size_t K = 1;
  int r = 1;
  std::size_t d = 1;

  static BitExtractorPlan make(std::size_t K, double beta, double p, std::size_t d) {
    if (K == 0 || d == 0) throw ParameterError("BitExtractorPlan: K and d must be positive");
    if (!(beta > 0.0 && beta <= 1.0)) throw ParameterError("BitExtractorPlan: beta must lie in (0, 1]");
    if (!(p >= 1.0)) throw ParameterError("BitExtractorPlan: p must be at least 1");
    const double budget = static_cast<double>(K) * std::max(static_cast<double>(d), p * beta);
    if (budget > kMaxExponentBudget) {
      throw CapacityError("BitExtractorPlan: K·max(d, pβ) = " + std::to_string(budget) + " exceeds the precision budget of 40");
    }
    const long double bound = 2.0L * static_cast<long double>(K) * std::exp2l(static_cast<long double>(K) * beta * p);
    int r = static_cast<int>(std::floor(std::log2l(bound)));
    while (std::ldexp(1.0L, r + 1) <= bound) ++r;
    while (std::ldexp(1.0L, r) > bound) --r;
    return {K, r, d};
  }

  /// 2K·2^{Kβp}, the bound the ramp slope 2^r respects.
  static double slope_bound(std::size_t K, double beta, double p) {
    return 2.0 * static_cast<double>(K) * std::exp2(static_cast<double>(K) * beta * p);
  }
};

/// S_1(x) = 2^r (x - 1/2 + 2^{-r-1})_+ - 2^r (x - 1/2 - 2^{-r-1})_+.
inline double s1_reference(double x, int r) {
  const double slope = std::ldexp(1.0, r);
  const double half_width = std::ldexp(1.0, -r - 1);
  return slope * std::max(x - 0.5 + half_width, 0.0) - slope * std::max(x - 0.5 - half_width, 0.0);
}

struct BitRecursion {
  std::vector<double> S;
  std::vector<double> T;
  double output = 0.0;  ///< Σ_j 2 S_j 3^{-d(j-1)}
};

/// T_1 = 2x, S_1 = S_1(x), T_{j+1} = (2T_j - 2S_j)_+, S_{j+1} = S_1(T_j - S_j).
inline BitRecursion st_recursion_reference(double x, std::size_t K, int r, std::size_t d) {
  BitRecursion out;
  out.S.resize(K);
  out.T.resize(K);
  out.S[0] = s1_reference(x, r);
  out.T[0] = 2.0 * x;
  for (std::size_t j = 1; j < K; ++j) {
    out.T[j] = std::max(2.0 * out.T[j - 1] - 2.0 * out.S[j - 1], 0.0);
    out.S[j] = s1_reference(out.T[j - 1] - out.S[j - 1], r);
  }
  const double step = std::pow(3.0, -static_cast<double>(d));
  double weight = 2.0;
  for (std::size_t j = 0; j < K; ++j) {
    out.output += weight * out.S[j];
    weight *= step;
  }
  return out;
}

namespace detail {

/// 3^{-d j}·2, the weight of bit j (0-based) in φ_K.
inline double bit_weight(std::size_t j, std::size_t d) {
  return 2.0 * std::pow(3.0, -static_cast<double>(d * j));
}

/// The 2K hidden layers of `lanes` independent bit extractors, lane q reading input q.
///
/// Stage j uses two width-4 layers per lane. With U the running sum of
/// 2 S_i 3^{-d(i-1)} over finished bits and D = T_{j-1} - S_{j-1} (D = x for
/// the first stage):
///   first layer:  U, (D - 1/2 + 2^{-r-1})_+, (D - 1/2 - 2^{-r-1})_+, (D)_+
///   second layer: U, S_j = 2^r(z+ - z-), T_j = 2(D)_+, 0
/// U absorbs 2 S_j 3^{-d(j-1)} in the next first layer, so no weight exceeds max(2^r, 2).
inline std::vector<Layer> extractor_layers(const BitExtractorPlan& plan, std::size_t lanes) {
  const double slope = std::ldexp(1.0, plan.r);
  const double half_width = std::ldexp(1.0, -plan.r - 1);
  const std::size_t w = 4 * lanes;
  std::vector<Layer> layers;
  layers.reserve(2 * plan.K);
  for (std::size_t j = 0; j < plan.K; ++j) {
    Layer first(j == 0 ? lanes : w, w, Activation::Relu);
    for (std::size_t q = 0; q < lanes; ++q) {
      const std::size_t o = 4 * q;
      if (j == 0) {
        first.weight(o + 1, q) = 1.0;
        first.weight(o + 2, q) = 1.0;
        first.weight(o + 3, q) = 1.0;
      } else {
        // previous second layer channels: o = U, o+1 = S, o+2 = T, o+3 = 0
        first.weight(o, o) = 1.0;
        first.weight(o, o + 1) = bit_weight(j - 1, plan.d);
        for (std::size_t c = 1; c <= 3; ++c) {
          first.weight(o + c, o + 2) = 1.0;
          first.weight(o + c, o + 1) = -1.0;
        }
      }
      first.bias[o + 1] = -0.5 + half_width;
      first.bias[o + 2] = -0.5 - half_width;
    }
    Layer second(w, w, Activation::Relu);
    for (std::size_t q = 0; q < lanes; ++q) {
      const std::size_t o = 4 * q;
      second.weight(o, o) = 1.0;
      second.weight(o + 1, o + 1) = slope;
      second.weight(o + 1, o + 2) = -slope;
      second.weight(o + 2, o + 3) = 2.0;
    }
    layers.push_back(std::move(first));
    layers.push_back(std::move(second));
  }
  return layers;
}

/// Row `lane` of the layer that closes an extractor: U + 2 S_K 3^{-d(K-1)}.
inline void write_extractor_readout(Layer& layer, std::size_t lane, const BitExtractorPlan& plan) {
  layer.weight(lane, 4 * lane) = 1.0;
  layer.weight(lane, 4 * lane + 1) = bit_weight(plan.K - 1, plan.d);
}

}  // namespace detail

/// Network of architecture (2K, (1, 4, ..., 4, 1)) computing x -> Σ_j 2 S_j(x) 3^{-d(j-1)}.
inline ReluNetwork build_bit_extractor(const BitExtractorPlan& plan) {
  if (plan.K == 0 || plan.r < 1) throw ParameterError("build_bit_extractor: invalid plan");
  auto layers = detail::extractor_layers(plan, 1);
  Layer out(4, 1, Activation::Identity);
  detail::write_extractor_readout(out, 0, plan);
  layers.push_back(std::move(out));
  NetworkMeta meta;
  meta.d = plan.d;
  meta.K = plan.K;
  meta.r = plan.r;
  meta.function = "bit_extractor";
  return ReluNetwork(1, std::move(layers), std::move(meta));
}

namespace detail {

/// Hidden and output layer realising g̃ from a single input. Unit i computes
/// λ_i(x - t_i)_+ with λ_i = sqrt|a_i| and the output weight is sign(a_i)λ_i,
/// so a_i(x - t_i)_+ is reproduced with no parameter above sqrt|a_i|.
inline std::pair<Layer, Layer> outer_layers(const PiecewiseLinearG& g) {
  const auto x = g.knots();
  const auto v = g.values();
  const std::size_t n = x.size() - 1;  // number of linear pieces
  std::vector<double> slope(n);
  for (std::size_t j = 0; j < n; ++j) slope[j] = (v[j + 1] - v[j]) / (x[j + 1] - x[j]);

  // g̃(x) = g_0 (x+1)_+ + (s_1 - g_0)(x)_+ + Σ_{j=1}^{n-1} (s_{j+1} - s_j)(x - x_j)_+
  std::vector<double> coeff(n + 1), shift(n + 1);
  coeff[0] = v[0];
  shift[0] = -1.0;
  coeff[1] = slope[0] - v[0];
  shift[1] = 0.0;
  for (std::size_t j = 1; j < n; ++j) {
    coeff[j + 1] = slope[j] - slope[j - 1];
    shift[j + 1] = x[j];
  }

  Layer hidden(1, n + 1, Activation::Relu);
  Layer out(n + 1, 1, Activation::Identity);
  for (std::size_t i = 0; i <= n; ++i) {
    const double lambda = std::sqrt(std::abs(coeff[i]));
    hidden.weights[i] = lambda;
    hidden.bias[i] = -lambda * shift[i];
    out.weights[i] = coeff[i] < 0.0 ? -lambda : lambda;
  }
  return {std::move(hidden), std::move(out)};
}

}  // namespace detail

/// One hidden layer with one unit per breakpoint (2^{Kd}+1 units) equal to g̃ on [0, 1].
inline ReluNetwork build_outer_net(const PiecewiseLinearG& g) {
  auto [hidden, out] = detail::outer_layers(g);
  std::vector<Layer> layers;
  layers.push_back(std::move(hidden));
  layers.push_back(std::move(out));
  return ReluNetwork(1, std::move(layers));
}

struct AssemblyOptions {
  /// Refuse outer layers wider than this many units.
  std::size_t max_outer_units = (std::size_t{1} << 20) + 1;
};

/// x -> g̃(Σ_q 3^{-q} φ̃_K(x_q)) with architecture
/// (2K+3, (d, 4d, ..., 4d, d, 1, 2^{Kd}+1, 1)).
inline ReluNetwork assemble_full(const HolderFunction& f, std::size_t K, double p, const AssemblyOptions& options = {}) {
  const std::size_t d = f.dimension;
  const BitExtractorPlan plan = BitExtractorPlan::make(K, f.beta, p, d);
  if (K * d > kMaxBreakpointDigits || (std::size_t{1} << (K * d)) + 1 > options.max_outer_units) {
    throw CapacityError("assemble_full: outer layer of 2^{" + std::to_string(K * d) + "}+1 units exceeds the unit budget");
  }

  std::vector<Layer> layers = detail::extractor_layers(plan, d);

  Layer phi_layer(4 * d, d, Activation::Relu);
  for (std::size_t q = 0; q < d; ++q) detail::write_extractor_readout(phi_layer, q, plan);
  layers.push_back(std::move(phi_layer));

  // Σ_q 3^{-q} φ̃_K(x_q) is nonnegative, so the rectifier passes it through.
  Layer sum_layer(d, 1, Activation::Relu);
  for (std::size_t q = 0; q < d; ++q) sum_layer.weight(0, q) = std::pow(3.0, -static_cast<double>(q + 1));
  layers.push_back(std::move(sum_layer));

  auto [hidden, out] = detail::outer_layers(build_interpolant(f, K));
  layers.push_back(std::move(hidden));
  layers.push_back(std::move(out));

  NetworkMeta meta;
  meta.d = d;
  meta.K = K;
  meta.p = p;
  meta.beta = f.beta;
  meta.Q = f.Q;
  meta.sup_norm = f.sup_norm;
  meta.r = plan.r;
  meta.function = f.name;
  return ReluNetwork(d, std::move(layers), std::move(meta));
}

/// The expected architecture tuple of assemble_full.
inline Architecture full_architecture(std::size_t d, std::size_t K) {
  Architecture a;
  a.widths.push_back(d);
  for (std::size_t i = 0; i < 2 * K; ++i) a.widths.push_back(4 * d);
  a.widths.push_back(d);
  a.widths.push_back(1);
  a.widths.push_back((std::size_t{1} << (K * d)) + 1);
  a.widths.push_back(1);
  return a;
}

/// ε^{-1}(x - (1-ε)/2)_+ - ε^{-1}(x - (1+ε)/2)_+, a two-unit ramp approximating 1(x >= 1/2).
inline ReluNetwork soft_threshold(double eps) {
  if (!(eps > 0.0 && eps < 1.0)) throw ParameterError("soft_threshold: eps must lie in (0, 1)");
  Layer hidden(1, 2, Activation::Relu);
  hidden.weights = {1.0, 1.0};
  hidden.bias = {-(1.0 - eps) / 2.0, -(1.0 + eps) / 2.0};
  Layer out(2, 1, Activation::Identity);
  out.weights = {1.0 / eps, -1.0 / eps};
  std::vector<Layer> layers;
  layers.push_back(std::move(hidden));
  layers.push_back(std::move(out));
  return ReluNetwork(1, std::move(layers));
}

/// Per-part weight audit of an assemble_full network against its metadata.
struct WeightAudit {
  double extractor_max = 0.0;   ///< bit-extraction, readout and sum layers
  double outer_max = 0.0;       ///< outer hidden and output layers
  double overall_max = 0.0;
  double extractor_bound = 0.0; ///< 2^r
  double slope_bound = 0.0;     ///< 2K 2^{Kβp}
  double outer_bound = 0.0;     ///< 2 |f|_∞ 2^{Kd}
  double global_bound = 0.0;    ///< 2 (K ∨ |f|_∞) 2^{K(d ∨ pβ)}
  bool ok = false;
};

inline WeightAudit audit_weights(const ReluNetwork& net) {
  const NetworkMeta& m = net.meta();
  const auto layers = net.layers();
  if (layers.size() != 2 * m.K + 4) throw ShapeError("audit_weights: not an assembled network");
  WeightAudit a;
  for (std::size_t i = 0; i < 2 * m.K + 2; ++i) a.extractor_max = std::max(a.extractor_max, layers[i].max_abs_parameter());
  for (std::size_t i = 2 * m.K + 2; i < layers.size(); ++i) a.outer_max = std::max(a.outer_max, layers[i].max_abs_parameter());
  a.overall_max = std::max(a.extractor_max, a.outer_max);
  const double K = static_cast<double>(m.K);
  const double d = static_cast<double>(m.d);
  a.extractor_bound = std::ldexp(1.0, m.r);
  a.slope_bound = BitExtractorPlan::slope_bound(m.K, m.beta, m.p);
  a.outer_bound = 2.0 * m.sup_norm * std::exp2(K * d);
  a.global_bound = 2.0 * std::max(K, m.sup_norm) * std::exp2(K * std::max(d, m.p * m.beta));
  a.ok = a.extractor_max <= a.extractor_bound && a.extractor_bound <= a.slope_bound && a.outer_max <= a.outer_bound &&
         a.overall_max <= a.global_bound;
  return a;
}

}  // namespace kasfc
