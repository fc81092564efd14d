#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "kasfc/errors.hpp"
#include "kasfc/outer.hpp"
#include "kasfc/random.hpp"
#include "kasfc/relunet.hpp"

namespace kasfc {

inline std::string to_string_u128(unsigned __int128 v) {
  if (v == 0) return "0";
  std::string s;
  while (v != 0) {
    s.push_back(static_cast<char>('0' + static_cast<int>(v % 10)));
    v /= 10;
  }
  return {s.rbegin(), s.rend()};
}

/// Exact nonnegative dyadic rational numerator / 2^exponent.
struct Dyadic {
  unsigned __int128 numerator = 0;
  unsigned exponent = 0;

  Dyadic reduced() const {
    Dyadic r = *this;
    while (r.exponent > 0 && r.numerator % 2 == 0) {
      r.numerator /= 2;
      --r.exponent;
    }
    if (r.numerator == 0) r.exponent = 0;
    return r;
  }

  double to_double() const {
    return std::ldexp(static_cast<double>(static_cast<long double>(numerator)), -static_cast<int>(exponent));
  }

  /// "n/2^e" written out as "n/m" in lowest terms.
  std::string to_string() const {
    const Dyadic r = reduced();
    if (r.exponent == 0) return to_string_u128(r.numerator);
    return to_string_u128(r.numerator) + "/" + to_string_u128(static_cast<unsigned __int128>(1) << r.exponent);
  }

  friend bool operator==(const Dyadic& a, const Dyadic& b) {
    const Dyadic x = a.reduced();
    const Dyadic y = b.reduced();
    return x.numerator == y.numerator && x.exponent == y.exponent;
  }
  friend bool operator<=(const Dyadic& a, const Dyadic& b) {
    const unsigned e = std::max(a.exponent, b.exponent);
    return (a.numerator << (e - a.exponent)) <= (b.numerator << (e - b.exponent));
  }
};

/// Open interval (lo, hi) / 2^scale_bits.
struct DyadicInterval {
  std::uint64_t lo = 0;
  std::uint64_t hi = 0;
  friend bool operator==(const DyadicInterval&, const DyadicInterval&) = default;
};

/// Points of [0,1] at which some bit-extraction ramp of the K-stage network
/// is undecided: the union over levels j = 0..K-1 of
///   {x : |[0.a_{j+1} a_{j+2} ...]_2 - 1/2| < 2^{-r-1}},
/// the level-j set being 2^j open intervals of length 2^{-r-j}.
struct BadSetReport {
  std::size_t K = 0;
  int r = 0;
  unsigned scale_bits = 0;  ///< endpoints are integers over 2^scale_bits
  std::vector<DyadicInterval> intervals;  ///< merged, ascending, pairwise disjoint
  Dyadic total;

  bool contains(double x) const {
    const long double scaled = std::ldexp(static_cast<long double>(x), static_cast<int>(scale_bits));
    auto it = std::upper_bound(intervals.begin(), intervals.end(), scaled,
                               [](long double v, const DyadicInterval& iv) { return v < static_cast<long double>(iv.hi); });
    return it != intervals.end() && static_cast<long double>(it->lo) < scaled;
  }
};

/// The 2^j intervals of one level, in units of 2^{-(r+j+1)}: centres at odd multiples, half-width 1.
inline std::vector<DyadicInterval> bad_set_level(std::size_t j, int r) {
  std::vector<DyadicInterval> out;
  out.reserve(std::size_t{1} << j);
  const std::uint64_t unit = std::uint64_t{1} << r;  // 1/2^{j+1} in units of 2^{-(r+j+1)}
  for (std::uint64_t m = 0; m < (std::uint64_t{1} << j); ++m) {
    const std::uint64_t centre = (2 * m + 1) * unit;
    out.push_back({centre - 1, centre + 1});
  }
  return out;
}

inline BadSetReport bad_set_intervals(std::size_t K, int r) {
  if (K == 0) throw ParameterError("bad_set_intervals: K must be at least 1");
  if (r < 1) throw ParameterError("bad_set_intervals: r must be at least 1");
  if (static_cast<std::size_t>(r) + K + 1 > 62) throw CapacityError("bad_set_intervals: r + K exceeds the 64-bit grid");
  BadSetReport report;
  report.K = K;
  report.r = r;
  report.scale_bits = static_cast<unsigned>(r) + static_cast<unsigned>(K);  // level K-1 needs 2^{-(r+K)}

  std::vector<DyadicInterval> all;
  for (std::size_t j = 0; j < K; ++j) {
    const unsigned shift = report.scale_bits - (static_cast<unsigned>(r) + static_cast<unsigned>(j) + 1);
    for (auto iv : bad_set_level(j, r)) all.push_back({iv.lo << shift, iv.hi << shift});
  }
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.lo < b.lo; });
  for (const auto& iv : all) {
    if (!report.intervals.empty() && iv.lo < report.intervals.back().hi) {
      report.intervals.back().hi = std::max(report.intervals.back().hi, iv.hi);
    } else {
      report.intervals.push_back(iv);
    }
  }
  unsigned __int128 length = 0;
  for (const auto& iv : report.intervals) length += iv.hi - iv.lo;
  report.total = Dyadic{length, report.scale_bits}.reduced();
  return report;
}

/// Measure of {x in [0,1]^d : some coordinate lies in the bad set} = 1 - (1 - m)^d.
inline Dyadic mismatch_measure(std::size_t K, int r, std::size_t d) {
  if (d == 0) throw ParameterError("mismatch_measure: d must be positive");
  const BadSetReport bad = bad_set_intervals(K, r);
  const unsigned e = bad.scale_bits;
  if (static_cast<std::size_t>(e) * d > 126) throw CapacityError("mismatch_measure: exponent exceeds 128-bit budget");
  const unsigned __int128 one = static_cast<unsigned __int128>(1) << e;
  unsigned __int128 m = 0;
  for (const auto& iv : bad.intervals) m += iv.hi - iv.lo;
  unsigned __int128 good = 1;
  for (std::size_t q = 0; q < d; ++q) good *= one - m;
  const unsigned total_exp = e * static_cast<unsigned>(d);
  const unsigned __int128 whole = static_cast<unsigned __int128>(1) << total_exp;
  return Dyadic{whole - good, total_exp}.reduced();
}

namespace detail {

inline double pairwise_sum(std::span<const double> v) {
  if (v.empty()) return 0.0;
  if (v.size() <= 8) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

}  // namespace detail

/// Per-thread integrand: returns a callable double(std::span<const double>).
using IntegrandFactory = std::function<std::function<double(std::span<const double>)>()>;

/// Mean of an integrand over the midpoints of the 2^{grid_bits·d} cells of [0,1]^d.
///
/// Cells are split into fixed blocks; each block is summed in index order and
/// the block sums are combined pairwise, so the result does not depend on the
/// number of worker threads.
inline double midpoint_mean(std::size_t d, std::size_t grid_bits, const IntegrandFactory& make, std::size_t threads = 0) {
  if (grid_bits * d > 24) throw CapacityError("midpoint_mean: more than 2^24 cells requested");
  const std::size_t cells = std::size_t{1} << (grid_bits * d);
  constexpr std::size_t kBlock = 4096;
  const std::size_t blocks = (cells + kBlock - 1) / kBlock;
  std::vector<double> sums(blocks, 0.0);
  const double h = std::ldexp(1.0, -static_cast<int>(grid_bits));
  const std::size_t mask = (std::size_t{1} << grid_bits) - 1;

  auto worker = [&](std::size_t first, std::size_t stride) {
    auto integrand = make();
    std::vector<double> x(d);
    for (std::size_t b = first; b < blocks; b += stride) {
      double s = 0.0;
      const std::size_t end = std::min(cells, (b + 1) * kBlock);
      for (std::size_t i = b * kBlock; i < end; ++i) {
        for (std::size_t q = 0; q < d; ++q) {
          const std::size_t l = (i >> (grid_bits * (d - 1 - q))) & mask;
          x[q] = (static_cast<double>(l) + 0.5) * h;
        }
        s += integrand(x);
      }
      sums[b] = s;
    }
  };

  if (threads == 0) threads = std::max(1U, std::thread::hardware_concurrency());
  threads = std::min(threads, blocks);
  if (threads <= 1) {
    worker(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker, t, threads);
    for (auto& t : pool) t.join();
  }
  return detail::pairwise_sum(sums) / static_cast<double>(cells);
}

/// Midpoint-rule estimate of |f - f̃|_{L^p([0,1]^d)} on the 2^{grid_bits·d}-cell grid.
inline double lp_error(const HolderFunction& f, const ReluNetwork& net, double p, std::size_t grid_bits, std::size_t threads = 0) {
  if (!(p >= 1.0)) throw ParameterError("lp_error: p must be at least 1");
  if (net.input_dim() != f.dimension || net.output_dim() != 1) throw ShapeError("lp_error: network shape does not match f");
  const double mean = midpoint_mean(
      f.dimension, grid_bits,
      [&]() -> std::function<double(std::span<const double>)> {
        return [&, a = std::vector<double>(), b = std::vector<double>()](std::span<const double> x) mutable {
          const double diff = f(x) - net.eval(x, a, b)[0];
          return std::pow(std::abs(diff), p);
        };
      },
      threads);
  return std::pow(mean, 1.0 / p);
}

/// K + 2 bits per axis, capped so the grid holds at most 2^24 cells.
inline std::size_t default_grid_bits(std::size_t K, std::size_t d) { return std::min(K + 2, 24 / d); }

struct MonteCarloEstimate {
  double estimate = 0.0;
  double standard_error = 0.0;  ///< delta-method standard error of the L^p norm
  std::size_t samples = 0;
};

/// Monte-Carlo estimate of |f - approx|_{L^p} from uniform samples.
inline MonteCarloEstimate lp_error_monte_carlo(const HolderFunction& f, const std::function<double(std::span<const double>)>& approx,
                                               double p, std::size_t samples, std::uint64_t seed) {
  if (samples < 2) throw ParameterError("lp_error_monte_carlo: need at least two samples");
  Rng rng(seed);
  std::vector<double> x(f.dimension);
  // Welford running mean and variance of |f - approx|^p.
  double mean = 0.0, m2 = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    for (auto& v : x) v = rng.unit();
    const double e = std::pow(std::abs(f(x) - approx(x)), p);
    const double delta = e - mean;
    mean += delta / static_cast<double>(s + 1);
    m2 += delta * (e - mean);
  }
  const double n = static_cast<double>(samples);
  const double se_mean = std::sqrt(m2 / (n - 1.0) / n);
  MonteCarloEstimate out;
  out.samples = samples;
  out.estimate = std::pow(mean, 1.0 / p);
  out.standard_error = mean > 0.0 ? std::pow(mean, 1.0 / p - 1.0) / p * se_mean : 0.0;
  return out;
}

inline MonteCarloEstimate lp_error_monte_carlo(const HolderFunction& f, const ReluNetwork& net, double p, std::size_t samples,
                                               std::uint64_t seed) {
  std::vector<double> a, b;
  return lp_error_monte_carlo(
      f, [&](std::span<const double> x) { return net.eval(x, a, b)[0]; }, p, samples, seed);
}

/// (16Q + 2|f|_∞) 2^{-βK}. For a table constant on dyadic cells of side
/// 2^{-k} with k <= K the truncated representation is exact, the Q term drops
/// and the bound is 2|f|_∞ 2^{-βK}.
inline double lp_bound(const HolderFunction& f, std::size_t K) {
  const double decay = std::exp2(-f.beta * static_cast<double>(K));
  if (f.dyadic_resolution && *f.dyadic_resolution <= K) return 2.0 * f.sup_norm * decay;
  return (16.0 * f.Q + 2.0 * f.sup_norm) * decay;
}

struct ErrorReport {
  std::string function;
  std::size_t d = 0;
  std::size_t K = 0;
  double p = 0.0;
  double beta = 0.0;
  double Q = 0.0;
  double measured_lp = 0.0;
  double theoretical_bound = 0.0;
  double max_weight = 0.0;
  Dyadic bad_set_measure;
  std::size_t grid_bits = 0;

  bool certified() const { return measured_lp <= theoretical_bound; }
};

inline ErrorReport make_error_report(const HolderFunction& f, const ReluNetwork& net, std::size_t grid_bits, std::size_t threads = 0) {
  const NetworkMeta& m = net.meta();
  ErrorReport r;
  r.function = f.name;
  r.d = f.dimension;
  r.K = m.K;
  r.p = m.p;
  r.beta = f.beta;
  r.Q = f.Q;
  r.measured_lp = lp_error(f, net, m.p, grid_bits, threads);
  r.theoretical_bound = lp_bound(f, m.K);
  r.max_weight = net.max_abs_weight();
  r.bad_set_measure = mismatch_measure(m.K, m.r, f.dimension);
  r.grid_bits = grid_bits;
  return r;
}

inline std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

inline const char* csv_header() { return "function,d,K,p,beta,Q,measured_lp,bound,max_weight,bad_set_measure,grid_bits"; }

inline std::string to_csv_row(const ErrorReport& r) {
  std::ostringstream os;
  os << r.function << ',' << r.d << ',' << r.K << ',' << format_double(r.p) << ',' << format_double(r.beta) << ','
     << format_double(r.Q) << ',' << format_double(r.measured_lp) << ',' << format_double(r.theoretical_bound) << ','
     << format_double(r.max_weight) << ',' << r.bad_set_measure.to_string() << ',' << r.grid_bits;
  return os.str();
}

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  bool degenerate = false;  ///< a zero error leaves log2 undefined; no fit was made
};

/// Least-squares slope of log2(measured_lp) against K.
inline RateFit rate_fit(std::span<const ErrorReport> reports) {
  if (reports.size() < 3) throw ParameterError("rate_fit: need at least three reports");
  for (const auto& r : reports) {
    if (r.function != reports[0].function || r.d != reports[0].d || r.p != reports[0].p) {
      throw ParameterError("rate_fit: reports must share function, d and p");
    }
  }
  RateFit fit;
  if (std::any_of(reports.begin(), reports.end(), [](const auto& r) { return !(r.measured_lp > 0.0); })) {
    fit.degenerate = true;
    return fit;
  }
  const double n = static_cast<double>(reports.size());
  double sx = 0.0, sy = 0.0;
  for (const auto& r : reports) {
    sx += static_cast<double>(r.K);
    sy += std::log2(r.measured_lp);
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& r : reports) {
    const double dx = static_cast<double>(r.K) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log2(r.measured_lp) - my);
  }
  if (sxx == 0.0) throw ParameterError("rate_fit: reports must span at least two values of K");
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  return fit;
}

/// Rounding budget for comparing an assembled network with ka_approx_eval:
/// 4·sqrt(n)·ε·Σ_i |a_i| over the n outer units with coefficients a_i.
/// The extractor part is exact on the good set; all the rounding is in the
/// cancelling outer sum.
inline double good_set_tolerance(const ReluNetwork& net) {
  const auto layers = net.layers();
  if (layers.size() < 2) throw ShapeError("good_set_tolerance: network has no outer layer");
  const Layer& out = layers.back();
  const Layer& hidden = layers[layers.size() - 2];
  if (out.outputs != 1 || hidden.inputs != 1) throw ShapeError("good_set_tolerance: not an assembled network");
  double mass = 0.0;
  for (std::size_t i = 0; i < out.inputs; ++i) mass += std::abs(out.weights[i] * hidden.weights[i]);
  const double n = static_cast<double>(out.inputs);
  return 4.0 * std::sqrt(n) * std::numeric_limits<double>::epsilon() * mass;
}

/// Network output against the truncated representation at points where no
/// coordinate hits the bad set.
struct GoodSetAgreement {
  std::size_t checked = 0;
  std::size_t skipped = 0;
  double max_deviation = 0.0;
  double tolerance = 0.0;
  bool ok() const { return max_deviation <= tolerance; }
};

inline GoodSetAgreement compare_on_good_set(const HolderFunction& f, const ReluNetwork& net, std::span<const std::vector<double>> points) {
  const NetworkMeta& m = net.meta();
  const BadSetReport bad = bad_set_intervals(m.K, m.r);
  GoodSetAgreement out;
  out.tolerance = good_set_tolerance(net);
  std::vector<double> a, b;
  for (const auto& x : points) {
    if (std::any_of(x.begin(), x.end(), [&](double v) { return bad.contains(v); })) {
      ++out.skipped;
      continue;
    }
    ++out.checked;
    const double dev = std::abs(net.eval(x, a, b)[0] - ka_approx_eval(f, x, m.K));
    out.max_deviation = std::max(out.max_deviation, dev);
  }
  return out;
}

}  // namespace kasfc
