#include <gtest/gtest.h>

#include <cmath>
#include <cstdint>
#include <vector>

#include "kasfc/measure.hpp"
#include "kasfc/registry.hpp"

using namespace kasfc;

namespace {

/// Brute-force membership of i / 2^bits in the bad set: some tail
/// frac(2^j x), j < K, lies strictly within 2^{-r-1} of 1/2.
bool brute_bad(std::uint64_t i, unsigned bits, std::size_t K, int r) {
  const std::uint64_t one = std::uint64_t{1} << bits;
  for (std::size_t j = 0; j < K; ++j) {
    const std::uint64_t tail = (i << j) & (one - 1);  // frac(2^j x)·2^bits
    const std::int64_t off = 2 * static_cast<std::int64_t>(tail) - static_cast<std::int64_t>(one);
    if (std::llabs(off) < static_cast<std::int64_t>(one >> r)) return true;
  }
  return false;
}

/// Per-axis table of bad cells [i, i+1)/2^bits, decided at the cell midpoint.
std::vector<bool> brute_bad_cells(unsigned bits, std::size_t K, int r) {
  std::vector<bool> out(std::size_t{1} << bits);
  for (std::uint64_t i = 0; i < out.size(); ++i) out[i] = brute_bad(2 * i + 1, bits + 1, K, r);
  return out;
}

ReluNetwork exact_coord1_net() {
  Layer hidden(2, 1, Activation::Relu);
  hidden.weights = {1.0, 0.0};
  Layer out(1, 1, Activation::Identity);
  out.weights = {1.0};
  NetworkMeta meta;
  meta.d = 2;
  meta.K = 1;
  meta.p = 2;
  return ReluNetwork(2, {hidden, out}, meta);
}

}  // namespace

TEST(BadSet, LevelGeometry) {
  // Level j = 1, r = 4: two intervals of length 2^{-5} centred at 1/4 and 3/4.
  const auto level = bad_set_level(1, 4);
  ASSERT_EQ(level.size(), 2U);
  // Units of 2^{-(r+j+1)} = 1/64.
  EXPECT_EQ(level[0], (DyadicInterval{15, 17}));
  EXPECT_EQ(level[1], (DyadicInterval{47, 49}));
  for (std::size_t j = 0; j < 6; ++j) {
    const auto l = bad_set_level(j, 7);
    EXPECT_EQ(l.size(), std::size_t{1} << j);
    for (const auto& iv : l) EXPECT_EQ(iv.hi - iv.lo, 2U);  // 2^{-r-j} in units of 2^{-(r+j+1)}
  }
}

TEST(BadSet, SingleStage) {
  const auto report = bad_set_intervals(1, 4);
  ASSERT_EQ(report.intervals.size(), 1U);
  EXPECT_EQ(report.total, (Dyadic{1, 4}));
  EXPECT_TRUE(report.contains(0.5));
  EXPECT_TRUE(report.contains(0.5 + 1.0 / 64));
  EXPECT_FALSE(report.contains(0.5 + 1.0 / 32));
  EXPECT_FALSE(report.contains(0.5 - 1.0 / 32));
}

TEST(BadSet, ThreeQuarters) {
  // 0.75 = [0.11]_2 has remainder exactly 1/2 after the first bit.
  EXPECT_FALSE(bad_set_intervals(1, 6).contains(0.75));
  for (std::size_t K = 2; K <= 6; ++K) {
    for (int r = 2; r <= 12; ++r) EXPECT_TRUE(bad_set_intervals(K, r).contains(0.75));
  }
}

TEST(BadSet, ZerothTailMatters) {
  // x = 1/2 + 2^{-r-2} keeps every tail after the first bit far from 1/2, yet
  // the first ramp is undecided there and the extractor misreads bit one.
  const std::size_t K = 3;
  const int r = 6;
  const double x = 0.5 + std::ldexp(1.0, -r - 2);
  EXPECT_TRUE(bad_set_intervals(K, r).contains(x));
  EXPECT_EQ(st_recursion_reference(x, K, r, 1).S[0], 0.75);
}

TEST(BadSet, MatchesBruteForceMembershipAndMeasure) {
  for (std::size_t K = 1; K <= 6; ++K) {
    for (int r : {static_cast<int>(K), static_cast<int>(K) + 2, static_cast<int>(K) + 4, static_cast<int>(K) + 7}) {
      const auto report = bad_set_intervals(K, r);
      const unsigned bits = static_cast<unsigned>(r) + static_cast<unsigned>(K) + 2;
      for (std::uint64_t i = 0; i <= (std::uint64_t{1} << bits); ++i) {
        const double x = std::ldexp(static_cast<double>(i), -static_cast<int>(bits));
        const bool expected = i < (std::uint64_t{1} << bits) && brute_bad(i, bits, K, r);
        ASSERT_EQ(report.contains(x), expected) << "K=" << K << " r=" << r << " i=" << i;
      }
      const auto cells = brute_bad_cells(bits, K, r);
      unsigned __int128 count = 0;
      for (bool b : cells) count += b ? 1 : 0;
      EXPECT_EQ(report.total, (Dyadic{count, bits}));
      EXPECT_TRUE(report.total <= (Dyadic{K, static_cast<unsigned>(r)}));
      for (std::size_t m = 1; m < report.intervals.size(); ++m) {
        EXPECT_LT(report.intervals[m - 1].lo, report.intervals[m - 1].hi);
        EXPECT_LE(report.intervals[m - 1].hi, report.intervals[m].lo);
      }
    }
  }
}

TEST(BadSet, MeasureBelowRateForPlannedSlope) {
  for (std::size_t K = 1; K <= 6; ++K) {
    for (double beta : {0.5, 1.0}) {
      for (double p : {1.0, 2.0}) {
        const auto plan = BitExtractorPlan::make(K, beta, p, 2);
        const auto report = bad_set_intervals(K, plan.r);
        EXPECT_LE(report.total.to_double(), static_cast<double>(K) * std::ldexp(1.0, -plan.r));
        EXPECT_LE(report.total.to_double(), std::exp2(-static_cast<double>(K) * beta * p));
      }
    }
  }
}

TEST(Mismatch, OneDimensionEqualsTotal) {
  for (std::size_t K = 1; K <= 5; ++K) EXPECT_EQ(mismatch_measure(K, static_cast<int>(K) + 3, 1), bad_set_intervals(K, static_cast<int>(K) + 3).total);
}

TEST(Mismatch, TwoDimensionsMatchesBruteForceCellCount) {
  const std::size_t K = 4;
  const int r = 6;
  const unsigned bits = static_cast<unsigned>(r) + static_cast<unsigned>(K) + 1;
  const auto cells = brute_bad_cells(bits, K, r);
  unsigned __int128 count = 0;
  for (std::size_t a = 0; a < cells.size(); ++a) {
    for (std::size_t b = 0; b < cells.size(); ++b) count += (cells[a] || cells[b]) ? 1 : 0;
  }
  EXPECT_EQ(mismatch_measure(K, r, 2), (Dyadic{count, 2 * bits}));
  EXPECT_LE(mismatch_measure(K, r, 2).to_double(), 2.0 * static_cast<double>(K) * std::ldexp(1.0, -r));
}

TEST(Dyadic, Formatting) {
  EXPECT_EQ((Dyadic{6, 4}).to_string(), "3/8");
  EXPECT_EQ((Dyadic{0, 9}).to_string(), "0");
  EXPECT_EQ((Dyadic{1, 70}).to_string(), "1/1180591620717411303424");
  EXPECT_TRUE((Dyadic{1, 3}) <= (Dyadic{2, 4}));
  EXPECT_FALSE((Dyadic{3, 3}) <= (Dyadic{2, 3}));
}

TEST(LpError, ExactApproximationGivesZero) {
  const auto f = make_registry_function("coord1", 2);
  EXPECT_EQ(lp_error(f, exact_coord1_net(), 2.0, 6), 0.0);
  EXPECT_EQ(lp_error(f, exact_coord1_net(), 1.0, 6), 0.0);
}

TEST(LpError, CoordinateWithinBound) {
  const auto f = make_registry_function("coord1", 2);
  const auto net = assemble_full(f, 4, 2.0);
  const double lp = lp_error(f, net, 2.0, default_grid_bits(4, 2));
  EXPECT_LE(lp, 1.125);
  EXPECT_EQ(lp_bound(f, 4), 1.125);
  EXPECT_GT(lp, 0.0);
}

TEST(LpError, DeterministicAcrossThreadCounts) {
  const auto f = make_registry_function("sines", 2);
  const auto net = assemble_full(f, 4, 1.0);
  const double one = lp_error(f, net, 1.0, 8, 1);
  EXPECT_EQ(one, lp_error(f, net, 1.0, 8, 2));
  EXPECT_EQ(one, lp_error(f, net, 1.0, 8, 5));
}

TEST(LpError, GridBudget) {
  const auto f = make_registry_function("coord1", 3);
  EXPECT_THROW(lp_error(f, assemble_full(f, 2, 1.0), 1.0, 9), CapacityError);
  EXPECT_EQ(default_grid_bits(7, 2), 9U);
  EXPECT_EQ(default_grid_bits(7, 3), 8U);
}

TEST(LpError, MidpointAgreesWithMonteCarlo) {
  const auto f = make_registry_function("coord1", 2);
  const std::size_t K = 4;
  const auto net = assemble_full(f, K, 2.0);
  const std::size_t G = default_grid_bits(K, 2);
  const double mid = lp_error(f, net, 2.0, G);
  // Discretisation error of the midpoint rule, estimated from one coarser grid.
  const double se_mid = std::abs(mid - lp_error(f, net, 2.0, G - 1));
  const auto mc = lp_error_monte_carlo(f, net, 2.0, 1000000, 17);
  const double combined = std::sqrt(mc.standard_error * mc.standard_error + se_mid * se_mid);
  EXPECT_LE(std::abs(mid - mc.estimate), 3.0 * combined) << mid << " vs " << mc.estimate;
}

TEST(LpError, MonteCarloOnSmoothIntegrand) {
  // |x_1 - 0|^2 on [0,1]^2 integrates to 1/3, so the L^2 norm is 3^{-1/2}.
  HolderFunction zero;
  zero.name = "zero";
  zero.dimension = 2;
  zero.evaluate = [](std::span<const double>) { return 0.0; };
  const auto mc = lp_error_monte_carlo(zero, exact_coord1_net(), 2.0, 200000, 3);
  EXPECT_NEAR(mc.estimate, 1.0 / std::sqrt(3.0), 4.0 * mc.standard_error);
  EXPECT_NEAR(lp_error(zero, exact_coord1_net(), 2.0, 10), 1.0 / std::sqrt(3.0), 1e-6);
}

TEST(RateFit, HalvingGivesMinusOne) {
  std::vector<ErrorReport> reports;
  for (std::size_t K = 3; K <= 7; ++K) {
    ErrorReport r;
    r.function = "f";
    r.d = 2;
    r.p = 2;
    r.K = K;
    r.measured_lp = std::ldexp(3.0, -static_cast<int>(K));
    reports.push_back(r);
  }
  const auto fit = rate_fit(reports);
  EXPECT_FALSE(fit.degenerate);
  EXPECT_NEAR(fit.slope, -1.0, 1e-12);
  EXPECT_NEAR(fit.intercept, std::log2(3.0), 1e-12);

  reports[2].measured_lp = 0.0;
  EXPECT_TRUE(rate_fit(reports).degenerate);
  reports[2].function = "g";
  EXPECT_THROW(rate_fit(reports), ParameterError);
  EXPECT_THROW(rate_fit(std::span<const ErrorReport>(reports).first(2)), ParameterError);
}

TEST(ErrorReport, CsvRow) {
  const auto f = make_registry_function("coord1", 2);
  const auto net = assemble_full(f, 3, 2.0);
  const auto report = make_error_report(f, net, 5);
  EXPECT_TRUE(report.certified());
  EXPECT_EQ(std::string(csv_header()), "function,d,K,p,beta,Q,measured_lp,bound,max_weight,bad_set_measure,grid_bits");
  const std::string row = to_csv_row(report);
  EXPECT_EQ(row.rfind("coord1,2,3,2,1,1,", 0), 0U) << row;
  EXPECT_NE(row.find(",2.25,256,"), std::string::npos) << row;
  EXPECT_EQ(row.substr(row.size() - 2), ",5");
  EXPECT_EQ(report.bad_set_measure, mismatch_measure(3, 8, 2));
}

TEST(GoodSet, PiecewiseConstantIsExactOnGoodSet) {
  const auto f = PiecewiseConstantFunction::random(2, 2, 9).as_function("pwc");
  for (std::size_t K = 2; K <= 5; ++K) {
    const auto net = assemble_full(f, K, 1.0);
    const double lp = lp_error(f, net, 1.0, default_grid_bits(K, 2));
    EXPECT_LE(lp, lp_bound(f, K));
    EXPECT_LE(lp, 1e-9);
  }
}
