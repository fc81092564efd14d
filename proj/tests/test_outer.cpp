#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "kasfc/outer.hpp"
#include "kasfc/random.hpp"
#include "kasfc/registry.hpp"
#include "oracle.hpp"

using namespace kasfc;

namespace {

HolderFunction constant(std::size_t d, double c) {
  HolderFunction f;
  f.name = "c";
  f.dimension = d;
  f.Q = 0.0;
  f.sup_norm = std::abs(c);
  f.evaluate = [c](std::span<const double>) { return c; };
  return f;
}

HolderFunction coordinate(std::size_t d, std::size_t q) {
  HolderFunction f;
  f.name = "coord";
  f.dimension = d;
  f.Q = 1.0;
  f.sup_norm = 1.0;
  f.evaluate = [q](std::span<const double> x) { return x[q]; };
  return f;
}

std::vector<double> midpoint(std::size_t index, std::size_t d, std::size_t bits) {
  std::vector<double> x(d);
  for (std::size_t q = 0; q < d; ++q) {
    const std::size_t l = (index >> (bits * (d - 1 - q))) & ((std::size_t{1} << bits) - 1);
    x[q] = (static_cast<double>(l) + 0.5) / static_cast<double>(std::size_t{1} << bits);
  }
  return x;
}

}  // namespace

TEST(OuterG, Examples) {
  const auto c = constant(2, 0.3);
  EXPECT_EQ(outer_g_eval(c, CantorCode::from_numerator(20, 4)), 0.3);
  for (std::size_t k = 1; k <= 8; ++k) {
    const auto y = CantorCode::from_numerator(2, 2 * k);
    EXPECT_EQ(outer_g_eval(coordinate(2, 1), y), std::ldexp(1.0, -static_cast<int>(k)));
  }
  EXPECT_EQ(outer_g_eval(coordinate(2, 0), CantorCode(DigitSequence(3, {2, 2}))), 0.5);
  EXPECT_THROW(outer_g_eval(c, CantorCode(DigitSequence(3, {2, 2, 2}))), ParameterError);
}

TEST(MortonOuter, ConstantAndPiecewiseConstant) {
  EXPECT_EQ(morton_outer_eval(constant(2, -1.5), MortonCode(DigitSequence(2, {1, 0, 1, 1}), 2)), -1.5);
  // A table at resolution k gives a g constant on each (ℓ 2^{-kd}, (ℓ+1) 2^{-kd}).
  const std::size_t k = 2, d = 2, n = 10;
  const auto table = PiecewiseConstantFunction::random(k, d, 4);
  const auto f = table.as_function("pwc");
  Rng rng(1);
  for (std::size_t l = 0; l < (std::size_t{1} << (k * d)); ++l) {
    double first = 0.0;
    for (int s = 0; s < 50; ++s) {
      std::vector<std::uint8_t> digits(k * d * n);
      for (std::size_t j = 0; j < k * d; ++j) digits[j] = (l >> (k * d - 1 - j)) & 1;
      for (std::size_t j = k * d; j < digits.size(); ++j) digits[j] = static_cast<std::uint8_t>(rng.below(2));
      const double g = morton_outer_eval(f, MortonCode(DigitSequence(2, digits), d));
      if (s == 0) first = g;
      EXPECT_EQ(g, first);
    }
  }
}

TEST(MortonOuter, InverseJumpsAtDyadicPoints) {
  // Approaching 1/2 from below: [0.0111...1]; from above: [0.1000...01].
  const std::size_t n = 40;
  std::vector<std::uint8_t> below(n, 1), above(n, 0);
  below[0] = 0;
  above[0] = 1;
  above[n - 1] = 1;
  const auto lo = psi_deinterleave(DigitSequence(2, below), 2).to_reals();
  const auto hi = psi_deinterleave(DigitSequence(2, above), 2).to_reals();
  // Left limit (1/2, 1), right limit (1/2, 0); the second coordinate jumps by 1.
  EXPECT_NEAR(lo[0], 0.5, 1e-6);
  EXPECT_NEAR(lo[1], 1.0, 1e-6);
  EXPECT_NEAR(hi[0], 0.5, 1e-6);
  EXPECT_NEAR(hi[1], 0.0, 1e-6);
}

TEST(KaApprox, ConstantIsExact) {
  const auto f = constant(3, 2.5);
  Rng rng(2);
  for (int i = 0; i < 100; ++i) {
    const std::vector<double> x{rng.unit(), rng.unit(), rng.unit()};
    EXPECT_EQ(ka_approx_eval(f, x, 4), 2.5);
  }
}

TEST(KaApprox, UsesLowerLeftAnchor) {
  const auto f = coordinate(2, 0);
  for (std::size_t K = 1; K <= 8; ++K) {
    for (std::size_t i = 0; i < (std::size_t{1} << (2 * K)); ++i) {
      const auto x = midpoint(i, 2, K);
      const double anchor = std::floor(std::ldexp(x[0], static_cast<int>(K))) * std::ldexp(1.0, -static_cast<int>(K));
      ASSERT_EQ(ka_approx_eval(f, x, K), anchor);
    }
  }
  const std::vector<double> corner{1.0, 1.0};
  EXPECT_EQ(ka_approx_eval(f, corner, 3), 0.875);
}

TEST(KaApprox, CoordinateErrorOnMidpoints) {
  const auto f = coordinate(2, 0);
  const std::size_t K = 6;
  double worst = 0.0;
  for (std::size_t i = 0; i < (std::size_t{1} << (2 * K)); ++i) {
    const auto x = midpoint(i, 2, K);
    worst = std::max(worst, std::abs(f(x) - ka_approx_eval(f, x, K)));
  }
  EXPECT_LE(worst, std::ldexp(1.0, -6));
  EXPECT_LE(worst, std::ldexp(1.0, -(6 - 4)));
}

TEST(KaApprox, EnvelopeForRegistry) {
  Rng rng(3);
  for (const auto& name : holder_registry_names()) {
    for (std::size_t d : {1, 2, 3}) {
      const auto f = make_registry_function(name, d);
      for (std::size_t K = 2; K <= 8; ++K) {
        const double bound = f.Q * std::exp2(-f.beta * (static_cast<double>(K) - 4.0));
        for (int s = 0; s < 300; ++s) {
          std::vector<double> x(d);
          for (auto& v : x) v = rng.unit();
          ASSERT_LE(std::abs(f(x) - ka_approx_eval(f, x, K)), bound) << name;
        }
      }
    }
  }
}

TEST(KaApprox, SupNormEquality) {
  for (const auto& name : holder_registry_names()) {
    const auto f = make_registry_function(name, 2);
    for (std::size_t K = 1; K <= 6; ++K) {
      const std::size_t n = 2 * K;
      double max_g = 0.0, max_f = 0.0;
      for (std::size_t i = 0; i < (std::size_t{1} << n); ++i) {
        max_g = std::max(max_g, std::abs(outer_g_eval(f, breakpoint_code(i, K, 2))));
        const double anchor[] = {static_cast<double>(i >> K) / (1 << K), static_cast<double>(i & ((1U << K) - 1)) / (1 << K)};
        // Cell (ℓ_1, ℓ_2) of the anchor grid corresponds to Cantor code with interleaved bits.
        max_f = std::max(max_f, std::abs(f(anchor)));
      }
      EXPECT_EQ(max_g, max_f) << name << " K=" << K;
    }
  }
}

TEST(Breakpoints, Examples) {
  EXPECT_EQ(breakpoints(1, 1), (std::vector<double>{0.0, 2.0 / 3.0, 1.0}));
  EXPECT_EQ(breakpoints(1, 2), (std::vector<double>{0.0, 2.0 / 9.0, 2.0 / 3.0, 8.0 / 9.0, 1.0}));
  EXPECT_THROW(breakpoints(13, 2), CapacityError);
}

TEST(Breakpoints, EnumerationOrderAndGaps) {
  for (std::size_t d = 1; d <= 3; ++d) {
    for (std::size_t K = 1; K * d <= 12; ++K) {
      const std::size_t n = K * d;
      // Oracle: every Σ 2 t_j 3^{-j}, sorted independently.
      std::vector<oracle::Rational> expected;
      for (std::size_t t = 0; t < (std::size_t{1} << n); ++t) {
        oracle::Rational v = 0;
        for (std::size_t j = 0; j < n; ++j) v += 2 * static_cast<int>((t >> (n - 1 - j)) & 1) * oracle::power(3, -static_cast<int>(j + 1));
        expected.push_back(v);
      }
      expected.push_back(1);
      std::sort(expected.begin(), expected.end());
      const auto num = breakpoint_numerators(K, d);
      ASSERT_EQ(num.size(), expected.size());
      const auto den = oracle::power(3, static_cast<int>(n));
      for (std::size_t i = 0; i < num.size(); ++i) {
        ASSERT_EQ(oracle::Rational(num[i]) / den, expected[i]);
        if (i > 0) {
          ASSERT_GE(expected[i] - expected[i - 1], 1 / den);
        }
      }
      const auto x = breakpoints(K, d);
      for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(x[i], static_cast<double>(expected[i]));
    }
  }
}

TEST(Interpolant, ConstantFunction) {
  const auto g = build_interpolant(constant(2, 0.7), 3);
  EXPECT_EQ(g.size(), 65U);
  Rng rng(4);
  for (int i = 0; i < 1000; ++i) EXPECT_DOUBLE_EQ(g(rng.unit()), 0.7);
}

TEST(Interpolant, InterpolatesAtBreakpointsAndIsBounded) {
  Rng rng(5);
  for (const auto& name : holder_registry_names()) {
    const auto f = make_registry_function(name, 2);
    for (std::size_t K = 1; K <= 4; ++K) {
      const auto g = build_interpolant(f, K);
      const auto x = breakpoints(K, 2);
      for (std::size_t i = 0; i < x.size(); ++i) ASSERT_EQ(g(x[i]), outer_g_eval(f, breakpoint_code(i, K, 2)));
      for (int s = 0; s < 2000; ++s) ASSERT_LE(std::abs(g(rng.unit())), f.sup_norm);
      EXPECT_LE(g.sup_norm(), f.sup_norm);
    }
  }
  EXPECT_THROW(build_interpolant(constant(1, 1), 2)(1.5), DomainError);
}

TEST(PiecewiseLinearG, Validation) {
  EXPECT_THROW(PiecewiseLinearG({0.0, 0.5}, {1.0, 2.0}), ParameterError);
  EXPECT_THROW(PiecewiseLinearG({0.0, 0.5, 0.5, 1.0}, {1, 2, 3, 4}), ParameterError);
  const PiecewiseLinearG g({0.0, 0.25, 1.0}, {0.0, 1.0, -2.0});
  EXPECT_EQ(g(0.125), 0.5);
  EXPECT_EQ(g(0.625), -0.5);
  EXPECT_EQ(g(1.0), -2.0);
}

TEST(PiecewiseConstant, FullIndexRange) {
  // Every ℓ_j in {0, ..., 2^k - 1} is reachable, not just the two extremes.
  const std::size_t k = 3, d = 2;
  std::vector<double> values(64);
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = static_cast<double>(i);
  const PiecewiseConstantFunction f(k, d, values);
  std::vector<bool> hit(64, false);
  for (std::size_t a = 0; a < 8; ++a) {
    for (std::size_t b = 0; b < 8; ++b) {
      const double x[] = {(a + 0.5) / 8.0, (b + 0.5) / 8.0};
      const auto idx = f.cell_index(x);
      EXPECT_EQ(idx, a * 8 + b);
      hit[idx] = true;
      EXPECT_EQ(f(x), f(GridPoint::from_reals(x, 2, 5)));
    }
  }
  EXPECT_TRUE(std::all_of(hit.begin(), hit.end(), [](bool h) { return h; }));
  const double edge[] = {1.0, 0.0};
  EXPECT_EQ(f.cell_index(edge), 56U);
  EXPECT_THROW(PiecewiseConstantFunction(2, 2, std::vector<double>(15)), ParameterError);
}

TEST(LipschitzAudit, ConstantTableHasZeroRatio) {
  const PiecewiseConstantFunction f(2, 2, std::vector<double>(16, 0.4));
  const auto audit = lipschitz_audit_pwc(f, 2000, 1);
  EXPECT_EQ(audit.max_ratio, 0.0);
  EXPECT_TRUE(audit.holds);
}

TEST(LipschitzAudit, RandomTables) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    for (std::size_t k : {1, 2}) {
      const auto f = PiecewiseConstantFunction::random(k, 2, seed);
      const auto audit = lipschitz_audit_pwc(f, 10000, seed + 100);
      EXPECT_TRUE(audit.holds);
      EXPECT_GT(audit.same_cell_pairs, 0U);
      EXPECT_EQ(audit.same_cell_max_diff, 0.0);
      EXPECT_LE(audit.max_ratio, audit.bound);
    }
  }
}

TEST(HolderTransfer, RandomCantorPairs) {
  Rng rng(6);
  for (const auto& name : holder_registry_names()) {
    for (std::size_t d : {2, 3}) {
      const auto f = make_registry_function(name, d);
      const double exponent = f.beta * std::log(2.0) / (static_cast<double>(d) * std::log(3.0));
      const std::size_t n = d * (36 / d);
      for (int s = 0; s < 10000; ++s) {
        std::vector<std::uint8_t> a(n), b(n);
        const std::size_t keep = rng.below(n + 1);
        for (std::size_t j = 0; j < n; ++j) {
          a[j] = rng.coin() ? 2 : 0;
          b[j] = j < keep ? a[j] : (rng.coin() ? 2 : 0);
        }
        const CantorCode x(DigitSequence(3, a)), y(DigitSequence(3, b));
        const double gap = static_cast<double>(cantor_gap(x, y));
        const double lhs = std::abs(outer_g_eval(f, x) - outer_g_eval(f, y));
        ASSERT_LE(lhs, std::exp2(f.beta) * f.Q * std::pow(gap, exponent) * (1.0 + 1e-12) + 1e-15) << name;
      }
    }
  }
}
