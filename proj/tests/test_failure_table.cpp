#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "rcb/failure_table.hpp"

using namespace rcb;

namespace {

FailureCell cell(std::uint32_t N, std::uint32_t k, std::uint64_t trials, std::uint64_t failures) {
  FailureCell c;
  c.N = N;
  c.k = k;
  c.trials = trials;
  c.failures = failures;
  return c;
}

FailureTable random_table(std::mt19937& rng) {
  FailureTable t;
  std::uniform_int_distribution<int> noise(-30, 30);
  for (std::uint32_t N : {400u, 600u, 800u}) {
    for (std::uint32_t k = 100; k <= 400; k += 25) {
      const double base = 1.0 / (1.0 + std::exp(-(static_cast<double>(k) - 0.5 * N) / 15.0));
      const long f = std::clamp<long>(std::lround(base * 1000) + noise(rng), 0, 1000);
      t.add(cell(N, k, 1000, static_cast<std::uint64_t>(f)));
    }
  }
  t.finalize();
  return t;
}

}  // namespace

TEST(Wilson, ZeroFailureHalfWidth) {
  const double z = 1.959963984540054;
  EXPECT_NEAR(wilson_halfwidth(0, 100), z * z / (2.0 * (100 + z * z)), 1e-15);
  const double p = 0.3, n = 200;
  const double expect = z / (1 + z * z / n) * std::sqrt(p * (1 - p) / n + z * z / (4 * n * n));
  EXPECT_NEAR(wilson_halfwidth(60, 200), expect, 1e-15);
  EXPECT_NEAR(wilson_upper(0.0, 100), z * z / (100 + z * z), 1e-15);
  EXPECT_DOUBLE_EQ(wilson_upper(1.0, 100), 1.0);
  EXPECT_NEAR(wilson_upper(0.3, 200), (0.3 + z * z / 400) / (1 + z * z / 200) + expect, 1e-15);
}

TEST(FailureTable, FitRecoversExactLogLinearTail) {
  FailureTable t;
  t.add(cell(1000, 300, 1000000, 1000));
  t.add(cell(1000, 310, 1000000, 10000));
  t.add(cell(1000, 320, 1000000, 100000));
  t.add(cell(1000, 250, 1000, 0));
  t.finalize();
  const FailureFit* f = t.fit(1000);
  ASSERT_NE(f, nullptr);
  ASSERT_TRUE(f->valid);
  EXPECT_EQ(f->points, 2u);
  EXPECT_NEAR(f->slope, 0.1, 1e-9);
  EXPECT_NEAR(f->intercept, -33.0, 1e-7);
  EXPECT_EQ(f->k_floor, 300u);
  const auto k = t.largest_k(1000, 1e-12);
  ASSERT_TRUE(k.has_value());
  EXPECT_NEAR(static_cast<double>(*k), 210.0, 1.0);
  EXPECT_EQ(*t.largest_k(1000, 0.5e-3), 296u);
  // Extrapolation past the simulated floor is capped just below it.
  EXPECT_EQ(*t.largest_k(1000, 1.02e-3), 299u);
}

TEST(FailureTable, ZetaOneAcceptsWholeGrid) {
  FailureTable t;
  t.add(cell(500, 100, 100, 0));
  t.add(cell(500, 200, 100, 50));
  t.add(cell(500, 300, 100, 100));
  t.finalize();
  EXPECT_EQ(*t.largest_k(500, 1.0), 300u);
}

TEST(FailureTable, CleanupIsMonotone) {
  std::mt19937 rng(4);
  for (int rep = 0; rep < 20; ++rep) {
    const FailureTable t = random_table(rng);
    for (const auto& a : t.cells()) {
      for (const auto& b : t.cells()) {
        if (a.N == b.N && a.k < b.k) {
          ASSERT_LE(a.cleaned, b.cleaned);
        }
        if (a.k == b.k && a.N < b.N) {
          ASSERT_GE(a.cleaned, b.cleaned);
        }
      }
    }
  }
}

TEST(FailureTable, NoFailuresNoFit) {
  FailureTable t;
  t.add(cell(100, 50, 100, 0));
  t.add(cell(100, 60, 100, 0));
  t.finalize();
  EXPECT_FALSE(t.fit(100)->valid);
  EXPECT_FALSE(t.largest_k(100, 1e-12).has_value());
}

TEST(FailureTable, ZeroTrialCellsAreAbsent) {
  FailureTable t;
  t.add(cell(100, 50, 0, 0));
  t.finalize();
  EXPECT_TRUE(t.empty());
}

TEST(FailureTable, CsvRoundtrip) {
  std::mt19937 rng(1);
  const FailureTable t = random_table(rng);
  std::stringstream ss;
  t.write_csv(ss);
  const FailureTable back = FailureTable::read_csv(ss);
  ASSERT_EQ(back.cells().size(), t.cells().size());
  for (std::size_t i = 0; i < t.cells().size(); ++i) {
    EXPECT_EQ(back.cells()[i].failures, t.cells()[i].failures);
    EXPECT_DOUBLE_EQ(back.cells()[i].cleaned, t.cells()[i].cleaned);
  }
  std::stringstream a, b;
  t.write_fit_csv(a);
  back.write_fit_csv(b);
  EXPECT_EQ(a.str(), b.str());
  std::stringstream bad("N,k\n1,2\n");
  EXPECT_THROW(FailureTable::read_csv(bad), std::runtime_error);
}

TEST(Sizing, UsesOnlyRowsAtOrBelowNodeCount) {
  FailureTable t;
  t.add(cell(1000, 300, 1000000, 1000));
  t.add(cell(1000, 310, 1000000, 10000));
  t.add(cell(2000, 900, 1000000, 1000));
  t.add(cell(2000, 910, 1000000, 10000));
  t.finalize();
  SizingPolicy p;
  p.zeta = 1e-12;
  const std::uint32_t k1000 = *t.largest_k(1000, p.zeta);
  const std::uint32_t k2000 = *t.largest_k(2000, p.zeta);
  EXPECT_THROW(choose_group_size(999, t, p), SizingInfeasible);
  EXPECT_EQ(choose_group_size(1000, t, p), k1000);
  EXPECT_EQ(choose_group_size(1500, t, p), static_cast<std::uint32_t>(std::floor(k1000 / 1000.0 * 1500 + 1e-9)));
  EXPECT_EQ(choose_group_size(2500, t, p), static_cast<std::uint32_t>(std::floor(k2000 / 2000.0 * 2500 + 1e-9)));
  p.ratio_scaling = false;
  EXPECT_EQ(choose_group_size(1500, t, p), k1000);
  EXPECT_EQ(choose_group_size(2500, t, p), k2000);
}

TEST(Sizing, MonotoneInNodesAndZeta) {
  std::mt19937 rng(9);
  for (int rep = 0; rep < 10; ++rep) {
    const FailureTable t = random_table(rng);
    SizingPolicy p;
    for (double zeta : {1e-12, 1e-6, 1e-3, 1e-1}) {
      p.zeta = zeta;
      std::uint32_t prev = 0;
      for (std::size_t N = 400; N <= 1200; N += 37) {
        std::uint32_t k = 0;
        try {
          k = choose_group_size(N, t, p);
        } catch (const SizingInfeasible&) {
          k = 0;
        }
        ASSERT_GE(k, prev) << "N=" << N << " zeta=" << zeta;
        prev = k;
      }
    }
    for (std::size_t N : {450u, 700u, 1000u}) {
      std::uint32_t prev = 0;
      for (double zeta : {1e-12, 1e-6, 1e-3, 1e-1, 0.9}) {
        p.zeta = zeta;
        std::uint32_t k = 0;
        try {
          k = choose_group_size(N, t, p);
        } catch (const SizingInfeasible&) {
        }
        ASSERT_GE(k, prev);
        prev = k;
      }
    }
  }
}

TEST(MonteCarlo, DeterministicAcrossThreadCounts) {
  FailureModel m;
  m.churn = {3.0, 1.0};
  m.horizon = 6.5;
  const auto a = estimate_failure(40, 70, m, 24, 5, 1);
  const auto b = estimate_failure(40, 70, m, 24, 5, 3);
  const auto c = estimate_failure(40, 70, m, 24, 5, 1);
  EXPECT_EQ(a.failures, b.failures);
  EXPECT_EQ(a.failures, c.failures);
  EXPECT_THROW(estimate_failure(80, 70, m, 1, 5), std::domain_error);
  EXPECT_THROW(estimate_failure(40, 70, m, 0, 5), std::invalid_argument);
}

TEST(MonteCarlo, FailureGrowsWithGroupSize) {
  FailureModel m;
  m.churn = {3.0, 1.0};
  m.horizon = 10.0;
  const auto lo = estimate_failure(20, 80, m, 40, 2);
  const auto hi = estimate_failure(64, 80, m, 40, 2);
  EXPECT_EQ(lo.failures, 0u);
  EXPECT_GE(hi.failures, 36u);
}

TEST(MonteCarlo, TinyGridBuildsThreeRows) {
  FailureModel m;
  m.churn = {2.0, 1.0};
  m.horizon = 4.0;
  const FailureTable t = build_failure_table({60}, {20, 30, 40}, m, 100, 1);
  EXPECT_EQ(t.cells().size(), 3u);
  const FailureTable again = build_failure_table({60}, {20, 30, 40}, m, 100, 1);
  std::stringstream a, b;
  t.write_csv(a);
  again.write_csv(b);
  EXPECT_EQ(a.str(), b.str());
  EXPECT_THROW(build_failure_table({}, {20}, m, 10, 1), std::invalid_argument);
}

TEST(Survivors, ThresholdNeverExceedsStart) {
  SurvivorModel s;
  s.k = 40;
  s.N = 80;
  s.churn = {3.0, 1.0};
  const auto got = survivor_threshold(s, 3);
  ASSERT_TRUE(got.has_value());
  EXPECT_LE(*got, 80u);
  EXPECT_GE(*got, 40u);
}
