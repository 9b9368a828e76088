#include <gtest/gtest.h>

#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <numeric>
#include <random>

#include "rcb/degree_distribution.hpp"

using namespace rcb;

namespace {

// Robust soliton written out directly from its definition.
std::vector<double> soliton_oracle(int k, double c, double delta) {
  const double S = c * std::log(k / delta) * std::sqrt(static_cast<double>(k));
  const int spike = std::min(k, static_cast<int>(std::lround(k / S)));
  std::vector<double> mu(k + 1, 0.0);
  double z = 0.0;
  for (int d = 1; d <= k; ++d) {
    const double rho = d == 1 ? 1.0 / k : 1.0 / (d * (d - 1.0));
    double tau = 0.0;
    if (d < spike) tau = S / (static_cast<double>(k) * d);
    if (d == spike) tau = S * std::log(S / delta) / k;
    mu[d] = rho + tau;
    z += mu[d];
  }
  for (double& m : mu) m /= z;
  return mu;
}

double choose_ratio(int n_star, int n, int d) {
  double r = 1.0;
  for (int i = 0; i < d; ++i) r *= static_cast<double>(n_star - i) / static_cast<double>(n - i);
  return r;
}

}  // namespace

TEST(DegreeDistribution, SpreadConstant) {
  const double expect = 0.1 * std::log(1000.0 / 0.5) * std::sqrt(1000.0);
  EXPECT_NEAR(soliton_spread(1000, 0.1, 0.5), expect, 1e-12);
  EXPECT_NEAR(soliton_spread(1000, 0.1, 0.5), 24.036, 1e-3);
}

TEST(DegreeDistribution, RobustSolitonMatchesDefinition) {
  for (int k : {50, 1000, 3000}) {
    const auto mu = robust_soliton(k, 0.1, 0.5);
    const auto oracle = soliton_oracle(k, 0.1, 0.5);
    for (int d = 1; d <= k; ++d) ASSERT_NEAR(mu.pmf(d), oracle[d], 1e-15) << "k=" << k << " d=" << d;
  }
}

TEST(DegreeDistribution, EncodingLawHasNoDegreeOne) {
  for (std::uint32_t k : {10u, 200u, 2388u}) {
    const auto mu = robust_soliton(k, 0.1, 0.5);
    const auto omega = encoding_distribution(k, 0.1, 0.5);
    EXPECT_EQ(omega.pmf(1), 0.0);
    const auto& m = omega.masses();
    EXPECT_NEAR(std::accumulate(m.begin(), m.end(), 0.0), 1.0, 1e-12);
    for (std::uint32_t d = 2; d <= k; ++d) ASSERT_NEAR(omega.pmf(d), mu.pmf(d) + mu.pmf(1) / (k - 1), 1e-15);
  }
}

TEST(DegreeDistribution, AvailabilityProbabilityMatchesProductForm) {
  for (auto [n, ns, d] : {std::tuple{10, 7, 3}, {100, 80, 12}, {2388, 2000, 40}, {50, 50, 50}, {5, 3, 4}}) {
    EXPECT_NEAR(all_available_probability(n, ns, d), choose_ratio(ns, n, d), 1e-12 * std::max(1.0, choose_ratio(ns, n, d)))
        << n << " " << ns << " " << d;
  }
}

TEST(DegreeDistribution, ShiftedLawStaysBelowOmegaAboveDegreeOne) {
  std::mt19937 rng(8);
  for (int t = 0; t < 100; ++t) {
    const std::uint32_t n = std::uniform_int_distribution<std::uint32_t>(3, 600)(rng);
    const std::uint32_t ns = std::uniform_int_distribution<std::uint32_t>(1, n)(rng);
    const auto omega = encoding_distribution(n, 0.1, 0.5);
    const auto star = shifted_distribution(omega, n, ns);
    double total = 0.0;
    for (std::uint32_t d = 1; d <= n; ++d) total += star.pmf(d);
    ASSERT_NEAR(total, 1.0, 1e-12);
    for (std::uint32_t d = 2; d <= n; ++d) ASSERT_LE(star.pmf(d), omega.pmf(d) + 1e-18);
  }
}

TEST(DegreeDistribution, SamplerPassesChiSquare) {
  const auto omega = encoding_distribution(20, 0.1, 0.5);
  std::mt19937_64 rng(123);
  const int draws = 200000;
  std::vector<int> hist(21, 0);
  for (int i = 0; i < draws; ++i) ++hist[omega.sample(rng)];
  double chi2 = 0.0;
  int bins = 0;
  for (std::uint32_t d = 1; d <= 20; ++d) {
    const double e = draws * omega.pmf(d);
    if (e == 0.0) {
      EXPECT_EQ(hist[d], 0);
      continue;
    }
    chi2 += (hist[d] - e) * (hist[d] - e) / e;
    ++bins;
  }
  const double p_value = boost::math::gamma_q((bins - 1) / 2.0, chi2 / 2.0);
  EXPECT_GT(p_value, 1e-4) << "chi2=" << chi2;
}

TEST(DegreeDistribution, RejectsBadParameters) {
  EXPECT_THROW(robust_soliton(1, 0.1, 0.5), std::invalid_argument);
  EXPECT_THROW(robust_soliton(100, 0.0, 0.5), std::invalid_argument);
  EXPECT_THROW(robust_soliton(100, 0.1, 1.0), std::invalid_argument);
  EXPECT_THROW(shifted_distribution(encoding_distribution(10, 0.1, 0.5), 10, 11), std::domain_error);
  EXPECT_THROW(DegreeDistribution(std::vector<double>{0.5, 0.2}), std::invalid_argument);
}
