#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace rcb {

/// Probability law over LT degrees d = 1..support.
class DegreeDistribution {
 public:
  DegreeDistribution() = default;

  /// Takes pmf[d-1] for d = 1..pmf.size(). Entries must be non-negative and
  /// sum to 1 within 1e-12.
  explicit DegreeDistribution(std::vector<double> pmf) : pmf_(std::move(pmf)) {
    if (pmf_.empty()) throw std::invalid_argument("degree distribution: empty support");
    double total = 0.0;
    for (double p : pmf_) {
      if (!(p >= 0.0)) throw std::invalid_argument("degree distribution: negative or NaN mass");
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-12) {
      throw std::invalid_argument("degree distribution: mass sums to " + std::to_string(total));
    }
    cdf_.resize(pmf_.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < pmf_.size(); ++i) {
      acc += pmf_[i];
      cdf_[i] = acc;
    }
    // Trailing zero-mass degrees must stay unreachable.
    std::size_t last = pmf_.size();
    while (last > 0 && pmf_[last - 1] == 0.0) --last;
    for (std::size_t i = last == 0 ? 0 : last - 1; i < cdf_.size(); ++i) cdf_[i] = 1.0;
  }

  std::uint32_t support() const { return static_cast<std::uint32_t>(pmf_.size()); }

  double pmf(std::uint32_t d) const { return d >= 1 && d <= pmf_.size() ? pmf_[d - 1] : 0.0; }
  double cdf(std::uint32_t d) const {
    if (d < 1) return 0.0;
    return d >= cdf_.size() ? 1.0 : cdf_[d - 1];
  }
  const std::vector<double>& masses() const { return pmf_; }

  double mean() const {
    double m = 0.0;
    for (std::size_t i = 0; i < pmf_.size(); ++i) m += static_cast<double>(i + 1) * pmf_[i];
    return m;
  }

  template <class Rng>
  std::uint32_t sample(Rng& rng) const {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double x = u(rng);
    auto it = std::upper_bound(cdf_.begin(), cdf_.end(), x);
    if (it == cdf_.end()) --it;
    return static_cast<std::uint32_t>(it - cdf_.begin()) + 1;
  }

 private:
  std::vector<double> pmf_;
  std::vector<double> cdf_;
};

/// S = c ln(k / delta) sqrt(k)
inline double soliton_spread(std::uint32_t k, double c, double delta) {
  return c * std::log(static_cast<double>(k) / delta) * std::sqrt(static_cast<double>(k));
}

namespace detail {

inline void check_soliton_params(std::uint32_t k, double c, double delta) {
  if (k < 2) throw std::invalid_argument("robust soliton: k must be >= 2");
  if (!(c > 0.0)) throw std::invalid_argument("robust soliton: c must be > 0");
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("robust soliton: delta must be in (0, 1)");
}

// Unnormalized tau(d) + rho(d) for d = 1..k.
inline std::vector<double> soliton_weights(std::uint32_t k, double c, double delta) {
  check_soliton_params(k, c, delta);
  const double s = soliton_spread(k, c, delta);
  const double kd = static_cast<double>(k);
  long spike = std::lround(kd / s);
  if (spike < 2) {
    throw std::invalid_argument("robust soliton: spike degree round(k/S) = " + std::to_string(spike) +
                                " is below 2");
  }
  // Small k can push k/S past the support; the spike then sits at k.
  spike = std::min<long>(spike, static_cast<long>(k));

  std::vector<double> w(k, 0.0);
  for (std::uint32_t d = 1; d <= k; ++d) {
    double tau = 0.0;
    if (static_cast<long>(d) < spike) {
      tau = s / (static_cast<double>(d) * kd);
    } else if (static_cast<long>(d) == spike) {
      tau = s * std::log(s / delta) / kd;
    }
    const double rho = d == 1 ? 1.0 / kd : 1.0 / (static_cast<double>(d) * (d - 1.0));
    w[d - 1] = tau + rho;
  }
  return w;
}

}  // namespace detail

/// Robust soliton mu(d) = (tau(d) + rho(d)) / sum_j (tau(j) + rho(j)).
inline DegreeDistribution robust_soliton(std::uint32_t k, double c, double delta) {
  std::vector<double> w = detail::soliton_weights(k, c, delta);
  double z = 0.0;
  for (double x : w) z += x;
  for (double& x : w) x /= z;
  return DegreeDistribution(std::move(w));
}

/// Robust soliton with the degree-one mass spread evenly over d = 2..k, so
/// that no parity block is ever a bare copy of an intermediate.
inline DegreeDistribution encoding_distribution(std::uint32_t k, double c, double delta) {
  const DegreeDistribution mu = robust_soliton(k, c, delta);
  std::vector<double> omega(k, 0.0);
  const double shift = mu.pmf(1) / static_cast<double>(k - 1);
  for (std::uint32_t d = 2; d <= k; ++d) omega[d - 1] = mu.pmf(d) + shift;
  return DegreeDistribution(std::move(omega));
}

/// Probability that d neighbours drawn uniformly without replacement from n
/// indices all fall among a fixed n_star of them: C(n*, d) / C(n, d).
inline double all_available_probability(std::uint32_t n, std::uint32_t n_star, std::uint32_t d) {
  if (d > n_star) return 0.0;
  if (n_star == n) return 1.0;
  auto log_choose = [](double a, double b) {
    return std::lgamma(a + 1.0) - std::lgamma(b + 1.0) - std::lgamma(a - b + 1.0);
  };
  const double g = std::exp(log_choose(n_star, d) - log_choose(n, d));
  return std::min(g, 1.0);
}

/// Degree law actually stored by joining nodes once only n_star of the n
/// intermediates are still held: draws whose neighbourhood is fully available
/// keep their degree, every other draw ends as a repaired degree-one block.
inline DegreeDistribution shifted_distribution(const DegreeDistribution& omega, std::uint32_t n, std::uint32_t n_star) {
  if (n_star > n) throw std::domain_error("shifted distribution: n_star exceeds n");
  if (omega.support() != n) {
    throw std::invalid_argument("shifted distribution: omega support " + std::to_string(omega.support()) +
                                " differs from n = " + std::to_string(n));
  }
  std::vector<double> out(n, 0.0);
  double one = 0.0;
  for (std::uint32_t d = 2; d <= n; ++d) {
    const double w = omega.pmf(d);
    if (w == 0.0) continue;
    const double g = all_available_probability(n, n_star, d);
    out[d - 1] = w * g;
    one += w * (1.0 - g);
  }
  out[0] = one + omega.pmf(1);
  return DegreeDistribution(std::move(out));
}

}  // namespace rcb
