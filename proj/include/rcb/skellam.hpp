#pragma once

#include <cmath>
#include <cstdlib>
#include <limits>
#include <stdexcept>

namespace rcb {

/// Net node-count change over gamma epochs: joins ~ Poisson(gamma lambda_e)
/// minus leaves ~ Poisson(gamma lambda_l).
struct SkellamParams {
  double lambda_l = 0.0;
  double lambda_e = 0.0;
  double gamma = 0.0;

  void validate() const {
    if (!(lambda_l >= 0.0) || !(lambda_e >= 0.0)) throw std::invalid_argument("skellam: rates must be >= 0");
    if (!(gamma >= 0.0)) throw std::invalid_argument("skellam: gamma must be >= 0");
  }
  double mean() const { return gamma * (lambda_e - lambda_l); }
  double variance() const { return gamma * (lambda_e + lambda_l); }
};

namespace detail {
inline double log_poisson(double mu, long x) {
  if (x < 0) return -std::numeric_limits<double>::infinity();
  if (mu == 0.0) return x == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
  return -mu + static_cast<double>(x) * std::log(mu) - std::lgamma(static_cast<double>(x) + 1.0);
}
}  // namespace detail

/// Pr(Delta = s) = e^{-gamma(l_l + l_e)} (l_e / l_l)^{s/2}
///                 * sum_X (gamma sqrt(l_l l_e))^{2X+|s|} / (X! (X+|s|)!)
/// summed in log space until terms past the peak drop below 1e-18 of the
/// running total.
inline double skellam_pmf(long s, const SkellamParams& p) {
  p.validate();
  const double mu_e = p.gamma * p.lambda_e;
  const double mu_l = p.gamma * p.lambda_l;
  if (mu_e == 0.0) return s > 0 ? 0.0 : std::exp(detail::log_poisson(mu_l, -s));
  if (mu_l == 0.0) return s < 0 ? 0.0 : std::exp(detail::log_poisson(mu_e, s));

  const long a = std::labs(s);
  const double log_pref = -(mu_e + mu_l) + 0.5 * static_cast<double>(s) * (std::log(mu_e) - std::log(mu_l));
  const double log_z = std::log(p.gamma) + 0.5 * (std::log(p.lambda_l) + std::log(p.lambda_e));

  auto log_term = [&](long x) {
    return static_cast<double>(2 * x + a) * log_z - std::lgamma(static_cast<double>(x) + 1.0) -
           std::lgamma(static_cast<double>(x + a) + 1.0);
  };
  // Largest term sits near X = (sqrt(a^2 + 4 z^2) - a) / 2.
  const double z = std::exp(log_z);
  const long peak = static_cast<long>((std::sqrt(static_cast<double>(a) * a + 4.0 * z * z) - a) / 2.0);
  const double log_max = log_term(peak);
  double sum = 0.0;
  for (long x = peak; x >= 0; --x) {
    const double r = std::exp(log_term(x) - log_max);
    sum += r;
    if (r < 1e-18 * sum) break;
  }
  for (long x = peak + 1;; ++x) {
    const double r = std::exp(log_term(x) - log_max);
    sum += r;
    if (r < 1e-18 * sum) break;
  }
  return std::exp(log_pref + log_max + std::log(sum));
}

}  // namespace rcb
