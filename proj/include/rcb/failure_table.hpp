#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <istream>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "rcb/block_vector.hpp"
#include "rcb/degree_distribution.hpp"
#include "rcb/node_protocol.hpp"
#include "rcb/rng.hpp"

namespace rcb {

/// Omega over n intermediates; a single intermediate can only be copied.
inline std::shared_ptr<const DegreeDistribution> make_omega(std::uint32_t n, double c, double delta) {
  if (n < 2) return std::make_shared<const DegreeDistribution>(std::vector<double>{1.0});
  return std::make_shared<const DegreeDistribution>(encoding_distribution(n, c, delta));
}

struct FailureModel {
  ChurnModel churn;
  double horizon = 0.0;  // epochs; the fractional part runs as a shortened epoch
  double precode_rate = 0.8;
  double soliton_c = 0.1;
  double soliton_delta = 0.5;
  std::vector<double> epsilon_schedule = default_epsilon_schedule();

  std::uint32_t code_length(std::uint32_t k) const {
    return std::max<std::uint32_t>(k, static_cast<std::uint32_t>(std::lround(k / precode_rate)));
  }
};

/// 95% Wilson score interval half-width.
inline double wilson_halfwidth(std::uint64_t failures, std::uint64_t trials) {
  if (trials == 0) return 0.5;
  const double z = 1.959963984540054;
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(failures) / n;
  const double z2 = z * z;
  return z / (1.0 + z2 / n) * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
}

/// Upper end of the 95% Wilson score interval around a failure rate p.
inline double wilson_upper(double p, std::uint64_t trials) {
  if (trials == 0) return 1.0;
  const double z = 1.959963984540054;
  const double n = static_cast<double>(trials);
  const double z2 = z * z;
  const double center = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
  const double half = z / (1.0 + z2 / n) * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
  return std::min(1.0, center + half);
}

struct FailureEstimate {
  std::uint64_t trials = 0;
  std::uint64_t failures = 0;
  double estimate = 0.0;
  double ci_halfwidth = 0.0;
};

namespace detail {

inline Network<MetadataOnly> encoded_network(std::uint32_t k, std::uint32_t N, const FailureModel& model,
                                             std::shared_ptr<const DegreeDistribution> omega, Rng& rng) {
  ProtocolConfig pc;
  pc.epsilon_schedule = model.epsilon_schedule;
  Network<MetadataOnly> net(pc);
  for (std::uint32_t j = 0; j < N; ++j) net.add_node();
  const std::uint32_t n = model.code_length(k);
  net.register_group(1, k, n, std::move(omega), nullptr, std::vector<MetadataOnly>(n));
  net.decentralized_encode(1, rng);
  return net;
}

inline bool group_unrecoverable(const Network<MetadataOnly>& net) {
  const auto& g = net.group(1);
  return g.lost || g.holders.size() < g.k;
}

template <class Fn>
void parallel_trials(std::uint64_t trials, unsigned threads, Fn&& fn) {
  threads = std::max(1u, threads);
  if (threads == 1 || trials < 2) {
    for (std::uint64_t t = 0; t < trials; ++t) fn(t);
    return;
  }
  std::atomic<std::uint64_t> next{0};
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (std::uint64_t t = next++; t < trials; t = next++) fn(t);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace detail

/// One Monte Carlo trial: encode a group of k over N nodes, run the churn
/// with the maintenance algorithm for the horizon, then let a probe node try
/// to decode from every surviving holder. Returns true on failure.
inline bool run_failure_trial(std::uint32_t k, std::uint32_t N, const FailureModel& model,
                              std::shared_ptr<const DegreeDistribution> omega, std::uint64_t seed) {
  Rng rng(seed);
  Network<MetadataOnly> net = detail::encoded_network(k, N, model, std::move(omega), rng);
  const double whole = std::floor(model.horizon);
  const double frac = model.horizon - whole;
  for (std::uint64_t e = 0; e < static_cast<std::uint64_t>(whole); ++e) {
    net.set_epoch(e + 1);
    net.churn_step(model.churn, rng);
    if (detail::group_unrecoverable(net)) return true;
  }
  if (frac > 0.0) {
    net.set_epoch(static_cast<std::uint64_t>(whole) + 1);
    net.churn_step(ChurnModel{model.churn.lambda_leave * frac, model.churn.lambda_join * frac}, rng);
  }
  return detail::group_unrecoverable(net) || !net.probe_decode(1);
}

inline std::uint64_t trial_seed(std::uint64_t master, std::uint32_t N, std::uint32_t k, std::uint64_t trial) {
  return derive_seed({master, N, k, trial});
}

inline FailureEstimate estimate_failure(std::uint32_t k, std::uint32_t N, const FailureModel& model,
                                        std::uint64_t trials, std::uint64_t seed, unsigned threads = 1) {
  if (trials < 1) throw std::invalid_argument("estimate_failure: trials must be >= 1");
  if (k < 1) throw std::invalid_argument("estimate_failure: k must be >= 1");
  if (k > N) throw std::domain_error("estimate_failure: k exceeds N");
  model.churn.validate();
  const auto omega = make_omega(model.code_length(k), model.soliton_c, model.soliton_delta);
  std::vector<char> failed(trials, 0);
  detail::parallel_trials(trials, threads, [&](std::uint64_t t) {
    failed[t] = run_failure_trial(k, N, model, omega, trial_seed(seed, N, k, t)) ? 1 : 0;
  });
  FailureEstimate out;
  out.trials = trials;
  for (char f : failed) out.failures += static_cast<std::uint64_t>(f);
  out.estimate = static_cast<double>(out.failures) / static_cast<double>(trials);
  out.ci_halfwidth = wilson_halfwidth(out.failures, trials);
  return out;
}

struct FailureCell {
  std::uint32_t N = 0;
  std::uint32_t k = 0;
  std::uint64_t trials = 0;
  std::uint64_t failures = 0;
  double estimate = 0.0;
  double ci_halfwidth = 0.0;
  double cleaned = 0.0;  // after the monotone cleanup
};

/// log10 f = intercept + slope * k, valid strictly below k_floor.
struct FailureFit {
  std::uint32_t N = 0;
  double slope = 0.0;
  double intercept = 0.0;
  std::uint32_t k_floor = 0;
  double f_floor = 0.0;
  std::size_t points = 0;
  bool valid = false;

  double predict(double k) const { return std::pow(10.0, intercept + slope * k); }
};

class FailureTable {
 public:
  void add(const FailureCell& c) {
    if (c.trials == 0) return;  // absent cell
    FailureCell cell = c;
    cell.estimate = static_cast<double>(c.failures) / static_cast<double>(c.trials);
    cell.ci_halfwidth = wilson_halfwidth(c.failures, c.trials);
    cell.cleaned = cell.estimate;
    auto it = std::lower_bound(cells_.begin(), cells_.end(), cell, key_less);
    if (it != cells_.end() && it->N == cell.N && it->k == cell.k) {
      *it = cell;
    } else {
      cells_.insert(it, cell);
    }
  }

  const std::vector<FailureCell>& cells() const { return cells_; }
  const std::vector<FailureFit>& fits() const { return fits_; }
  bool empty() const { return cells_.empty(); }

  std::vector<std::uint32_t> rows() const {
    std::vector<std::uint32_t> out;
    for (const auto& c : cells_)
      if (out.empty() || out.back() != c.N) out.push_back(c.N);
    return out;
  }

  const FailureCell* cell(std::uint32_t N, std::uint32_t k) const {
    for (const auto& c : cells_)
      if (c.N == N && c.k == k) return &c;
    return nullptr;
  }

  const FailureFit* fit(std::uint32_t N) const {
    for (const auto& f : fits_)
      if (f.N == N) return &f;
    return nullptr;
  }

  /// Monotone cleanup, then one extrapolation line per row.
  void finalize() {
    const std::vector<std::uint32_t> ns = rows();
    for (std::uint32_t N : ns) pava_row(N);
    // f must not increase with N at fixed k: carry the maximum downwards.
    std::map<std::uint32_t, double> running;
    for (auto r = ns.rbegin(); r != ns.rend(); ++r) {
      for (auto& c : cells_) {
        if (c.N != *r) continue;
        auto it = running.find(c.k);
        if (it != running.end()) c.cleaned = std::max(c.cleaned, it->second);
        running[c.k] = c.cleaned;
      }
    }
    for (std::uint32_t N : ns) {
      double m = 0.0;
      for (auto& c : cells_) {
        if (c.N != N) continue;
        m = std::max(m, c.cleaned);
        c.cleaned = m;
      }
    }
    fits_.clear();
    for (std::uint32_t N : ns) fits_.push_back(fit_row(N));
  }

  /// Largest k in row N whose failure probability is at most zeta: grid
  /// cells count when their upper confidence bound qualifies, and the fitted
  /// line covers the unsimulated region below the row's smallest estimate.
  std::optional<std::uint32_t> largest_k(std::uint32_t N, double zeta) const {
    std::optional<std::uint32_t> best;
    for (const auto& c : cells_) {
      if (c.N == N && wilson_upper(c.cleaned, c.trials) <= zeta) best = std::max(best.value_or(0), c.k);
    }
    if (const FailureFit* f = fit(N); f != nullptr && f->valid) {
      const double kx = std::floor((std::log10(zeta) - f->intercept) / f->slope);
      const double capped = std::min(kx, static_cast<double>(f->k_floor) - 1.0);
      if (capped >= 1.0) best = std::max(best.value_or(0), static_cast<std::uint32_t>(capped));
    }
    return best;
  }

  void write_csv(std::ostream& os) const {
    os << "N,k,trials,failures,estimate,ci_halfwidth\n";
    for (const auto& c : cells_) {
      os << c.N << ',' << c.k << ',' << c.trials << ',' << c.failures << ',' << fmt_double(c.estimate) << ','
         << fmt_double(c.ci_halfwidth) << '\n';
    }
  }

  void write_fit_csv(std::ostream& os) const {
    os << "N,slope,intercept,k_floor,f_floor,points,valid\n";
    for (const auto& f : fits_) {
      os << f.N << ',' << fmt_double(f.slope) << ',' << fmt_double(f.intercept) << ',' << f.k_floor << ','
         << fmt_double(f.f_floor) << ',' << f.points << ',' << (f.valid ? 1 : 0) << '\n';
    }
  }

  /// Reads the cell file; cleanup and fits are recomputed.
  static FailureTable read_csv(std::istream& is) {
    FailureTable t;
    std::string line;
    if (!std::getline(is, line) || line != "N,k,trials,failures,estimate,ci_halfwidth") {
      throw std::runtime_error("failure table: unexpected header");
    }
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
      ++lineno;
      if (line.empty()) continue;
      std::istringstream ls(line);
      std::string field;
      std::vector<std::string> f;
      while (std::getline(ls, field, ',')) f.push_back(field);
      if (f.size() != 6) throw std::runtime_error("failure table: line " + std::to_string(lineno) + " malformed");
      FailureCell c;
      c.N = static_cast<std::uint32_t>(std::stoul(f[0]));
      c.k = static_cast<std::uint32_t>(std::stoul(f[1]));
      c.trials = std::stoull(f[2]);
      c.failures = std::stoull(f[3]);
      if (c.failures > c.trials) throw std::runtime_error("failure table: failures exceed trials");
      t.add(c);
    }
    t.finalize();
    return t;
  }

  static std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
  }

 private:
  static bool key_less(const FailureCell& a, const FailureCell& b) { return a.N != b.N ? a.N < b.N : a.k < b.k; }

  // Weighted pool-adjacent-violators on the estimates of one row.
  void pava_row(std::uint32_t N) {
    struct Block {
      double value;
      double weight;
      std::size_t count;
    };
    std::vector<FailureCell*> row;
    for (auto& c : cells_)
      if (c.N == N) row.push_back(&c);
    std::vector<Block> st;
    for (FailureCell* c : row) {
      st.push_back({c->estimate, static_cast<double>(c->trials), 1});
      while (st.size() > 1 && st[st.size() - 2].value > st.back().value) {
        Block b = st.back();
        st.pop_back();
        Block& a = st.back();
        a.value = (a.value * a.weight + b.value * b.weight) / (a.weight + b.weight);
        a.weight += b.weight;
        a.count += b.count;
      }
    }
    std::size_t idx = 0;
    for (const Block& b : st)
      for (std::size_t j = 0; j < b.count; ++j) row[idx++]->cleaned = b.value;
  }

  // Least squares of log10 f on k over the row's smallest simulated decade.
  FailureFit fit_row(std::uint32_t N) const {
    FailureFit fit;
    fit.N = N;
    std::vector<const FailureCell*> pts;
    for (const auto& c : cells_)
      if (c.N == N && c.failures > 0 && c.cleaned > 0.0 && c.cleaned < 1.0) pts.push_back(&c);
    if (pts.empty()) return fit;
    std::sort(pts.begin(), pts.end(), [](const FailureCell* a, const FailureCell* b) {
      return a->cleaned != b->cleaned ? a->cleaned < b->cleaned : a->k < b->k;
    });
    fit.f_floor = pts.front()->cleaned;
    fit.k_floor = pts.front()->k;
    for (const FailureCell* c : pts) fit.k_floor = std::min(fit.k_floor, c->k);
    std::size_t used = 0;
    while (used < pts.size() && pts[used]->cleaned <= 10.0 * fit.f_floor) ++used;
    used = std::max<std::size_t>(used, std::min<std::size_t>(2, pts.size()));
    fit.points = used;
    if (used < 2) return fit;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t j = 0; j < used; ++j) {
      const double x = pts[j]->k;
      const double y = std::log10(pts[j]->cleaned);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    const double m = static_cast<double>(used);
    const double den = m * sxx - sx * sx;
    if (den <= 0.0) return fit;
    fit.slope = (m * sxy - sx * sy) / den;
    fit.intercept = (sy - fit.slope * sx) / m;
    fit.valid = fit.slope > 0.0;
    return fit;
  }

  std::vector<FailureCell> cells_;
  std::vector<FailureFit> fits_;
};

struct TableProgress {
  std::uint32_t N = 0;
  std::uint32_t k = 0;
  FailureEstimate estimate;
};

/// Runs `trials_per_cell` trials for every listed (N, k) cell with k <= N.
/// A zero budget leaves every cell absent.
inline FailureTable build_failure_table(const std::vector<std::pair<std::uint32_t, std::uint32_t>>& grid,
                                        const FailureModel& model, std::uint64_t trials_per_cell, std::uint64_t seed,
                                        unsigned threads = 1,
                                        const std::function<void(const TableProgress&)>& progress = {}) {
  if (grid.empty()) throw std::invalid_argument("build_failure_table: empty grid");
  FailureTable table;
  for (const auto& [N, k] : grid) {
    if (k < 1 || k > N || trials_per_cell == 0) continue;
    const FailureEstimate e = estimate_failure(k, N, model, trials_per_cell, seed, threads);
    table.add(FailureCell{N, k, e.trials, e.failures, e.estimate, e.ci_halfwidth, e.estimate});
    if (progress) progress(TableProgress{N, k, e});
  }
  table.finalize();
  return table;
}

/// Full cross product of the two grids.
inline FailureTable build_failure_table(const std::vector<std::uint32_t>& n_grid,
                                        const std::vector<std::uint32_t>& k_grid, const FailureModel& model,
                                        std::uint64_t trials_per_cell, std::uint64_t seed, unsigned threads = 1,
                                        const std::function<void(const TableProgress&)>& progress = {}) {
  if (n_grid.empty()) throw std::invalid_argument("build_failure_table: empty N grid");
  if (k_grid.empty()) throw std::invalid_argument("build_failure_table: empty k grid");
  std::vector<std::pair<std::uint32_t, std::uint32_t>> grid;
  for (std::uint32_t N : n_grid)
    for (std::uint32_t k : k_grid) grid.emplace_back(N, k);
  return build_failure_table(grid, model, trials_per_cell, seed, threads, progress);
}

class SizingInfeasible : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SizingPolicy {
  double zeta = 1e-12;
  double gamma = 98.0;
  std::uint32_t alpha = 6;
  std::uint32_t beta = 144;
  bool ratio_scaling = true;

  void validate() const {
    if (!(zeta > 0.0 && zeta < 1.0 + 1e-15)) throw std::invalid_argument("sizing: zeta must be in (0, 1]");
    if (!(gamma >= 0.0)) throw std::invalid_argument("sizing: gamma must be >= 0");
    if (beta < 1) throw std::invalid_argument("sizing: beta must be >= 1");
  }
  /// gamma + alpha / beta, kept real-valued.
  double horizon() const { return gamma + static_cast<double>(alpha) / static_cast<double>(beta); }
};

/// Group size for the current node count. Only rows at or below N_now are
/// consulted. With ratio scaling the best supported k/N among those rows is
/// applied to N_now; otherwise the largest such row is used as is.
inline std::uint32_t choose_group_size(std::size_t N_now, const FailureTable& table, const SizingPolicy& policy) {
  policy.validate();
  std::optional<double> ratio;
  std::optional<std::uint32_t> plain;
  bool covered = false;
  for (std::uint32_t N : table.rows()) {
    if (N > N_now) continue;
    covered = true;
    const auto k = table.largest_k(N, policy.zeta);
    plain = k;  // rows ascend, so this ends at the largest covered row
    if (k) ratio = std::max(ratio.value_or(0.0), static_cast<double>(*k) / static_cast<double>(N));
  }
  if (!covered) throw SizingInfeasible("sizing: no table row at or below N = " + std::to_string(N_now));
  std::uint32_t k = 0;
  if (policy.ratio_scaling) {
    if (ratio) k = static_cast<std::uint32_t>(std::floor(*ratio * static_cast<double>(N_now) + 1e-9));
  } else if (plain) {
    k = *plain;
  }
  if (k < 1) throw SizingInfeasible("sizing: no group size meets zeta at N = " + std::to_string(N_now));
  return k;
}

struct SurvivorModel {
  std::uint32_t k = 200;
  std::uint32_t N = 600;
  ChurnModel churn{10.0, 8.0};
  double precode_rate = 0.8;  // 1.0 gives a plain LT code
  double soliton_c = 0.1;
  double soliton_delta = 0.5;
  std::uint64_t max_epochs = 100000;
};

/// Runs churn until the probe decode first fails and returns the node count
/// at the last successful probe, or nothing if the first probe already fails.
inline std::optional<std::size_t> survivor_threshold(const SurvivorModel& m, std::uint64_t seed) {
  FailureModel fm;
  fm.churn = m.churn;
  fm.precode_rate = m.precode_rate;
  fm.soliton_c = m.soliton_c;
  fm.soliton_delta = m.soliton_delta;
  Rng rng(seed);
  const auto omega = make_omega(fm.code_length(m.k), m.soliton_c, m.soliton_delta);
  Network<MetadataOnly> net = detail::encoded_network(m.k, m.N, fm, omega, rng);
  std::optional<std::size_t> last;
  for (std::uint64_t e = 0; e < m.max_epochs; ++e) {
    if (detail::group_unrecoverable(net) || !net.probe_decode(1)) return last;
    last = net.alive_count();
    net.set_epoch(e + 1);
    net.churn_step(m.churn, rng);
  }
  return last;
}

}  // namespace rcb
