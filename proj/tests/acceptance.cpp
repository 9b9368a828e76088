// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Pass criterion numbers as arguments to run a subset.

#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "rcb/rcb.hpp"

using namespace rcb;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

fs::path config_dir() { return fs::path(RCB_SOURCE_DIR) / "configs"; }

std::vector<BlockVector> random_blocks(std::size_t count, std::size_t symbols, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::uint32_t> u(0, 0xFFFF);
  std::vector<BlockVector> out;
  for (std::size_t i = 0; i < count; ++i) {
    BlockVector b(symbols);
    for (std::size_t s = 0; s < symbols; ++s) b[s] = static_cast<FieldSymbol>(u(rng));
    out.push_back(std::move(b));
  }
  return out;
}

Outcome peeling_fixture() {
  std::mt19937_64 rng(11);
  const auto u = random_blocks(4, 8, rng);
  auto make = [&](std::vector<Index> nbrs) {
    return combine<BlockVector>(std::move(nbrs), [&](Index i) { return &u[i]; });
  };
  const std::vector<CodedBlock<BlockVector>> v = {make({0}), make({0, 2}), make({1, 2, 3}), make({1, 3}),
                                                  make({2, 3})};
  const auto t0 = std::chrono::steady_clock::now();
  const auto four = peel_decode(std::vector<CodedBlock<BlockVector>>(v.begin(), v.begin() + 4), 4);
  const auto five = peel_decode(v, 4);
  const double us = std::chrono::duration<double, std::micro>(std::chrono::steady_clock::now() - t0).count();

  bool ok = four.undecoded == std::vector<Index>{1, 3} && four.decoded[0] == u[0] && four.decoded[2] == u[2];
  ok = ok && five.complete();
  for (Index i = 0; ok && i < 4; ++i) ok = five.decoded[i] == u[i];
  ok = ok && us < 1000.0;
  return {ok, fmt("4 blocks decode {u1,u3}, 5 blocks decode all; %.1f us", us)};
}

Outcome mds_oracle() {
  std::mt19937_64 rng(12);
  const auto t0 = std::chrono::steady_clock::now();
  std::uint64_t subsets = 0;
  bool ok = true;
  for (std::uint32_t n = 1; n <= 8 && ok; ++n) {
    for (std::uint32_t k = 1; k <= n && ok; ++k) {
      const GeneratorMatrix g = build_systematic_generator(k, n, 16);
      const auto originals = random_blocks(k, 4, rng);
      const auto inter = precode_encode(originals, g);
      for (std::uint32_t mask = 0; mask < (1u << n) && ok; ++mask) {
        if (static_cast<std::uint32_t>(__builtin_popcount(mask)) < k) continue;
        std::map<Index, BlockVector> avail;
        for (std::uint32_t i = 0; i < n; ++i)
          if (mask & (1u << i)) avail.emplace(i, inter[i]);
        ok = precode_decode(avail, g) == originals;
        ++subsets;
      }
    }
  }
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {ok && s < 5.0, fmt("%llu survivor subsets roundtrip, %.2f s", static_cast<unsigned long long>(subsets), s)};
}

Outcome distributions() {
  double worst_sum = 0.0;
  bool ok = true;
  for (std::uint32_t k : {2u, 10u, 100u, 1000u, 2388u}) {
    const auto mu = robust_soliton(k, 0.1, 0.5);
    const auto omega = encoding_distribution(k, 0.1, 0.5);
    double sm = 0.0, so = 0.0;
    for (double m : mu.masses()) sm += m;
    for (double m : omega.masses()) so += m;
    worst_sum = std::max({worst_sum, std::abs(sm - 1.0), std::abs(so - 1.0)});
    ok = ok && omega.pmf(1) == 0.0;
  }
  std::mt19937_64 rng(13);
  double worst_excess = -1.0;
  for (int i = 0; i < 100; ++i) {
    const auto n = std::uniform_int_distribution<std::uint32_t>(3, 400)(rng);
    const auto ns = std::uniform_int_distribution<std::uint32_t>(1, n)(rng);
    const auto omega = encoding_distribution(n, 0.1, 0.5);
    const auto star = shifted_distribution(omega, n, ns);
    double s = 0.0;
    for (double m : star.masses()) s += m;
    worst_sum = std::max(worst_sum, std::abs(s - 1.0));
    for (std::uint32_t d = 2; d <= n; ++d) worst_excess = std::max(worst_excess, star.pmf(d) - omega.pmf(d));
  }
  const double S = soliton_spread(1000, 0.1, 0.5);
  const double derived = 0.1 * std::log(1000.0 / 0.5) * std::sqrt(1000.0);
  ok = ok && worst_sum <= 1e-12 && worst_excess <= 0.0 && std::abs(S - derived) <= 1e-6 && std::abs(S - 24.036) < 5e-4;
  return {ok, fmt("max |sum-1| = %.2e, max Omega*-Omega = %.2e, S = %.6f", worst_sum, worst_excess, S)};
}

double poisson_convolution(long s, double ll, double le, double g) {
  const long double a = static_cast<long double>(g) * le;
  const long double b = static_cast<long double>(g) * ll;
  auto lp = [](long double mu, long x) { return x * std::log(mu) - mu - std::lgamma(static_cast<long double>(x) + 1); };
  long double sum = 0;
  const long hi = static_cast<long>(b + 40 * std::sqrt(b) + 200);
  for (long l = std::max(0L, -s); l <= hi; ++l) sum += std::exp(lp(a, l + s) + lp(b, l));
  return static_cast<double>(sum);
}

Outcome skellam() {
  double worst = 0.0;
  for (auto [ll, le, g] : {std::tuple{1.0, 1.0, 1.0}, {12.0, 4.0, 10.0}, {42.18, 43.16, 98.0}}) {
    for (long s = -50; s <= 50; ++s)
      worst = std::max(worst, std::abs(skellam_pmf(s, SkellamParams{ll, le, g}) - poisson_convolution(s, ll, le, g)));
  }
  return {worst <= 1e-10, fmt("max pointwise error %.2e", worst)};
}

Outcome bec_equivalence() {
  std::istringstream in(R"(
N0 = 400
lambda_leave = 3
lambda_join = 0
alpha = 10
beta = 10
zeta = 1e-3
gamma = 6
epochs = 60
initial_unencoded = 400
)");
  const ScenarioConfig cfg = parse_config(in);
  FailureTable t;
  for (std::uint32_t N = 50; N <= 400; N += 50) {
    FailureCell c;
    c.N = N;
    c.k = N / 2;
    c.trials = 1000000;
    t.add(c);
  }
  t.finalize();
  ScenarioOptions opt;
  opt.table = &t;
  const ScenarioResult r = run_scenario(cfg, opt);
  std::uint64_t repairs = 0, claims = 0, joins = 0;
  for (const Event& e : r.events.events()) {
    repairs += e.kind == EventKind::kRepair;
    claims += e.kind == EventKind::kClaim;
    joins += e.kind == EventKind::kJoin;
  }
  const std::uint64_t extra_claims = claims - std::min(claims, r.encode_claims);
  const bool ok = repairs == 0 && extra_claims == 0 && joins == 0 && r.encode_claims > 0 && r.counters.leaves > 0;
  return {ok, fmt("%zu groups mined, %llu leaves, %llu repair events, %llu claims outside encoding",
                  r.history.size(), static_cast<unsigned long long>(r.counters.leaves),
                  static_cast<unsigned long long>(repairs), static_cast<unsigned long long>(extra_claims))};
}

const ScenarioResult& rapid_run() {
  static std::optional<ScenarioResult> cached;
  if (!cached) {
    ScenarioConfig cfg = load_config(config_dir() / "rapid_reduction.cfg");
    ScenarioOptions opt;
    opt.table_trials = 100;
    std::fprintf(stderr, "  rapid-reduction run: building a %zu-cell table at %llu trials per cell\n",
                 cfg.table_grid().size(), static_cast<unsigned long long>(*opt.table_trials));
    cached = run_scenario(cfg, opt);
  }
  return *cached;
}

Outcome rapid_reduction() {
  const ScenarioResult& r = rapid_run();
  if (r.history.empty()) return {false, "no enhanced block mined: " + r.message};
  const std::uint32_t k1 = r.history.front().k;
  const bool a = std::abs(static_cast<double>(k1) - 1910.0) <= 0.15 * 1910.0;

  std::map<GroupSeq, std::vector<HistoryRow>> by_seq;
  for (const HistoryRow& h : r.history) by_seq[h.seq].push_back(h);
  const double gamma = 98.0;
  bool b = true, c = true;
  std::size_t remines = 0;
  std::string seq1;
  for (const auto& [seq, rows] : by_seq) {
    for (std::size_t i = 1; i < rows.size(); ++i) {
      ++remines;
      b = b && rows[i].k < rows[i - 1].k;
      bool triggered = false;
      for (const Event& e : r.events.events()) {
        if (e.kind == EventKind::kReencode && e.group == seq && e.epoch >= rows[i - 1].mined_epoch + gamma &&
            e.epoch <= rows[i].mined_epoch)
          triggered = true;
      }
      c = c && triggered;
    }
  }
  for (const HistoryRow& h : by_seq.begin()->second) seq1 += (seq1.empty() ? "" : "->") + std::to_string(h.k);
  b = b && remines > 0;
  return {a && b && c, fmt("(a) k1 = %u vs 1910 +-15%% %s; (b) group 1 k: %s over %zu re-mines %s; (c) trigger %s", k1,
                           a ? "ok" : "OUT OF BAND", seq1.c_str(), remines, b ? "ok" : "NOT DECREASING",
                           c ? "ok" : "MISSING")};
}

Outcome join_cdf_rapid() {
  const ScenarioResult& r = rapid_run();
  const auto cdf = join_cdf(r.events.events());
  double at10 = 0.0;
  std::uint64_t total = 0;
  for (const CdfPoint& p : cdf) {
    total += p.count;
    if (p.blocks <= 10) at10 = p.cdf;
  }
  return {total > 0 && at10 >= 0.85,
          fmt("P(coded blocks <= 10) = %.4f over %llu group joins (need >= 0.85)", at10,
              static_cast<unsigned long long>(total))};
}

const ScenarioResult& bitcoin_run() {
  static std::optional<ScenarioResult> cached;
  if (!cached) {
    const ScenarioConfig cfg = load_config(config_dir() / "bitcoin_scaled.cfg");
    std::fprintf(stderr, "  scaled bitcoin run: %zu-cell table at %llu trials per cell\n", cfg.table_grid().size(),
                 static_cast<unsigned long long>(cfg.table_trials));
    cached = run_scenario(cfg);
  }
  return *cached;
}

Outcome storage_coefficient() {
  const ScenarioResult& r = bitcoin_run();
  if (r.metrics.empty()) return {false, "no epochs recorded: " + r.message};
  const EpochRecord& last = r.metrics.back();
  const LedgerAudit& a = r.audit;
  const bool exact = a.balanced() && a.W == last.W && a.encoded == last.sum_k && a.groups == last.groups &&
                     last.R_s == storage_reduction(a.W, a.encoded, a.groups);
  bool recomputed = true;
  for (const EpochRecord& m : r.metrics.records()) recomputed = recomputed && m.R_s == storage_reduction(m.W, m.sum_k, m.groups);
  const std::size_t n = r.metrics.records().size();
  const std::size_t tail = std::max<std::size_t>(1, n / 10);
  double worst_tail = 0.0;
  for (std::size_t i = n - tail; i < n; ++i) worst_tail = std::max(worst_tail, r.metrics.records()[i].R_s);

  // Long-run figure: the same group-size ratio at ten times the node count,
  // applied to a chain of 550000 blocks.
  double ratio = 0.0;
  for (const HistoryRow& h : r.history) ratio = std::max(ratio, static_cast<double>(h.k) / static_cast<double>(h.nodes));
  const std::uint64_t W_full = 550000;
  const auto k_full = static_cast<std::uint64_t>(ratio * 10000);
  const std::uint64_t groups_full = k_full ? (W_full - 144) / k_full : 0;
  const double rs_full = k_full ? storage_reduction(W_full, groups_full * k_full, groups_full) : 1.0;

  const bool ok = r.status == ScenarioStatus::kOk && exact && recomputed && last.W > 20000 && worst_tail < 0.02;
  return {ok, fmt("W = %llu, ledger audit %s, final R_s = %.5f, max over last %zu epochs = %.5f; long-run estimate at "
                  "N=10000: %.4f",
                  static_cast<unsigned long long>(last.W), exact ? "exact" : "MISMATCH", last.R_s, tail, worst_tail,
                  rs_full)};
}

Outcome fallback_rarity() {
  const ScenarioResult& r = bitcoin_run();
  const auto& c = r.counters;
  const double frac = c.group_joins ? static_cast<double>(c.fallbacks) / static_cast<double>(c.group_joins) : 1.0;
  return {c.group_joins >= 10000 && frac < 1e-2,
          fmt("%llu fallbacks over %llu group joins: %.2e", static_cast<unsigned long long>(c.fallbacks),
              static_cast<unsigned long long>(c.group_joins), frac)};
}

Outcome raptor_vs_lt() {
  const int trials = 200;
  auto mean_threshold = [&](double rate) {
    double sum = 0.0;
    for (int t = 0; t < trials; ++t) {
      SurvivorModel m;
      m.k = 200;
      m.N = 600;
      m.churn = ChurnModel{10.0, 8.0};
      m.precode_rate = rate;
      const auto s = survivor_threshold(m, derive_seed({0xF16, static_cast<std::uint64_t>(t)}));
      sum += static_cast<double>(s.value_or(m.N));
    }
    return sum / trials;
  };
  const double raptor = mean_threshold(0.8);
  const double lt = mean_threshold(1.0);
  return {lt > raptor, fmt("mean survivors at last decode: LT %.1f, raptor %.1f (%d trials each)", lt, raptor, trials)};
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Outcome determinism() {
  std::istringstream in(R"(
N0 = 300
lambda_leave = 3
lambda_join = 1
alpha = 10
beta = 10
zeta = 1e-2
gamma = 5
epochs = 30
initial_unencoded = 300
table_n_grid = 200, 300
table_k_ratios = 0.5, 0.6, 0.7
table_trials = 20
)");
  const ScenarioConfig cfg = parse_config(in);
  const fs::path base = fs::temp_directory_path() / "rcb_acceptance_determinism";
  fs::remove_all(base);
  write_scenario_outputs(run_scenario(cfg), base / "a");
  write_scenario_outputs(run_scenario(cfg), base / "b");
  std::size_t files = 0;
  bool same = true;
  for (const auto& entry : fs::directory_iterator(base / "a")) {
    ++files;
    same = same && read_file(entry.path()) == read_file(base / "b" / entry.path().filename());
  }
  fs::remove_all(base);
  return {same && files == 6, fmt("%zu CSV files compared byte for byte", files)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"peeling fixture", peeling_fixture},
      {"MDS oracle", mds_oracle},
      {"degree distributions", distributions},
      {"Skellam pmf", skellam},
      {"no repair or claim without joins", bec_equivalence},
      {"rapid node-count reduction", rapid_reduction},
      {"join cost CDF", join_cdf_rapid},
      {"storage coefficient", storage_coefficient},
      {"fallback rarity", fallback_rarity},
      {"raptor vs LT survivors", raptor_vs_lt},
      {"determinism", determinism},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i + 1);
    if (!only.empty() && !only.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("[%s] %2d %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first, o.detail.c_str(), s);
    std::fflush(stdout);
    failed += !o.pass;
  }
  std::printf("%d criteria failed\n", failed);
  return failed ? 1 : 0;
}
