#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rcb/failure_table.hpp"
#include "rcb/ledger.hpp"
#include "rcb/metrics.hpp"
#include "rcb/node_protocol.hpp"

namespace rcb {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& key, const std::string& what)
      : std::runtime_error("config: " + key + ": " + what), key_(key) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

/// Explicit per-epoch churn, replacing the Poisson draws.
struct ChurnTraceRow {
  std::uint64_t epoch = 0;
  std::uint64_t joins = 0;
  std::uint64_t leaves = 0;
};

struct ScenarioConfig {
  std::uint64_t seed = 1;
  std::uint64_t epochs = 200;
  std::uint64_t N0 = 0;                    // required
  ChurnModel churn;                        // required: lambda_leave, lambda_join
  std::uint32_t alpha = 0;                 // required
  std::uint32_t beta = 0;                  // required
  double zeta = 0.0;                       // required
  double gamma = 0.0;                      // required
  std::uint64_t block_bytes = 125000;      // charged per transferred block
  unsigned field_bits = 16;
  double precode_rate = 0.8;
  std::size_t payload_symbols = 1;         // symbols actually carried per simulated block
  bool carry_payloads = true;              // false runs the protocol on neighbour sets only
  double soliton_c = 0.1;
  double soliton_delta = 0.5;
  double reencode_factor = 1.0;
  std::uint64_t initial_unencoded = 10000;
  bool one_enhanced_per_epoch = true;
  std::uint64_t claim_delay = 1;
  std::vector<double> epsilon_schedule = default_epsilon_schedule();
  bool ratio_scaling = true;
  std::uint64_t sizing_patience = 20;      // consecutive infeasible epochs tolerated
  std::string failure_table_path;          // read instead of building when set
  std::vector<std::uint32_t> table_n_grid; // default {N0}
  std::vector<double> table_k_ratios = {0.5, 0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9};
  std::vector<std::uint32_t> table_k_grid; // absolute k values, added to the ratios
  std::uint64_t table_trials = 200;
  std::optional<std::uint64_t> table_seed;
  std::vector<ChurnTraceRow> churn_trace;

  std::uint64_t effective_table_seed() const { return table_seed.value_or(seed); }

  void validate() const {
    if (N0 < 1) throw ConfigError("N0", "must be >= 1");
    try {
      churn.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError("lambda_leave/lambda_join", e.what());
    }
    if (alpha < 1) throw ConfigError("alpha", "must be >= 1");
    if (beta < 1) throw ConfigError("beta", "must be >= 1");
    if (!(zeta > 0.0 && zeta < 1.0)) throw ConfigError("zeta", "must be in (0, 1)");
    if (!(gamma >= 0.0)) throw ConfigError("gamma", "must be >= 0");
    if (block_bytes < 1) throw ConfigError("block_bytes", "must be >= 1");
    if (field_bits < 1 || field_bits > GaloisField::kMaxBits) throw ConfigError("field_bits", "must be in [1, 16]");
    if (!(precode_rate > 0.0 && precode_rate <= 1.0)) throw ConfigError("precode_rate", "must be in (0, 1]");
    if (payload_symbols < 1) throw ConfigError("payload_symbols", "must be >= 1");
    if (!(soliton_c > 0.0)) throw ConfigError("soliton_c", "must be > 0");
    if (!(soliton_delta > 0.0 && soliton_delta < 1.0)) throw ConfigError("soliton_delta", "must be in (0, 1)");
    if (!(reencode_factor > 0.0 && reencode_factor <= 1.0)) throw ConfigError("reencode_factor", "must be in (0, 1]");
    if (claim_delay < 1) throw ConfigError("claim_delay", "must be >= 1");
    if (epsilon_schedule.empty()) throw ConfigError("epsilon_schedule", "must not be empty");
    for (double e : epsilon_schedule)
      if (!(e >= 0.0)) throw ConfigError("epsilon_schedule", "values must be >= 0");
    for (std::uint32_t N : table_n_grid)
      if (N < 1) throw ConfigError("table_n_grid", "values must be >= 1");
    for (double r : table_k_ratios)
      if (!(r > 0.0 && r <= 1.0)) throw ConfigError("table_k_ratios", "values must be in (0, 1]");
    for (std::uint32_t k : table_k_grid)
      if (k < 1) throw ConfigError("table_k_grid", "values must be >= 1");
    if (table_k_ratios.empty() && table_k_grid.empty()) throw ConfigError("table_k_ratios", "no k grid configured");
  }

  ChainConfig chain() const {
    ChainConfig c;
    c.alpha = alpha;
    c.beta = beta;
    c.precode_rate = precode_rate;
    c.reencode_factor = reencode_factor;
    return c;
  }

  CodecConfig codec() const {
    CodecConfig c;
    c.field_bits = field_bits;
    c.symbols = payload_symbols;
    c.precode_rate = precode_rate;
    return c;
  }

  SizingPolicy sizing() const {
    SizingPolicy p;
    p.zeta = zeta;
    p.gamma = gamma;
    p.alpha = alpha;
    p.beta = beta;
    p.ratio_scaling = ratio_scaling;
    return p;
  }

  FailureModel failure_model() const {
    FailureModel m;
    m.churn = churn;
    m.horizon = sizing().horizon();
    m.precode_rate = precode_rate;
    m.soliton_c = soliton_c;
    m.soliton_delta = soliton_delta;
    m.epsilon_schedule = epsilon_schedule;
    return m;
  }

  /// (N, k) cells of the failure table: ratios and absolute k per row.
  std::vector<std::pair<std::uint32_t, std::uint32_t>> table_grid() const {
    std::vector<std::uint32_t> rows = table_n_grid;
    if (rows.empty()) rows.push_back(static_cast<std::uint32_t>(N0));
    std::set<std::pair<std::uint32_t, std::uint32_t>> cells;
    for (std::uint32_t N : rows) {
      for (double r : table_k_ratios) {
        const auto k = static_cast<std::uint32_t>(std::lround(r * N));
        if (k >= 1 && k <= N) cells.emplace(N, k);
      }
      for (std::uint32_t k : table_k_grid)
        if (k <= N) cells.emplace(N, k);
    }
    return {cells.begin(), cells.end()};
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double parse_real(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &used);
  } catch (const std::exception&) {
    throw ConfigError(key, "not a number: '" + v + "'");
  }
  if (used != v.size() || !std::isfinite(x)) throw ConfigError(key, "not a number: '" + v + "'");
  return x;
}

inline std::uint64_t parse_count(const std::string& key, const std::string& v) {
  if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos) {
    throw ConfigError(key, "not a non-negative integer: '" + v + "'");
  }
  try {
    return std::stoull(v);
  } catch (const std::exception&) {
    throw ConfigError(key, "out of range: '" + v + "'");
  }
}

inline std::uint32_t parse_u32(const std::string& key, const std::string& v) {
  const std::uint64_t x = parse_count(key, v);
  if (x > 0xFFFFFFFFull) throw ConfigError(key, "out of range: '" + v + "'");
  return static_cast<std::uint32_t>(x);
}

inline bool parse_flag(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(key, "not a boolean: '" + v + "'");
}

inline std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(v);
  while (std::getline(is, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline std::vector<ChurnTraceRow> read_churn_trace(const std::string& key, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(key, "cannot open '" + path.string() + "'");
  std::vector<ChurnTraceRow> rows;
  std::string line;
  std::uint64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line[0] == '#' || line.rfind("epoch", 0) == 0) continue;
    const auto f = split_list(line);
    if (f.size() != 3) throw ConfigError(key, "line " + std::to_string(line_no) + ": expected epoch,joins,leaves");
    rows.push_back({parse_count(key, f[0]), parse_count(key, f[1]), parse_count(key, f[2])});
  }
  return rows;
}

}  // namespace detail

/// Parses key = value lines. '#' starts a comment. Relative paths resolve
/// against `base_dir`.
inline ScenarioConfig parse_config(std::istream& in, const std::filesystem::path& base_dir = {}) {
  ScenarioConfig c;
  std::set<std::string> seen;
  std::string line;
  std::uint64_t line_no = 0;
  auto resolve = [&](const std::string& v) {
    std::filesystem::path p(v);
    return p.is_absolute() || base_dir.empty() ? p : base_dir / p;
  };
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(line_no), "expected key = value");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string v = detail::trim(line.substr(eq + 1));
    if (!seen.insert(key).second) throw ConfigError(key, "given twice");

    if (key == "seed") c.seed = detail::parse_count(key, v);
    else if (key == "epochs") c.epochs = detail::parse_count(key, v);
    else if (key == "N0") c.N0 = detail::parse_count(key, v);
    else if (key == "lambda_leave") c.churn.lambda_leave = detail::parse_real(key, v);
    else if (key == "lambda_join") c.churn.lambda_join = detail::parse_real(key, v);
    else if (key == "alpha") c.alpha = detail::parse_u32(key, v);
    else if (key == "beta") c.beta = detail::parse_u32(key, v);
    else if (key == "zeta") c.zeta = detail::parse_real(key, v);
    else if (key == "gamma") c.gamma = detail::parse_real(key, v);
    else if (key == "block_bytes") c.block_bytes = detail::parse_count(key, v);
    else if (key == "field_bits") c.field_bits = detail::parse_u32(key, v);
    else if (key == "precode_rate") c.precode_rate = detail::parse_real(key, v);
    else if (key == "payload_symbols") c.payload_symbols = detail::parse_count(key, v);
    else if (key == "carry_payloads") c.carry_payloads = detail::parse_flag(key, v);
    else if (key == "soliton_c") c.soliton_c = detail::parse_real(key, v);
    else if (key == "soliton_delta") c.soliton_delta = detail::parse_real(key, v);
    else if (key == "reencode_factor") c.reencode_factor = detail::parse_real(key, v);
    else if (key == "initial_unencoded") c.initial_unencoded = detail::parse_count(key, v);
    else if (key == "one_enhanced_per_epoch") c.one_enhanced_per_epoch = detail::parse_flag(key, v);
    else if (key == "claim_delay") c.claim_delay = detail::parse_count(key, v);
    else if (key == "ratio_scaling") c.ratio_scaling = detail::parse_flag(key, v);
    else if (key == "sizing_patience") c.sizing_patience = detail::parse_count(key, v);
    else if (key == "failure_table_path") c.failure_table_path = resolve(v).string();
    else if (key == "table_trials") c.table_trials = detail::parse_count(key, v);
    else if (key == "table_seed") c.table_seed = detail::parse_count(key, v);
    else if (key == "churn_trace") c.churn_trace = detail::read_churn_trace(key, resolve(v));
    else if (key == "epsilon_schedule") {
      c.epsilon_schedule.clear();
      for (const auto& x : detail::split_list(v)) c.epsilon_schedule.push_back(detail::parse_real(key, x));
    } else if (key == "table_n_grid") {
      c.table_n_grid.clear();
      for (const auto& x : detail::split_list(v)) c.table_n_grid.push_back(detail::parse_u32(key, x));
    } else if (key == "table_k_ratios") {
      c.table_k_ratios.clear();
      for (const auto& x : detail::split_list(v)) c.table_k_ratios.push_back(detail::parse_real(key, x));
    } else if (key == "table_k_grid") {
      c.table_k_grid.clear();
      for (const auto& x : detail::split_list(v)) c.table_k_grid.push_back(detail::parse_u32(key, x));
    } else {
      throw ConfigError(key, "unknown key");
    }
  }
  for (const char* req : {"N0", "lambda_leave", "lambda_join", "alpha", "beta", "zeta", "gamma"}) {
    if (!seen.count(req)) throw ConfigError(req, "required key missing");
  }
  c.validate();
  return c;
}

inline ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open '" + path.string() + "'");
  return parse_config(in, path.parent_path());
}

/// One row per enhanced block mined: which group, which round, and the
/// k_m chosen at that time.
struct HistoryRow {
  GroupSeq seq = 0;
  std::uint32_t round = 0;  // 1 for the first mining of the group
  std::uint64_t mined_epoch = 0;
  Height height = 0;
  std::uint32_t k = 0;
  std::uint32_t n = 0;
  std::uint64_t nodes = 0;  // alive when mined
};

inline constexpr const char* kHistoryCsvHeader = "seq,round,mined_epoch,height,k,n,nodes";
inline constexpr const char* kJoinCdfCsvHeader = "blocks,count,cdf";

enum class ScenarioStatus { kOk = 0, kNetworkDied = 2, kSizingInfeasible = 3 };

/// Block accounting taken from the ledger side (group membership, pool and
/// pending groups) at the end of a run, independent of the network state.
struct LedgerAudit {
  std::uint64_t W = 0;
  std::uint64_t encoded = 0;  // heights held by registered groups
  std::uint64_t groups = 0;
  std::uint64_t pool = 0;
  std::uint64_t pending = 0;      // heights in mined but not yet confirmed groups
  std::uint64_t unconfirmed = 0;  // recent heights not yet added to the pool

  bool balanced() const { return encoded + pool + pending + unconfirmed == W; }
};

struct ScenarioResult {
  ScenarioStatus status = ScenarioStatus::kOk;
  std::string message;
  MetricsLedger metrics;
  EventLog events;
  std::vector<HistoryRow> history;
  FailureTable table;
  ProtocolCounters counters;
  std::uint64_t encode_claims = 0;  // claims made inside decentralized encodes
  std::uint64_t encode_conflicts = 0;
  LedgerAudit audit;

  int exit_code() const { return static_cast<int>(status); }
};

struct ScenarioOptions {
  unsigned threads = 1;                                     // failure-table build only
  std::optional<std::uint64_t> table_trials;                // overrides the config budget
  const FailureTable* table = nullptr;                      // reuse a table already at hand
  std::function<void(const TableProgress&)> table_progress;
  std::function<void(const EpochRecord&)> on_epoch;
};

/// Reads the configured table file or builds one from the configured grids.
inline FailureTable obtain_failure_table(const ScenarioConfig& cfg, const ScenarioOptions& opt = {}) {
  if (opt.table) return *opt.table;
  if (!cfg.failure_table_path.empty()) {
    std::ifstream in(cfg.failure_table_path);
    if (!in) throw std::runtime_error("failure table: cannot open '" + cfg.failure_table_path + "'");
    return FailureTable::read_csv(in);
  }
  return build_failure_table(cfg.table_grid(), cfg.failure_model(), opt.table_trials.value_or(cfg.table_trials),
                             cfg.effective_table_seed(), opt.threads, opt.table_progress);
}

namespace detail {

template <class P>
class ScenarioRun {
 public:
  ScenarioRun(const ScenarioConfig& cfg, FailureTable table)
      : cfg_(cfg),
        chain_(cfg.chain()),
        codec_(cfg.codec()),
        policy_(cfg.sizing()),
        store_(derive_seed({cfg.seed, 0xB10C}), cfg.payload_symbols, cfg.field_bits),
        net_(protocol_config(cfg)),
        rng_(derive_seed({cfg.seed, 0x5CE7})) {
    result_.table = std::move(table);
    for (const auto& row : cfg.churn_trace) trace_[row.epoch] = row;
  }

  ScenarioResult run(const std::function<void(const EpochRecord&)>& on_epoch) {
    net_.set_log(&result_.events);
    for (std::uint64_t i = 0; i < cfg_.N0; ++i) net_.add_node();
    for (Height h = 1; h <= cfg_.initial_unencoded; ++h) pool_.insert(h);
    W_ = cfg_.initial_unencoded;
    tip_ = BlockHeader{W_, Digest{}, W_ > 0 ? store_.merkle_root(W_) : Digest{}, W_};

    std::uint64_t infeasible = 0;
    for (std::uint64_t t = 1; t <= cfg_.epochs; ++t) {
      net_.set_epoch(t);
      const std::uint64_t fallbacks_before = net_.counters().fallbacks;
      reencode_check(t);

      std::optional<std::uint32_t> k_next;
      const auto n_eff = static_cast<std::size_t>(std::floor(cfg_.reencode_factor * net_.alive_count() + 1e-9));
      try {
        k_next = choose_group_size(n_eff, result_.table, policy_);
        infeasible = 0;
      } catch (const SizingInfeasible& e) {
        if (++infeasible > cfg_.sizing_patience) {
          return finish(ScenarioStatus::kSizingInfeasible,
                        "epoch " + std::to_string(t) + ": " + e.what() + " for " + std::to_string(infeasible) +
                            " consecutive epochs");
        }
      }

      bool mined_this_epoch = false;
      for (std::uint32_t b = 0; b < cfg_.beta; ++b) {
        const bool enhanced = k_next && pool_.size() >= *k_next && !(cfg_.one_enhanced_per_epoch && mined_this_epoch);
        if (enhanced) {
          mine(t, *k_next);
          mined_this_epoch = true;
        } else {
          append_plain();
        }
        if (W_ > cfg_.alpha && W_ - cfg_.alpha > cfg_.initial_unencoded) pool_.insert(W_ - cfg_.alpha);
        encode_confirmed();
      }

      const std::uint64_t coded_before = coded_join_bytes_;
      std::uint64_t joins = 0;
      std::uint64_t pool_bytes = 0;
      churn(t, joins, pool_bytes);
      if (net_.alive_count() == 0) {
        record(t, joins, 0, 0, net_.counters().fallbacks - fallbacks_before, on_epoch);
        return finish(ScenarioStatus::kNetworkDied, "epoch " + std::to_string(t) + ": every node has left");
      }
      const std::uint64_t coded = coded_join_bytes_ - coded_before;
      record(t, joins, joins ? coded / joins : 0, joins ? pool_bytes / joins : 0,
             net_.counters().fallbacks - fallbacks_before, on_epoch);
    }
    return finish(ScenarioStatus::kOk, "completed " + std::to_string(cfg_.epochs) + " epochs");
  }

 private:
  struct Pending {
    MinedGroup mined;
    std::uint64_t mined_epoch = 0;
  };

  static ProtocolConfig protocol_config(const ScenarioConfig& cfg) {
    ProtocolConfig p;
    p.epsilon_schedule = cfg.epsilon_schedule;
    p.block_bytes = cfg.block_bytes;
    p.claim_delay = cfg.claim_delay;
    return p;
  }

  void log(std::uint64_t t, EventKind kind, NodeId node, GroupSeq m, std::uint64_t blocks, std::uint64_t bytes) {
    result_.events.record(Event{t, kind, node, m, blocks, bytes});
  }

  void append_plain() {
    ++W_;
    tip_ = BlockHeader{W_, header_hash(tip_), store_.merkle_root(W_), W_};
  }

  void mine(std::uint64_t t, std::uint32_t k) {
    GroupSeq seq = 0;
    if (!remine_queue_.empty()) {
      seq = *remine_queue_.begin();
      remine_queue_.erase(remine_queue_.begin());
    } else {
      seq = ++last_seq_;
    }
    MinedGroup mg = mine_enhanced_block(pool_, k, tip_, codec_, store_, seq, W_ + 1);
    std::uniform_int_distribution<std::size_t> pick(0, net_.alive_count() - 1);
    const NodeId miner = net_.alive()[pick(rng_)];
    log(t, EventKind::kMine, miner, seq, k, 0);
    const Verdict v = verify_enhanced_block(mg.header, pool_, codec_, store_);
    if (!v.accepted) {
      throw std::logic_error(std::string("scenario: honest enhanced block rejected: ") + to_string(v.reason) + ": " +
                             v.detail);
    }
    log(t, EventKind::kVerify, kNoNode, seq, k, 0);
    pool_ = update_pool(pool_, mg.header.group_indices);
    ++W_;
    tip_ = mg.header.base;
    result_.history.push_back(HistoryRow{seq, ++rounds_[seq], t, W_, k, mg.header.n(), net_.alive_count()});
    pending_.push_back(Pending{std::move(mg), t});
  }

  void encode_confirmed() {
    while (!pending_.empty() && confirmation_check(pending_.front().mined.header, W_, chain_)) {
      MinedGroup mg = std::move(pending_.front().mined);
      pending_.erase(pending_.begin());
      const EnhancedBlockHeader& h = mg.header;
      const GroupSeq seq = h.group_seq;
      std::vector<P> truth;
      if constexpr (kCarriesSymbols<P>) {
        truth = std::move(mg.intermediates);
      } else {
        truth.assign(h.n(), P{});
      }
      net_.register_group(seq, h.k(), h.n(), omega(h.n()), h.generator, std::move(truth));
      const EncodeReport rep = net_.decentralized_encode(seq, rng_);
      result_.encode_claims += rep.systematic;
      result_.encode_conflicts += rep.conflicts;
      members_[seq] = h.group_indices;
    }
  }

  std::shared_ptr<const DegreeDistribution> omega(std::uint32_t n) {
    auto it = omega_cache_.find(n);
    if (it == omega_cache_.end()) it = omega_cache_.emplace(n, make_omega(n, cfg_.soliton_c, cfg_.soliton_delta)).first;
    return it->second;
  }

  /// Groups whose node count fell below the re-encode threshold after at
  /// least gamma epochs give their blocks back to the pool for re-mining.
  void reencode_check(std::uint64_t t) {
    std::vector<GroupSeq> due;
    for (const auto& [seq, g] : net_.groups()) {
      if (g.lost) continue;
      if (static_cast<double>(t - g.encoded_epoch) < cfg_.gamma) continue;
      if (remine_decision(net_.alive_count(), g.nodes_at_encoding, chain_) == RemineAction::kReencode) due.push_back(seq);
    }
    for (GroupSeq seq : due) {
      const std::uint32_t k = net_.group(seq).k;
      for (Height h : members_.at(seq)) pool_.insert(h);
      members_.erase(seq);
      net_.drop_group(seq);
      remine_queue_.insert(seq);
      log(t, EventKind::kReencode, kNoNode, seq, k, 0);
    }
  }

  void churn(std::uint64_t t, std::uint64_t& joins, std::uint64_t& pool_bytes) {
    std::uint64_t l = 0;
    std::uint64_t e = 0;
    auto tr = trace_.find(t);
    if (!cfg_.churn_trace.empty()) {
      if (tr != trace_.end()) {
        l = tr->second.leaves;
        e = tr->second.joins;
      }
    } else {
      l = poisson_draw(rng_, cfg_.churn.lambda_leave);
      e = poisson_draw(rng_, cfg_.churn.lambda_join);
    }
    l = std::min<std::uint64_t>(l, net_.alive_count());
    for (std::uint64_t i = 0; i < l; ++i) {
      std::uniform_int_distribution<std::size_t> pick(0, net_.alive_count() - 1);
      net_.remove_node(net_.alive()[pick(rng_)]);
    }
    for (std::uint64_t i = 0; i < e; ++i) {
      const JoinReport rep = net_.join_node(rng_);
      for (const GroupJoin& gj : rep.groups) coded_join_bytes_ += gj.blocks * cfg_.block_bytes;
      const std::uint64_t unencoded = W_ - encoded_sum();
      log(t, EventKind::kJoin, rep.id, 0, unencoded, unencoded * cfg_.block_bytes);
      pool_bytes += unencoded * cfg_.block_bytes;
      ++joins;
    }
  }

  std::uint64_t encoded_sum() const {
    std::uint64_t s = 0;
    for (const auto& [seq, g] : net_.groups()) s += g.k;
    return s;
  }

  void record(std::uint64_t t, std::uint64_t joins, std::uint64_t coded, std::uint64_t pool, std::uint64_t fallbacks,
              const std::function<void(const EpochRecord&)>& on_epoch) {
    EpochRecord r;
    r.epoch = t;
    r.nodes = net_.alive_count();
    r.W = W_;
    r.sum_k = encoded_sum();
    r.groups = net_.groups().size();
    r.R_s = W_ > 0 ? storage_reduction(r.W, r.sum_k, r.groups) : 1.0;
    r.comm_coded_bytes = coded;
    r.comm_pool_bytes = pool;
    r.joins = joins;
    r.fallbacks = fallbacks;
    r.groups_lost = net_.counters().groups_lost;
    result_.metrics.append(r);
    if (on_epoch) on_epoch(r);
  }

  ScenarioResult finish(ScenarioStatus s, std::string msg) {
    result_.status = s;
    result_.message = std::move(msg);
    result_.counters = net_.counters();
    LedgerAudit& a = result_.audit;
    a.W = W_;
    a.groups = members_.size();
    for (const auto& [seq, hs] : members_) a.encoded += hs.size();
    a.pool = pool_.size();
    for (const Pending& p : pending_) a.pending += p.mined.header.group_indices.size();
    const std::uint64_t fed = W_ > cfg_.alpha ? W_ - cfg_.alpha : 0;
    a.unconfirmed = W_ - std::max<std::uint64_t>(fed, std::min<std::uint64_t>(cfg_.initial_unencoded, W_));
    net_.set_log(nullptr);
    return std::move(result_);
  }

  const ScenarioConfig& cfg_;
  ChainConfig chain_;
  CodecConfig codec_;
  SizingPolicy policy_;
  BlockStore store_;
  Network<P> net_;
  Rng rng_;
  ScenarioResult result_;
  BlockPool pool_;
  BlockHeader tip_;
  Height W_ = 0;
  GroupSeq last_seq_ = 0;
  std::set<GroupSeq> remine_queue_;
  std::map<GroupSeq, std::uint32_t> rounds_;
  std::map<GroupSeq, std::vector<Height>> members_;
  std::vector<Pending> pending_;
  std::map<std::uint32_t, std::shared_ptr<const DegreeDistribution>> omega_cache_;
  std::map<std::uint64_t, ChurnTraceRow> trace_;
  std::uint64_t coded_join_bytes_ = 0;
};

}  // namespace detail

/// Runs the configured scenario epoch by epoch. Each epoch: re-encode
/// check, group sizing, beta blocks with mining, verification and
/// confirmation-triggered encoding, then churn.
template <class P>
ScenarioResult run_scenario(const ScenarioConfig& cfg, const ScenarioOptions& opt = {}) {
  cfg.validate();
  FailureTable table = obtain_failure_table(cfg, opt);
  detail::ScenarioRun<P> run(cfg, std::move(table));
  return run.run(opt.on_epoch);
}

inline ScenarioResult run_scenario(const ScenarioConfig& cfg, const ScenarioOptions& opt = {}) {
  return cfg.carry_payloads ? run_scenario<BlockVector>(cfg, opt) : run_scenario<MetadataOnly>(cfg, opt);
}

inline void write_history_csv(std::ostream& os, const std::vector<HistoryRow>& rows) {
  os << kHistoryCsvHeader << '\n';
  for (const auto& r : rows) {
    os << r.seq << ',' << r.round << ',' << r.mined_epoch << ',' << r.height << ',' << r.k << ',' << r.n << ','
       << r.nodes << '\n';
  }
}

inline void write_join_cdf_csv(std::ostream& os, const std::vector<CdfPoint>& cdf) {
  os << kJoinCdfCsvHeader << '\n';
  for (const auto& p : cdf) os << p.blocks << ',' << p.count << ',' << FailureTable::fmt_double(p.cdf) << '\n';
}

inline void write_events_csv(std::ostream& os, const EventLog& log) {
  os << kEventCsvHeader << '\n';
  for (const Event& e : log.events()) write_csv_row(os, e);
}

/// metrics.csv, events.csv, join_cdf.csv, enhanced_history.csv,
/// failure_table.csv and failure_table_fit.csv under `dir`.
inline void write_scenario_outputs(const ScenarioResult& r, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream os(dir / name, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + (dir / name).string());
    return os;
  };
  {
    auto os = open("metrics.csv");
    r.metrics.write_csv(os);
  }
  {
    auto os = open("events.csv");
    write_events_csv(os, r.events);
  }
  {
    auto os = open("join_cdf.csv");
    write_join_cdf_csv(os, join_cdf(r.events.events()));
  }
  {
    auto os = open("enhanced_history.csv");
    write_history_csv(os, r.history);
  }
  {
    auto os = open("failure_table.csv");
    r.table.write_csv(os);
  }
  {
    auto os = open("failure_table_fit.csv");
    r.table.write_fit_csv(os);
  }
}

}  // namespace rcb
