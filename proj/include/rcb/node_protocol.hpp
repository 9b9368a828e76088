#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "rcb/block_vector.hpp"
#include "rcb/degree_distribution.hpp"
#include "rcb/events.hpp"
#include "rcb/lt_code.hpp"
#include "rcb/precode.hpp"
#include "rcb/rng.hpp"

namespace rcb {

struct ChurnModel {
  double lambda_leave = 0.0;
  double lambda_join = 0.0;

  void validate() const {
    if (!(lambda_leave >= 0.0) || !(lambda_join >= 0.0)) throw std::invalid_argument("churn: rates must be >= 0");
  }
};

template <class P>
struct NodeState {
  NodeId id = kNoNode;
  bool alive = true;
  std::map<GroupSeq, CodedBlock<P>> stored;  // one coded block per encoded group

  const CodedBlock<P>* block(GroupSeq m) const {
    auto it = stored.find(m);
    return it == stored.end() ? nullptr : &it->second;
  }
};

struct ClaimMessage {
  GroupSeq group = 0;
  Index index = 0;
  NodeId claimer = kNoNode;
  std::uint64_t timestamp = 0;
};

/// Earlier timestamp wins; equal timestamps go to the smaller node id.
inline bool claim_precedes(const ClaimMessage& a, const ClaimMessage& b) {
  return a.timestamp != b.timestamp ? a.timestamp < b.timestamp : a.claimer < b.claimer;
}

/// Network-wide view of one encoded group: who holds what. Only alive nodes
/// appear in `holders`, `edges` and `claimant`.
template <class P>
struct GroupState {
  GroupSeq seq = 0;
  std::uint32_t k = 0;
  std::uint32_t n = 0;
  std::shared_ptr<const DegreeDistribution> omega;
  std::shared_ptr<const GeneratorMatrix> generator;
  std::vector<P> truth;  // u_0 .. u_{n-1}; checked against every stored block
  std::vector<NodeId> claimant;
  std::vector<std::vector<NodeId>> edges;
  std::vector<NodeId> holders;
  std::vector<std::uint32_t> holder_pos;  // by node id
  bool lost = false;
  std::size_t nodes_at_encoding = 0;
  std::uint64_t encoded_epoch = 0;

  bool available(Index i) const { return claimant[i] != kNoNode; }

  std::size_t claimed_count() const {
    std::size_t c = 0;
    for (NodeId x : claimant)
      if (x != kNoNode) ++c;
    return c;
  }
};

struct EncodeReport {
  std::size_t systematic = 0;
  std::size_t parity = 0;
  std::size_t conflicts = 0;
  std::size_t deficit = 0;  // indices left unclaimed because n exceeded the node count
};

/// State of one repair attempt by a joining node: the missing set R, the
/// dead ends Q, the edge holders found per tried index and the phi flags.
class RepairSession {
 public:
  RepairSession() = default;
  RepairSession(GroupSeq m, std::uint32_t n) : group(m), availability(n, -1), missing_flag_(n, 0), dead_flag_(n, 0) {}

  GroupSeq group = 0;
  std::map<Index, std::vector<NodeId>> discovered_edges;  // E-hat per tried index
  std::vector<std::int8_t> availability;                  // phi per index; -1 = not queried

  void note(Index i, bool phi) { availability.at(i) = phi ? 1 : 0; }

  /// R <- R + {i}; returns whether i was new.
  bool add_missing(Index i) {
    if (missing_flag_.at(i)) return false;
    missing_flag_[i] = 1;
    missing_order_.push_back(i);
    if (!dead_flag_[i]) open_.push_back(i);
    return true;
  }
  void mark_dead_end(Index i) {
    if (!dead_flag_.at(i)) {
      dead_flag_[i] = 1;
      ++dead_count_;
    }
  }
  bool is_missing(Index i) const { return missing_flag_.at(i) != 0; }
  bool is_dead_end(Index i) const { return dead_flag_.at(i) != 0; }
  std::size_t missing_count() const { return missing_order_.size(); }
  std::size_t dead_end_count() const { return dead_count_; }

  std::vector<Index> missing() const { return sorted(missing_order_); }
  std::vector<Index> dead_ends() const {
    std::vector<Index> out;
    for (Index i : missing_order_)
      if (dead_flag_[i]) out.push_back(i);
    return sorted(std::move(out));
  }

  /// Removes and returns a uniformly chosen index of R \ Q.
  template <class R>
  std::optional<Index> take_open(R& rng) {
    while (!open_.empty()) {
      std::uniform_int_distribution<std::size_t> pick(0, open_.size() - 1);
      const std::size_t at = pick(rng);
      const Index i = open_[at];
      open_[at] = open_.back();
      open_.pop_back();
      if (!dead_flag_[i]) return i;
    }
    return std::nullopt;
  }

 private:
  static std::vector<Index> sorted(std::vector<Index> v) {
    std::sort(v.begin(), v.end());
    return v;
  }

  std::vector<char> missing_flag_;
  std::vector<char> dead_flag_;
  std::vector<Index> missing_order_;
  std::vector<Index> open_;
  std::size_t dead_count_ = 0;
};

enum class JoinOutcome { kEncoded, kRepaired, kDecoded, kLost };

inline const char* to_string(JoinOutcome o) {
  switch (o) {
    case JoinOutcome::kEncoded: return "encoded";
    case JoinOutcome::kRepaired: return "repaired";
    case JoinOutcome::kDecoded: return "decoded";
    case JoinOutcome::kLost: return "lost";
  }
  return "unknown";
}

struct GroupJoin {
  GroupSeq group = 0;
  JoinOutcome outcome = JoinOutcome::kEncoded;
  std::uint32_t degree_drawn = 0;
  std::uint64_t blocks = 0;  // coded/intermediate blocks transferred for this group
  std::uint32_t repair_iterations = 0;
  std::uint32_t decode_attempts = 0;
};

struct JoinReport {
  NodeId id = kNoNode;
  std::vector<GroupJoin> groups;
};

template <class P>
struct RepairOutcome {
  std::optional<CodedBlock<P>> block;
  bool fallback_needed = false;
  std::uint64_t blocks = 0;
  std::uint32_t iterations = 0;
};

template <class P>
struct FallbackOutcome {
  std::optional<CodedBlock<P>> block;
  bool group_lost = false;
  std::uint64_t blocks = 0;
  std::uint32_t attempts = 0;
};

/// Reply to an availability or edge query. Both are metadata-only.
struct Response {
  bool answered = false;
  bool positive = false;
  std::vector<Index> neighbors;
};

template <class P>
Response serve_availability(const NodeState<P>& holder, GroupSeq m, Index i) {
  Response r;
  if (!holder.alive) return r;
  r.answered = true;
  const CodedBlock<P>* b = holder.block(m);
  r.positive = b != nullptr && b->is_systematic() && b->neighbors.front() == i;
  return r;
}

template <class P>
Response serve_edge_query(const NodeState<P>& holder, GroupSeq m, Index i) {
  Response r;
  if (!holder.alive) return r;
  r.answered = true;
  const CodedBlock<P>* b = holder.block(m);
  if (b != nullptr && b->contains(i)) {
    r.positive = true;
    r.neighbors = b->neighbors;
  }
  return r;
}

inline std::vector<double> default_epsilon_schedule() {
  std::vector<double> eps;
  for (int j = 0; j <= 11; ++j) eps.push_back(0.03 + 0.02 * j);
  return eps;
}

struct ProtocolConfig {
  std::vector<double> epsilon_schedule = default_epsilon_schedule();
  std::uint64_t block_bytes = 0;  // bytes charged per transferred block
  std::uint64_t claim_delay = 1;  // logical time for a claim to reach every node
  bool check_payloads = true;
};

struct ProtocolCounters {
  std::uint64_t group_joins = 0;
  std::uint64_t encodes = 0;
  std::uint64_t repairs = 0;
  std::uint64_t fallbacks = 0;
  std::uint64_t decode_attempts = 0;
  std::uint64_t groups_lost = 0;
  std::uint64_t claims = 0;
  std::uint64_t leaves = 0;
  std::uint64_t node_joins = 0;
};

/// Alive nodes, their stored coded blocks and the per-group holder registry,
/// plus the maintenance algorithm that keeps groups decodable under churn.
template <class P>
class Network {
 public:
  explicit Network(ProtocolConfig cfg = {}) : cfg_(std::move(cfg)) {}

  const ProtocolConfig& config() const { return cfg_; }
  const ProtocolCounters& counters() const { return counters_; }
  void set_epoch(std::uint64_t e) { epoch_ = e; }
  std::uint64_t epoch() const { return epoch_; }
  void set_log(EventLog* log) { log_ = log; }

  NodeId add_node() {
    const NodeId id = static_cast<NodeId>(nodes_.size());
    NodeState<P> s;
    s.id = id;
    nodes_.push_back(std::move(s));
    alive_pos_.push_back(static_cast<std::uint32_t>(alive_.size()));
    alive_.push_back(id);
    return id;
  }

  void remove_node(NodeId id) {
    NodeState<P>& s = nodes_.at(id);
    if (!s.alive) throw std::logic_error("remove_node: node " + std::to_string(id) + " already gone");
    for (auto& [seq, blk] : s.stored) {
      auto git = groups_.find(seq);
      if (git != groups_.end()) unregister_block(git->second, id, blk);
    }
    s.stored.clear();
    s.alive = false;
    const std::uint32_t pos = alive_pos_[id];
    const NodeId last = alive_.back();
    alive_[pos] = last;
    alive_pos_[last] = pos;
    alive_.pop_back();
    ++counters_.leaves;
    emit(EventKind::kLeave, id, 0, 0);
  }

  std::size_t alive_count() const { return alive_.size(); }
  const std::vector<NodeId>& alive() const { return alive_; }
  const NodeState<P>& node(NodeId id) const { return nodes_.at(id); }
  std::size_t node_count() const { return nodes_.size(); }

  bool has_group(GroupSeq m) const { return groups_.count(m) != 0; }
  const GroupState<P>& group(GroupSeq m) const { return groups_.at(m); }
  const std::map<GroupSeq, GroupState<P>>& groups() const { return groups_; }

  /// Registers group m with no blocks stored yet.
  GroupState<P>& register_group(GroupSeq m, std::uint32_t k, std::uint32_t n,
                                std::shared_ptr<const DegreeDistribution> omega,
                                std::shared_ptr<const GeneratorMatrix> generator, std::vector<P> truth) {
    if (m == 0) throw std::invalid_argument("register_group: sequence numbers start at 1");
    if (k == 0 || k > n) throw std::invalid_argument("register_group: need 1 <= k <= n");
    if (!omega || omega->support() > n) throw std::invalid_argument("register_group: degree law exceeds n");
    if (!truth.empty() && truth.size() != n) throw std::invalid_argument("register_group: truth must hold n blocks");
    if (groups_.count(m) != 0) drop_group(m);
    GroupState<P> g;
    g.seq = m;
    g.k = k;
    g.n = n;
    g.omega = std::move(omega);
    g.generator = std::move(generator);
    g.truth = std::move(truth);
    g.claimant.assign(n, kNoNode);
    g.edges.assign(n, {});
    g.nodes_at_encoding = alive_.size();
    g.encoded_epoch = epoch_;
    return groups_.emplace(m, std::move(g)).first->second;
  }

  /// Every node forgets its block of group m.
  void drop_group(GroupSeq m) {
    auto it = groups_.find(m);
    if (it == groups_.end()) return;
    for (NodeId h : it->second.holders) nodes_[h].stored.erase(m);
    groups_.erase(it);
  }

  /// Stores a block for an alive node and indexes it in the registry.
  void store(NodeId id, GroupSeq m, CodedBlock<P> blk) {
    NodeState<P>& s = nodes_.at(id);
    if (!s.alive) throw std::logic_error("store: node is not alive");
    GroupState<P>& g = groups_.at(m);
    if (s.stored.count(m) != 0) throw std::logic_error("store: node already holds a block of this group");
    if (blk.neighbors.empty()) throw std::invalid_argument("store: empty neighbour set");
    for (Index i : blk.neighbors)
      if (i >= g.n) throw std::out_of_range("store: neighbour index out of range");
    if (blk.is_systematic() && g.claimant[blk.neighbors.front()] != kNoNode) {
      throw std::logic_error("store: intermediate " + std::to_string(blk.neighbors.front()) + " already claimed");
    }
    if constexpr (kCarriesSymbols<P>) {
      if (cfg_.check_payloads && !g.truth.empty()) {
        P expect = g.truth[blk.neighbors.front()];
        for (std::size_t t = 1; t < blk.neighbors.size(); ++t) xor_into(expect, g.truth[blk.neighbors[t]]);
        if (!(expect == blk.payload)) throw std::logic_error("store: payload is not the XOR of its neighbours");
      }
    }
    blk.group = m;
    if (g.holder_pos.size() <= id) g.holder_pos.resize(nodes_.size(), 0);
    g.holder_pos[id] = static_cast<std::uint32_t>(g.holders.size());
    g.holders.push_back(id);
    for (Index i : blk.neighbors) g.edges[i].push_back(id);
    if (blk.is_systematic()) g.claimant[blk.neighbors.front()] = id;
    s.stored.emplace(m, std::move(blk));
  }

  /// Claim race over all alive nodes right after group m is confirmed. Each
  /// node starts at a random time, takes the lowest index it has not yet
  /// seen claimed and broadcasts; a claim becomes visible claim_delay later.
  /// A node that finds an earlier claim on its index restarts once it sees
  /// it. When every index is visibly claimed the node stores a parity block.
  EncodeReport decentralized_encode(GroupSeq m, Rng& rng) {
    GroupState<P>& g = groups_.at(m);
    EncodeReport rep;
    std::vector<NodeId> nodes(alive_.begin(), alive_.end());
    std::sort(nodes.begin(), nodes.end());
    g.nodes_at_encoding = nodes.size();
    g.encoded_epoch = epoch_;
    if (nodes.size() < g.n) rep.deficit = g.n - nodes.size();

    using Attempt = std::pair<std::uint64_t, NodeId>;
    std::priority_queue<Attempt, std::vector<Attempt>, std::greater<>> queue;
    const std::uint64_t span = std::max<std::uint64_t>(1, 4 * nodes.size());
    std::uniform_int_distribution<std::uint64_t> jitter(0, span - 1);
    for (NodeId id : nodes) queue.emplace(jitter(rng), id);

    const std::uint64_t delay = cfg_.claim_delay;
    std::vector<std::optional<ClaimMessage>> winner(g.n);
    std::vector<char> visible(g.n, 0);
    std::deque<ClaimMessage> in_flight;  // winning claims by timestamp
    Index lowest = 0;

    while (!queue.empty()) {
      const auto [t, id] = queue.top();
      queue.pop();
      while (!in_flight.empty() && in_flight.front().timestamp + delay <= t) {
        visible[in_flight.front().index] = 1;
        in_flight.pop_front();
      }
      while (lowest < g.n && visible[lowest]) ++lowest;
      if (lowest >= g.n) {
        std::vector<Index> nbrs = draw_neighbors(*g.omega, g.n, rng);
        store(id, m, combine<P>(std::move(nbrs), truth_lookup(g), m));
        ++rep.parity;
        continue;
      }
      const ClaimMessage mine{m, lowest, id, t};
      if (winner[lowest]) {
        // The earlier claim has not reached this node yet.
        ++rep.conflicts;
        queue.emplace(winner[lowest]->timestamp + delay, id);
        continue;
      }
      winner[lowest] = mine;
      in_flight.push_back(mine);
      store(id, m, combine<P>({lowest}, truth_lookup(g), m));
      ++rep.systematic;
      ++counters_.claims;
      emit(EventKind::kClaim, id, m, 0);
    }
    return rep;
  }

  /// A new node copies the pool (accounted by the caller) and then stores
  /// one block for every encoded group.
  JoinReport join_node(Rng& rng) {
    JoinReport rep;
    rep.id = add_node();
    ++counters_.node_joins;
    std::vector<GroupSeq> seqs;
    for (const auto& [m, g] : groups_) seqs.push_back(m);
    for (GroupSeq m : seqs) rep.groups.push_back(join_group(rep.id, m, rng));
    return rep;
  }

  GroupJoin join_group(NodeId id, GroupSeq m, Rng& rng) {
    GroupState<P>& g = groups_.at(m);
    GroupJoin out;
    out.group = m;
    ++counters_.group_joins;
    if (g.lost) {
      out.outcome = JoinOutcome::kLost;
      emit(EventKind::kJoin, id, m, 0);
      return out;
    }
    std::vector<Index> nbrs = draw_neighbors(*g.omega, g.n, rng);
    out.degree_drawn = static_cast<std::uint32_t>(nbrs.size());
    RepairSession session(m, g.n);
    for (Index i : nbrs) {
      const bool phi = g.available(i);
      session.note(i, phi);
      if (!phi) session.add_missing(i);
    }
    if (session.missing_count() == 0) {
      out.blocks = nbrs.size();
      store(id, m, combine<P>(std::move(nbrs), claimant_lookup(g), m));
      out.outcome = JoinOutcome::kEncoded;
      ++counters_.encodes;
      emit(EventKind::kJoin, id, m, out.blocks);
      return out;
    }

    RepairOutcome<P> r = repair_intermediate(id, session, rng);
    out.blocks += r.blocks;
    out.repair_iterations = r.iterations;
    if (r.block) {
      store(id, m, std::move(*r.block));
      out.outcome = JoinOutcome::kRepaired;
      ++counters_.repairs;
      ++counters_.claims;
      emit(EventKind::kRepair, id, m, r.blocks);
      emit(EventKind::kClaim, id, m, 0);
      emit(EventKind::kJoin, id, m, out.blocks);
      return out;
    }

    FallbackOutcome<P> f = group_decode_fallback(id, session, rng);
    out.blocks += f.blocks;
    out.decode_attempts = f.attempts;
    ++counters_.fallbacks;
    emit(EventKind::kFallback, id, m, f.blocks);
    if (f.block) {
      store(id, m, std::move(*f.block));
      out.outcome = JoinOutcome::kDecoded;
      ++counters_.claims;
      emit(EventKind::kClaim, id, m, 0);
    } else {
      out.outcome = JoinOutcome::kLost;
    }
    emit(EventKind::kJoin, id, m, out.blocks);
    return out;
  }

  /// One repair session: pick a random unexplored missing index, ask its edge
  /// holders for their neighbour sets and repair through the cheapest edge
  /// whose other neighbours are all available. Otherwise widen R with the
  /// missing neighbours seen and mark the index a dead end.
  RepairOutcome<P> repair_intermediate(NodeId requester, RepairSession& session, Rng& rng) {
    GroupState<P>& g = groups_.at(session.group);
    RepairOutcome<P> out;
    if (session.missing_count() == 0) throw std::invalid_argument("repair_intermediate: nothing missing");
    while (true) {
      const std::optional<Index> next = session.take_open(rng);
      if (!next) {
        out.fallback_needed = true;
        return out;
      }
      ++out.iterations;
      const Index i = *next;

      std::vector<NodeId>& found = session.discovered_edges[i];
      found.clear();
      for (NodeId x : g.edges[i])
        if (x != requester) found.push_back(x);
      // Cheapest edges first; the first fully available one is used.
      std::sort(found.begin(), found.end(), [&](NodeId a, NodeId b) {
        const auto da = nodes_[a].block(session.group)->degree();
        const auto db = nodes_[b].block(session.group)->degree();
        return da != db ? da < db : a < b;
      });

      const CodedBlock<P>* best = nullptr;
      for (NodeId x : found) {
        const CodedBlock<P>* e = nodes_[x].block(session.group);
        bool ok = true;
        for (Index h : e->neighbors) {
          if (h == i) continue;
          const bool phi = g.available(h);
          session.note(h, phi);
          if (!phi) {
            ok = false;
            break;
          }
        }
        if (ok) {
          best = e;
          break;
        }
      }
      if (best != nullptr) {
        RepairResult<P> rr = repair_from_edge<P>(i, *best, claimant_lookup(g));
        out.blocks += best->degree();
        CodedBlock<P> blk;
        blk.payload = std::move(*rr.block);
        blk.neighbors = {i};
        blk.group = session.group;
        out.block = std::move(blk);
        return out;
      }
      session.mark_dead_end(i);
      for (NodeId x : found) {
        for (Index h : nodes_[x].block(session.group)->neighbors) {
          if (h == i || g.available(h)) continue;
          session.note(h, false);
          session.add_missing(h);
        }
      }
    }
  }

  /// Collects ceil((1+eps) k) distinct coded blocks for each eps of the
  /// schedule until a raptor decode succeeds. When the schedule runs out a
  /// last attempt uses every holder. On success the node stores one of the
  /// missing intermediates of the session.
  FallbackOutcome<P> group_decode_fallback(NodeId requester, const RepairSession& session, Rng& rng) {
    GroupState<P>& g = groups_.at(session.group);
    FallbackOutcome<P> out;
    std::vector<NodeId> pool;
    for (NodeId h : g.holders)
      if (h != requester) pool.push_back(h);
    if (pool.size() < g.k) {
      mark_lost(g);
      out.group_lost = true;
      return out;
    }
    auto attempt = [&](const std::vector<NodeId>& chosen) -> std::optional<RaptorResult<P>> {
      std::vector<const CodedBlock<P>*> blocks;
      blocks.reserve(chosen.size());
      for (NodeId x : chosen) blocks.push_back(nodes_[x].block(session.group));
      out.blocks += chosen.size();
      ++out.attempts;
      ++counters_.decode_attempts;
      RaptorResult<P> r = raptor_decode<P>(std::span<const CodedBlock<P>* const>(blocks), g.generator.get(),
                                           RaptorShape{g.k, g.n});
      if (r.success) return r;
      return std::nullopt;
    };

    std::optional<RaptorResult<P>> decoded;
    bool exhausted = false;
    for (double eps : cfg_.epsilon_schedule) {
      std::size_t c = static_cast<std::size_t>(std::ceil((1.0 + eps) * g.k - 1e-9));
      if (c >= pool.size()) {
        c = pool.size();
        exhausted = true;
      }
      std::vector<NodeId> chosen;
      chosen.reserve(c);
      for (Index pos : draw_distinct(static_cast<std::uint32_t>(pool.size()), static_cast<std::uint32_t>(c), rng))
        chosen.push_back(pool[pos]);
      decoded = attempt(chosen);
      if (decoded || exhausted) break;
    }
    if (!decoded && !exhausted) decoded = attempt(pool);
    if (!decoded) {
      mark_lost(g);
      out.group_lost = true;
      return out;
    }

    std::vector<Index> targets;
    for (Index i : session.missing())
      if (!g.available(i)) targets.push_back(i);
    if (targets.empty()) {
      for (Index i = 0; i < g.n; ++i)
        if (!g.available(i)) targets.push_back(i);
    }
    if (targets.empty()) throw std::logic_error("group_decode_fallback: no missing intermediate to store");
    std::uniform_int_distribution<std::size_t> pick(0, targets.size() - 1);
    const Index i = targets[pick(rng)];
    CodedBlock<P> blk;
    blk.neighbors = {i};
    blk.group = session.group;
    if constexpr (kCarriesSymbols<P>) {
      const std::vector<BlockVector>& b = decoded->originals;
      blk.payload = i < g.k ? b[i] : encode_parity_column(b, *g.generator, i - g.k);
    }
    out.block = std::move(blk);
    return out;
  }

  /// l ~ Poisson(lambda_leave) uniformly chosen nodes leave, then
  /// e ~ Poisson(lambda_join) nodes join through the maintenance algorithm.
  std::pair<std::size_t, std::size_t> churn_step(const ChurnModel& churn, Rng& rng,
                                                 std::vector<JoinReport>* joins = nullptr) {
    const std::uint64_t l_draw = poisson_draw(rng, churn.lambda_leave);
    const std::uint64_t e_draw = poisson_draw(rng, churn.lambda_join);
    const std::size_t l = static_cast<std::size_t>(std::min<std::uint64_t>(l_draw, alive_.size()));
    for (std::size_t t = 0; t < l; ++t) {
      std::uniform_int_distribution<std::size_t> pick(0, alive_.size() - 1);
      remove_node(alive_[pick(rng)]);
    }
    for (std::uint64_t t = 0; t < e_draw; ++t) {
      JoinReport r = join_node(rng);
      if (joins != nullptr) joins->push_back(std::move(r));
    }
    return {l, static_cast<std::size_t>(e_draw)};
  }

  /// Whether a node collecting every alive holder's block can decode group m.
  bool probe_decode(GroupSeq m) const {
    const GroupState<P>& g = groups_.at(m);
    if (g.lost || g.holders.size() < g.k) return false;
    std::vector<const CodedBlock<P>*> blocks;
    blocks.reserve(g.holders.size());
    for (NodeId h : g.holders) blocks.push_back(nodes_[h].block(m));
    return raptor_decode<P>(std::span<const CodedBlock<P>* const>(blocks), g.generator.get(), RaptorShape{g.k, g.n})
        .success;
  }

 private:
  auto truth_lookup(const GroupState<P>& g) const {
    return [&g](Index i) -> const P* { return i < g.truth.size() ? &g.truth[i] : nullptr; };
  }

  auto claimant_lookup(const GroupState<P>& g) const {
    return [this, &g](Index i) -> const P* {
      const NodeId c = g.claimant[i];
      return c == kNoNode ? nullptr : &nodes_[c].block(g.seq)->payload;
    };
  }

  void unregister_block(GroupState<P>& g, NodeId id, const CodedBlock<P>& blk) {
    const std::uint32_t pos = g.holder_pos[id];
    const NodeId last = g.holders.back();
    g.holders[pos] = last;
    g.holder_pos[last] = pos;
    g.holders.pop_back();
    for (Index i : blk.neighbors) {
      std::vector<NodeId>& e = g.edges[i];
      auto it = std::find(e.begin(), e.end(), id);
      if (it != e.end()) {
        *it = e.back();
        e.pop_back();
      }
    }
    if (blk.is_systematic() && g.claimant[blk.neighbors.front()] == id) g.claimant[blk.neighbors.front()] = kNoNode;
  }

  void mark_lost(GroupState<P>& g) {
    if (!g.lost) {
      g.lost = true;
      ++counters_.groups_lost;
    }
  }

  void emit(EventKind kind, NodeId node, GroupSeq m, std::uint64_t blocks) {
    if (log_ == nullptr) return;
    log_->record(Event{epoch_, kind, node, m, blocks, blocks * cfg_.block_bytes});
  }

  ProtocolConfig cfg_;
  ProtocolCounters counters_;
  std::vector<NodeState<P>> nodes_;
  std::vector<NodeId> alive_;
  std::vector<std::uint32_t> alive_pos_;
  std::map<GroupSeq, GroupState<P>> groups_;
  EventLog* log_ = nullptr;
  std::uint64_t epoch_ = 0;
};

}  // namespace rcb
