#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "rcb/block_vector.hpp"
#include "rcb/digest.hpp"
#include "rcb/lt_code.hpp"
#include "rcb/precode.hpp"

namespace rcb {

using Height = std::uint64_t;

struct BlockHeader {
  Height height = 0;
  Digest prev_hash{};
  Digest merkle_root{};
  std::uint64_t timestamp = 0;  // epoch index

  friend bool operator==(const BlockHeader&, const BlockHeader&) = default;
};

namespace detail {
inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
}
inline void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
}
inline void put_digest(std::vector<std::uint8_t>& out, const Digest& d) { out.insert(out.end(), d.begin(), d.end()); }
}  // namespace detail

inline std::vector<std::uint8_t> serialize(const BlockHeader& h) {
  std::vector<std::uint8_t> out;
  out.reserve(80);
  detail::put_u64(out, h.height);
  detail::put_digest(out, h.prev_hash);
  detail::put_digest(out, h.merkle_root);
  detail::put_u64(out, h.timestamp);
  return out;
}

inline Digest header_hash(const BlockHeader& h) { return sha256(serialize(h)); }

/// Header of an enhanced block: a regular header plus the coding parameters
/// of one group (sequence number, member heights, pre-code generator and the
/// digests of the non-systematic intermediates).
struct EnhancedBlockHeader {
  BlockHeader base;
  GroupSeq group_seq = 0;
  std::vector<Height> group_indices;  // sorted
  std::shared_ptr<const GeneratorMatrix> generator;
  std::vector<Digest> nonsys_hashes;  // u_{k+1} .. u_n

  std::uint32_t k() const { return static_cast<std::uint32_t>(group_indices.size()); }
  std::uint32_t n() const { return generator ? generator->n : k(); }
};

inline std::vector<std::uint8_t> hash_preimage(const EnhancedBlockHeader& h) {
  std::vector<std::uint8_t> out = serialize(h.base);
  detail::put_u32(out, h.group_seq);
  for (Height w : h.group_indices) detail::put_u32(out, static_cast<std::uint32_t>(w));
  if (h.generator) {
    const std::vector<std::uint8_t> g = serialize(*h.generator);
    out.insert(out.end(), g.begin(), g.end());
  }
  for (const Digest& d : h.nonsys_hashes) detail::put_digest(out, d);
  return out;
}

inline Digest header_hash(const EnhancedBlockHeader& h) { return sha256(hash_preimage(h)); }

/// Confirmed-but-unencoded block heights held by a node.
class BlockPool {
 public:
  BlockPool() = default;
  explicit BlockPool(std::set<Height> heights) : heights_(std::move(heights)) {}

  std::size_t size() const { return heights_.size(); }
  bool empty() const { return heights_.empty(); }
  bool contains(Height h) const { return heights_.count(h) != 0; }
  void insert(Height h) { heights_.insert(h); }
  const std::set<Height>& heights() const { return heights_; }

  /// The `count` oldest heights.
  std::vector<Height> oldest(std::size_t count) const {
    std::vector<Height> out;
    out.reserve(count);
    for (auto it = heights_.begin(); it != heights_.end() && out.size() < count; ++it) out.push_back(*it);
    return out;
  }

  friend bool operator==(const BlockPool&, const BlockPool&) = default;

 private:
  std::set<Height> heights_;
};

struct ChainConfig {
  std::uint32_t alpha = 6;      // confirmation depth
  std::uint32_t beta = 144;     // blocks per epoch
  double precode_rate = 0.8;
  double reencode_factor = 1.0;

  void validate() const {
    if (alpha < 1) throw std::invalid_argument("chain: alpha must be >= 1");
    if (beta < 1) throw std::invalid_argument("chain: beta must be >= 1");
    if (!(precode_rate > 0.0 && precode_rate <= 1.0)) throw std::invalid_argument("chain: precode_rate must be in (0, 1]");
    if (!(reencode_factor > 0.0 && reencode_factor <= 1.0))
      throw std::invalid_argument("chain: reencode_factor must be in (0, 1]");
  }
};

/// Deterministic synthetic block data; block contents are opaque to the
/// protocol, so any reproducible filler will do.
class BlockStore {
 public:
  BlockStore(std::uint64_t seed, std::size_t symbols, unsigned field_bits)
      : seed_(seed), symbols_(symbols), field_bits_(field_bits) {}

  std::size_t symbols() const { return symbols_; }
  unsigned field_bits() const { return field_bits_; }

  BlockVector block(Height h) const {
    BlockVector b(symbols_);
    std::uint64_t state = seed_ ^ (h * 0x9E3779B97F4A7C15ull);
    const std::uint32_t mask = (field_bits_ >= 16) ? 0xFFFFu : ((1u << field_bits_) - 1u);
    for (std::size_t i = 0; i < symbols_; ++i) b[i] = static_cast<FieldSymbol>(splitmix(state) & mask);
    return b;
  }

  Digest merkle_root(Height h) const { return sha256(serialize(block(h), field_bits_)); }

 private:
  static std::uint64_t splitmix(std::uint64_t& x) {
    std::uint64_t z = (x += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  std::uint64_t seed_;
  std::size_t symbols_;
  unsigned field_bits_;
};

class PoolNotReady : public std::runtime_error {
 public:
  PoolNotReady(std::size_t have, std::size_t need)
      : std::runtime_error("mining: pool holds " + std::to_string(have) + " blocks, group needs " + std::to_string(need)) {}
};

class PoolConsistencyError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct MinedGroup {
  EnhancedBlockHeader header;
  std::vector<BlockVector> intermediates;  // u_1 .. u_n
};

inline std::vector<Digest> hash_intermediates(const std::vector<BlockVector>& u, std::uint32_t k, unsigned field_bits) {
  std::vector<Digest> out;
  out.reserve(u.size() - k);
  for (std::size_t i = k; i < u.size(); ++i) out.push_back(sha256(serialize(u[i], field_bits)));
  return out;
}

/// Assembles the next enhanced block: takes the k_next oldest pool heights,
/// builds the generator, pre-codes the group and hashes the parity
/// intermediates. The nonce search is not modelled.
inline MinedGroup mine_enhanced_block(const BlockPool& pool, std::uint32_t k_next, const BlockHeader& chain_tip,
                                      const CodecConfig& codec, const BlockStore& store, GroupSeq group_seq,
                                      std::uint64_t timestamp) {
  if (k_next == 0) throw std::invalid_argument("mining: group size must be >= 1");
  if (pool.size() < k_next) throw PoolNotReady(pool.size(), k_next);
  MinedGroup out;
  EnhancedBlockHeader& h = out.header;
  h.base.height = chain_tip.height + 1;
  h.base.prev_hash = header_hash(chain_tip);
  h.base.merkle_root = store.merkle_root(h.base.height);
  h.base.timestamp = timestamp;
  h.group_seq = group_seq;
  h.group_indices = pool.oldest(k_next);
  const std::uint32_t n = codec.code_length(k_next);
  h.generator = std::make_shared<const GeneratorMatrix>(build_systematic_generator(k_next, n, codec.field_bits));

  std::vector<BlockVector> originals;
  originals.reserve(k_next);
  for (Height w : h.group_indices) originals.push_back(store.block(w));
  out.intermediates = precode_encode(originals, *h.generator);
  h.nonsys_hashes = hash_intermediates(out.intermediates, k_next, codec.field_bits);
  return out;
}

enum class RejectReason {
  kNone,
  kMalformed,
  kGeneratorMismatch,
  kPoolTooSmall,
  kUnknownGroupMember,
  kHashMismatch,
};

inline const char* to_string(RejectReason r) {
  switch (r) {
    case RejectReason::kNone: return "none";
    case RejectReason::kMalformed: return "malformed";
    case RejectReason::kGeneratorMismatch: return "generator-mismatch";
    case RejectReason::kPoolTooSmall: return "pool-too-small";
    case RejectReason::kUnknownGroupMember: return "unknown-group-member";
    case RejectReason::kHashMismatch: return "hash-mismatch";
  }
  return "unknown";
}

struct Verdict {
  bool accepted = false;
  RejectReason reason = RejectReason::kNone;
  std::string detail;

  static Verdict accept() { return {true, RejectReason::kNone, {}}; }
  static Verdict reject(RejectReason r, std::string why) { return {false, r, std::move(why)}; }
};

/// Checks, in order: structure, pool size >= k, group within the local pool,
/// and the recomputed parity-intermediate digests. Reports the first failure.
inline Verdict verify_enhanced_block(const EnhancedBlockHeader& c, const BlockPool& local_pool, const CodecConfig& codec,
                                     const BlockStore& store) {
  const std::uint32_t k = c.k();
  if (k == 0) return Verdict::reject(RejectReason::kMalformed, "empty group");
  if (!std::is_sorted(c.group_indices.begin(), c.group_indices.end()) ||
      std::adjacent_find(c.group_indices.begin(), c.group_indices.end()) != c.group_indices.end()) {
    return Verdict::reject(RejectReason::kMalformed, "group indices not strictly increasing");
  }
  if (c.group_indices.back() >= c.base.height) {
    return Verdict::reject(RejectReason::kMalformed, "group member not older than the enhanced block");
  }
  if (!c.generator) return Verdict::reject(RejectReason::kMalformed, "missing generator");
  const GeneratorMatrix& g = *c.generator;
  if (g.k != k || g.n != codec.code_length(k) || g.field_bits != codec.field_bits ||
      g.parity.size() != static_cast<std::size_t>(k) * (g.n - k)) {
    return Verdict::reject(RejectReason::kMalformed, "generator shape does not match k/n/p");
  }
  if (c.nonsys_hashes.size() != g.n - k) {
    return Verdict::reject(RejectReason::kMalformed, "parity hash count differs from n - k");
  }
  if (g != build_systematic_generator(k, g.n, codec.field_bits)) {
    return Verdict::reject(RejectReason::kGeneratorMismatch, "generator differs from the canonical construction");
  }
  if (local_pool.size() < k) {
    return Verdict::reject(RejectReason::kPoolTooSmall,
                           "pool " + std::to_string(local_pool.size()) + " < k " + std::to_string(k));
  }
  for (Height w : c.group_indices) {
    if (!local_pool.contains(w)) {
      return Verdict::reject(RejectReason::kUnknownGroupMember, "height " + std::to_string(w) + " not in pool");
    }
  }
  std::vector<BlockVector> originals;
  originals.reserve(k);
  for (Height w : c.group_indices) originals.push_back(store.block(w));
  for (std::uint32_t j = 0; j < g.parity_columns(); ++j) {
    const BlockVector u = encode_parity_column(originals, g, j);
    if (sha256(serialize(u, codec.field_bits)) != c.nonsys_hashes[j]) {
      return Verdict::reject(RejectReason::kHashMismatch, "parity intermediate " + std::to_string(k + j));
    }
  }
  return Verdict::accept();
}

/// P <- P \ G
inline BlockPool update_pool(const BlockPool& pool, const std::vector<Height>& confirmed_group) {
  std::set<Height> out = pool.heights();
  for (Height w : confirmed_group) {
    if (out.erase(w) == 0) {
      throw PoolConsistencyError("update_pool: height " + std::to_string(w) + " not in pool");
    }
  }
  return BlockPool(std::move(out));
}

/// Buried at least alpha deep. Encoding starts exactly at equality.
inline bool confirmation_check(const EnhancedBlockHeader& e, Height tip_height, const ChainConfig& cfg) {
  return tip_height >= e.base.height && tip_height - e.base.height >= cfg.alpha;
}

/// A node whose pool can fill the next group only accepts enhanced blocks.
inline bool accepts_block(std::size_t pool_size, std::uint32_t k_next, bool is_enhanced) {
  return is_enhanced || pool_size < k_next;
}

enum class RemineAction { kKeep, kReencode };

inline RemineAction remine_decision(std::size_t current_nodes, std::size_t nodes_at_encoding, const ChainConfig& cfg) {
  return static_cast<double>(current_nodes) < cfg.reencode_factor * static_cast<double>(nodes_at_encoding)
             ? RemineAction::kReencode
             : RemineAction::kKeep;
}

}  // namespace rcb
