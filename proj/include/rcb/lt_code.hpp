#pragma once

#include <algorithm>
#include <concepts>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "rcb/block_vector.hpp"
#include "rcb/degree_distribution.hpp"
#include "rcb/precode.hpp"

namespace rcb {

using GroupSeq = std::uint32_t;

/// A coded block v_j: XOR of the intermediates named in `neighbors`.
template <class P>
struct CodedBlock {
  P payload{};
  std::vector<Index> neighbors;  // sorted, distinct
  GroupSeq group = 0;

  std::uint32_t degree() const { return static_cast<std::uint32_t>(neighbors.size()); }
  bool is_systematic() const { return neighbors.size() == 1; }
  bool contains(Index i) const { return std::binary_search(neighbors.begin(), neighbors.end(), i); }
};

/// Thrown by lt_encode when a drawn neighbour has no intermediate supplied.
class MissingIntermediates : public std::runtime_error {
 public:
  explicit MissingIntermediates(std::vector<Index> missing)
      : std::runtime_error("lt_encode: " + std::to_string(missing.size()) + " neighbour intermediates unavailable"),
        indices(std::move(missing)) {}
  std::vector<Index> indices;
};

/// d distinct indices drawn uniformly from 0..n-1 by a partial Fisher-Yates
/// shuffle; displaced slots are tracked sparsely so a draw costs O(d).
template <class Rng>
std::vector<Index> draw_distinct(std::uint32_t n, std::uint32_t d, Rng& rng) {
  if (d > n) throw std::invalid_argument("draw_distinct: d exceeds n");
  std::vector<Index> out(d);
  std::vector<std::pair<Index, Index>> moved;  // slot -> value after swaps
  auto value_at = [&moved](Index slot) {
    for (const auto& [s, v] : moved)
      if (s == slot) return v;
    return slot;
  };
  auto set_at = [&moved](Index slot, Index v) {
    for (auto& [s, old] : moved) {
      if (s == slot) {
        old = v;
        return;
      }
    }
    moved.emplace_back(slot, v);
  };
  if (d > 64) {
    std::vector<Index> perm(n);
    for (Index i = 0; i < n; ++i) perm[i] = i;
    for (std::uint32_t t = 0; t < d; ++t) {
      std::uniform_int_distribution<Index> pick(t, n - 1);
      std::swap(perm[t], perm[pick(rng)]);
      out[t] = perm[t];
    }
  } else {
    for (std::uint32_t t = 0; t < d; ++t) {
      std::uniform_int_distribution<Index> pick(t, n - 1);
      const Index j = pick(rng);
      const Index vj = value_at(j);
      const Index vt = value_at(t);
      set_at(j, vt);
      set_at(t, vj);
      out[t] = vj;
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// Degree from omega, then that many distinct neighbours out of n.
template <class Rng>
std::vector<Index> draw_neighbors(const DegreeDistribution& omega, std::uint32_t n, Rng& rng) {
  const std::uint32_t d = std::min(omega.sample(rng), n);
  return draw_distinct(n, d, rng);
}

/// XOR of the given intermediates; `lookup(i)` returns a pointer or nullptr.
template <class P, class Lookup>
CodedBlock<P> combine(std::vector<Index> neighbors, Lookup&& lookup, GroupSeq group = 0) {
  std::vector<Index> missing;
  const P* first = nullptr;
  for (Index i : neighbors) {
    const P* u = lookup(i);
    if (u == nullptr) {
      missing.push_back(i);
    } else if (first == nullptr) {
      first = u;
    }
  }
  if (!missing.empty()) throw MissingIntermediates(std::move(missing));
  CodedBlock<P> out;
  out.group = group;
  if (first != nullptr) {
    out.payload = *first;
    bool skipped = false;
    for (Index i : neighbors) {
      const P* u = lookup(i);
      if (u == first && !skipped) {
        skipped = true;
        continue;
      }
      xor_into(out.payload, *u);
    }
  }
  out.neighbors = std::move(neighbors);
  return out;
}

/// LT encoding of one coded block from a (possibly partial) map of
/// intermediates with n positions in total.
template <class P, class Rng>
CodedBlock<P> lt_encode(const std::map<Index, P>& intermediates, std::uint32_t n, const DegreeDistribution& omega,
                        Rng& rng, GroupSeq group = 0) {
  std::vector<Index> nbrs = draw_neighbors(omega, n, rng);
  return combine<P>(std::move(nbrs), [&](Index i) -> const P* {
    auto it = intermediates.find(i);
    return it == intermediates.end() ? nullptr : &it->second;
  }, group);
}

template <class P>
struct PeelResult {
  std::uint32_t n = 0;
  std::vector<std::optional<P>> decoded;  // by index
  std::vector<Index> order;               // indices in the order they were resolved
  std::vector<Index> undecoded;

  std::size_t recovered() const { return order.size(); }
  bool complete() const { return undecoded.empty(); }
};

/// Peeling decoder. Degree-one coded blocks resolve their remaining neighbour,
/// which is then removed from every other block that contains it. Runs until
/// no degree-one block is left or all n intermediates are known. Residual
/// payloads are computed lazily, only for blocks that resolve an index.
template <class P>
PeelResult<P> peel_decode(std::span<const CodedBlock<P>* const> coded, std::uint32_t n) {
  const std::size_t m = coded.size();
  std::vector<std::uint32_t> deg(m);
  std::vector<std::uint64_t> residual_sum(m, 0);
  std::vector<std::uint32_t> offsets(n + 1, 0);
  for (std::size_t c = 0; c < m; ++c) {
    deg[c] = coded[c]->degree();
    for (Index i : coded[c]->neighbors) {
      if (i >= n) throw std::out_of_range("peel_decode: neighbour index out of range");
      residual_sum[c] += i;
      ++offsets[i + 1];
    }
  }
  for (std::uint32_t i = 0; i < n; ++i) offsets[i + 1] += offsets[i];
  std::vector<std::uint32_t> edges(offsets[n]);
  {
    std::vector<std::uint32_t> fill(offsets.begin(), offsets.end() - 1);
    for (std::size_t c = 0; c < m; ++c)
      for (Index i : coded[c]->neighbors) edges[fill[i]++] = static_cast<std::uint32_t>(c);
  }

  PeelResult<P> result;
  result.n = n;
  result.decoded.resize(n);
  std::vector<char> known(n, 0);
  std::vector<std::uint32_t> resolver(n, 0);
  std::deque<std::uint32_t> ripple;
  for (std::size_t c = 0; c < m; ++c)
    if (deg[c] == 1) ripple.push_back(static_cast<std::uint32_t>(c));

  while (!ripple.empty() && result.order.size() < n) {
    const std::uint32_t c = ripple.front();
    ripple.pop_front();
    if (deg[c] != 1) continue;
    const Index i = static_cast<Index>(residual_sum[c]);
    known[i] = 1;
    resolver[i] = c;
    result.order.push_back(i);
    for (std::uint32_t e = offsets[i]; e < offsets[i + 1]; ++e) {
      const std::uint32_t other = edges[e];
      --deg[other];
      residual_sum[other] -= i;
      if (deg[other] == 1) ripple.push_back(other);
    }
  }

  // Every other neighbour of a resolver was known before it resolved.
  for (Index i : result.order) {
    const CodedBlock<P>& blk = *coded[resolver[i]];
    P value = blk.payload;
    for (Index h : blk.neighbors) {
      if (h != i) xor_into(value, *result.decoded[h]);
    }
    result.decoded[i] = std::move(value);
  }
  for (Index i = 0; i < n; ++i)
    if (!known[i]) result.undecoded.push_back(i);
  return result;
}

template <class P>
PeelResult<P> peel_decode(const std::vector<CodedBlock<P>>& coded, std::uint32_t n) {
  std::vector<const CodedBlock<P>*> ptrs;
  ptrs.reserve(coded.size());
  for (const auto& c : coded) ptrs.push_back(&c);
  return peel_decode<P>(std::span<const CodedBlock<P>* const>(ptrs), n);
}

template <class P>
struct RepairResult {
  std::optional<P> block;
  std::vector<Index> missing;  // other neighbours of the edge that were absent

  bool ok() const { return block.has_value(); }
};

/// u_target = v_edge XOR the edge's other neighbours.
template <class P, class Lookup>
  requires std::invocable<Lookup&, Index>
RepairResult<P> repair_from_edge(Index target, const CodedBlock<P>& edge, Lookup&& lookup) {
  if (!edge.contains(target)) throw std::invalid_argument("repair_from_edge: target is not a neighbour of the edge");
  RepairResult<P> out;
  for (Index h : edge.neighbors) {
    if (h != target && lookup(h) == nullptr) out.missing.push_back(h);
  }
  if (!out.missing.empty()) return out;
  P value = edge.payload;
  for (Index h : edge.neighbors) {
    if (h != target) xor_into(value, *lookup(h));
  }
  out.block = std::move(value);
  return out;
}

template <class P>
RepairResult<P> repair_from_edge(Index target, const CodedBlock<P>& edge, const std::map<Index, P>& others) {
  return repair_from_edge<P>(target, edge, [&](Index h) -> const P* {
    auto it = others.find(h);
    return it == others.end() ? nullptr : &it->second;
  });
}

struct RaptorShape {
  std::uint32_t k = 0;
  std::uint32_t n = 0;
};

template <class P>
struct RaptorResult {
  bool success = false;
  std::size_t recovered_intermediates = 0;
  std::vector<P> originals;  // k entries on success (BlockVector payloads only)
};

/// LT peeling to intermediates, then pre-code erasure decoding from any k of
/// them. With MetadataOnly payloads only the success verdict is computed; the
/// MDS property makes it exact.
template <class P>
RaptorResult<P> raptor_decode(std::span<const CodedBlock<P>* const> coded, const GeneratorMatrix* g, RaptorShape shape) {
  RaptorResult<P> out;
  PeelResult<P> peel = peel_decode<P>(coded, shape.n);
  out.recovered_intermediates = peel.recovered();
  if (peel.recovered() < shape.k) return out;
  out.success = true;
  if constexpr (kCarriesSymbols<P>) {
    if (g == nullptr) throw std::invalid_argument("raptor_decode: generator required for payload decoding");
    std::map<Index, BlockVector> avail;
    for (Index i : peel.order) avail.emplace(i, std::move(*peel.decoded[i]));
    out.originals = precode_decode(avail, *g);
  }
  return out;
}

inline RaptorResult<BlockVector> raptor_decode(const std::vector<CodedBlock<BlockVector>>& coded,
                                               const GeneratorMatrix& g) {
  std::vector<const CodedBlock<BlockVector>*> ptrs;
  for (const auto& c : coded) ptrs.push_back(&c);
  return raptor_decode<BlockVector>(std::span<const CodedBlock<BlockVector>* const>(ptrs), &g, {g.k, g.n});
}

/// Little-endian u32 list, as embedded in simulator event logs.
inline std::vector<std::uint8_t> serialize_neighbors(const std::vector<Index>& neighbors) {
  std::vector<std::uint8_t> out;
  out.reserve(4 * neighbors.size());
  for (Index i : neighbors)
    for (int b = 0; b < 4; ++b) out.push_back(static_cast<std::uint8_t>(i >> (8 * b)));
  return out;
}

}  // namespace rcb
