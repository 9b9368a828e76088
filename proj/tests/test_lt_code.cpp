#include <gtest/gtest.h>

#include <map>
#include <random>
#include <set>

#include "rcb/lt_code.hpp"
#include "rcb/rng.hpp"

using namespace rcb;

namespace {

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

CodedBlock<BlockVector> make(const std::vector<BlockVector>& u, std::vector<Index> nbrs) {
  return combine<BlockVector>(std::move(nbrs), [&](Index i) { return &u[i]; });
}

// Four intermediates and five coded blocks as in the worked peeling example.
struct Fixture {
  std::vector<BlockVector> u;
  std::vector<CodedBlock<BlockVector>> v;
  Fixture() {
    std::mt19937_64 rng(2);
    u = random_blocks(4, 5, rng);
    v = {make(u, {0}), make(u, {0, 2}), make(u, {1, 2, 3}), make(u, {1, 3}), make(u, {2, 3})};
  }
};

}  // namespace

TEST(PeelDecode, FourBlocksRecoverFirstAndThird) {
  Fixture f;
  const std::vector<CodedBlock<BlockVector>> first4(f.v.begin(), f.v.begin() + 4);
  const auto r = peel_decode(first4, 4);
  EXPECT_EQ(std::set<Index>(r.order.begin(), r.order.end()), (std::set<Index>{0, 2}));
  EXPECT_EQ(r.undecoded, (std::vector<Index>{1, 3}));
  EXPECT_EQ(*r.decoded[0], f.u[0]);
  EXPECT_EQ(*r.decoded[2], f.u[2]);
  EXPECT_FALSE(r.decoded[1].has_value());
}

TEST(PeelDecode, FiveBlocksRecoverAll) {
  Fixture f;
  const auto r = peel_decode(f.v, 4);
  ASSERT_TRUE(r.complete());
  for (Index i = 0; i < 4; ++i) EXPECT_EQ(*r.decoded[i], f.u[i]);
}

TEST(PeelDecode, MetadataVerdictMatchesPayloadVerdict) {
  std::mt19937_64 rng(4);
  const auto u = random_blocks(30, 1, rng);
  const auto omega = encoding_distribution(30, 0.1, 0.5);
  Rng r2(9);
  for (int t = 0; t < 50; ++t) {
    std::vector<CodedBlock<BlockVector>> full;
    std::vector<CodedBlock<MetadataOnly>> meta;
    for (int c = 0; c < 28 + t % 10; ++c) {
      auto nbrs = draw_neighbors(omega, 30, r2);
      meta.push_back(CodedBlock<MetadataOnly>{MetadataOnly{}, nbrs, 0});
      full.push_back(make(u, std::move(nbrs)));
    }
    const auto a = peel_decode(full, 30);
    const auto b = peel_decode(meta, 30);
    ASSERT_EQ(a.order, b.order);
    for (Index i : a.order) ASSERT_EQ(*a.decoded[i], u[i]);
  }
}

TEST(Repair, EdgeMinusOtherNeighbours) {
  Fixture f;
  std::map<Index, BlockVector> others{{1, f.u[1]}, {2, f.u[2]}};
  const auto r = repair_from_edge<BlockVector>(3, f.v[2], others);
  ASSERT_TRUE(r.ok());
  EXPECT_EQ(*r.block, f.u[3]);

  const auto miss = repair_from_edge<BlockVector>(3, f.v[2], std::map<Index, BlockVector>{{2, f.u[2]}});
  EXPECT_FALSE(miss.ok());
  EXPECT_EQ(miss.missing, (std::vector<Index>{1}));
  EXPECT_THROW(repair_from_edge<BlockVector>(0, f.v[2], others), std::invalid_argument);
}

TEST(Repair, DegreeOneEdgeIsTheBlockItself) {
  Fixture f;
  const auto r = repair_from_edge<BlockVector>(0, f.v[0], std::map<Index, BlockVector>{});
  ASSERT_TRUE(r.ok());
  EXPECT_EQ(*r.block, f.u[0]);
}

TEST(Repair, RoundtripAgainstPrecodedIntermediates) {
  std::mt19937_64 rng(6);
  const auto g = build_systematic_generator(20, 25, 16);
  const auto u = precode_encode(random_blocks(20, 3, rng), g);
  Rng r2(1);
  const auto omega = encoding_distribution(25, 0.1, 0.5);
  for (int t = 0; t < 30; ++t) {
    auto edge = make(u, draw_neighbors(omega, 25, r2));
    const Index target = edge.neighbors[t % edge.degree()];
    std::map<Index, BlockVector> others;
    for (Index h : edge.neighbors)
      if (h != target) others.emplace(h, u[h]);
    ASSERT_EQ(*repair_from_edge<BlockVector>(target, edge, others).block, u[target]);
  }
}

TEST(Combine, MissingNeighboursReported) {
  Fixture f;
  try {
    combine<BlockVector>({0, 1, 3}, [&](Index i) -> const BlockVector* { return i == 1 ? nullptr : &f.u[i]; });
    FAIL() << "expected MissingIntermediates";
  } catch (const MissingIntermediates& e) {
    EXPECT_EQ(e.indices, (std::vector<Index>{1}));
  }
}

TEST(DrawDistinct, SortedDistinctInRange) {
  Rng rng(77);
  for (std::uint32_t d : {1u, 5u, 64u, 65u, 300u, 1000u}) {
    const auto v = draw_distinct(1000, d, rng);
    ASSERT_EQ(v.size(), d);
    EXPECT_TRUE(std::is_sorted(v.begin(), v.end()));
    EXPECT_EQ(std::set<Index>(v.begin(), v.end()).size(), d);
    EXPECT_LT(v.back(), 1000u);
  }
}

TEST(DrawDistinct, UniformOverPositions) {
  Rng rng(5);
  std::vector<int> hits(10, 0);
  for (int t = 0; t < 20000; ++t)
    for (Index i : draw_distinct(10, 3, rng)) ++hits[i];
  for (int h : hits) EXPECT_NEAR(h, 6000, 300);
}

TEST(RaptorDecode, RecoversOriginalsFromCodedBlocks) {
  std::mt19937_64 rng(12);
  const auto g = build_systematic_generator(50, 63, 16);
  const auto originals = random_blocks(50, 2, rng);
  const auto u = precode_encode(originals, g);
  const auto omega = encoding_distribution(63, 0.1, 0.5);
  Rng r2(3);
  std::vector<CodedBlock<BlockVector>> coded;
  for (Index i = 0; i < 63; i += 2) coded.push_back(make(u, {i}));
  RaptorResult<BlockVector> res;
  while (!(res = raptor_decode(coded, g)).success) coded.push_back(make(u, draw_neighbors(omega, 63, r2)));
  EXPECT_EQ(res.originals, originals);
  EXPECT_GE(res.recovered_intermediates, 50u);
}

TEST(RaptorDecode, FailsBelowKIntermediates) {
  std::mt19937_64 rng(12);
  const auto g = build_systematic_generator(5, 7, 16);
  const auto u = precode_encode(random_blocks(5, 1, rng), g);
  std::vector<CodedBlock<BlockVector>> coded{make(u, {0}), make(u, {1}), make(u, {2}), make(u, {3, 4})};
  EXPECT_FALSE(raptor_decode(coded, g).success);
}
