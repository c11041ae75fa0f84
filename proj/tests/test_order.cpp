#include <algorithm>
#include <random>

#include <gtest/gtest.h>

#include "lpq/order.hpp"

using namespace lpq;

namespace {

bool has_edge(const DominanceGraph &g, const Vector &a, const Vector &b) {
  const auto u = g.find(a), w = g.find(b);
  return u && w &&
         std::find(g.edges().begin(), g.edges().end(), std::make_pair(*u, *w)) !=
             g.edges().end();
}

} // namespace

TEST(DominanceGraph, ChainIsReduced) {
  auto g = DominanceGraph::from_vectors({{3, 3}, {1, 1}, {2, 2}});
  EXPECT_EQ(g.size(), 3u);
  EXPECT_EQ(g.edges().size(), 2u);
  EXPECT_TRUE(has_edge(g, {1, 1}, {2, 2}));
  EXPECT_TRUE(has_edge(g, {2, 2}, {3, 3}));
  EXPECT_FALSE(has_edge(g, {1, 1}, {3, 3}));
  EXPECT_TRUE(g.reachable(*g.find({1, 1}), *g.find({3, 3})));
}

TEST(DominanceGraph, AntichainHasNoEdges) {
  auto g = DominanceGraph::from_vectors({{1, 2}, {2, 1}});
  EXPECT_TRUE(g.edges().empty());
}

TEST(DominanceGraph, DiamondHasFourEdges) {
  auto g = DominanceGraph::from_vectors({{1, 1}, {1, 2}, {2, 1}, {2, 2}});
  EXPECT_EQ(g.edges().size(), 4u);
  EXPECT_FALSE(has_edge(g, {1, 1}, {2, 2}));
  EXPECT_TRUE(has_edge(g, {1, 1}, {1, 2}));
  EXPECT_TRUE(has_edge(g, {1, 1}, {2, 1}));
  EXPECT_TRUE(has_edge(g, {1, 2}, {2, 2}));
  EXPECT_TRUE(has_edge(g, {2, 1}, {2, 2}));
}

TEST(DominanceGraph, DuplicatesCollapse) {
  auto g = DominanceGraph::from_vectors({{1, 2}, {1, 2}, {0, 0}});
  EXPECT_EQ(g.size(), 2u);
  EXPECT_EQ(g.multiplicity()[*g.find({1, 2})], 2u);
  EXPECT_EQ(g.node_of_record()[0], g.node_of_record()[1]);
}

TEST(DominanceGraph, BuildsFromDataset) {
  auto ds = Dataset::create(
      {{"r1", "p1", {1, 1}, 0}, {"r2", "p1", {2, 2}, 0}, {"r1", "p2", {1, 1}, 0}}, 2);
  auto g = build_dominance_graph(ds);
  EXPECT_EQ(g.size(), 2u);
  std::size_t total = 0;
  for (auto c : g.multiplicity())
    total += c;
  EXPECT_EQ(total, ds.size());
}

TEST(DominanceGraph, RandomReachabilityMatchesComponentwiseOrder) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t d = 1 + rng() % 3;
    const std::size_t count = 1 + rng() % 8;
    std::vector<Vector> vs(count, Vector(d));
    for (auto &v : vs)
      for (auto &x : v)
        x = static_cast<double>(rng() % 4);
    auto g = DominanceGraph::from_vectors(vs);
    std::size_t total = 0;
    for (auto c : g.multiplicity())
      total += c;
    EXPECT_EQ(total, count);
    for (std::size_t u = 0; u < g.size(); ++u)
      for (std::size_t w = 0; w < g.size(); ++w) {
        const bool le = u != w && std::equal(g.nodes()[u].begin(), g.nodes()[u].end(),
                                             g.nodes()[w].begin(),
                                             [](double a, double b) { return a <= b; });
        EXPECT_EQ(g.reachable(u, w), le);
      }
    // No edge is implied by a longer path.
    for (auto [u, w] : g.edges())
      for (std::size_t z = 0; z < g.size(); ++z)
        EXPECT_FALSE(g.reachable(u, z) && g.reachable(z, w));
    // Lexicographic node order is topological.
    for (auto [u, w] : g.edges())
      EXPECT_LT(u, w);
  }
}

TEST(DominanceGraph, DotExport) {
  auto g = DominanceGraph::from_vectors({{1, 1}, {2, 2}, {2, 2}});
  auto dot = g.to_dot();
  EXPECT_NE(dot.find("digraph"), std::string::npos);
  EXPECT_NE(dot.find("(2,2)\\nx2"), std::string::npos);
  EXPECT_NE(dot.find("n0 -> n1"), std::string::npos);
}

TEST(SortedDominates, Examples) {
  EXPECT_TRUE(sorted_dominates({2, 0, 0}, {1, 0, 0}));
  EXPECT_TRUE(sorted_dominates({1, 0}, {0, 1}));
  EXPECT_FALSE(sorted_dominates({0, 2}, {1, 1}));
  EXPECT_THROW(sorted_dominates({1}, {1, 2}), InvalidArgument);
}

TEST(SortedDominates, OrderProperties) {
  std::mt19937_64 rng(3);
  auto draw = [&] {
    Vector v(3);
    for (auto &x : v)
      x = static_cast<double>(rng() % 4);
    return v;
  };
  for (int trial = 0; trial < 500; ++trial) {
    auto a = draw(), b = draw(), c = draw();
    EXPECT_TRUE(sorted_dominates(a, a));
    if (sorted_dominates(a, b) && sorted_dominates(b, c))
      EXPECT_TRUE(sorted_dominates(a, c));
    auto pa = a, pb = b;
    std::shuffle(pa.begin(), pa.end(), rng);
    std::shuffle(pb.begin(), pb.end(), rng);
    EXPECT_EQ(sorted_dominates(a, b), sorted_dominates(pa, pb));
  }
}
