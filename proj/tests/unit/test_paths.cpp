#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "coexsim/paths.hpp"
#include "coexsim/rng.hpp"

using namespace coexsim;

namespace {

// Random tree on n vertices plus `extra` random chords.
GeometricGraph random_connected(std::size_t n, std::size_t extra, RngStream& rng) {
  std::vector<std::pair<VertexId, VertexId>> e;
  for (std::size_t v = 1; v < n; ++v) e.emplace_back(static_cast<VertexId>(rng.index(v)), static_cast<VertexId>(v));
  for (std::size_t k = 0; k < extra; ++k) {
    const auto a = static_cast<VertexId>(rng.index(n)), b = static_cast<VertexId>(rng.index(n));
    if (a != b) e.emplace_back(a, b);
  }
  return graph_from_edges(n, e);
}

Configuration random_config(std::size_t n, RngStream& rng, bool allow_vacant) {
  Configuration c(n);
  for (auto& x : c) x = static_cast<std::uint8_t>(allow_vacant ? rng.index(3) : 1 + rng.index(2));
  return c;
}

}  // namespace

TEST(IsValidStep, Examples) {
  const auto g = graph_from_edges(3, {{0, 1}, {1, 2}});
  const Configuration a{1, 0, 2};
  EXPECT_FALSE(is_valid_step(g, a, a));
  EXPECT_TRUE(is_valid_step(g, a, Configuration{1, 1, 2}));
  EXPECT_TRUE(is_valid_step(g, a, Configuration{1, 2, 2}));
  EXPECT_FALSE(is_valid_step(g, Configuration{1, 0, 2}, Configuration{1, 0, 1}));  // no red neighbour of 2
  EXPECT_FALSE(is_valid_step(g, a, Configuration{1, 1, 1}));                       // two changes
  EXPECT_FALSE(is_valid_step(g, Configuration{1, 1, 2}, Configuration{1, 0, 2}));  // vacating
  EXPECT_THROW(is_valid_step(g, a, Configuration{1, 1}), InvalidParameter);
}

TEST(SpanningTree, TreeInputIsReturned) {
  const auto g = graph_from_edges(5, {{0, 1}, {0, 2}, {2, 3}, {2, 4}});
  for (VertexId x = 0; x < 5; ++x) {
    const auto t = degree_preserving_spanning_tree(g, x);
    EXPECT_EQ(t.edges(), g.edges());
    EXPECT_TRUE(is_degree_preserving_spanning_tree(g, t, x));
  }
}

TEST(SpanningTree, CompleteGraphKeepsStar) {
  const auto g = graph_from_edges(4, {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}});
  for (VertexId x = 0; x < 4; ++x) {
    const auto t = degree_preserving_spanning_tree(g, x);
    EXPECT_EQ(t.degree(x), 3u);
    EXPECT_TRUE(is_degree_preserving_spanning_tree(g, t, x));
  }
}

TEST(SpanningTree, RandomGraphsValidate) {
  for (std::size_t i = 0; i < 100; ++i) {
    auto rng = seed_stream(61, i, tag::instance);
    const std::size_t n = 3 + rng.index(40);
    const auto g = random_connected(n, rng.index(2 * n), rng);
    const auto x = static_cast<VertexId>(rng.index(n));
    const auto t = degree_preserving_spanning_tree(g, x);
    EXPECT_TRUE(is_degree_preserving_spanning_tree(g, t, x)) << "instance " << i;
    EXPECT_EQ(t.edges().size(), n - 1);
  }
}

TEST(SpanningTree, ValidatorRejectsBrokenTrees) {
  const auto g = graph_from_edges(4, {{0, 1}, {0, 2}, {0, 3}, {1, 2}});
  auto t = degree_preserving_spanning_tree(g, 0);
  ASSERT_TRUE(is_degree_preserving_spanning_tree(g, t, 0));
  auto bad = t;
  bad.parent[3] = 1;  // not an edge of g
  EXPECT_FALSE(is_degree_preserving_spanning_tree(g, bad, 0));
  bad = t;
  bad.parent[1] = 2;
  bad.parent[2] = 1;  // cycle
  EXPECT_FALSE(is_degree_preserving_spanning_tree(g, bad, 0));
  EXPECT_THROW(degree_preserving_spanning_tree(graph_from_edges(3, {{0, 1}}), 0), InvalidParameter);
}

TEST(GrowthInvasionPath, ClawReachesEveryTarget) {
  const auto g = graph_from_edges(4, {{0, 1}, {0, 2}, {0, 3}});
  const Configuration start{0, 1, 2, 0};
  for (int mask = 0; mask < 16; ++mask) {
    Configuration target(4);
    for (int v = 0; v < 4; ++v) target[v] = static_cast<std::uint8_t>(1 + ((mask >> v) & 1));
    const auto p = construct_growth_invasion_path(g, start, target);
    EXPECT_EQ(p.x, 0u);
    EXPECT_EQ(p.steps.front(), start);
    EXPECT_FALSE(first_invalid_step(g, p).has_value()) << "target mask " << mask;
    EXPECT_TRUE(satisfies_final_conditions(g, p));
  }
}

TEST(GrowthInvasionPath, Preconditions) {
  const auto path = graph_from_edges(4, {{0, 1}, {1, 2}, {2, 3}});
  EXPECT_THROW(construct_growth_invasion_path(path, {1, 0, 0, 2}, {1, 1, 2, 2}), PreconditionError);
  const auto claw = graph_from_edges(4, {{0, 1}, {0, 2}, {0, 3}});
  EXPECT_THROW(construct_growth_invasion_path(claw, {1, 1, 1, 1}, {1, 2, 1, 2}), PreconditionError);
  EXPECT_THROW(construct_growth_invasion_path(claw, {1, 2, 0, 0}, {1, 0, 1, 2}), InvalidParameter);
  EXPECT_THROW(construct_growth_invasion_path(graph_from_edges(5, {{0, 1}, {0, 2}, {0, 3}}), {1, 2, 0, 0, 0},
                                              {1, 1, 1, 1, 1}),
               InvalidParameter);
}

TEST(GrowthInvasionPath, RandomInstancesAreValid) {
  std::size_t built = 0, x3_hits = 0;
  std::size_t longest_small = 0, longest_large = 0;
  for (std::size_t i = 0; i < 1000; ++i) {
    auto rng = seed_stream(62, i, tag::instance);
    const std::size_t n = 4 + rng.index(47);
    const auto g = random_connected(n, rng.index(n), rng);
    if (!find_branch_vertex(g)) continue;
    auto start = random_config(n, rng, true);
    const auto a = rng.index(n), b = (a + 1 + rng.index(n - 1)) % n;
    start[a] = 1;
    start[b] = 2;
    const auto target = random_config(n, rng, false);
    const auto p = construct_growth_invasion_path(g, start, target);
    ++built;
    ASSERT_FALSE(first_invalid_step(g, p).has_value()) << "instance " << i;
    EXPECT_TRUE(satisfies_final_conditions(g, p)) << "instance " << i;
    const auto& f = p.final();
    for (std::size_t v = 0; v < n; ++v) {
      if (v == p.x || v == p.x1 || v == p.x3) continue;
      EXPECT_EQ(f[v], target[v]) << "instance " << i << " vertex " << v;
    }
    if (p.x3_on_target) {
      EXPECT_EQ(f[p.x3], target[p.x3]);
      ++x3_hits;
    }
    (n <= 25 ? longest_small : longest_large) = std::max(n <= 25 ? longest_small : longest_large, p.length());
    EXPECT_LE(p.length(), 2 * n * n + 4 * n);
  }
  EXPECT_GT(built, 500u);
  EXPECT_LE(longest_small, longest_large);
}

TEST(GrowthInvasionPath, WrittenFormat) {
  const auto g = graph_from_edges(4, {{0, 1}, {0, 2}, {0, 3}});
  const auto p = construct_growth_invasion_path(g, {0, 1, 2, 0}, {1, 1, 2, 2});
  std::ostringstream os;
  write_path(os, p);
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "0120");
  std::size_t lines = 1;
  while (std::getline(in, line)) ++lines;
  EXPECT_EQ(lines, p.steps.size());
}
