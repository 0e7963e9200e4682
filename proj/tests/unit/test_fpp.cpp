#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>

#include <gtest/gtest.h>

#include "coexsim/fpp.hpp"

using namespace coexsim;

namespace {

GeometricGraph line_graph(std::size_t n) {
  std::vector<std::pair<VertexId, VertexId>> e;
  for (std::size_t i = 0; i + 1 < n; ++i) e.emplace_back(static_cast<VertexId>(i), static_cast<VertexId>(i + 1));
  return graph_from_edges(n, e);
}

PassageTimeField fixed_field(std::vector<double> w) {
  PassageTimeField f;
  f.weight = std::move(w);
  return f;
}

// Minimum weight over all simple paths u -> v, by exhaustive DFS.
double enumerate_paths(const GeometricGraph& g, const PassageTimeField& f, VertexId u, VertexId v) {
  double best = std::numeric_limits<double>::infinity();
  std::vector<char> on(g.size(), 0);
  std::function<void(VertexId, double)> dfs = [&](VertexId x, double acc) {
    if (x == v) {
      best = std::min(best, acc);
      return;
    }
    on[x] = 1;
    for (const auto& a : g.arcs(x))
      if (!on[a.to]) dfs(a.to, acc + f[a.edge]);
    on[x] = 0;
  };
  dfs(u, 0.0);
  return best;
}

}  // namespace

TEST(AssignWeights, EmptyGraph) {
  auto rng = seed_stream(1, 0, tag::weights);
  EXPECT_EQ(assign_weights(graph_from_edges(3, {}), rng).size(), 0u);
}

TEST(AssignWeights, ExponentialMeanAndPositivity) {
  auto grng = seed_stream(2, 0, tag::graph);
  const auto g = build_graph(sample_ppp(1.0, 2, 130.0, grng), 2.0);
  ASSERT_GE(g.edge_count(), 100000u);
  auto wrng = seed_stream(2, 0, tag::weights);
  const auto f = assign_weights(g, wrng);
  double sum = 0, lo = 1.0;
  for (double w : f.weight) sum += w, lo = std::min(lo, w);
  EXPECT_GE(sum / f.size(), 0.99);
  EXPECT_LE(sum / f.size(), 1.01);
  EXPECT_GT(lo, 0.0);
}

TEST(AssignWeights, DeterministicAndSeparateFromGraph) {
  auto grng = seed_stream(3, 0, tag::graph);
  const auto g = build_graph(sample_ppp(1.0, 2, 20.0, grng), 2.0);
  auto a = seed_stream(3, 0, tag::weights), b = seed_stream(3, 0, tag::weights), c = seed_stream(3, 1, tag::weights);
  const auto fa = assign_weights(g, a), fb = assign_weights(g, b), fc = assign_weights(g, c);
  EXPECT_EQ(fa.weight, fb.weight);
  EXPECT_NE(fa.weight, fc.weight);
  // Resampling weights leaves the graph alone but changes passage times.
  auto grng2 = seed_stream(3, 0, tag::graph);
  EXPECT_EQ(build_graph(sample_ppp(1.0, 2, 20.0, grng2), 2.0).edges(), g.edges());
  const auto ta = shortest_times(g, fa, 0), tc = shortest_times(g, fc, 0);
  EXPECT_NE(ta.time, tc.time);
}

TEST(AssignWeights, GeneralLawRejectsZero) {
  const auto g = line_graph(3);
  auto rng = seed_stream(4, 0, tag::weights);
  EXPECT_THROW(assign_weights(g, rng, [](RngStream&) { return 0.0; }), InvalidParameter);
  const auto f = assign_weights(g, rng, [](RngStream& r) { return 0.5 + r.uniform(); });
  for (double w : f.weight) EXPECT_GE(w, 0.5);
}

TEST(PassageTime, SingleEdgeAndTriangle) {
  const auto one = graph_from_edges(2, {{0, 1}});
  EXPECT_EQ(passage_time(one, fixed_field({0.7}), 0, 1), 0.7);
  EXPECT_EQ(passage_time(one, fixed_field({0.7}), 0, 0), 0.0);
  // Edges sorted: (0,1), (0,2), (1,2). u=0, v=2, direct weight 3.
  const auto tri = graph_from_edges(3, {{0, 1}, {1, 2}, {0, 2}});
  EXPECT_EQ(passage_time(tri, fixed_field({1.0, 3.0, 1.0}), 0, 2), 2.0);
}

TEST(PassageTime, UnreachableIsInfinite) {
  const auto g = graph_from_edges(4, {{0, 1}, {2, 3}});
  EXPECT_EQ(passage_time(g, fixed_field({1.0, 1.0}), 0, 3), kUnreached);
}

TEST(PassageTime, MatchesPathEnumerationOnSmallGraphs) {
  auto rng = seed_stream(5, 0, "small-graphs");
  for (int inst = 0; inst < 100; ++inst) {
    const std::size_t n = 2 + rng.index(7);
    std::vector<std::pair<VertexId, VertexId>> e;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        if (rng.bernoulli(0.5)) e.emplace_back(static_cast<VertexId>(i), static_cast<VertexId>(j));
    const auto g = graph_from_edges(n, e);
    auto wrng = seed_stream(5, inst, tag::weights);
    const auto f = assign_weights(g, wrng);
    for (VertexId u = 0; u < n; ++u) {
      const auto dm = shortest_times(g, f, u);
      for (VertexId v = 0; v < n; ++v) EXPECT_EQ(dm[v], u == v ? 0.0 : enumerate_paths(g, f, u, v));
    }
  }
}

TEST(PassageTime, MetricAxiomsOnTriples) {
  auto grng = seed_stream(6, 0, tag::graph);
  auto env = sample_environment(2, 1.0, 2.0, 30.0, grng);
  auto wrng = seed_stream(6, 0, tag::weights);
  const auto f = assign_weights(env->graph, wrng);
  const auto& giant = env->q().giant_vertices();
  auto rng = seed_stream(6, 0, "triples");
  std::vector<VertexId> pick;
  for (int i = 0; i < 12; ++i) pick.push_back(giant[rng.index(giant.size())]);
  std::vector<DistanceMap> dm;
  for (VertexId v : pick) dm.push_back(shortest_times(env->graph, f, v));
  int checked = 0;
  for (std::size_t a = 0; a < pick.size(); ++a)
    for (std::size_t b = 0; b < pick.size(); ++b)
      for (std::size_t c = 0; c < pick.size(); ++c) {
        const double ab = dm[a][pick[b]], bc = dm[b][pick[c]], ac = dm[a][pick[c]];
        EXPECT_GE(ab, 0.0);
        EXPECT_NEAR(ab, dm[b][pick[a]], 1e-9);
        EXPECT_LE(ac, ab + bc + 1e-9);
        ++checked;
      }
  EXPECT_GE(checked, 1000);
  for (std::size_t a = 0; a < pick.size(); ++a) EXPECT_EQ(dm[a][pick[a]], 0.0);
}

TEST(PassageBall, ZeroInfiniteNestedAndExact) {
  auto grng = seed_stream(7, 0, tag::graph);
  auto env = sample_environment(2, 1.0, 2.0, 30.0, grng);
  auto wrng = seed_stream(7, 0, tag::weights);
  const auto f = assign_weights(env->graph, wrng);
  const auto& q = env->q();
  const Point x{1.3, -0.4};
  EXPECT_EQ(passage_ball(q, f, x, 0.0), std::vector<VertexId>{q(x)});
  EXPECT_EQ(passage_ball(q, f, x, kUnreached), q.giant_vertices());
  EXPECT_THROW(passage_ball(q, f, x, -1.0), InvalidParameter);
  const auto full = shortest_times(env->graph, f, q(x));
  auto rng = seed_stream(7, 0, "radii");
  for (int k = 0; k < 100; ++k) {
    double s = rng.uniform(0.0, 6.0), t = rng.uniform(0.0, 6.0);
    if (s > t) std::swap(s, t);
    const auto hs = passage_ball(q, f, x, s), ht = passage_ball(q, f, x, t);
    EXPECT_TRUE(std::includes(ht.begin(), ht.end(), hs.begin(), hs.end()));
    std::vector<VertexId> expect;
    for (std::size_t v = 0; v < full.time.size(); ++v)
      if (full.time[v] <= t) expect.push_back(static_cast<VertexId>(v));
    EXPECT_EQ(ht, expect);
  }
}

TEST(EstimatePhi, SyntheticLinearFieldIsExact) {
  const std::vector<double> L{20, 30, 40, 50};
  std::vector<std::vector<double>> rows(5);
  for (auto& row : rows)
    for (double l : L) row.push_back(l / 2.0);
  const auto est = fit_phi(L, rows);
  EXPECT_EQ(est.phi, 2.0);
  EXPECT_EQ(est.stderr_, 0.0);
  std::vector<std::vector<double>> bad{{3.0, 2.0, 1.0, 0.0}};
  EXPECT_THROW(fit_phi(L, bad), EstimationFailure);
}

TEST(EstimatePhi, RotationInvariance) {
  const FppSetup s;
  const std::vector<double> L{20, 22.5, 25, 27.5, 30};
  const auto a = estimate_phi(s, 32, L, 200, 8, 0.0);
  const auto b = estimate_phi(s, 32, L, 200, 8, std::numbers::pi / 32.0);
  EXPECT_LT(std::abs(a.phi - b.phi) / a.phi, 0.01);
  EXPECT_GT(a.r2, 0.99);
}

TEST(ModerateDeviation, TailShapeAtSmallScale) {
  const FppSetup s;
  const std::vector<double> ell{0, 0.1, 0.2, 0.4, 0.8};
  const auto rep = moderate_deviation_experiment(s, 11.0, {20.0}, ell, 16, 40, 9);
  ASSERT_EQ(rep.rows.size(), ell.size());
  EXPECT_EQ(rep.rows[0].tail, 1.0);
  for (std::size_t k = 1; k < rep.rows.size(); ++k) EXPECT_LE(rep.rows[k].tail, rep.rows[k - 1].tail);
  for (const auto& row : rep.rows) {
    EXPECT_LE(row.ci.lo, row.tail);
    EXPECT_GE(row.ci.hi, row.tail);
  }
}

TEST(ShapeFluctuation, SmallTimesStayFinite) {
  const auto rep = shape_fluctuation_experiment(FppSetup{}, 11.0, {0.5, 1.0, 2.0}, 5, 10);
  for (const auto& row : rep.rows) EXPECT_TRUE(std::isfinite(row.c_tilde));
}

TEST(ShapeFluctuation, InnerContainmentByDirectQuery) {
  const FppSetup s;
  const double phi = 11.0, t = 8.0;
  auto rep = make_fpp_replica(s, 2.0 * (1.15 * phi * t + s.margin), 11, 0);
  const auto& q = rep.env->q();
  const auto dm = shortest_times(rep.env->graph, rep.field, q(Point(2)));
  const auto row = shape_containment(rep.env->graph, rep.env->labels, dm, phi, t);
  const double radius = t * phi * (1.0 - row.c_inner * fluctuation_band(t));
  EXPECT_NEAR(radius, std::min(row.inner_radius, phi * t), 1e-9);
  int probed = 0;
  for (const auto& z : spread_directions(2, 32))
    for (double frac = 0.05; frac < 1.0; frac += 0.05) {
      const VertexId v = q(scaled(z, frac * radius));
      if (norm(rep.env->graph.position(v)) < radius) {
        EXPECT_LE(dm[v], t);
        ++probed;
      }
    }
  EXPECT_GT(probed, 300);
}

TEST(HopDistance, Basics) {
  const auto g = line_graph(6);
  EXPECT_EQ(hop_distance(g, 0, 1), 1u);
  for (VertexId i = 0; i < 6; ++i)
    for (VertexId j = 0; j < 6; ++j) EXPECT_EQ(hop_distance(g, i, j), i > j ? i - j : j - i);
  EXPECT_EQ(hop_distance(graph_from_edges(3, {{0, 1}}), 0, 2), kUnreachedHops);
}

TEST(HopDistance, ScaleConstantStable) {
  const auto rows = hop_vs_euclid_experiment(FppSetup{}, {20.0, 40.0}, 100, 12);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_LT(std::abs(rows[1].c0 - rows[0].c0) / rows[0].c0, 0.10);
}
