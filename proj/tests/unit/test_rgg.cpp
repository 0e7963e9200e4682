#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <gtest/gtest.h>

#include "coexsim/rgg.hpp"

using namespace coexsim;

namespace {

PointSet points_from(std::vector<std::vector<double>> pts, double side = 100.0) {
  const std::size_t dim = pts.front().size();
  PointSet ps(dim, Point(dim), side, 1.0);
  for (const auto& p : pts) ps.push_back(Point(p));
  return ps;
}

using EdgeList = std::vector<std::pair<VertexId, VertexId>>;

EdgeList all_pairs(const PointSet& ps, double r, bool torus = false) {
  EdgeList out;
  const double L = ps.box_side();
  for (std::size_t i = 0; i < ps.size(); ++i)
    for (std::size_t j = i + 1; j < ps.size(); ++j) {
      double s = 0;
      for (std::size_t k = 0; k < ps.dim(); ++k) {
        double d = std::abs(ps[i][k] - ps[j][k]);
        if (torus) d = std::min(d, L - d);
        s += d * d;
      }
      if (s < r * r) out.emplace_back(static_cast<VertexId>(i), static_cast<VertexId>(j));
    }
  return out;
}

std::vector<std::size_t> bfs_component_sizes(const GeometricGraph& g, std::vector<int>& comp) {
  comp.assign(g.size(), -1);
  std::vector<std::size_t> sizes;
  for (std::size_t s = 0; s < g.size(); ++s) {
    if (comp[s] >= 0) continue;
    const int id = static_cast<int>(sizes.size());
    std::vector<VertexId> queue{static_cast<VertexId>(s)};
    comp[s] = id;
    for (std::size_t h = 0; h < queue.size(); ++h)
      for (const auto& a : g.arcs(queue[h]))
        if (comp[a.to] < 0) {
          comp[a.to] = id;
          queue.push_back(a.to);
        }
    sizes.push_back(queue.size());
  }
  return sizes;
}

}  // namespace

TEST(BuildGraph, StrictThreshold) {
  EXPECT_EQ(build_graph(points_from({{0, 0}, {1.5, 0}}), 2.0).edge_count(), 1u);
  EXPECT_EQ(build_graph(points_from({{0, 0}, {2.0, 0}}), 2.0).edge_count(), 0u);
  EXPECT_THROW(build_graph(points_from({{0, 0}}), 0.0), InvalidParameter);
  EXPECT_THROW(build_graph(points_from({{0, 0}}), -1.0), InvalidParameter);
}

TEST(BuildGraph, MatchesAllPairsOracle) {
  for (std::size_t dim : {2u, 3u})
    for (std::size_t i = 0; i < 20; ++i) {
      auto rng = seed_stream(11, dim * 100 + i, tag::graph);
      const double side = dim == 2 ? 14.0 : 6.0;
      auto ps = sample_ppp(1.0, dim, side, rng);
      const double r = 0.5 + 2.0 * rng.uniform();
      const auto oracle = all_pairs(ps, r);
      const auto g = build_graph(ps, r);
      EXPECT_EQ(g.edges(), oracle);
    }
}

TEST(BuildGraph, TorusMatchesWrappedOracle) {
  for (std::size_t i = 0; i < 10; ++i) {
    auto rng = seed_stream(12, i, tag::graph);
    auto ps = sample_ppp(1.0, 2, 12.0, rng);
    const auto oracle = all_pairs(ps, 2.0, true);
    EXPECT_EQ(build_graph(ps, 2.0, BuildOptions{true}).edges(), oracle);
  }
}

TEST(BuildGraph, AdjacencyIsSymmetricWithoutLoops) {
  auto rng = seed_stream(13, 0, tag::graph);
  const auto g = build_graph(sample_ppp(1.0, 2, 30.0, rng), 2.0);
  for (std::size_t v = 0; v < g.size(); ++v)
    for (const auto& a : g.arcs(static_cast<VertexId>(v))) {
      EXPECT_NE(a.to, v);
      EXPECT_TRUE(g.adjacent(a.to, static_cast<VertexId>(v)));
    }
}

TEST(Components, EmptyGraphHasNoGiant) {
  const auto g = build_graph(PointSet(2, Point(2), 1.0, 1.0), 1.0);
  const auto lab = components(g);
  EXPECT_TRUE(lab.label.empty());
  EXPECT_FALSE(lab.giant.has_value());
}

TEST(Components, LargerCliqueIsGiant) {
  std::vector<std::vector<double>> pts;
  for (int i = 0; i < 3; ++i) pts.push_back({0.1 * i, 0.0});
  for (int i = 0; i < 5; ++i) pts.push_back({10.0 + 0.1 * i, 0.0});
  const auto g = build_graph(points_from(pts), 1.0);
  const auto lab = components(g);
  ASSERT_TRUE(lab.giant.has_value());
  EXPECT_EQ(lab.giant_size(), 5u);
  for (VertexId v = 3; v < 8; ++v) EXPECT_TRUE(lab.in_giant(v));
}

TEST(Components, AgreesWithBfsOracle) {
  for (std::size_t i = 0; i < 20; ++i) {
    auto rng = seed_stream(14, i, tag::graph);
    const auto g = build_graph(sample_ppp(1.0, 2, 25.0, rng), 1.0 + rng.uniform());
    const auto lab = components(g);
    std::vector<int> comp;
    const auto sizes = bfs_component_sizes(g, comp);
    for (std::size_t u = 0; u < g.size(); ++u)
      for (std::size_t v = u + 1; v < std::min(g.size(), u + 50); ++v)
        EXPECT_EQ(lab.label[u] == lab.label[v], comp[u] == comp[v]);
    EXPECT_EQ(lab.giant_size(), *std::max_element(sizes.begin(), sizes.end()));
  }
}

TEST(Components, GiantFractionMonotoneInRadius) {
  for (std::size_t i = 0; i < 50; ++i) {
    auto rng = seed_stream(15, i, tag::graph);
    const auto ps = sample_ppp(1.0, 2, 20.0, rng);
    std::size_t prev = 0;
    for (double r : {0.8, 1.0, 1.2, 1.4, 1.8, 2.2}) {
      const auto size = components(build_graph(ps, r)).giant_size();
      EXPECT_GE(size, prev);
      prev = size;
    }
  }
}

TEST(QMap, ExactVertexAndTieBreak) {
  const auto g = build_graph(points_from({{0, 2}, {0, 0}, {5, 5}}), 3.0);
  const auto lab = components(g);
  const QMap q(g, lab);
  EXPECT_EQ(q(Point{0.0, 2.0}), 0u);
  EXPECT_EQ(q(Point{0.0, 0.0}), 1u);
  EXPECT_EQ(q(Point{0.0, 1.0}), 1u);  // equidistant: (0,0) < (0,2)
}

TEST(QMap, EmptyGiantThrows) {
  const auto g = build_graph(PointSet(2, Point(2), 1.0, 1.0), 1.0);
  const auto lab = components(g);
  const QMap q(g, lab);
  EXPECT_THROW(q(Point{0.0, 0.0}), NoComponent);
}

TEST(QMap, AgreesWithLinearScanOracle) {
  for (std::size_t i = 0; i < 5; ++i) {
    auto rng = seed_stream(16, i, tag::graph);
    const auto env = sample_environment(2, 1.0, 1.7, 40.0, rng);
    const auto& g = env->graph;
    const auto giant = env->labels.giant_vertices();
    for (int k = 0; k < 200; ++k) {
      const Point x{rng.uniform(-30, 30), rng.uniform(-30, 30)};
      double best = std::numeric_limits<double>::infinity();
      for (VertexId v : giant) best = std::min(best, dist2(g.position(v), x));
      const VertexId got = env->q()(x);
      EXPECT_TRUE(env->labels.in_giant(got));
      EXPECT_EQ(dist2(g.position(got), x), best);
    }
  }
}

TEST(DumpLoad, BitExactRoundTrip) {
  for (std::size_t dim : {2u, 3u}) {
    auto rng = seed_stream(17, dim, tag::graph);
    const auto g = build_graph(sample_ppp(1.3, dim, 8.0, rng), 1.5);
    std::stringstream ss;
    dump_graph(g, ss);
    const std::string first = ss.str();
    const auto h = load_graph(ss);
    EXPECT_EQ(h.size(), g.size());
    EXPECT_EQ(h.edges(), g.edges());
    EXPECT_EQ(h.points().flat(), g.points().flat());
    EXPECT_EQ(h.radius(), g.radius());
    std::stringstream again;
    dump_graph(h, again);
    EXPECT_EQ(again.str(), first);
  }
}

TEST(DumpLoad, HeaderFormat) {
  const auto g = build_graph(points_from({{0, 0}, {1, 0}, {5, 0}}), 2.0);
  std::stringstream ss;
  dump_graph(g, ss);
  std::string header;
  std::getline(ss, header);
  EXPECT_EQ(header, "2 1 2 3");
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(ss, line)) lines.push_back(line);
  ASSERT_EQ(lines.size(), 4u);
  EXPECT_EQ(lines.back(), "0 1");
}

TEST(ThetaR, VanishingRadius) {
  EXPECT_EQ(estimate_theta_r(2, 1.0, 1e-4, 30.0, 50, 1).estimate, 0.0);
}

TEST(ThetaR, SupercriticalPilotValue) {
  const auto est = estimate_theta_r(2, 1.0, 2.0, 100.0, 1000, 2024);
  EXPECT_GT(est.estimate, 0.9);
  EXPECT_LE(est.estimate, 1.0);
  EXPECT_FALSE(est.subcritical_warning);
  EXPECT_LE(est.ci.lo, est.estimate);
  EXPECT_GE(est.ci.hi, est.estimate);
}

TEST(ThetaR, SubcriticalPilotRaisesWarning) {
  EXPECT_TRUE(estimate_theta_r(2, 1.0, 0.6, 30.0, 20, 3).subcritical_warning);
}

TEST(ThetaR, SameSeedIsBitIdentical) {
  const auto a = estimate_theta_r(2, 1.0, 1.3, 30.0, 40, 77);
  const auto b = estimate_theta_r(2, 1.0, 1.3, 30.0, 40, 77);
  EXPECT_EQ(a.estimate, b.estimate);
  EXPECT_EQ(a.mean_giant_fraction, b.mean_giant_fraction);
}

TEST(VolumeDensity, SmallWindowStillFinite) {
  const auto tab = volume_density_experiment(2, 1.0, 2.0, {0.3}, 20, 5, 1.0, 0.1, 10.0);
  ASSERT_EQ(tab.rows.size(), 20u);
  for (const auto& row : tab.rows) EXPECT_TRUE(std::isfinite(row.ratio));
}

TEST(VolumeDensity, BandHoldsAtModerateScale) {
  const double theta = estimate_theta_r(2, 1.0, 2.0, 100.0, 200, 6).estimate;
  const auto tab = volume_density_experiment(2, 1.0, 2.0, {50.0}, 200, 7, theta, 0.1, 2.0);
  EXPECT_GE(tab.inside_fraction[0], 0.95);
  const auto wide = volume_density_experiment(2, 1.0, 2.0, {50.0}, 50, 8, theta, 1.0, 2.0);
  EXPECT_EQ(wide.inside_fraction[0], 1.0);
}
