#include <cmath>

#include <gtest/gtest.h>

#include "coexsim/duality.hpp"

using namespace coexsim;

namespace {

GeometricGraph k4() { return graph_from_edges(4, {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}); }
GeometricGraph cycle5_chord() { return graph_from_edges(5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {0, 4}, {0, 2}}); }
GeometricGraph grid3() {
  std::vector<std::pair<VertexId, VertexId>> e;
  for (VertexId i = 0; i < 3; ++i)
    for (VertexId j = 0; j < 3; ++j) {
      if (j < 2) e.emplace_back(3 * i + j, 3 * i + j + 1);
      if (i < 2) e.emplace_back(3 * i + j, 3 * i + j + 3);
    }
  return graph_from_edges(9, e);
}

double poisson_upper_tail(double mean, int s) {
  double cdf = 0, term = std::exp(-mean);
  for (int k = 0; k < s; ++k) {
    cdf += term;
    term *= mean / (k + 1);
  }
  return 1.0 - cdf;
}

}  // namespace

TEST(Ctsrw, ZeroTimeStaysPut) {
  const auto g = k4();
  auto rng = seed_stream(41, 0, tag::walk);
  const auto w = ctsrw(g, 2, 0.0, rng, true);
  EXPECT_EQ(w.vertex, 2u);
  EXPECT_EQ(w.jumps, 0u);
  EXPECT_EQ(w.path, std::vector<VertexId>{2});
  EXPECT_THROW(ctsrw(g, 7, 1.0, rng), InvalidParameter);
}

TEST(Ctsrw, TwoStateClosedForm) {
  const auto g = graph_from_edges(2, {{0, 1}});
  const std::size_t n = 100000;
  std::size_t other = 0;
  for (std::size_t i = 0; i < n; ++i) {
    auto rng = seed_stream(42, i, tag::walk);
    other += ctsrw(g, 0, 1.0, rng).vertex == 1;
  }
  EXPECT_NEAR(static_cast<double>(other) / n, (1 - std::exp(-2.0)) / 2, 0.01);
}

TEST(Ctsrw, CompleteGraphMixes) {
  const auto g = k4();
  const std::size_t n = 40000;
  std::array<std::size_t, 4> hits{};
  for (std::size_t i = 0; i < n; ++i) {
    auto rng = seed_stream(43, i, tag::walk);
    ++hits[ctsrw(g, 0, 10.0, rng).vertex];
  }
  for (auto h : hits) EXPECT_NEAR(static_cast<double>(h) / n, 0.25, 0.01);
}

TEST(Ctsrw, JumpRateIsDegree) {
  // On a k-regular graph the jump count over [0, t] is Poisson(k t).
  const auto g = k4();
  const std::size_t n = 20000;
  const double t = 2.0;
  double total = 0, sq = 0;
  for (std::size_t i = 0; i < n; ++i) {
    auto rng = seed_stream(44, i, tag::walk);
    const double j = static_cast<double>(ctsrw(g, static_cast<VertexId>(i % 4), t, rng).jumps);
    total += j;
    sq += j * j;
  }
  const double m = total / n;
  const double sigma = std::sqrt((sq / n - m * m) / n);
  EXPECT_NEAR(m, 3 * t, 3 * sigma);
}

TEST(Ctsrw, WalkPositionsMatchSingleWalkLaw) {
  const auto g = graph_from_edges(2, {{0, 1}});
  const std::size_t n = 50000;
  std::size_t at1 = 0, at2 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    auto rng = seed_stream(45, i, tag::walk);
    const auto pos = walk_positions(g, 0, {0.5, 2.0}, rng);
    at1 += pos[0] == 1;
    at2 += pos[1] == 1;
  }
  EXPECT_NEAR(static_cast<double>(at1) / n, (1 - std::exp(-1.0)) / 2, 0.01);
  EXPECT_NEAR(static_cast<double>(at2) / n, (1 - std::exp(-4.0)) / 2, 0.01);
}

TEST(CoalescingWalks, MergedWalkersMoveTogether) {
  const auto g = grid3();
  for (std::size_t i = 0; i < 200; ++i) {
    auto rng = seed_stream(46, i, tag::walk);
    const auto e = coalescing_walks(g, {0, 2, 6, 8, 4}, 5.0, rng, true);
    // Same class implies same final position.
    for (std::size_t a = 0; a < 5; ++a)
      for (std::size_t b = 0; b < 5; ++b)
        if (e.group[a] == e.group[b]) {
          EXPECT_EQ(e.position[a], e.position[b]);
        }
    EXPECT_EQ(e.classes() + e.merges.size(), 5u);
    for (std::size_t k = 1; k < e.merges.size(); ++k) EXPECT_LE(e.merges[k - 1].time, e.merges[k].time);
    for (const auto& [t, from, to] : e.jumps) EXPECT_TRUE(g.adjacent(from, to));
  }
}

TEST(CoalescingWalks, SharedStartIsOneClass) {
  const auto g = k4();
  auto rng = seed_stream(47, 0, tag::walk);
  const auto e = coalescing_walks(g, {1, 1, 3}, 0.0, rng);
  EXPECT_EQ(e.group[0], e.group[1]);
  EXPECT_EQ(e.classes(), 2u);
}

TEST(Duality, ZeroTimeIsExact) {
  const auto g = cycle5_chord();
  const std::vector<Color> init{Color::red, Color::red, Color::blue, Color::blue, Color::red};
  const auto rep = voter_forward_vs_dual(g, init, 0.0, 200, 48);
  EXPECT_EQ(rep.max_discrepancy, 0.0);
}

TEST(Duality, UnanimousRedStaysRed) {
  const auto g = k4();
  const auto rep = voter_forward_vs_dual(g, std::vector<Color>(4, Color::red), 3.0, 500, 49);
  for (std::size_t v = 0; v < 4; ++v) {
    EXPECT_EQ(rep.forward[v], 1.0);
    EXPECT_EQ(rep.dual[v], 1.0);
  }
}

TEST(Duality, RequiresFullOccupation) {
  const auto g = k4();
  std::vector<Color> init(4, Color::red);
  init[2] = Color::vacant;
  EXPECT_THROW(voter_forward_vs_dual(g, init, 1.0, 10, 50), PreconditionError);
}

TEST(Duality, CycleWithChordMarginals) {
  const auto g = cycle5_chord();
  const std::vector<Color> init{Color::red, Color::red, Color::blue, Color::blue, Color::red};
  const auto rep = voter_forward_vs_dual(g, init, 1.0, 100000, 51);
  EXPECT_LT(rep.max_discrepancy, 0.02);
  EXPECT_LT(rep.max_z, 4.0);
}

TEST(Duality, SmallGraphsWithinThreeSigma) {
  const std::vector<GeometricGraph> graphs{k4(), grid3()};
  std::uint64_t seed = 52;
  for (const auto& g : graphs) {
    std::vector<Color> init(g.size(), Color::blue);
    for (std::size_t v = 0; v < g.size(); v += 2) init[v] = Color::red;
    const auto rep = voter_forward_vs_dual(g, init, 0.8, 20000, seed++);
    for (std::size_t v = 0; v < g.size(); ++v)
      EXPECT_LE(std::abs(rep.forward[v] - rep.dual[v]), 3 * rep.stderr_[v] + 1e-12) << "vertex " << v;
  }
}

TEST(ExitTime, TinyRadiusExitsAtFirstJump) {
  const auto g = graph_from_edges(3, {{0, 1}, {0, 2}});  // positions on the unit circle
  const double t = 0.4;
  const auto rep = exit_time_experiment(g, 0, {0.01}, 0.78, t, 50000, 53);
  EXPECT_NEAR(rep.rows[0].probability, 1 - std::exp(-2.0 * t), 0.01);
}

TEST(ExitTime, MonotoneInTime) {
  auto grng = seed_stream(54, 0, tag::graph);
  const auto env = sample_environment(2, 1.0, 2.0, 60.0, grng);
  const VertexId x = env->q()(Point(2));
  double prev = 0;
  for (double t : {0.5, 1.0, 2.0, 4.0}) {
    const auto rep = exit_time_experiment(env->graph, x, {8.0}, 0.78, t, 5000, 54);
    EXPECT_GE(rep.rows[0].probability, prev);
    prev = rep.rows[0].probability;
  }
}

TEST(ExitTime, DecreasesInRadius) {
  auto grng = seed_stream(55, 0, tag::graph);
  const auto env = sample_environment(2, 1.0, 2.0, 80.0, grng);
  const auto rep = exit_time_experiment(env->graph, env->q()(Point(2)), {4, 8, 16, 32}, 0.78, 2.0, 20000, 55, 2);
  for (std::size_t k = 1; k < rep.rows.size(); ++k)
    EXPECT_LE(rep.rows[k].probability, rep.rows[k - 1].probability);
  for (const auto& row : rep.rows) EXPECT_EQ(row.samples, 20000u);
}

TEST(HeatKernel, BoundExamples) {
  EXPECT_GE(heat_kernel_bound(1, 0.0, 3.0), 1.0);
  EXPECT_NEAR(heat_kernel_bound(1, 1.0, 1.0), std::exp(-0.45), 1e-12);
  EXPECT_GE(heat_kernel_bound(1, 1.0, 1.0), (1 - std::exp(-2.0)) / 2);
  EXPECT_THROW(heat_kernel_bound(1, 1.0, 0.0), InvalidParameter);
}

TEST(HeatKernel, NoViolationsOnRandomInstances) {
  std::size_t violations = 0, evaluated = 0;
  for (std::size_t i = 0; i < 20; ++i) {
    auto grng = seed_stream(56, i, tag::graph);
    const auto env = sample_environment(2, 1.0, 2.0, 20.0, grng);
    const auto giant = env->q().giant_vertices();
    auto prng = seed_stream(56, i, tag::instance);
    std::vector<std::pair<VertexId, VertexId>> pairs;
    for (int k = 0; k < 10; ++k)
      pairs.emplace_back(giant[prng.index(giant.size())], giant[prng.index(giant.size())]);
    for (const auto& row : heat_kernel_check(env->graph, pairs, {0.5, 1.0, 2.0, 4.0}, 300, 56 + i)) {
      violations += row.violation;
      evaluated += row.evaluated;
    }
  }
  EXPECT_GT(evaluated, 0u);
  EXPECT_EQ(violations, 0u);
}

TEST(Invasion, ExtremesAndMonotonicity) {
  const FppSetup s{2, 1.0, 2.0};
  const auto zero = invasion_probability_experiment(s, Point(2), {4.0}, 0.78, 0.0, 30.0, 50, 57);
  EXPECT_EQ(zero.rows[0].probability, 0.0);
  // A red ball covering the whole box leaves no blue at all.
  const auto huge = invasion_probability_experiment(s, Point(2), {1000.0}, 0.78, 5.0, 30.0, 50, 58);
  EXPECT_EQ(huge.rows[0].probability, 0.0);
  const auto rep = invasion_probability_experiment(s, Point(2), {4, 8, 16, 32}, 0.78, 2.0, 50.0, 300, 59, 2);
  for (std::size_t k = 1; k < rep.rows.size(); ++k)
    EXPECT_LE(rep.rows[k].probability, rep.rows[k - 1].probability);
}

TEST(PoissonTail, BoundExamples) {
  EXPECT_NEAR(poisson_tail_bound(1.0, std::exp(1.0)), 1.0, 1e-12);
  const double b = poisson_tail_bound(1.0, 10.0);
  EXPECT_NEAR(b, std::exp(10.0) * 1e-10, 1e-18);
  EXPECT_NEAR(poisson_upper_tail(1.0, 10), 1.11e-7, 0.01e-7);
  EXPECT_LE(poisson_upper_tail(1.0, 10), b);
  double prev = poisson_tail_bound(2.0, 2.0 * std::exp(1.0));
  for (double s = 6.0; s < 40.0; s += 0.5) {
    const double cur = poisson_tail_bound(2.0, s);
    EXPECT_LE(cur, prev);
    prev = cur;
  }
}
