#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <vector>

#include "coexsim/competition.hpp"
#include "coexsim/error.hpp"
#include "coexsim/fpp.hpp"
#include "coexsim/parallel.hpp"
#include "coexsim/rgg.hpp"
#include "coexsim/rng.hpp"
#include "coexsim/stats.hpp"

namespace coexsim {

// Walks are variable-speed: from v the walker jumps at rate deg(v) to a
// uniform neighbour, i.e. rate 1 per incident edge, the voter adoption rate.

struct WalkState {
  VertexId vertex = kNoVertex;
  double time = 0;
  std::uint64_t jumps = 0;
  std::vector<VertexId> path;  // visited vertices, filled when logging
};

inline WalkState ctsrw(const GeometricGraph& g, VertexId start, double t, RngStream& rng, bool log = false) {
  if (start >= g.size()) throw InvalidParameter("ctsrw: start outside graph");
  if (!(t >= 0.0)) throw InvalidParameter("ctsrw: t must be >= 0");
  WalkState w{start, 0.0, 0, {}};
  if (log) w.path.push_back(start);
  const std::size_t d0 = g.degree(start);
  if (d0 == 0) {
    w.time = t;
    return w;
  }
  double clock = 0.0;
  while (true) {
    const auto deg = g.degree(w.vertex);
    clock += rng.exponential(static_cast<double>(deg));
    if (clock > t) break;
    w.vertex = g.arcs(w.vertex)[rng.index(deg)].to;
    ++w.jumps;
    if (log) w.path.push_back(w.vertex);
  }
  w.time = t;
  return w;
}

/// Positions of one walk at each of the (sorted) times.
inline std::vector<VertexId> walk_positions(const GeometricGraph& g, VertexId start, const std::vector<double>& times,
                                            RngStream& rng) {
  std::vector<VertexId> out(times.size(), start);
  if (g.degree(start) == 0 || times.empty()) return out;
  VertexId v = start;
  double clock = rng.exponential(static_cast<double>(g.degree(v)));
  for (std::size_t k = 0; k < times.size(); ++k) {
    while (clock <= times[k]) {
      v = g.arcs(v)[rng.index(g.degree(v))].to;
      clock += rng.exponential(static_cast<double>(g.degree(v)));
    }
    out[k] = v;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Coalescing walks with shared clocks

struct CoalescenceEvent {
  double time = 0;
  std::size_t absorbed = 0;  // class index merged into `into`
  std::size_t into = 0;
};

struct CoalescingEnsemble {
  std::vector<VertexId> start;
  std::vector<VertexId> position;   // per walker at the final time
  std::vector<std::size_t> group;   // coalescence class per walker (smallest walker index)
  std::vector<CoalescenceEvent> merges;
  // Optional per-jump log: (time, vertex moved from, vertex moved to).
  std::vector<std::tuple<double, VertexId, VertexId>> jumps;
  double time = 0;

  std::size_t classes() const {
    std::vector<std::size_t> g = group;
    std::sort(g.begin(), g.end());
    return static_cast<std::size_t>(std::unique(g.begin(), g.end()) - g.begin());
  }
};

/// Each vertex carries one clock of rate deg(v); when it rings every walker at
/// v moves to the same uniform neighbour, so walkers that meet stay together.
inline CoalescingEnsemble coalescing_walks(const GeometricGraph& g, const std::vector<VertexId>& starts, double t,
                                           RngStream& rng, bool log = false) {
  CoalescingEnsemble e;
  e.start = starts;
  e.position = starts;
  e.group.resize(starts.size());
  for (std::size_t i = 0; i < starts.size(); ++i) {
    e.group[i] = i;
    for (std::size_t j = 0; j < i; ++j)
      if (starts[j] == starts[i]) {
        e.group[i] = e.group[j];
        break;
      }
  }
  // Distinct occupied sites with their walker lists.
  std::vector<VertexId> sites;
  std::vector<std::vector<std::size_t>> walkers;
  for (std::size_t i = 0; i < starts.size(); ++i) {
    auto it = std::find(sites.begin(), sites.end(), starts[i]);
    if (it == sites.end()) {
      sites.push_back(starts[i]);
      walkers.push_back({i});
    } else {
      walkers[static_cast<std::size_t>(it - sites.begin())].push_back(i);
    }
  }
  double clock = 0.0;
  while (true) {
    std::uint64_t total = 0;
    for (VertexId v : sites) total += g.degree(v);
    if (total == 0) break;
    clock += rng.exponential(static_cast<double>(total));
    if (clock > t) break;
    std::uint64_t u = rng.index(total);
    std::size_t k = 0;
    while (u >= g.degree(sites[k])) u -= g.degree(sites[k++]);
    const VertexId from = sites[k];
    const VertexId to = g.arcs(from)[u].to;
    if (log) e.jumps.emplace_back(clock, from, to);
    auto moving = std::move(walkers[k]);
    sites.erase(sites.begin() + static_cast<std::ptrdiff_t>(k));
    walkers.erase(walkers.begin() + static_cast<std::ptrdiff_t>(k));
    for (std::size_t i : moving) e.position[i] = to;
    auto it = std::find(sites.begin(), sites.end(), to);
    if (it == sites.end()) {
      sites.push_back(to);
      walkers.push_back(std::move(moving));
    } else {
      auto& there = walkers[static_cast<std::size_t>(it - sites.begin())];
      const std::size_t keep = std::min(e.group[there.front()], e.group[moving.front()]);
      const std::size_t drop = std::max(e.group[there.front()], e.group[moving.front()]);
      e.merges.push_back({clock, drop, keep});
      for (auto& gid : e.group)
        if (gid == drop) gid = keep;
      there.insert(there.end(), moving.begin(), moving.end());
    }
  }
  e.time = t;
  return e;
}

// ---------------------------------------------------------------------------
// Forward voter against the dual walk

struct DualityReport {
  std::vector<double> forward;   // P(x red at t), forward engine
  std::vector<double> dual;      // P(dual walk from x ends in the initial red set)
  std::vector<double> stderr_;   // combined standard error per vertex
  double max_discrepancy = 0;
  double max_z = 0;              // max |forward - dual| / combined stderr
};

/// Pure-voter duality check. Every vertex must be occupied.
inline DualityReport voter_forward_vs_dual(const GeometricGraph& g, const std::vector<Color>& initial, double t,
                                           std::size_t replicas, std::uint64_t seed) {
  if (initial.size() != g.size()) throw InvalidParameter("voter_forward_vs_dual: colour vector size mismatch");
  if (std::find(initial.begin(), initial.end(), Color::vacant) != initial.end())
    throw PreconditionError("voter_forward_vs_dual: duality requires every vertex occupied");
  const std::size_t n = g.size();
  std::vector<std::size_t> fwd(n, 0), dual(n, 0);
  for (std::size_t i = 0; i < replicas; ++i) {
    CompetitionState s(g);
    for (std::size_t v = 0; v < n; ++v) s.assign(static_cast<VertexId>(v), initial[v]);
    auto rng = seed_stream(seed, i, tag::dynamics);
    StopCondition stop;
    stop.horizon = t;
    run(s, stop, rng, {.keep_colors = false});
    for (std::size_t v = 0; v < n; ++v) fwd[v] += s.color(static_cast<VertexId>(v)) == Color::red;
  }
  for (std::size_t v = 0; v < n; ++v)
    for (std::size_t i = 0; i < replicas; ++i) {
      auto rng = seed_stream(seed, v * replicas + i, tag::walk);
      const auto w = ctsrw(g, static_cast<VertexId>(v), t, rng);
      dual[v] += initial[w.vertex] == Color::red;
    }
  DualityReport rep;
  const double m = static_cast<double>(replicas);
  for (std::size_t v = 0; v < n; ++v) {
    const double a = static_cast<double>(fwd[v]) / m, b = static_cast<double>(dual[v]) / m;
    const double se = std::sqrt((a * (1 - a) + b * (1 - b)) / m);
    rep.forward.push_back(a);
    rep.dual.push_back(b);
    rep.stderr_.push_back(se);
    rep.max_discrepancy = std::max(rep.max_discrepancy, std::abs(a - b));
    if (se > 0) rep.max_z = std::max(rep.max_z, std::abs(a - b) / se);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Exit times from Euclidean balls

struct ExitRow {
  double rho = 0;
  double radius = 0;  // rho^b
  std::size_t exits = 0;
  std::size_t samples = 0;
  double probability = 0;
  Interval ci;
};

struct ExitReport {
  std::vector<ExitRow> rows;
  LinearFit fit;       // log P against rho^{2b - 1}, rows with P > 0
  bool fitted = false;
};

/// P(tau_rho < t) for the walk from vertex x, tau_rho the first time the walk
/// sits outside B(x, rho^b). One walk per replica serves every rho.
inline ExitReport exit_time_experiment(const GeometricGraph& g, VertexId x, const std::vector<double>& rho_grid,
                                       double b, double t, std::size_t replicas, std::uint64_t seed,
                                       std::size_t workers = 1) {
  if (x >= g.size()) throw InvalidParameter("exit_time_experiment: vertex outside graph");
  const Point center(g.position(x));
  std::vector<double> reach(replicas, 0.0);  // max distance from x before t
  parallel_for(replicas, workers, [&](std::size_t i) {
    auto rng = seed_stream(seed, i, tag::walk);
    VertexId v = x;
    double clock = 0.0, best = 0.0;
    while (g.degree(v) > 0) {
      clock += rng.exponential(static_cast<double>(g.degree(v)));
      if (clock >= t) break;
      v = g.arcs(v)[rng.index(g.degree(v))].to;
      best = std::max(best, dist(g.position(v), center));
    }
    reach[i] = best;
  });
  ExitReport rep;
  std::vector<double> xs, ys;
  for (double rho : rho_grid) {
    ExitRow row;
    row.rho = rho;
    row.radius = std::pow(rho, b);
    row.samples = replicas;
    row.exits = static_cast<std::size_t>(
        std::count_if(reach.begin(), reach.end(), [&](double d) { return !(d < row.radius); }));
    row.probability = static_cast<double>(row.exits) / static_cast<double>(replicas);
    row.ci = wilson_interval(row.exits, replicas);
    if (row.exits > 0) {
      xs.push_back(std::pow(rho, 2 * b - 1));
      ys.push_back(std::log(row.probability));
    }
    rep.rows.push_back(row);
  }
  if (xs.size() >= 2) {
    rep.fit = linear_fit(xs, ys);
    rep.fitted = true;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Heat-kernel bound

/// deg_max exp(-D^2 / 2t (1 - D^2 / 10 t^2)).
inline double heat_kernel_bound(std::size_t deg_max, double d, double t) {
  if (!(t > 0.0)) throw InvalidParameter("heat_kernel_bound: t must be > 0");
  return static_cast<double>(deg_max) * std::exp(-d * d / (2.0 * t) * (1.0 - d * d / (10.0 * t * t)));
}

struct HeatKernelRow {
  VertexId u = 0, v = 0;
  std::uint32_t hops = 0;
  double t = 0;
  double estimate = 0;
  double stderr_ = 0;
  double bound = 0;
  bool evaluated = false;  // D^2 <= 10 t^2
  bool violation = false;  // estimate > bound + 3 stderr
};

inline std::vector<HeatKernelRow> heat_kernel_check(const GeometricGraph& g,
                                                    const std::vector<std::pair<VertexId, VertexId>>& pairs,
                                                    std::vector<double> times, std::size_t replicas,
                                                    std::uint64_t seed) {
  std::sort(times.begin(), times.end());
  const std::size_t deg_max = g.max_degree();
  std::vector<HeatKernelRow> out;
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto [u, v] = pairs[p];
    const std::uint32_t hops = hop_distance(g, u, v);
    if (hops == kUnreachedHops) throw InvalidParameter("heat_kernel_check: pair in different components");
    std::vector<std::size_t> hits(times.size(), 0);
    for (std::size_t i = 0; i < replicas; ++i) {
      auto rng = seed_stream(seed, p * replicas + i, tag::walk);
      const auto pos = walk_positions(g, u, times, rng);
      for (std::size_t k = 0; k < times.size(); ++k) hits[k] += pos[k] == v;
    }
    for (std::size_t k = 0; k < times.size(); ++k) {
      HeatKernelRow row;
      row.u = u;
      row.v = v;
      row.hops = hops;
      row.t = times[k];
      row.estimate = static_cast<double>(hits[k]) / static_cast<double>(replicas);
      row.stderr_ = std::sqrt(row.estimate * (1 - row.estimate) / static_cast<double>(replicas));
      const double d = hops;
      row.evaluated = d * d <= 10.0 * row.t * row.t;
      row.bound = heat_kernel_bound(deg_max, d, row.t);
      row.violation = row.evaluated && row.estimate > row.bound + 3.0 * row.stderr_;
      out.push_back(row);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Invasion of a red ball by the surrounding blue voter population

struct InvasionRow {
  double rho = 0;
  double radius = 0;
  std::size_t invaded = 0;
  std::size_t samples = 0;
  double probability = 0;
  Interval ci;
};

struct InvasionReport {
  std::vector<InvasionRow> rows;
  LinearFit fit;  // log P against rho^{2b - 3/2}
  bool fitted = false;
};

/// xi(0) = B(x, rho^b) n H, zeta(0) = H \ xi(0), pure voter run to time t;
/// reports P(q(x) blue at t). Replica i uses the same environment and dynamics
/// streams for every rho, which couples the runs monotonically.
inline InvasionReport invasion_probability_experiment(const FppSetup& s, const Point& x,
                                                      const std::vector<double>& rho_grid, double b, double t,
                                                      double box_side, std::size_t replicas, std::uint64_t seed,
                                                      std::size_t workers = 1) {
  std::vector<std::vector<char>> blue(rho_grid.size(), std::vector<char>(replicas, 0));
  parallel_for(replicas, workers, [&](std::size_t i) {
    auto grng = seed_stream(seed, i, tag::graph);
    auto env = sample_environment(s.dim, s.intensity, s.r, box_side, grng);
    const auto& q = env->q();
    const VertexId target = q(x);
    for (std::size_t k = 0; k < rho_grid.size(); ++k) {
      const double radius = std::pow(rho_grid[k], b);
      CompetitionState st(env->graph);
      for (VertexId v : q.giant_vertices())
        st.assign(v, dist2(env->graph.position(v), x) < radius * radius ? Color::red : Color::blue);
      auto drng = seed_stream(seed, i, tag::dynamics);
      StopCondition stop;
      stop.horizon = t;
      run(st, stop, drng, {.keep_colors = false});
      blue[k][i] = st.color(target) == Color::blue;
    }
  });
  InvasionReport rep;
  std::vector<double> xs, ys;
  for (std::size_t k = 0; k < rho_grid.size(); ++k) {
    InvasionRow row;
    row.rho = rho_grid[k];
    row.radius = std::pow(row.rho, b);
    row.samples = replicas;
    row.invaded = static_cast<std::size_t>(std::count(blue[k].begin(), blue[k].end(), 1));
    row.probability = static_cast<double>(row.invaded) / static_cast<double>(replicas);
    row.ci = wilson_interval(row.invaded, replicas);
    if (row.invaded > 0) {
      xs.push_back(std::pow(row.rho, 2 * b - 1.5));
      ys.push_back(std::log(row.probability));
    }
    rep.rows.push_back(row);
  }
  if (xs.size() >= 2) {
    rep.fit = linear_fit(xs, ys);
    rep.fitted = true;
  }
  return rep;
}

/// Chernoff bound P(X >= s) < (e lambda' / s)^s for X ~ Poisson(lambda').
inline double poisson_tail_bound(double mean, double s) {
  if (!(s > 0.0)) throw InvalidParameter("poisson_tail_bound: s must be > 0");
  if (!(mean >= 0.0)) throw InvalidParameter("poisson_tail_bound: mean must be >= 0");
  return std::pow(std::numbers::e * mean / s, s);
}

}  // namespace coexsim
