#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <queue>
#include <vector>

#include "coexsim/error.hpp"
#include "coexsim/geometry.hpp"
#include "coexsim/parallel.hpp"
#include "coexsim/rgg.hpp"
#include "coexsim/rng.hpp"
#include "coexsim/stats.hpp"

namespace coexsim {

inline constexpr double kUnreached = std::numeric_limits<double>::infinity();
inline constexpr std::uint32_t kUnreachedHops = std::numeric_limits<std::uint32_t>::max();

/// i.i.d. positive passage times, one per undirected edge (indexed by EdgeId).
struct PassageTimeField {
  std::vector<double> weight;
  std::uint64_t stream = 0;

  double operator[](EdgeId e) const { return weight[e]; }
  std::size_t size() const noexcept { return weight.size(); }
};

/// One Exp(1) draw per edge, in edge-id order.
inline PassageTimeField assign_weights(const GeometricGraph& g, RngStream& rng) {
  PassageTimeField f;
  f.stream = rng.id();
  f.weight.resize(g.edge_count());
  for (auto& w : f.weight) w = rng.exponential(1.0);
  return f;
}

/// Same, with any positive passage-time law. Zero draws violate P(tau = 0) = 0.
template <typename Sampler>
PassageTimeField assign_weights(const GeometricGraph& g, RngStream& rng, Sampler&& sample) {
  PassageTimeField f;
  f.stream = rng.id();
  f.weight.resize(g.edge_count());
  for (auto& w : f.weight) {
    w = sample(rng);
    if (!(w > 0.0)) throw InvalidParameter("assign_weights: passage times must be > 0");
  }
  return f;
}

struct DistanceMap {
  std::vector<VertexId> sources;
  std::vector<double> time;  // kUnreached when not reached

  double operator[](VertexId v) const { return time[v]; }
};

/// Label-setting shortest passage times from a set of sources. Vertices with
/// passage time above `cutoff` are left at kUnreached.
inline DistanceMap shortest_times(const GeometricGraph& g, const PassageTimeField& field,
                                  std::span<const VertexId> sources, double cutoff = kUnreached) {
  DistanceMap dm;
  dm.sources.assign(sources.begin(), sources.end());
  dm.time.assign(g.size(), kUnreached);
  using Item = std::pair<double, VertexId>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  std::vector<char> done(g.size(), 0);
  for (VertexId s : sources) {
    dm.time[s] = 0.0;
    heap.emplace(0.0, s);
  }
  while (!heap.empty()) {
    auto [t, v] = heap.top();
    heap.pop();
    if (done[v]) continue;
    if (t > cutoff) break;
    done[v] = 1;
    for (const auto& arc : g.arcs(v)) {
      const double nt = t + field[arc.edge];
      if (nt < dm.time[arc.to]) {
        dm.time[arc.to] = nt;
        heap.emplace(nt, arc.to);
      }
    }
  }
  if (std::isfinite(cutoff))
    for (std::size_t v = 0; v < g.size(); ++v)
      if (!done[v]) dm.time[v] = kUnreached;
  return dm;
}

inline DistanceMap shortest_times(const GeometricGraph& g, const PassageTimeField& field, VertexId source,
                                  double cutoff = kUnreached) {
  const VertexId s[] = {source};
  return shortest_times(g, field, s, cutoff);
}

inline double passage_time(const GeometricGraph& g, const PassageTimeField& field, VertexId u, VertexId v) {
  if (u == v) return 0.0;
  return shortest_times(g, field, u)[v];
}

/// T(x, y) = T(q(x), q(y)) for points of R^d.
inline double passage_time(const QMap& q, const PassageTimeField& field, Coords x, Coords y) {
  return passage_time(q.graph(), field, q(x), q(y));
}

/// H_t(x) = {y : T(x, y) <= t}, as the set of vertices.
inline std::vector<VertexId> passage_ball(const QMap& q, const PassageTimeField& field, Coords x, double t) {
  if (!(t >= 0.0)) throw InvalidParameter("passage_ball: t must be >= 0");
  const auto dm = shortest_times(q.graph(), field, q(x), t);
  std::vector<VertexId> out;
  for (std::size_t v = 0; v < dm.time.size(); ++v)
    if (dm.time[v] <= t) out.push_back(static_cast<VertexId>(v));
  return out;
}

inline std::vector<Point> spread_directions(std::size_t dim, std::size_t count, double rotation = 0.0) {
  if (dim != 2) {
    // Deterministic quasi-uniform directions on S^{d-1} (Fibonacci lattice on S^2).
    if (dim != 3) throw InvalidParameter("spread_directions: only d = 2, 3 supported");
    std::vector<Point> out;
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (std::size_t i = 0; i < count; ++i) {
      const double z = 1.0 - (2.0 * static_cast<double>(i) + 1.0) / static_cast<double>(count);
      const double rho = std::sqrt(1.0 - z * z);
      const double a = golden * static_cast<double>(i) + rotation;
      out.push_back(Point{rho * std::cos(a), rho * std::sin(a), z});
    }
    return out;
  }
  std::vector<Point> out;
  for (std::size_t i = 0; i < count; ++i)
    out.push_back(planar_direction(
        2, rotation + 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(count)));
  return out;
}

// ---------------------------------------------------------------------------
// Time constant

struct PhiEstimate {
  double phi = 0;
  double stderr_ = 0;
  double intercept = 0;
  double r2 = 0;
  std::vector<double> lengths;
  std::vector<double> mean_time;  // averaged over replicas and directions
  std::vector<std::vector<double>> per_replica;
};

/// Fits mean_time(L) = L / phi + c and returns phi = 1 / slope. `per_replica`
/// holds one direction-averaged time per length for each replica; the standard
/// error comes from the spread of per-replica slopes.
inline PhiEstimate fit_phi(const std::vector<double>& lengths, const std::vector<std::vector<double>>& per_replica) {
  if (per_replica.empty()) throw InvalidParameter("fit_phi: no replicas");
  PhiEstimate est;
  est.lengths = lengths;
  est.per_replica = per_replica;
  est.mean_time.assign(lengths.size(), 0.0);
  for (const auto& row : per_replica)
    for (std::size_t k = 0; k < lengths.size(); ++k) est.mean_time[k] += row[k];
  for (auto& m : est.mean_time) m /= static_cast<double>(per_replica.size());
  const auto fit = linear_fit(lengths, est.mean_time);
  if (!(fit.slope > 0.0)) throw EstimationFailure("estimate_phi: non-positive slope");
  est.phi = 1.0 / fit.slope;
  est.intercept = fit.intercept;
  est.r2 = fit.r2;
  if (per_replica.size() > 1) {
    std::vector<double> slopes;
    for (const auto& row : per_replica) slopes.push_back(linear_fit(lengths, row).slope);
    const auto s = summarize(slopes, false);
    est.stderr_ = s.stderr_ / (fit.slope * fit.slope);
  }
  return est;
}

struct FppSetup {
  std::size_t dim = 2;
  double intensity = 1.0;
  double r = 2.0;
  double margin = 10.0;  // extra box margin around the region of interest
};

/// One replica environment: PPP in a box of the given side, graph, labels,
/// Exp(1) weights. Streams: (seed, index, "graph") and (seed, index, "weights").
struct FppReplica {
  std::unique_ptr<Environment> env;
  PassageTimeField field;
};

inline FppReplica make_fpp_replica(const FppSetup& s, double side, std::uint64_t seed, std::uint64_t index) {
  auto grng = seed_stream(seed, index, tag::graph);
  auto wrng = seed_stream(seed, index, tag::weights);
  FppReplica rep;
  rep.env = sample_environment(s.dim, s.intensity, s.r, side, grng);
  if (rep.env->q().empty()) throw NoComponent("fpp replica: empty giant component");
  rep.field = assign_weights(rep.env->graph, wrng);
  return rep;
}

/// Estimates phi from E[T(o, L z)] over evenly spread directions z.
inline PhiEstimate estimate_phi(const FppSetup& s, std::size_t directions, const std::vector<double>& lengths,
                                std::size_t replicas, std::uint64_t seed, double rotation = 0.0,
                                std::size_t workers = 1) {
  if (lengths.size() < 2) throw InvalidParameter("estimate_phi: need >= 2 lengths");
  const double lmax = *std::max_element(lengths.begin(), lengths.end());
  const auto dirs = spread_directions(s.dim, directions, rotation);
  std::vector<std::vector<double>> rows(replicas, std::vector<double>(lengths.size(), 0.0));
  parallel_for(replicas, workers, [&](std::size_t i) {
    auto rep = make_fpp_replica(s, 2.0 * (lmax + s.margin), seed, i);
    const auto& q = rep.env->q();
    const auto dm = shortest_times(rep.env->graph, rep.field, q(Point(s.dim)));
    for (std::size_t k = 0; k < lengths.size(); ++k) {
      double sum = 0.0;
      for (const auto& z : dirs) sum += dm[q(coexsim::scaled(z, lengths[k]))];
      rows[i][k] = sum / static_cast<double>(dirs.size());
    }
  });
  return fit_phi(lengths, rows);
}

// ---------------------------------------------------------------------------
// Moderate deviations of passage times

struct DeviationRow {
  double distance = 0;
  double ell = 0;
  std::size_t exceed = 0;
  std::size_t samples = 0;
  double tail = 0;
  Interval ci;
};

struct DeviationReport {
  std::vector<DeviationRow> rows;
  std::vector<double> distances;
  // Per distance: fitted slope and R^2 of log(tail) against ell (rows with tail > 0).
  std::vector<LinearFit> decay;
  // Raw scaled deviations |T(x) - |x|/phi| / sqrt|x| per distance.
  std::vector<std::vector<double>> deviations;
};

inline DeviationReport moderate_deviation_experiment(const FppSetup& s, double phi,
                                                     const std::vector<double>& distances,
                                                     const std::vector<double>& ell_grid, std::size_t directions,
                                                     std::size_t replicas, std::uint64_t seed,
                                                     std::size_t workers = 1) {
  if (!(phi > 0)) throw InvalidParameter("moderate_deviation_experiment: phi must be > 0");
  const double dmax = *std::max_element(distances.begin(), distances.end());
  const auto dirs = spread_directions(s.dim, directions);
  std::vector<std::vector<std::vector<double>>> dev(replicas);
  parallel_for(replicas, workers, [&](std::size_t i) {
    auto rep = make_fpp_replica(s, 2.0 * (dmax + s.margin), seed, i);
    const auto& q = rep.env->q();
    const auto dm = shortest_times(rep.env->graph, rep.field, q(Point(s.dim)));
    dev[i].resize(distances.size());
    for (std::size_t k = 0; k < distances.size(); ++k)
      for (const auto& z : dirs) {
        const double t = dm[q(coexsim::scaled(z, distances[k]))];
        dev[i][k].push_back(std::abs(t - distances[k] / phi) / std::sqrt(distances[k]));
      }
  });
  DeviationReport rep;
  rep.distances = distances;
  rep.deviations.resize(distances.size());
  for (std::size_t k = 0; k < distances.size(); ++k) {
    auto& all = rep.deviations[k];
    for (const auto& d : dev) all.insert(all.end(), d[k].begin(), d[k].end());
    std::vector<double> xs, ys;
    for (double ell : ell_grid) {
      DeviationRow row;
      row.distance = distances[k];
      row.ell = ell;
      row.samples = all.size();
      row.exceed = static_cast<std::size_t>(std::count_if(all.begin(), all.end(), [&](double v) { return v > ell; }));
      row.tail = static_cast<double>(row.exceed) / static_cast<double>(row.samples);
      row.ci = wilson_interval(row.exceed, row.samples);
      if (row.exceed > 0) {
        xs.push_back(ell);
        ys.push_back(std::log(row.tail));
      }
      rep.rows.push_back(row);
    }
    rep.decay.push_back(xs.size() >= 2 ? linear_fit(xs, ys) : LinearFit{});
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Shape fluctuations

/// log(t)/sqrt(t), with log t floored at 1 so the band stays positive for t < e.
inline double fluctuation_band(double t) { return std::max(std::log(t), 1.0) / std::sqrt(t); }

struct ShapeRow {
  double t = 0;
  std::size_t replica = 0;
  double inner_radius = 0;   // min |v| over giant vertices with T(v) > t
  double outer_radius = 0;   // max |v| over vertices with T(v) <= t
  double c_inner = 0;
  double c_outer = 0;
  double c_tilde = 0;        // smallest constant making both inclusions hold
  bool truncated = false;    // H_t touched the box margin
};

struct ShapeReport {
  std::vector<ShapeRow> rows;
  std::vector<double> t_values;
  std::vector<double> median_c;
};

/// Vertex-level containment (1 - c b) B(o, phi) <= H_t / t <= (1 + c b) B(o, phi), b = log t / sqrt t.
inline ShapeRow shape_containment(const GeometricGraph& g, const ComponentLabeling& lab, const DistanceMap& dm,
                                  double phi, double t) {
  ShapeRow row;
  row.t = t;
  const Point o(g.dim());
  double outer = 0.0;
  double inner = kUnreached;
  const double half = g.points().box_side() / 2.0;
  for (std::size_t v = 0; v < g.size(); ++v) {
    if (!lab.in_giant(static_cast<VertexId>(v))) continue;
    const double n = norm(g.position(static_cast<VertexId>(v)));
    if (dm.time[v] <= t) {
      outer = std::max(outer, n);
      auto p = g.position(static_cast<VertexId>(v));
      for (double c : p)
        if (std::abs(c) > half - g.radius()) row.truncated = true;
    } else {
      inner = std::min(inner, n);
    }
  }
  if (!std::isfinite(inner)) inner = half;
  const double b = fluctuation_band(t);
  const double scale = phi * t;
  row.inner_radius = inner;
  row.outer_radius = outer;
  row.c_inner = std::max(0.0, (1.0 - inner / scale) / b);
  row.c_outer = std::max(0.0, (outer / scale - 1.0) / b);
  row.c_tilde = std::max(row.c_inner, row.c_outer);
  return row;
}

inline ShapeReport shape_fluctuation_experiment(const FppSetup& s, double phi, const std::vector<double>& t_values,
                                                std::size_t replicas, std::uint64_t seed, std::size_t workers = 1) {
  ShapeReport rep;
  rep.t_values = t_values;
  rep.rows.resize(t_values.size() * replicas);
  const double tmax = *std::max_element(t_values.begin(), t_values.end());
  const double side = 2.0 * (1.15 * phi * tmax + s.margin);
  parallel_for(replicas, workers, [&](std::size_t i) {
    auto rep_env = make_fpp_replica(s, side, seed, i);
    const auto& q = rep_env.env->q();
    const auto dm = shortest_times(rep_env.env->graph, rep_env.field, q(Point(s.dim)), tmax);
    for (std::size_t k = 0; k < t_values.size(); ++k) {
      auto row = shape_containment(rep_env.env->graph, rep_env.env->labels, dm, phi, t_values[k]);
      row.replica = i;
      rep.rows[k * replicas + i] = row;
    }
  });
  for (std::size_t k = 0; k < t_values.size(); ++k) {
    std::vector<double> c;
    for (std::size_t i = 0; i < replicas; ++i) c.push_back(rep.rows[k * replicas + i].c_tilde);
    rep.median_c.push_back(median(c));
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Graph distance

inline std::vector<std::uint32_t> hop_distances(const GeometricGraph& g, VertexId source) {
  std::vector<std::uint32_t> d(g.size(), kUnreachedHops);
  std::vector<VertexId> queue{source};
  d[source] = 0;
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const VertexId v = queue[head];
    for (const auto& arc : g.arcs(v))
      if (d[arc.to] == kUnreachedHops) {
        d[arc.to] = d[v] + 1;
        queue.push_back(arc.to);
      }
  }
  return d;
}

inline std::uint32_t hop_distance(const GeometricGraph& g, VertexId u, VertexId v) {
  return hop_distances(g, u)[v];
}

struct HopRow {
  double s = 0;
  double c0 = 0;  // smallest c with B(x, s) n H inside the D-ball of radius c s in `quantile` of replicas
  std::vector<double> ratios;
};

/// For each s, the per-replica ratio max{D(q(o), v) : v in B(o, s) n H} / s and its upper quantile.
inline std::vector<HopRow> hop_vs_euclid_experiment(const FppSetup& s, const std::vector<double>& s_values,
                                                    std::size_t replicas, std::uint64_t seed,
                                                    double quantile = 0.99, std::size_t workers = 1) {
  const double smax = *std::max_element(s_values.begin(), s_values.end());
  std::vector<std::vector<double>> ratio(s_values.size(), std::vector<double>(replicas, 0.0));
  parallel_for(replicas, workers, [&](std::size_t i) {
    auto grng = seed_stream(seed, i, tag::graph);
    auto env = sample_environment(s.dim, s.intensity, s.r, 2.0 * (smax + s.margin), grng);
    const Point o(s.dim);
    const auto hops = hop_distances(env->graph, env->q()(o));
    for (std::size_t k = 0; k < s_values.size(); ++k) {
      double worst = 0.0;
      for (VertexId v : env->q().giant_vertices())
        if (dist2(env->graph.position(v), o) < s_values[k] * s_values[k])
          worst = std::max(worst, static_cast<double>(hops[v]));
      ratio[k][i] = worst / s_values[k];
    }
  });
  std::vector<HopRow> out;
  for (std::size_t k = 0; k < s_values.size(); ++k)
    out.push_back(HopRow{s_values[k], upper_order_statistic(ratio[k], quantile), ratio[k]});
  return out;
}

}  // namespace coexsim
