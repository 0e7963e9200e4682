#pragma once

#include <algorithm>
#include <functional>
#include <cstdint>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "coexsim/error.hpp"
#include "coexsim/fenwick.hpp"
#include "coexsim/fpp.hpp"
#include "coexsim/geometry.hpp"
#include "coexsim/parallel.hpp"
#include "coexsim/rgg.hpp"
#include "coexsim/rng.hpp"
#include "coexsim/stats.hpp"

namespace coexsim {

enum class Color : std::uint8_t { vacant = 0, red = 1, blue = 2 };

inline int color_code(Color c) { return static_cast<int>(c); }
inline Color other(Color c) { return c == Color::red ? Color::blue : Color::red; }

/// Per-vertex colors plus the total event rate sum_{y occupied} deg(y), kept
/// in a Fenwick tree so that a source can be drawn in O(log n).
class CompetitionState {
 public:
  explicit CompetitionState(const GeometricGraph& g)
      : g_(&g), color_(g.size(), Color::vacant), rate_(g.size()), vacant_(g.size()) {}

  const GeometricGraph& graph() const noexcept { return *g_; }
  Color color(VertexId v) const { return color_[v]; }
  const std::vector<Color>& colors() const noexcept { return color_; }
  double time() const noexcept { return time_; }
  void set_time(double t) { time_ = t; }
  std::int64_t total_rate() const noexcept { return rate_.total(); }
  std::size_t red() const noexcept { return red_; }
  std::size_t blue() const noexcept { return blue_; }
  std::size_t vacant() const noexcept { return vacant_; }
  std::size_t occupied() const noexcept { return red_ + blue_; }
  std::size_t count(Color c) const { return c == Color::red ? red_ : c == Color::blue ? blue_ : vacant_; }

  void assign(VertexId v, Color c) {
    const Color old = color_[v];
    if (old == c) return;
    counter(old) -= 1;
    counter(c) += 1;
    const auto deg = static_cast<std::int64_t>(g_->degree(v));
    if (old == Color::vacant) rate_.add(v, deg);
    if (c == Color::vacant) rate_.add(v, -deg);
    color_[v] = c;
  }

  /// Occupied arc chosen by a uniform draw in [0, total_rate()).
  std::pair<VertexId, VertexId> arc_at(std::int64_t u) const {
    std::int64_t offset = 0;
    const auto y = static_cast<VertexId>(rate_.find(u, offset));
    return {y, g_->arcs(y)[static_cast<std::size_t>(offset)].to};
  }

  /// Sum of occupied degrees recomputed from the colors alone.
  std::int64_t recomputed_rate() const {
    std::int64_t s = 0;
    for (std::size_t v = 0; v < color_.size(); ++v)
      if (color_[v] != Color::vacant) s += static_cast<std::int64_t>(g_->degree(static_cast<VertexId>(v)));
    return s;
  }

 private:
  std::size_t& counter(Color c) { return c == Color::red ? red_ : c == Color::blue ? blue_ : vacant_; }

  const GeometricGraph* g_;
  std::vector<Color> color_;
  Fenwick rate_;
  double time_ = 0.0;
  std::size_t red_ = 0, blue_ = 0, vacant_ = 0;
};

struct TrajectoryEvent {
  double time = 0;
  VertexId source = kNoVertex;
  VertexId target = kNoVertex;
  Color old_color = Color::vacant;
  Color new_color = Color::vacant;
};

enum class StepStatus { event, reached_limit, absorbing };

struct StepResult {
  StepStatus status = StepStatus::absorbing;
  TrajectoryEvent event;
};

/// One event: dt ~ Exp(L), source y with probability deg(y)/L, target a
/// uniform neighbour of y, which adopts y's colour (possibly a no-op). When the
/// event would land after `until`, time is advanced to `until` and nothing
/// happens; by memorylessness the next call continues the same process.
inline StepResult gillespie_step(CompetitionState& s, RngStream& rng,
                                 double until = std::numeric_limits<double>::infinity()) {
  StepResult out;
  const std::int64_t total = s.total_rate();
  if (total == 0) return out;
  const double dt = rng.exponential(static_cast<double>(total));
  if (s.time() + dt > until) {
    s.set_time(until);
    out.status = StepStatus::reached_limit;
    return out;
  }
  const auto [y, x] = s.arc_at(static_cast<std::int64_t>(rng.index(static_cast<std::uint64_t>(total))));
  s.set_time(s.time() + dt);
  out.status = StepStatus::event;
  out.event = TrajectoryEvent{s.time(), y, x, s.color(x), s.color(y)};
  s.assign(x, s.color(y));
  return out;
}

// ---------------------------------------------------------------------------
// Initial configurations

struct InitialConfigRule {
  enum class Kind { red_priority, blue_priority, bernoulli };
  Kind kind = Kind::red_priority;
  double p = 0.5;  // probability that an overlap vertex is red (bernoulli)

  static InitialConfigRule red_priority() { return {Kind::red_priority, 1.0}; }
  static InitialConfigRule blue_priority() { return {Kind::blue_priority, 0.0}; }
  static InitialConfigRule bernoulli(double p) {
    if (!(p > 0.0 && p < 1.0)) throw InvalidParameter("bernoulli rule: p must lie in (0, 1)");
    return {Kind::bernoulli, p};
  }
};

inline constexpr double kDefaultProbeSpacing = 0.5;

struct InitialConfiguration {
  CompetitionState state;
  std::vector<VertexId> red_seed;   // q(W)
  std::vector<VertexId> blue_seed;  // q(W')
  std::vector<VertexId> overlap;
  bool viable = false;              // both colours present
};

/// xi(0) within q(W), zeta(0) within q(W'), union exactly q(W u W'); the rule
/// decides colours on the overlap.
inline InitialConfiguration init_configuration(const QMap& q, const Region& w, const Region& w_prime,
                                               const InitialConfigRule& rule, RngStream& rng,
                                               double probe_spacing = kDefaultProbeSpacing) {
  if (q.empty()) throw NoComponent("init_configuration: empty giant component");
  InitialConfiguration init{CompetitionState(q.graph()), q_image(q, w, probe_spacing),
                            q_image(q, w_prime, probe_spacing), {}, false};
  std::set_intersection(init.red_seed.begin(), init.red_seed.end(), init.blue_seed.begin(), init.blue_seed.end(),
                        std::back_inserter(init.overlap));
  for (VertexId v : init.red_seed) init.state.assign(v, Color::red);
  for (VertexId v : init.blue_seed) init.state.assign(v, Color::blue);
  for (VertexId v : init.overlap) {
    Color c = Color::red;
    if (rule.kind == InitialConfigRule::Kind::blue_priority) c = Color::blue;
    if (rule.kind == InitialConfigRule::Kind::bernoulli) c = rng.bernoulli(rule.p) ? Color::red : Color::blue;
    init.state.assign(v, c);
  }
  init.viable = init.state.red() > 0 && init.state.blue() > 0;
  return init;
}

// ---------------------------------------------------------------------------
// Runs

struct StopCondition {
  std::optional<double> horizon;
  bool on_extinction = false;             // either colour extinct
  std::optional<double> boundary_margin;  // occupied vertex within margin of the box boundary
  bool on_full_occupation = false;
  std::vector<double> checkpoints;        // snapshot times; the run ends after the last one

  bool empty() const {
    return !horizon && !on_extinction && !boundary_margin && !on_full_occupation && checkpoints.empty();
  }
};

enum class StopReason { horizon, extinction, boundary, full_occupation, checkpoints_done, absorbing };

inline const char* stop_reason_name(StopReason r) {
  switch (r) {
    case StopReason::horizon: return "horizon";
    case StopReason::extinction: return "extinction";
    case StopReason::boundary: return "boundary";
    case StopReason::full_occupation: return "full_occupation";
    case StopReason::checkpoints_done: return "checkpoints_done";
    case StopReason::absorbing: return "absorbing";
  }
  return "unknown";
}

struct Snapshot {
  double time = 0;
  std::size_t red = 0, blue = 0, vacant = 0;
  std::vector<Color> colors;  // empty unless requested
};

struct RunOptions {
  bool keep_colors = true;
  std::vector<TrajectoryEvent>* log = nullptr;
  std::uint64_t audit_interval = 10000;
};

struct RunSummary {
  StopReason reason = StopReason::absorbing;
  std::uint64_t events = 0;
  std::uint64_t audits = 0;
  std::optional<double> red_extinction;
  std::optional<double> blue_extinction;
  std::vector<Snapshot> snapshots;
  double final_time = 0;

  bool coexisting() const { return !red_extinction && !blue_extinction; }
};

class RateAuditFailure : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

namespace detail {

inline bool near_boundary(const GeometricGraph& g, VertexId v, double margin) {
  const auto& ps = g.points();
  const auto p = g.position(v);
  for (std::size_t k = 0; k < p.size(); ++k)
    if (std::abs(p[k] - ps.box_center()[k]) > ps.box_side() / 2.0 - margin) return true;
  return false;
}

inline Snapshot take_snapshot(const CompetitionState& s, double t, bool keep) {
  Snapshot snap{t, s.red(), s.blue(), s.vacant(), {}};
  if (keep) snap.colors = s.colors();
  return snap;
}

}  // namespace detail

inline RunSummary run(CompetitionState& s, const StopCondition& stop, RngStream& rng, const RunOptions& opt = {}) {
  if (stop.empty()) throw InvalidParameter("run: at least one stop condition is required");
  std::vector<double> checkpoints = stop.checkpoints;
  std::sort(checkpoints.begin(), checkpoints.end());
  std::size_t next_cp = 0;
  while (next_cp < checkpoints.size() && checkpoints[next_cp] < s.time()) ++next_cp;

  RunSummary out;
  auto note_extinction = [&] {
    if (s.red() == 0 && !out.red_extinction) out.red_extinction = s.time();
    if (s.blue() == 0 && !out.blue_extinction) out.blue_extinction = s.time();
  };
  auto finish = [&](StopReason r) {
    out.reason = r;
    out.final_time = s.time();
    return out;
  };
  note_extinction();
  if (s.occupied() == 0) return finish(StopReason::absorbing);

  const double inf = std::numeric_limits<double>::infinity();
  while (true) {
    if (stop.on_extinction && (s.red() == 0 || s.blue() == 0)) return finish(StopReason::extinction);
    if (stop.on_full_occupation && s.vacant() == 0) return finish(StopReason::full_occupation);

    const double cp = next_cp < checkpoints.size() ? checkpoints[next_cp] : inf;
    const double limit = std::min(stop.horizon.value_or(inf), cp);
    const auto step = gillespie_step(s, rng, limit);

    if (step.status == StepStatus::absorbing) {
      for (; next_cp < checkpoints.size(); ++next_cp)
        if (!stop.horizon || checkpoints[next_cp] <= *stop.horizon)
          out.snapshots.push_back(detail::take_snapshot(s, checkpoints[next_cp], opt.keep_colors));
      return finish(StopReason::absorbing);
    }
    if (step.status == StepStatus::reached_limit) {
      if (cp == limit) {
        out.snapshots.push_back(detail::take_snapshot(s, cp, opt.keep_colors));
        ++next_cp;
      }
      if (stop.horizon && limit == *stop.horizon) return finish(StopReason::horizon);
      if (!stop.horizon && next_cp == checkpoints.size()) return finish(StopReason::checkpoints_done);
      continue;
    }

    const auto& ev = step.event;
    ++out.events;
    if (opt.log) opt.log->push_back(ev);
    if ((ev.new_color == Color::red && out.red_extinction) || (ev.new_color == Color::blue && out.blue_extinction))
      throw std::logic_error("run: an extinct colour reappeared");
    note_extinction();
    if (opt.audit_interval && out.events % opt.audit_interval == 0) {
      ++out.audits;
      if (s.recomputed_rate() != s.total_rate()) throw RateAuditFailure("run: incremental total rate drifted");
    }
    if (stop.boundary_margin && ev.old_color == Color::vacant &&
        detail::near_boundary(s.graph(), ev.target, *stop.boundary_margin))
      return finish(StopReason::boundary);
  }
}

// ---------------------------------------------------------------------------
// Occupancy and I/O

struct Occupancy {
  std::vector<VertexId> red, blue, vacant;
};

/// Partition of the giant vertices resident in `region` by colour.
inline Occupancy region_occupancy(const CompetitionState& s, const Region& region, const QMap& q) {
  Occupancy o;
  for (VertexId v : q.giant_vertices()) {
    if (!region.contains(q.graph().position(v))) continue;
    switch (s.color(v)) {
      case Color::red: o.red.push_back(v); break;
      case Color::blue: o.blue.push_back(v); break;
      case Color::vacant: o.vacant.push_back(v); break;
    }
  }
  return o;
}

inline void write_log_csv(std::ostream& os, const std::vector<TrajectoryEvent>& log) {
  os << "time,source,target,old,new\n";
  for (const auto& e : log) {
    detail::put_double(os, e.time);
    os << ',' << e.source << ',' << e.target << ',' << color_code(e.old_color) << ',' << color_code(e.new_color)
       << '\n';
  }
}

inline void write_snapshot_csv(std::ostream& os, const GeometricGraph& g, const std::vector<Color>& colors) {
  os << "vertex";
  for (std::size_t k = 0; k < g.dim(); ++k) os << ",x" << k;
  os << ",color\n";
  for (std::size_t v = 0; v < g.size(); ++v) {
    os << v;
    for (double c : g.position(static_cast<VertexId>(v))) {
      os << ',';
      detail::put_double(os, c);
    }
    os << ',' << color_code(colors[v]) << '\n';
  }
}

struct ReplayReport {
  bool ok = true;
  std::size_t first_bad = 0;
  std::string message;
};

/// Replays a full event log from the initial colours and checks every event:
/// nondecreasing times, adjacency, source occupied with the new colour, the
/// recorded old colour, monotone occupation and extinction permanence.
inline ReplayReport validate_replay(const GeometricGraph& g, std::vector<Color> colors,
                                    const std::vector<TrajectoryEvent>& log) {
  std::size_t red = std::count(colors.begin(), colors.end(), Color::red);
  std::size_t blue = std::count(colors.begin(), colors.end(), Color::blue);
  bool red_gone = red == 0, blue_gone = blue == 0;
  double t = 0.0;
  auto fail = [](std::size_t i, std::string m) { return ReplayReport{false, i, std::move(m)}; };
  for (std::size_t i = 0; i < log.size(); ++i) {
    const auto& e = log[i];
    if (e.time < t) return fail(i, "time decreased");
    t = e.time;
    if (e.source >= g.size() || e.target >= g.size() || !g.adjacent(e.source, e.target))
      return fail(i, "source and target not adjacent");
    if (colors[e.source] == Color::vacant) return fail(i, "vacant source");
    if (e.new_color != colors[e.source]) return fail(i, "new colour differs from source colour");
    if (e.old_color != colors[e.target]) return fail(i, "recorded old colour mismatch");
    if (e.new_color == Color::vacant) return fail(i, "occupied vertex vacated");
    if ((e.new_color == Color::red && red_gone) || (e.new_color == Color::blue && blue_gone))
      return fail(i, "extinct colour reappeared");
    auto bump = [&](Color c, int d) {
      if (c == Color::red) red += d;
      if (c == Color::blue) blue += d;
    };
    bump(e.old_color, -1);
    bump(e.new_color, +1);
    colors[e.target] = e.new_color;
    red_gone = red_gone || red == 0;
    blue_gone = blue_gone || blue == 0;
  }
  return {};
}

// ---------------------------------------------------------------------------
// Growth equivalence: merged colours versus the union of FPP balls

struct GrowthEquivalence {
  std::vector<double> engine;  // |chi(t)| per replica
  std::vector<double> fpp;     // |U_u H_t(u)| per replica
  double ks = 0;
  double critical = 0;
  double alpha = 0.01;
  std::size_t boundary_hits = 0;

  bool accepted() const { return ks < critical; }
};

namespace detail {

inline std::size_t occupied_at(const GeometricGraph& g, std::span<const VertexId> sources, double t, RngStream& rng,
                               double margin, bool& hit_boundary) {
  CompetitionState s(g);
  for (VertexId v : sources) s.assign(v, Color::red);
  StopCondition stop;
  stop.horizon = t;
  if (margin > 0) stop.boundary_margin = margin;
  const auto sum = run(s, stop, rng, {.keep_colors = false});
  hit_boundary = sum.reason == StopReason::boundary;
  return s.occupied();
}

inline std::size_t ball_union_size(const GeometricGraph& g, std::span<const VertexId> sources, double t,
                                   RngStream& rng) {
  const auto field = assign_weights(g, rng);
  const auto dm = shortest_times(g, field, sources, t);
  return static_cast<std::size_t>(std::count_if(dm.time.begin(), dm.time.end(), [&](double x) { return x <= t; }));
}

inline GrowthEquivalence finish_equivalence(GrowthEquivalence out, double alpha) {
  out.alpha = alpha;
  out.ks = ks_statistic(out.engine, out.fpp);
  out.critical = ks_critical(out.engine.size(), out.fpp.size(), alpha);
  return out;
}

}  // namespace detail

/// Annealed comparison: each side samples its own environments (engine replica
/// i uses index i, FPP replica i uses index replicas + i). Seeds are points
/// mapped through q.
inline GrowthEquivalence growth_equivalence_test(const FppSetup& s, const std::vector<Point>& seeds, double t,
                                                 double box_side, std::size_t replicas, std::uint64_t seed,
                                                 double alpha = 0.01, std::size_t workers = 1) {
  if (seeds.empty()) throw InvalidParameter("growth_equivalence_test: no seed points");
  GrowthEquivalence out;
  out.engine.assign(replicas, 0.0);
  out.fpp.assign(replicas, 0.0);
  std::vector<char> hit(replicas, 0);
  auto sources_of = [&](const Environment& env) {
    std::vector<VertexId> src;
    for (const auto& p : seeds) src.push_back(env.q()(p));
    std::sort(src.begin(), src.end());
    src.erase(std::unique(src.begin(), src.end()), src.end());
    return src;
  };
  parallel_for(2 * replicas, workers, [&](std::size_t job) {
    auto grng = seed_stream(seed, job, tag::graph);
    auto env = sample_environment(s.dim, s.intensity, s.r, box_side, grng);
    const auto src = sources_of(*env);
    if (job < replicas) {
      auto drng = seed_stream(seed, job, tag::dynamics);
      bool b = false;
      out.engine[job] = static_cast<double>(detail::occupied_at(env->graph, src, t, drng, s.r, b));
      hit[job] = b;
    } else {
      auto wrng = seed_stream(seed, job, tag::weights);
      out.fpp[job - replicas] = static_cast<double>(detail::ball_union_size(env->graph, src, t, wrng));
    }
  });
  out.boundary_hits = static_cast<std::size_t>(std::count(hit.begin(), hit.end(), 1));
  return detail::finish_equivalence(std::move(out), alpha);
}

/// Quenched comparison on a fixed graph with fixed source vertices.
inline GrowthEquivalence growth_equivalence_fixed(const GeometricGraph& g, const std::vector<VertexId>& sources,
                                                  double t, std::size_t replicas, std::uint64_t seed,
                                                  double alpha = 0.01) {
  GrowthEquivalence out;
  for (std::size_t i = 0; i < replicas; ++i) {
    auto drng = seed_stream(seed, i, tag::dynamics);
    auto wrng = seed_stream(seed, i, tag::weights);
    bool b = false;
    out.engine.push_back(static_cast<double>(detail::occupied_at(g, sources, t, drng, 0.0, b)));
    out.fpp.push_back(static_cast<double>(detail::ball_union_size(g, sources, t, wrng)));
  }
  return detail::finish_equivalence(std::move(out), alpha);
}

// ---------------------------------------------------------------------------
// Coexistence at a finite horizon

struct CoexistenceSetup {
  std::size_t dim = 2;
  double intensity = 1.0;
  double r = 2.0;
  double side = 60.0;
  bool torus = true;
  Region red_region = Region::point(Point{-15.0, 0.0});
  Region blue_region = Region::point(Point{15.0, 0.0});
  InitialConfigRule rule = InitialConfigRule::bernoulli(0.5);
  double horizon = 25.0;
  double probe_spacing = kDefaultProbeSpacing;
};

struct CoexistenceRow {
  std::size_t replica = 0;
  bool viable = false;
  bool coexist = false;
  std::size_t red = 0, blue = 0, vacant = 0;
  std::uint64_t events = 0;
  double end_time = 0;
};

struct CoexistenceReport {
  std::vector<CoexistenceRow> rows;
  double estimate = 0;
  Interval ci;
  std::size_t viable = 0;
};

/// One replica of the coexistence experiment. `log` receives the trajectory
/// and `at_end` sees the final state, both optional.
inline CoexistenceRow coexistence_replica(const CoexistenceSetup& c, std::uint64_t seed, std::size_t i,
                                          std::vector<TrajectoryEvent>* log = nullptr,
                                          const std::function<void(const CompetitionState&)>& at_end = {}) {
  auto grng = seed_stream(seed, i, tag::graph);
  auto irng = seed_stream(seed, i, tag::init);
  auto drng = seed_stream(seed, i, tag::dynamics);
  auto env = sample_environment(c.dim, c.intensity, c.r, c.side, grng, BuildOptions{c.torus});
  auto init = init_configuration(env->q(), c.red_region, c.blue_region, c.rule, irng, c.probe_spacing);
  StopCondition stop;
  stop.horizon = c.horizon;
  stop.on_extinction = true;
  const auto sum = run(init.state, stop, drng, {.keep_colors = false, .log = log});
  if (at_end) at_end(init.state);
  CoexistenceRow row;
  row.replica = i;
  row.viable = init.viable;
  row.coexist = init.viable && sum.coexisting() && sum.reason == StopReason::horizon;
  row.red = init.state.red();
  row.blue = init.state.blue();
  row.vacant = init.state.vacant();
  row.events = sum.events;
  row.end_time = sum.final_time;
  return row;
}

inline CoexistenceReport coexistence_experiment(const CoexistenceSetup& c, std::size_t replicas, std::uint64_t seed,
                                                std::size_t workers = 1) {
  CoexistenceReport rep;
  rep.rows.resize(replicas);
  parallel_for(replicas, workers, [&](std::size_t i) { rep.rows[i] = coexistence_replica(c, seed, i); });
  std::size_t k = 0;
  for (const auto& row : rep.rows) {
    k += row.coexist;
    rep.viable += row.viable;
  }
  rep.estimate = replicas ? static_cast<double>(k) / static_cast<double>(replicas) : 0.0;
  rep.ci = wilson_interval(k, replicas);
  return rep;
}

}  // namespace coexsim
