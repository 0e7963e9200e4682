#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "coexsim/competition.hpp"
#include "coexsim/error.hpp"
#include "coexsim/fpp.hpp"
#include "coexsim/geometry.hpp"
#include "coexsim/parallel.hpp"
#include "coexsim/rgg.hpp"
#include "coexsim/stats.hpp"

namespace coexsim {

/// Exponents a (angle decay), b (shape window), growth factor d, initial time
/// t0, time constant phi and the two sector axes.
struct RegimeParams {
  double a = 0.9;
  double b = 0.78;
  double d = 0.5;
  double t0 = 1e8;
  double phi = 1.0;
  Point w{1.0, 0.0};
  Point w_prime{-1.0, 0.0};
};

struct ParamReport {
  std::vector<std::string> violations;
  double window_exponent = 0;     // 2b - 3/2
  bool window_positive = false;   // 2b - 3/2 > 0
  bool window_below = false;      // 2b - 3/2 < b - 1/2

  bool ok() const { return violations.empty(); }
};

inline ParamReport validate_params(const RegimeParams& p) {
  ParamReport rep;
  auto need = [&](bool cond, const std::string& what) {
    if (!cond) rep.violations.push_back(what);
  };
  need(p.a > 0.75 && p.a < 1.0, "a must lie in (3/4, 1)");
  need(p.b > 0.75 && p.b < 1.0, "b must lie in (3/4, 1)");
  need(p.b < 2.0 * p.a - 1.0, "b must be < 2a - 1");
  need(p.d > 0.0 && p.d < 1.0, "d must lie in (0, 1)");
  need(p.t0 > 0.0 && std::isfinite(p.t0), "t0 must be > 0");
  need(p.phi > 0.0 && std::isfinite(p.phi), "phi must be > 0");
  need(p.w.dim() == p.w_prime.dim() && p.w.dim() >= 2, "w and w' must share a dimension >= 2");
  need(std::abs(norm(p.w) - 1.0) < 1e-9 && std::abs(norm(p.w_prime) - 1.0) < 1e-9, "w and w' must be unit vectors");
  rep.window_exponent = 2.0 * p.b - 1.5;
  rep.window_positive = rep.window_exponent > 0.0;
  rep.window_below = rep.window_exponent < p.b - 0.5;
  return rep;
}

/// (2(1+d)/d)^{1/(1-a)}. An exponent within 1e-9 of an integer is evaluated
/// by exact repeated multiplication, so integral cases come out exact.
inline double s_bar(double d, double a) {
  if (!(d > 0.0) || !(a < 1.0)) throw InvalidParameter("s_bar: need d > 0 and a < 1");
  const double base = 2.0 * (1.0 + d) / d;
  const double e = 1.0 / (1.0 - a);
  const double k = std::round(e);
  if (std::abs(e - k) < 1e-9 && k <= 1024) {
    double out = 1.0;
    for (int i = 0; i < static_cast<int>(k); ++i) out *= base;
    return out;
  }
  return std::pow(base, e);
}

struct RegimeSchedule {
  std::vector<double> t;  // t_n = t0 (1+d)^n
  std::vector<double> r;  // angles
  double ratio = 0;       // (1+d)^{a-1}
  double angle_scale = 1; // 1 for the literal schedule
  double limit = 0;       // lim r_n

  std::size_t n_max() const { return t.size() - 1; }
  /// Every r_n in (0, pi/2).
  bool angles_valid() const {
    return std::all_of(r.begin(), r.end(), [](double x) { return x > 0.0 && x < std::numbers::pi / 2.0; });
  }
};

inline RegimeSchedule schedule(const RegimeParams& p, std::size_t n_max, double angle_scale = 1.0) {
  if (!(p.t0 > 0.0) || !(p.d > 0.0) || !(p.a < 1.0)) throw InvalidParameter("schedule: invalid parameters");
  if (!(angle_scale > 0.0)) throw InvalidParameter("schedule: angle scale must be > 0");
  RegimeSchedule s;
  s.ratio = std::pow(1.0 + p.d, p.a - 1.0);
  s.angle_scale = angle_scale;
  const double base = std::pow(p.t0, p.a - 1.0) / (1.0 - s.ratio);
  s.limit = angle_scale * base;
  for (std::size_t n = 0; n <= n_max; ++n) {
    const double k = static_cast<double>(n);
    s.t.push_back(p.t0 * std::pow(1.0 + p.d, k));
    s.r.push_back(angle_scale * (1.0 + std::pow(s.ratio, k)) * base);
  }
  return s;
}

/// Desk-scale analog: the literal schedule with every angle multiplied by the
/// constant that makes r_0 equal `r0`. Time ratios and the angle recursion
/// shape are kept; only the angular unit changes.
inline RegimeSchedule analog_schedule(const RegimeParams& p, std::size_t n_max, double r0) {
  if (!(r0 > 0.0 && r0 < std::numbers::pi / 2.0)) throw InvalidParameter("analog_schedule: r0 must lie in (0, pi/2)");
  const auto literal = schedule(p, 0);
  return schedule(p, n_max, r0 / literal.r[0]);
}

/// Angle condition theta(w, w') > 2 r_0.
inline bool sector_condition(const RegimeParams& p, const RegimeSchedule& s) {
  return angle_between(p.w, p.w_prime) > 2.0 * s.r[0];
}

// ---------------------------------------------------------------------------
// Regions

namespace detail {

inline Region cone_clamped(const Point& axis, double angle) {
  return Region::cone(axis, std::min(angle, std::numbers::pi));
}

inline Region scaled_annulus(std::size_t dim, double phi, double inner, double outer) {
  if (!(inner < outer)) return Region::empty(dim);
  return Region::scaled(phi, Region::annulus(Point(dim), std::max(inner, 0.0), outer));
}

inline Region scaled_ball(std::size_t dim, double phi, double radius) {
  return Region::scaled(phi, Region::ball(Point(dim), std::max(radius, 0.0)));
}

}  // namespace detail

struct SectorRegions {
  Region phi = Region::empty(2);       // Phi_n(z)
  Region phi_plus = Region::empty(2);  // Phi_n^+(z)
  Region phi_minus = Region::empty(2); // Phi_n^-(z)
  Region chi_mask = Region::empty(2);  // Cone(z, r_n) \ B(o, phi t_n / (1+d))
  std::vector<VertexId> phi_vertices, phi_plus_vertices, phi_minus_vertices, chi_mask_vertices;
};

struct RegionSet {
  std::size_t n = 0;
  SectorRegions w, w_prime;
  Region red_zone = Region::empty(2);   // R_n = Phi_n(w)
  Region blue_zone = Region::empty(2);  // B_n
  Region blue_limit = Region::empty(2); // B_n'
  std::vector<VertexId> red_zone_vertices, blue_zone_vertices, blue_limit_vertices;
};

inline std::vector<VertexId> resident_vertices(const QMap& q, const Region& reg) {
  std::vector<VertexId> out;
  for (VertexId v : q.giant_vertices())
    if (reg.contains(q.graph().position(v))) out.push_back(v);
  return out;
}

inline SectorRegions sector_regions(const RegimeParams& p, const RegimeSchedule& s, std::size_t n, const Point& z,
                                    double edge_radius) {
  const std::size_t dim = z.dim();
  const double t = s.t[n], tb = std::pow(t, p.b), inner = t / (1.0 + p.d);
  SectorRegions out;
  const Region cone = detail::cone_clamped(z, s.r[n]);
  out.phi = Region::intersect({detail::scaled_annulus(dim, p.phi, inner, t - tb), cone});
  out.phi_plus = Region::intersect({detail::scaled_annulus(dim, p.phi, inner, t + tb), cone});
  const double shift = edge_radius / p.phi;
  out.phi_minus = Region::intersect(
      {detail::scaled_annulus(dim, p.phi, inner + shift, t - tb - shift), detail::cone_clamped(z, s.r[n] / 2.0)});
  out.chi_mask = Region::minus(cone, Region::ball(Point(dim), p.phi * inner));
  return out;
}

/// Region predicates for step n plus the giant vertices resident in each.
/// The graph radius enters Phi_n^- only.
inline RegionSet build_regions(const RegimeParams& p, const RegimeSchedule& s, std::size_t n, const QMap* q = nullptr) {
  if (n + 1 >= s.t.size()) throw RangeError("build_regions: n must be below the schedule length minus one");
  const std::size_t dim = p.w.dim();
  const double edge_radius = q ? q->graph().radius() : 0.0;
  RegionSet rs;
  rs.n = n;
  rs.w = sector_regions(p, s, n, p.w, edge_radius);
  rs.w_prime = sector_regions(p, s, n, p.w_prime, edge_radius);
  const double t = s.t[n], tb = std::pow(t, p.b);
  rs.red_zone = rs.w.phi;
  rs.blue_zone = Region::unite(
      {detail::scaled_ball(dim, p.phi, t / (1.0 + p.d)),
       Region::minus(detail::scaled_ball(dim, p.phi, t + tb), detail::cone_clamped(p.w, s.r[n]))});
  rs.blue_limit =
      Region::unite({detail::scaled_ball(dim, p.phi, t), Region::complement(detail::cone_clamped(p.w, s.r[n + 1]))});
  if (q) {
    for (auto* sec : {&rs.w, &rs.w_prime}) {
      sec->phi_vertices = resident_vertices(*q, sec->phi);
      sec->phi_plus_vertices = resident_vertices(*q, sec->phi_plus);
      sec->phi_minus_vertices = resident_vertices(*q, sec->phi_minus);
      sec->chi_mask_vertices = resident_vertices(*q, sec->chi_mask);
    }
    rs.red_zone_vertices = resident_vertices(*q, rs.red_zone);
    rs.blue_zone_vertices = resident_vertices(*q, rs.blue_zone);
    rs.blue_limit_vertices = resident_vertices(*q, rs.blue_limit);
  }
  return rs;
}

// ---------------------------------------------------------------------------
// Events

struct ShapeCheck {
  bool inner = false;  // B(o, phi(t - t^b)) inside the q-preimage of the occupied set
  bool outer = false;  // q-preimage inside B(o, phi(t + t^b))
  bool holds() const { return inner && outer; }
};

/// Gamma_n at one snapshot. The q-preimage of the occupied set is probed on
/// the lattice spacing * Z^d (clipped to the graph box) together with the
/// giant vertices themselves.
inline ShapeCheck shape_event(const QMap& q, const std::vector<Color>& colors, double phi, double t, double b,
                              double spacing) {
  const auto& g = q.graph();
  const std::size_t dim = g.dim();
  const double tb = std::pow(t, b);
  const double rin = phi * (t - tb), rout = phi * (t + tb);
  ShapeCheck c{true, true};
  auto occupied = [&](VertexId v) { return colors[v] != Color::vacant; };
  for (VertexId v : q.giant_vertices()) {
    const double n2 = dist2(g.position(v), Point(dim));
    if (rin > 0 && n2 < rin * rin && !occupied(v)) c.inner = false;
    if (occupied(v) && !(n2 < rout * rout)) c.outer = false;
  }
  const auto& ps = g.points();
  std::vector<long> first(dim), last(dim), idx(dim);
  for (std::size_t k = 0; k < dim; ++k) {
    first[k] = static_cast<long>(std::ceil((ps.box_center()[k] - ps.box_side() / 2.0) / spacing));
    last[k] = static_cast<long>(std::floor((ps.box_center()[k] + ps.box_side() / 2.0) / spacing));
    if (first[k] > last[k]) return c;
  }
  idx = first;
  Point pt(dim);
  while (c.inner || c.outer) {
    for (std::size_t k = 0; k < dim; ++k) pt[k] = static_cast<double>(idx[k]) * spacing;
    const double n2 = dot(pt, pt);
    const bool in_inner = rin > 0 && n2 < rin * rin;
    const bool out_outer = !(n2 < rout * rout);
    if (in_inner || out_outer) {
      const bool occ = occupied(q(pt));
      if (in_inner && !occ) c.inner = false;
      if (out_outer && occ) c.outer = false;
    }
    std::size_t k = 0;
    while (k < dim && idx[k] == last[k]) idx[k] = first[k], ++k;
    if (k == dim) break;
    ++idx[k];
  }
  return c;
}

struct EventFlags {
  std::vector<bool> theta_steps;            // Phi_n(w), Phi_n(w') both nonempty, n <= N
  bool theta = false;
  std::vector<std::optional<ShapeCheck>> gamma;  // per n <= N, when a snapshot exists
  bool red_sector = false;                  // chi_{w,0} inside xi(t0)
  bool blue_sector = false;                 // chi_{w',0} inside zeta(t0)
  bool psi = false;
};

inline constexpr double kSnapshotTimeTolerance = 1e-9;

/// Theta up to N, Gamma_n at every snapshot taken at some t_n (n <= N), and Psi.
/// A missing snapshot at t_0 is an error since Psi needs it.
inline EventFlags detect_events(const std::vector<Snapshot>& snapshots, const RegimeParams& p,
                                const RegimeSchedule& s, std::size_t n_max, const QMap& q,
                                double probe_spacing = 1.0) {
  if (n_max + 1 >= s.t.size()) throw RangeError("detect_events: N exceeds the schedule");
  EventFlags ev;
  ev.theta = true;
  for (std::size_t n = 0; n <= n_max; ++n) {
    const auto rs = build_regions(p, s, n, &q);
    const bool ok = !rs.w.phi_vertices.empty() && !rs.w_prime.phi_vertices.empty();
    ev.theta_steps.push_back(ok);
    ev.theta = ev.theta && ok;
  }
  auto find_snapshot = [&](double t) -> const Snapshot* {
    for (const auto& sn : snapshots)
      if (std::abs(sn.time - t) <= kSnapshotTimeTolerance * std::max(1.0, t)) return &sn;
    return nullptr;
  };
  ev.gamma.resize(n_max + 1);
  for (std::size_t n = 0; n <= n_max; ++n)
    if (const auto* sn = find_snapshot(s.t[n]); sn && !sn->colors.empty())
      ev.gamma[n] = shape_event(q, sn->colors, p.phi, s.t[n], p.b, probe_spacing);
  const auto* s0 = find_snapshot(s.t[0]);
  if (!s0 || s0->colors.empty()) throw IncompleteData("detect_events: no snapshot with colours at t_0");
  const auto rs0 = build_regions(p, s, 0, &q);
  ev.red_sector = std::all_of(rs0.w.chi_mask_vertices.begin(), rs0.w.chi_mask_vertices.end(),
                              [&](VertexId v) { return s0->colors[v] != Color::blue; });
  ev.blue_sector = std::all_of(rs0.w_prime.chi_mask_vertices.begin(), rs0.w_prime.chi_mask_vertices.end(),
                               [&](VertexId v) { return s0->colors[v] != Color::red; });
  ev.psi = ev.red_sector && ev.blue_sector && ev.theta && ev.gamma[0] && ev.gamma[0]->holds();
  return ev;
}

// ---------------------------------------------------------------------------
// Experiments

struct PsiSetup {
  FppSetup model;
  RegimeParams params;
  double r0 = std::numbers::pi / 6.0;  // analog angle
  std::size_t n_max = 0;               // Theta evaluated for n <= n_max
  double seed_offset = 5.0;            // seeds at +- offset * w
  double box_side = 0;                 // 0: derived from the outer shape radius
  double probe_spacing = 1.0;
};

struct PsiRow {
  std::size_t replica = 0;
  EventFlags flags;
};

struct PsiReport {
  RegimeSchedule schedule;
  std::vector<PsiRow> rows;
  double frequency = 0;
  Interval ci;
};

/// Red seeded at +offset w, blue at +offset w', run to t_0, Psi evaluated on the
/// analog schedule.
inline PsiReport psi_experiment(const PsiSetup& ps, std::size_t replicas, std::uint64_t seed,
                                std::size_t workers = 1) {
  PsiReport rep;
  rep.schedule = analog_schedule(ps.params, ps.n_max + 1, ps.r0);
  const auto& p = ps.params;
  const double t0 = rep.schedule.t[0];
  const double side =
      ps.box_side > 0 ? ps.box_side : 2.0 * (p.phi * (t0 + std::pow(t0, p.b)) + ps.seed_offset + ps.model.margin);
  rep.rows.resize(replicas);
  parallel_for(replicas, workers, [&](std::size_t i) {
    auto grng = seed_stream(seed, i, tag::graph);
    auto irng = seed_stream(seed, i, tag::init);
    auto drng = seed_stream(seed, i, tag::dynamics);
    auto env = sample_environment(ps.model.dim, ps.model.intensity, ps.model.r, side, grng);
    auto init = init_configuration(env->q(), Region::point(coexsim::scaled(p.w, ps.seed_offset)),
                                   Region::point(coexsim::scaled(p.w_prime, ps.seed_offset)),
                                   InitialConfigRule::bernoulli(0.5), irng);
    StopCondition stop;
    stop.checkpoints = {t0};
    const auto sum = run(init.state, stop, drng);
    rep.rows[i] = PsiRow{i, detect_events(sum.snapshots, p, rep.schedule, ps.n_max, env->q(), ps.probe_spacing)};
  });
  std::size_t k = 0;
  for (const auto& row : rep.rows) k += row.flags.psi;
  rep.frequency = replicas ? static_cast<double>(k) / static_cast<double>(replicas) : 0.0;
  rep.ci = wilson_interval(k, replicas);
  return rep;
}

/// Planar window of the given side straddling the boundary ray of Cone(w, r_n),
/// just outside phi B(o, t_n): where blue has to cross to leave B_n'.
inline Point sector_window_center(const RegimeParams& p, const RegimeSchedule& s, std::size_t n, double side) {
  if (p.w.dim() != 2) throw InvalidParameter("sector_window_center: planar only");
  if (n + 1 >= s.t.size()) throw RangeError("sector_window_center: n outside the schedule");
  const double a = std::atan2(p.w[1], p.w[0]) + 0.5 * (s.r[n] + s.r[n + 1]);
  const double rad = p.phi * s.t[n] + side / 2.0;
  return Point{rad * std::cos(a), rad * std::sin(a)};
}

struct ContainmentSetup {
  FppSetup model;
  RegimeParams params;
  double r0 = std::numbers::pi / 6.0;   // analog angle; <= 0 keeps the literal schedule
  std::size_t n = 0;
  std::optional<double> duration;       // default d t_n
  bool empty_blue = false;              // zeta-bar = empty
  // Simulation window; side 0 means the box holding the disc reached by time (1+d) t_n.
  Point window_center{0.0, 0.0};
  double window_side = 0;
};

struct ContainmentRow {
  std::size_t replica = 0;
  bool escaped = false;
  std::size_t blue_outside = 0;
  std::size_t red = 0, blue = 0;
  std::uint64_t events = 0;
};

struct ContainmentReport {
  RegimeSchedule schedule;
  std::vector<ContainmentRow> rows;
  double probability = 0;
  Interval ci;
};

/// Escape probability P(zeta(d t_n) not inside B_n') from the canonical start
/// zeta-bar = B_n, xi-bar = the rest of phi B(o, t_n + t_n^b) (which contains R_n).
inline ContainmentReport containment_experiment(const ContainmentSetup& cs, std::size_t replicas, std::uint64_t seed,
                                                std::size_t workers = 1) {
  const auto& p = cs.params;
  ContainmentReport rep;
  rep.schedule = cs.r0 > 0 ? analog_schedule(p, cs.n + 1, cs.r0) : schedule(p, cs.n + 1);
  const double t = rep.schedule.t[cs.n];
  const double duration = cs.duration.value_or(p.d * t);
  const double side = cs.window_side > 0 ? cs.window_side
                                         : 2.0 * (1.2 * p.phi * (t + std::pow(t, p.b) + duration) + cs.model.margin);
  const Point center = cs.window_side > 0 ? cs.window_center : Point(p.w.dim());
  const double occupied_radius = p.phi * (t + std::pow(t, p.b));
  rep.rows.resize(replicas);
  parallel_for(replicas, workers, [&](std::size_t i) {
    auto grng = seed_stream(seed, i, tag::graph);
    auto drng = seed_stream(seed, i, tag::dynamics);
    auto pts = sample_ppp(cs.model.intensity, center, side, grng);
    Environment env(build_graph(std::move(pts), cs.model.r));
    const auto rs = build_regions(p, rep.schedule, cs.n, nullptr);
    CompetitionState st(env.graph);
    for (VertexId v : env.q().giant_vertices()) {
      const auto x = env.graph.position(v);
      if (rs.blue_zone.contains(x)) {
        if (!cs.empty_blue) st.assign(v, Color::blue);
      } else if (dist2(x, Point(p.w.dim())) < occupied_radius * occupied_radius) {
        st.assign(v, Color::red);
      }
    }
    StopCondition stop;
    stop.horizon = duration;
    const auto sum = run(st, stop, drng, {.keep_colors = false});
    auto& row = rep.rows[i];
    row.replica = i;
    for (VertexId v : env.q().giant_vertices())
      if (st.color(v) == Color::blue && !rs.blue_limit.contains(env.graph.position(v))) ++row.blue_outside;
    row.escaped = row.blue_outside > 0;
    row.red = st.red();
    row.blue = st.blue();
    row.events = sum.events;
  });
  std::size_t k = 0;
  for (const auto& row : rep.rows) k += row.escaped;
  rep.probability = replicas ? static_cast<double>(k) / static_cast<double>(replicas) : 0.0;
  rep.ci = wilson_interval(k, replicas);
  return rep;
}

}  // namespace coexsim
