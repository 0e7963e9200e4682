#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "coexsim/competition.hpp"
#include "coexsim/config.hpp"
#include "coexsim/duality.hpp"
#include "coexsim/error.hpp"
#include "coexsim/fpp.hpp"
#include "coexsim/paths.hpp"
#include "coexsim/regimes.hpp"
#include "coexsim/rgg.hpp"
#include "coexsim/rng.hpp"
#include "coexsim/stats.hpp"

namespace coexsim {

inline constexpr int kFormatVersion = 1;

enum class ExitCode : int { ok = 0, usage = 1, config_error = 2, runtime_error = 3 };

// ---------------------------------------------------------------------------
// Tables

using Cell = std::variant<std::int64_t, double, std::string>;

inline std::string format_cell(const Cell& c) {
  if (auto* i = std::get_if<std::int64_t>(&c)) return std::to_string(*i);
  if (auto* d = std::get_if<double>(&c)) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, *d);
    return std::string(buf, res.ptr);
  }
  return std::get<std::string>(c);
}

class Table {
 public:
  Table() = default;
  explicit Table(std::vector<std::string> header) : header_(std::move(header)) {}

  const std::vector<std::string>& header() const noexcept { return header_; }
  const std::vector<std::vector<Cell>>& rows() const noexcept { return rows_; }

  void add(std::vector<Cell> row) {
    if (row.size() != header_.size()) throw std::logic_error("Table::add: row width differs from header");
    rows_.push_back(std::move(row));
  }

  /// Lexicographic order on the cells; numbers compare numerically.
  void canonicalize() {
    std::stable_sort(rows_.begin(), rows_.end(), [](const auto& a, const auto& b) {
      for (std::size_t k = 0; k < a.size(); ++k) {
        const int c = compare(a[k], b[k]);
        if (c) return c < 0;
      }
      return false;
    });
  }

  void write_csv(std::ostream& os) const {
    os << "# format_version=" << kFormatVersion << '\n';
    for (std::size_t k = 0; k < header_.size(); ++k) os << (k ? "," : "") << header_[k];
    os << '\n';
    for (const auto& row : rows_) {
      for (std::size_t k = 0; k < row.size(); ++k) os << (k ? "," : "") << format_cell(row[k]);
      os << '\n';
    }
  }

  std::string csv() const {
    std::ostringstream os;
    write_csv(os);
    return os.str();
  }

 private:
  static double numeric(const Cell& c) {
    if (auto* i = std::get_if<std::int64_t>(&c)) return static_cast<double>(*i);
    return std::get<double>(c);
  }
  static int compare(const Cell& a, const Cell& b) {
    const bool sa = std::holds_alternative<std::string>(a), sb = std::holds_alternative<std::string>(b);
    if (sa || sb) {
      const auto x = format_cell(a), y = format_cell(b);
      return x < y ? -1 : (y < x ? 1 : 0);
    }
    const double x = numeric(a), y = numeric(b);
    return x < y ? -1 : (y < x ? 1 : 0);
  }

  std::vector<std::string> header_;
  std::vector<std::vector<Cell>> rows_;
};

inline Cell cell(std::size_t v) { return static_cast<std::int64_t>(v); }
inline Cell cell(bool v) { return static_cast<std::int64_t>(v ? 1 : 0); }
inline Cell cell(double v) { return v; }

inline nlohmann::json to_json(const SummaryStats& s) {
  return {{"mean", s.mean}, {"stderr", s.stderr_}, {"ci_low", s.ci.lo}, {"ci_high", s.ci.hi},
          {"count", s.count}, {"proportion", s.proportion}};
}
inline nlohmann::json to_json(const Interval& i) { return {i.lo, i.hi}; }
inline nlohmann::json to_json(const LinearFit& f) {
  return {{"slope", f.slope}, {"intercept", f.intercept}, {"r2", f.r2}};
}

// ---------------------------------------------------------------------------
// Configuration

struct ModelConfig {
  std::size_t dim = 2;
  double intensity = 1.0;
  double r = 2.0;
  double side = 60.0;
  bool torus = false;
  double margin = 10.0;

  FppSetup fpp() const { return FppSetup{dim, intensity, r, margin}; }
};

struct ExperimentConfig {
  std::string kind;
  ModelConfig model;
  RegimeParams regime;
  std::size_t replicas = 100;
  std::uint64_t seed = 1;
  std::size_t workers = 1;
  std::string out_dir = ".";
  ConfigFile raw;  // experiment-specific keys live in section [experiment]
};

inline const std::vector<std::string>& experiment_kinds() {
  static const std::vector<std::string> kinds{"rgg-stats", "fpp-shape",        "fpp-deviation", "compete",
                                              "duality-check", "invasion-scaling", "regimes-check", "paths-test"};
  return kinds;
}

namespace detail {
inline std::size_t positive_count(const ConfigFile& c, const std::string& key, std::size_t fallback) {
  const auto v = c.get_u64(key, fallback);
  if (v == 0) throw ConfigError(key, "must be >= 1");
  return static_cast<std::size_t>(v);
}
inline double positive(const ConfigFile& c, const std::string& key, double fallback) {
  const double v = c.get_double(key, fallback);
  if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(key, "must be > 0");
  return v;
}
}  // namespace detail

/// Typed view of a parsed file. Model and run fields are checked here; the
/// rest is checked by the module validators when the experiment runs.
inline ExperimentConfig make_config(const ConfigFile& file) {
  ExperimentConfig cfg;
  cfg.raw = file;
  const ConfigFile& c = cfg.raw;
  cfg.kind = c.get_string("kind", "");
  if (cfg.kind.empty()) throw ConfigError("kind", "missing experiment kind");
  const auto& kinds = experiment_kinds();
  if (std::find(kinds.begin(), kinds.end(), cfg.kind) == kinds.end())
    throw ConfigError("kind", "unknown experiment kind '" + cfg.kind + "'");
  cfg.replicas = detail::positive_count(c, "run.replicas", cfg.replicas);
  cfg.seed = c.get_u64("run.seed", cfg.seed);
  cfg.workers = detail::positive_count(c, "run.workers", cfg.workers);
  cfg.out_dir = c.get_string("run.out", cfg.out_dir);
  cfg.model.dim = static_cast<std::size_t>(c.get_u64("model.dim", 2));
  if (cfg.model.dim != 2 && cfg.model.dim != 3) throw ConfigError("model.dim", "must be 2 or 3");
  cfg.model.intensity = detail::positive(c, "model.intensity", cfg.model.intensity);
  cfg.model.r = detail::positive(c, "model.r", cfg.model.r);
  cfg.model.side = detail::positive(c, "model.side", cfg.model.side);
  cfg.model.torus = c.get_bool("model.torus", cfg.model.torus);
  cfg.model.margin = c.get_double("model.margin", cfg.model.margin);
  if (!(cfg.model.margin >= 0.0)) throw ConfigError("model.margin", "must be >= 0");
  auto& p = cfg.regime;
  p.a = c.get_double("regime.a", p.a);
  p.b = c.get_double("regime.b", p.b);
  p.d = c.get_double("regime.d", p.d);
  p.t0 = c.get_double("regime.t0", p.t0);
  p.phi = c.get_double("regime.phi", p.phi);
  const double wa = c.get_double("regime.w_angle", 0.0);
  const double wpa = c.get_double("regime.w_prime_angle", std::numbers::pi);
  p.w = planar_direction(cfg.model.dim, wa);
  p.w_prime = planar_direction(cfg.model.dim, wpa);
  return cfg;
}

struct ExperimentResult {
  std::string kind;
  std::map<std::string, Table> tables;  // file stem -> rows
  std::map<std::string, std::string> files;  // extra text files: name -> contents
  nlohmann::json summary;
};

// ---------------------------------------------------------------------------
// Experiments

namespace detail {

inline ExperimentResult run_rgg_stats(const ExperimentConfig& cfg) {
  const auto& m = cfg.model;
  Table t({"replica", "points", "edges", "mean_degree", "max_degree", "giant_size", "giant_fraction", "origin_hit"});
  std::vector<std::vector<Cell>> rows(cfg.replicas);
  parallel_for(cfg.replicas, cfg.workers, [&](std::size_t i) {
    auto rng = seed_stream(cfg.seed, i, tag::graph);
    auto env = sample_environment(m.dim, m.intensity, m.r, m.side, rng, BuildOptions{m.torus});
    const auto& g = env->graph;
    const std::size_t n = g.size();
    bool hit = false;
    for (VertexId v : env->labels.giant_vertices())
      if (dist2(g.position(v), Point(m.dim)) < m.r * m.r) hit = true;
    rows[i] = {cell(i), cell(n), cell(g.edge_count()),
               cell(n ? 2.0 * static_cast<double>(g.edge_count()) / static_cast<double>(n) : 0.0),
               cell(g.max_degree()), cell(env->labels.giant_size()),
               cell(n ? static_cast<double>(env->labels.giant_size()) / static_cast<double>(n) : 0.0), cell(hit)};
  });
  std::vector<double> deg, frac, hit;
  for (auto& row : rows) {
    deg.push_back(std::get<double>(row[3]));
    frac.push_back(std::get<double>(row[6]));
    hit.push_back(static_cast<double>(std::get<std::int64_t>(row[7])));
    t.add(std::move(row));
  }
  ExperimentResult res;
  if (cfg.raw.get_bool("experiment.dump_graph", false)) {
    auto rng = seed_stream(cfg.seed, 0, tag::graph);
    auto env = sample_environment(m.dim, m.intensity, m.r, m.side, rng, BuildOptions{m.torus});
    std::ostringstream os;
    dump_graph(env->graph, os);
    res.files["rgg-graph.txt"] = os.str();
  }
  res.tables["rgg-stats"] = std::move(t);
  res.summary = {{"mean_degree", to_json(summarize(deg, false))},
                 {"giant_fraction", to_json(summarize(frac, false))},
                 {"theta_r", to_json(summarize(hit, true))}};
  return res;
}

inline ExperimentResult run_fpp_shape(const ExperimentConfig& cfg) {
  const auto& c = cfg.raw;
  const auto lengths = c.get_list("experiment.lengths", {20, 22.5, 25, 27.5, 30});
  const auto directions = positive_count(c, "experiment.directions", 32);
  const auto times = c.get_list("experiment.times", {});
  const auto est = estimate_phi(cfg.model.fpp(), directions, lengths, cfg.replicas, cfg.seed, 0.0, cfg.workers);
  ExperimentResult res;
  Table t({"replica", "length", "mean_time"});
  for (std::size_t i = 0; i < est.per_replica.size(); ++i)
    for (std::size_t k = 0; k < lengths.size(); ++k) t.add({cell(i), cell(lengths[k]), cell(est.per_replica[i][k])});
  res.tables["fpp-phi"] = std::move(t);
  res.summary = {{"phi", est.phi}, {"phi_stderr", est.stderr_}, {"intercept", est.intercept}, {"r2", est.r2}};
  if (!times.empty()) {
    const double phi = c.get_double("experiment.phi", est.phi);
    const auto shape = shape_fluctuation_experiment(cfg.model.fpp(), phi, times, cfg.replicas,
                                                    seed_stream(cfg.seed, 0, tag::instance).id(), cfg.workers);
    Table s({"t", "replica", "inner_radius", "outer_radius", "c_inner", "c_outer", "c_tilde", "truncated"});
    for (const auto& row : shape.rows)
      s.add({cell(row.t), cell(row.replica), cell(row.inner_radius), cell(row.outer_radius), cell(row.c_inner),
             cell(row.c_outer), cell(row.c_tilde), cell(row.truncated)});
    res.tables["fpp-shape"] = std::move(s);
    res.summary["shape_phi"] = phi;
    res.summary["median_c_tilde"] = nlohmann::json::object();
    for (std::size_t k = 0; k < times.size(); ++k)
      res.summary["median_c_tilde"][format_cell(times[k])] = shape.median_c[k];
  }
  return res;
}

inline ExperimentResult run_fpp_deviation(const ExperimentConfig& cfg) {
  const auto& c = cfg.raw;
  const auto distances = c.get_list("experiment.distances", {50});
  const auto ell = c.get_list("experiment.ell", {0, 0.02, 0.04, 0.06, 0.08, 0.1, 0.12, 0.15, 0.2, 0.25, 0.3});
  const auto directions = positive_count(c, "experiment.directions", 32);
  double phi = c.get_double("experiment.phi", 0.0);
  ExperimentResult res;
  if (!(phi > 0.0)) {
    const auto est = estimate_phi(cfg.model.fpp(), directions, c.get_list("experiment.phi_lengths", {40, 45, 50, 55, 60}),
                                  positive_count(c, "experiment.phi_replicas", 100),
                                  seed_stream(cfg.seed, 0, tag::instance).id(), 0.0, cfg.workers);
    phi = est.phi;
    res.summary["phi_stderr"] = est.stderr_;
  }
  const auto rep = moderate_deviation_experiment(cfg.model.fpp(), phi, distances, ell, directions, cfg.replicas,
                                                 cfg.seed, cfg.workers);
  Table t({"distance", "ell", "exceed", "samples", "tail", "ci_low", "ci_high"});
  for (const auto& row : rep.rows)
    t.add({cell(row.distance), cell(row.ell), cell(row.exceed), cell(row.samples), cell(row.tail), cell(row.ci.lo),
           cell(row.ci.hi)});
  res.tables["fpp-deviation"] = std::move(t);
  res.summary["phi"] = phi;
  res.summary["decay"] = nlohmann::json::array();
  for (std::size_t k = 0; k < rep.distances.size(); ++k)
    res.summary["decay"].push_back({{"distance", rep.distances[k]}, {"fit", to_json(rep.decay[k])}});
  return res;
}

inline Point point_from_list(const std::string& key, const std::vector<double>& v, std::size_t dim) {
  if (v.size() != dim) throw ConfigError(key, "expected " + std::to_string(dim) + " coordinates");
  return Point(v);
}

inline InitialConfigRule rule_from_config(const ConfigFile& c) {
  const auto name = c.get_string("experiment.rule", "bernoulli");
  if (name == "red_priority") return InitialConfigRule::red_priority();
  if (name == "blue_priority") return InitialConfigRule::blue_priority();
  if (name == "bernoulli") {
    const double p = c.get_double("experiment.p", 0.5);
    if (!(p > 0.0 && p < 1.0)) throw ConfigError("experiment.p", "must lie in (0, 1)");
    return InitialConfigRule::bernoulli(p);
  }
  throw ConfigError("experiment.rule", "unknown rule '" + name + "'");
}

inline ExperimentResult run_compete(const ExperimentConfig& cfg) {
  const auto& c = cfg.raw;
  const auto& m = cfg.model;
  CoexistenceSetup s;
  s.dim = m.dim;
  s.intensity = m.intensity;
  s.r = m.r;
  s.side = m.side;
  s.torus = c.get_bool("model.torus", true);
  const double gap = m.side / 4.0;
  std::vector<double> red_default(m.dim, 0.0), blue_default(m.dim, 0.0);
  red_default[0] = -gap;
  blue_default[0] = gap;
  s.red_region = Region::point(point_from_list("experiment.red", c.get_list("experiment.red", red_default), m.dim));
  s.blue_region = Region::point(point_from_list("experiment.blue", c.get_list("experiment.blue", blue_default), m.dim));
  s.rule = rule_from_config(c);
  s.horizon = positive(c, "experiment.horizon", 25.0);
  const auto rep = coexistence_experiment(s, cfg.replicas, cfg.seed, cfg.workers);
  Table t({"replica", "viable", "coexist", "red", "blue", "vacant", "events", "end_time"});
  for (const auto& row : rep.rows)
    t.add({cell(row.replica), cell(row.viable), cell(row.coexist), cell(row.red), cell(row.blue), cell(row.vacant),
           cell(static_cast<std::size_t>(row.events)), cell(row.end_time)});
  ExperimentResult res;
  if (c.get_bool("experiment.trajectory", false)) {
    std::vector<TrajectoryEvent> log;
    std::ostringstream snap;
    coexistence_replica(s, cfg.seed, 0, &log, [&](const CompetitionState& st) {
      write_snapshot_csv(snap, st.graph(), st.colors());
    });
    std::ostringstream os;
    write_log_csv(os, log);
    res.files["compete-trajectory.csv"] = os.str();
    res.files["compete-snapshot.csv"] = snap.str();
  }
  res.tables["compete"] = std::move(t);
  res.summary = {{"coexistence", rep.estimate}, {"ci", to_json(rep.ci)}, {"viable", rep.viable},
                 {"horizon", s.horizon}, {"torus", s.torus}};
  return res;
}

/// Small named graphs used by the duality checks.
inline GeometricGraph named_graph(const std::string& name) {
  if (name == "k4") return graph_from_edges(4, {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}});
  if (name == "cycle5-chord") return graph_from_edges(5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 0}, {0, 2}});
  if (name == "grid3") {
    std::vector<std::pair<VertexId, VertexId>> e;
    for (VertexId i = 0; i < 3; ++i)
      for (VertexId j = 0; j < 3; ++j) {
        if (j + 1 < 3) e.emplace_back(3 * i + j, 3 * i + j + 1);
        if (i + 1 < 3) e.emplace_back(3 * i + j, 3 * (i + 1) + j);
      }
    return graph_from_edges(9, e);
  }
  throw ConfigError("experiment.graph", "unknown graph '" + name + "' (k4, cycle5-chord, grid3)");
}

inline ExperimentResult run_duality_check(const ExperimentConfig& cfg) {
  const auto& c = cfg.raw;
  const auto g = named_graph(c.get_string("experiment.graph", "k4"));
  const double t = positive(c, "experiment.t", 1.0);
  // Initial colouring: vertices listed in experiment.red are red, the rest blue.
  std::vector<double> red_list = c.get_list("experiment.red", {0});
  std::vector<Color> init(g.size(), Color::blue);
  for (double v : red_list) {
    if (v < 0 || v >= static_cast<double>(g.size()) || v != std::floor(v))
      throw ConfigError("experiment.red", "vertex id out of range");
    init[static_cast<std::size_t>(v)] = Color::red;
  }
  const auto rep = voter_forward_vs_dual(g, init, t, cfg.replicas, cfg.seed);
  Table tab({"vertex", "forward", "dual", "stderr"});
  for (std::size_t v = 0; v < g.size(); ++v)
    tab.add({cell(v), cell(rep.forward[v]), cell(rep.dual[v]), cell(rep.stderr_[v])});
  ExperimentResult res;
  res.tables["duality-check"] = std::move(tab);
  res.summary = {{"max_discrepancy", rep.max_discrepancy}, {"max_z", rep.max_z}, {"t", t}};
  return res;
}

inline ExperimentResult run_invasion_scaling(const ExperimentConfig& cfg) {
  const auto& c = cfg.raw;
  const auto rho = c.get_list("experiment.rho", {4, 8, 16, 32});
  const double b = c.get_double("experiment.b", 0.78);
  const double t = positive(c, "experiment.t", 2.0);
  const auto exit_replicas = positive_count(c, "experiment.exit_replicas", cfg.replicas);
  const auto& m = cfg.model;
  ExperimentResult res;
  const auto inv = invasion_probability_experiment(m.fpp(), Point(m.dim), rho, b, t, m.side, cfg.replicas, cfg.seed,
                                                   cfg.workers);
  Table ti({"rho", "radius", "invaded", "samples", "probability", "ci_low", "ci_high"});
  for (const auto& row : inv.rows)
    ti.add({cell(row.rho), cell(row.radius), cell(row.invaded), cell(row.samples), cell(row.probability),
            cell(row.ci.lo), cell(row.ci.hi)});
  res.tables["invasion"] = std::move(ti);
  // Exit times on one fixed environment (quenched), x = q(o).
  auto grng = seed_stream(cfg.seed, 0, tag::graph);
  auto env = sample_environment(m.dim, m.intensity, m.r, c.get_double("experiment.exit_side", 80.0), grng);
  const VertexId x = env->q()(Point(m.dim));
  const auto ex = exit_time_experiment(env->graph, x, rho, b, t, exit_replicas,
                                       seed_stream(cfg.seed, 1, tag::instance).id(), cfg.workers);
  Table te({"rho", "radius", "exits", "samples", "probability", "ci_low", "ci_high"});
  for (const auto& row : ex.rows)
    te.add({cell(row.rho), cell(row.radius), cell(row.exits), cell(row.samples), cell(row.probability),
            cell(row.ci.lo), cell(row.ci.hi)});
  res.tables["exit-times"] = std::move(te);
  res.summary = {{"b", b}, {"t", t}};
  if (inv.fitted) res.summary["invasion_fit"] = to_json(inv.fit);
  if (ex.fitted) res.summary["exit_fit"] = to_json(ex.fit);
  return res;
}

inline ExperimentResult run_regimes_check(const ExperimentConfig& cfg) {
  const auto& c = cfg.raw;
  const auto& p = cfg.regime;
  const auto n_max = static_cast<std::size_t>(c.get_u64("experiment.n_max", 50));
  const double r0 = c.get_double("experiment.r0", 0.0);
  ExperimentResult res;
  const auto check = validate_params(p);
  res.summary["violations"] = check.violations;
  res.summary["window_exponent"] = check.window_exponent;
  res.summary["window_positive"] = check.window_positive;
  res.summary["window_below"] = check.window_below;
  if (!check.ok()) return res;
  const auto sch = r0 > 0 ? analog_schedule(p, n_max, r0) : schedule(p, n_max);
  Table t({"n", "t", "r", "t_residual", "r_residual"});
  for (std::size_t n = 0; n <= n_max; ++n) {
    double tres = 0, rres = 0;
    if (n < n_max) {
      tres = std::abs(sch.t[n + 1] - sch.t[n] - p.d * sch.t[n]) / sch.t[n];
      const double step = sch.angle_scale * std::pow(sch.t[n], p.a - 1.0);
      rres = std::abs(sch.r[n] - sch.r[n + 1] - step) / step;
    }
    t.add({cell(n), cell(sch.t[n]), cell(sch.r[n]), cell(tres), cell(rres)});
  }
  res.tables["regimes-schedule"] = std::move(t);
  res.summary["s_bar"] = s_bar(p.d, p.a);
  res.summary["t0_above_s_bar"] = p.t0 > s_bar(p.d, p.a);
  res.summary["angle_scale"] = sch.angle_scale;
  res.summary["angles_valid"] = sch.angles_valid();
  res.summary["sector_condition"] = sector_condition(p, sch);
  res.summary["r_limit"] = sch.limit;
  res.summary["r_last_minus_half_r0"] = sch.r[n_max] - sch.r[0] / 2.0;

  if (c.get_bool("experiment.psi", false)) {
    PsiSetup ps;
    ps.model = cfg.model.fpp();
    ps.params = p;
    ps.r0 = r0 > 0 ? r0 : std::numbers::pi / 6.0;
    ps.n_max = static_cast<std::size_t>(c.get_u64("experiment.psi_n", 0));
    ps.seed_offset = c.get_double("experiment.psi_offset", p.phi * std::pow(p.t0, p.b) / 2.0);
    ps.probe_spacing = positive(c, "experiment.probe_spacing", 1.0);
    const auto rep = psi_experiment(ps, cfg.replicas, cfg.seed, cfg.workers);
    Table tp({"replica", "theta", "gamma_inner", "gamma_outer", "red_sector", "blue_sector", "psi"});
    for (const auto& row : rep.rows) {
      const auto& f = row.flags;
      tp.add({cell(row.replica), cell(f.theta), cell(f.gamma[0] && f.gamma[0]->inner),
              cell(f.gamma[0] && f.gamma[0]->outer), cell(f.red_sector), cell(f.blue_sector), cell(f.psi)});
    }
    res.tables["regimes-psi"] = std::move(tp);
    res.summary["psi_frequency"] = rep.frequency;
    res.summary["psi_ci"] = to_json(rep.ci);
  }
  if (c.get_bool("experiment.containment", false)) {
    ContainmentSetup cs;
    cs.model = cfg.model.fpp();
    cs.params = p;
    cs.r0 = r0;
    cs.n = static_cast<std::size_t>(c.get_u64("experiment.containment_n", 0));
    cs.window_side = c.get_double("experiment.window_side", 0.0);
    if (cs.window_side > 0) {
      const auto wsch = r0 > 0 ? analog_schedule(p, cs.n + 1, r0) : schedule(p, cs.n + 1);
      cs.window_center = sector_window_center(p, wsch, cs.n, cs.window_side);
    }
    const auto rep = containment_experiment(cs, cfg.replicas, seed_stream(cfg.seed, 2, tag::instance).id(),
                                            cfg.workers);
    Table tc({"replica", "escaped", "blue_outside", "red", "blue", "events"});
    for (const auto& row : rep.rows)
      tc.add({cell(row.replica), cell(row.escaped), cell(row.blue_outside), cell(row.red), cell(row.blue),
              cell(static_cast<std::size_t>(row.events))});
    res.tables["regimes-containment"] = std::move(tc);
    res.summary["escape_probability"] = rep.probability;
    res.summary["escape_ci"] = to_json(rep.ci);
  }
  return res;
}

/// Random connected graph on n vertices: a random tree plus `extra` chords.
inline GeometricGraph random_connected_graph(std::size_t n, std::size_t extra, RngStream& rng) {
  std::vector<std::pair<VertexId, VertexId>> e;
  for (std::size_t v = 1; v < n; ++v) e.emplace_back(static_cast<VertexId>(rng.index(v)), static_cast<VertexId>(v));
  for (std::size_t k = 0; k < extra; ++k) {
    const auto a = rng.index(n), b = rng.index(n);
    if (a != b) e.emplace_back(static_cast<VertexId>(a), static_cast<VertexId>(b));
  }
  return graph_from_edges(n, std::move(e));
}

struct PathsInstance {
  GeometricGraph graph;
  Configuration start, target;
};

/// Instance i of the path test: connected, some degree >= 3 vertex, both
/// colours in the start configuration. Redraws until the conditions hold.
inline PathsInstance paths_instance(std::uint64_t seed, std::size_t i, std::size_t max_n) {
  auto rng = seed_stream(seed, i, tag::instance);
  for (;;) {
    const std::size_t n = 4 + rng.index(max_n - 3);
    auto g = random_connected_graph(n, rng.index(2 * n), rng);
    if (!find_branch_vertex(g)) continue;
    Configuration s(n), t(n);
    for (auto& v : s) v = static_cast<std::uint8_t>(rng.index(3));
    for (auto& v : t) v = static_cast<std::uint8_t>(1 + rng.index(2));
    if (std::count(s.begin(), s.end(), 1) == 0 || std::count(s.begin(), s.end(), 2) == 0) continue;
    return {std::move(g), std::move(s), std::move(t)};
  }
}

inline ExperimentResult run_paths_test(const ExperimentConfig& cfg) {
  const auto max_n = static_cast<std::size_t>(cfg.raw.get_u64("experiment.max_n", 50));
  if (max_n < 4) throw ConfigError("experiment.max_n", "must be >= 4");
  Table t({"instance", "vertices", "edges", "x", "length", "valid", "final_ok", "target_ok"});
  std::vector<std::vector<Cell>> rows(cfg.replicas);
  parallel_for(cfg.replicas, cfg.workers, [&](std::size_t i) {
    const auto inst = paths_instance(cfg.seed, i, max_n);
    const auto path = construct_growth_invasion_path(inst.graph, inst.start, inst.target);
    bool target_ok = true;
    for (std::size_t v = 0; v < inst.graph.size(); ++v)
      if (v != path.x && v != path.x3 && path.final()[v] != inst.target[v]) target_ok = false;
    rows[i] = {cell(i), cell(inst.graph.size()), cell(inst.graph.edge_count()), cell(std::size_t{path.x}),
               cell(path.length()), cell(!first_invalid_step(inst.graph, path)),
               cell(satisfies_final_conditions(inst.graph, path)), cell(target_ok)};
  });
  std::size_t pass = 0;
  for (auto& row : rows) {
    pass += std::get<std::int64_t>(row[5]) && std::get<std::int64_t>(row[6]);
    t.add(std::move(row));
  }
  ExperimentResult res;
  {
    const auto inst = paths_instance(cfg.seed, 0, max_n);
    std::ostringstream os;
    write_path(os, construct_growth_invasion_path(inst.graph, inst.start, inst.target));
    res.files["paths-test-path.txt"] = os.str();
  }
  res.tables["paths-test"] = std::move(t);
  res.summary = {{"instances", cfg.replicas}, {"passed", pass}};
  return res;
}

}  // namespace detail

inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  static const std::map<std::string, std::function<ExperimentResult(const ExperimentConfig&)>> runners{
      {"rgg-stats", detail::run_rgg_stats},         {"fpp-shape", detail::run_fpp_shape},
      {"fpp-deviation", detail::run_fpp_deviation}, {"compete", detail::run_compete},
      {"duality-check", detail::run_duality_check}, {"invasion-scaling", detail::run_invasion_scaling},
      {"regimes-check", detail::run_regimes_check}, {"paths-test", detail::run_paths_test}};
  auto it = runners.find(cfg.kind);
  if (it == runners.end()) throw ConfigError("kind", "unknown experiment kind '" + cfg.kind + "'");
  auto res = it->second(cfg);
  res.kind = cfg.kind;
  for (auto& [name, table] : res.tables) table.canonicalize();
  nlohmann::json meta = {{"format_version", kFormatVersion}, {"kind", cfg.kind},   {"seed", cfg.seed},
                         {"replicas", cfg.replicas},         {"dim", cfg.model.dim}, {"intensity", cfg.model.intensity},
                         {"r", cfg.model.r},                 {"side", cfg.model.side}};
  meta["results"] = std::move(res.summary);
  res.summary = std::move(meta);
  return res;
}

/// Writes <stem>.csv per table and <kind>.json into `dir`.
inline std::vector<std::filesystem::path> write_outputs(const ExperimentResult& res, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  for (const auto& [name, table] : res.tables) {
    const auto path = dir / (name + ".csv");
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    table.write_csv(os);
    written.push_back(path);
  }
  for (const auto& [name, text] : res.files) {
    const auto path = dir / name;
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os << text;
    written.push_back(path);
  }
  const auto path = dir / (res.kind + ".json");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << res.summary.dump(2) << '\n';
  written.push_back(path);
  return written;
}

}  // namespace coexsim
