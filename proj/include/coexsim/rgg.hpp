#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "coexsim/error.hpp"
#include "coexsim/geometry.hpp"
#include "coexsim/parallel.hpp"
#include "coexsim/rng.hpp"
#include "coexsim/stats.hpp"

namespace coexsim {

using VertexId = std::uint32_t;
using EdgeId = std::uint32_t;
inline constexpr VertexId kNoVertex = std::numeric_limits<VertexId>::max();

struct BuildOptions {
  // Wrap-around metric on the generating box (coexistence experiments only).
  bool torus = false;
};

/// Random geometric graph: {u, v} is an edge iff |u - v| < r. Immutable
/// after construction. Edge ids are assigned in lexicographic (i < j) order.
class GeometricGraph {
 public:
  struct Arc {
    VertexId to;
    EdgeId edge;
  };

  GeometricGraph(PointSet points, double radius, bool torus, std::vector<std::pair<VertexId, VertexId>> edges)
      : points_(std::move(points)), radius_(radius), torus_(torus), edges_(std::move(edges)) {
    const std::size_t n = points_.size();
    offsets_.assign(n + 1, 0);
    for (auto [i, j] : edges_) {
      ++offsets_[i + 1];
      ++offsets_[j + 1];
    }
    std::partial_sum(offsets_.begin(), offsets_.end(), offsets_.begin());
    arcs_.resize(2 * edges_.size());
    std::vector<std::size_t> fill(offsets_.begin(), offsets_.end() - 1);
    for (EdgeId e = 0; e < edges_.size(); ++e) {
      auto [i, j] = edges_[e];
      arcs_[fill[i]++] = Arc{j, e};
      arcs_[fill[j]++] = Arc{i, e};
    }
    for (std::size_t v = 0; v < n; ++v)
      std::sort(arcs_.begin() + offsets_[v], arcs_.begin() + offsets_[v + 1],
                [](const Arc& a, const Arc& b) { return a.to < b.to; });
  }

  std::size_t size() const noexcept { return points_.size(); }
  std::size_t edge_count() const noexcept { return edges_.size(); }
  std::size_t dim() const noexcept { return points_.dim(); }
  double radius() const noexcept { return radius_; }
  bool torus() const noexcept { return torus_; }
  const PointSet& points() const noexcept { return points_; }
  Coords position(VertexId v) const { return points_[v]; }
  const std::vector<std::pair<VertexId, VertexId>>& edges() const noexcept { return edges_; }

  std::span<const Arc> arcs(VertexId v) const {
    return {arcs_.data() + offsets_[v], offsets_[v + 1] - offsets_[v]};
  }
  std::size_t degree(VertexId v) const { return offsets_[v + 1] - offsets_[v]; }
  std::size_t max_degree() const {
    std::size_t m = 0;
    for (std::size_t v = 0; v < size(); ++v) m = std::max(m, degree(static_cast<VertexId>(v)));
    return m;
  }
  bool adjacent(VertexId u, VertexId v) const {
    auto a = arcs(u);
    return std::binary_search(a.begin(), a.end(), Arc{v, 0},
                              [](const Arc& x, const Arc& y) { return x.to < y.to; });
  }

  /// Squared distance under the graph's metric (wrapped when torus).
  double metric_dist2(Coords a, Coords b) const {
    double s = 0.0;
    const double side = points_.box_side();
    for (std::size_t k = 0; k < a.size(); ++k) {
      double t = a[k] - b[k];
      if (torus_) {
        t = std::fmod(t, side);
        if (t > side / 2) t -= side;
        if (t < -side / 2) t += side;
      }
      s += t * t;
    }
    return s;
  }

 private:
  PointSet points_;
  double radius_;
  bool torus_;
  std::vector<std::pair<VertexId, VertexId>> edges_;
  std::vector<std::size_t> offsets_;
  std::vector<Arc> arcs_;
};

/// A graph with prescribed edges (no geometry). Vertices are placed on the
/// unit circle so positions stay distinct; the radius field is nominal.
inline GeometricGraph graph_from_edges(std::size_t n, std::vector<std::pair<VertexId, VertexId>> edges) {
  std::vector<double> flat;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(std::max<std::size_t>(n, 1));
    flat.push_back(std::cos(a));
    flat.push_back(std::sin(a));
  }
  for (auto& [i, j] : edges) {
    if (i == j) throw InvalidParameter("graph_from_edges: self-loop");
    if (i >= n || j >= n) throw InvalidParameter("graph_from_edges: endpoint out of range");
    if (i > j) std::swap(i, j);
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return GeometricGraph(PointSet(2, Point(2), 4.0, 1.0, std::move(flat)), 1.0, false, std::move(edges));
}

namespace detail {

// Uniform cell grid over the generating box with cell side >= min_side.
class CellGrid {
 public:
  CellGrid(const PointSet& ps, double min_side, bool torus) : dim_(ps.dim()), torus_(torus) {
    side_ = ps.box_side();
    lo_.resize(dim_);
    for (std::size_t k = 0; k < dim_; ++k) lo_[k] = ps.box_center()[k] - side_ / 2.0;
    per_dim_ = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(side_ / min_side)));
    // Cap the total cell count to keep memory proportional to the point count.
    while (per_dim_ > 1 && std::pow(static_cast<double>(per_dim_), static_cast<double>(dim_)) >
                               4.0 * static_cast<double>(ps.size()) + 64.0)
      per_dim_ = std::max<std::size_t>(1, per_dim_ / 2);
    cell_side_ = side_ / static_cast<double>(per_dim_);
    std::size_t total = 1;
    for (std::size_t k = 0; k < dim_; ++k) total *= per_dim_;
    start_.assign(total + 1, 0);
  }

  std::size_t per_dim() const noexcept { return per_dim_; }
  std::size_t cell_count() const noexcept { return start_.size() - 1; }
  double cell_side() const noexcept { return cell_side_; }
  bool torus() const noexcept { return torus_; }

  std::size_t coord_index(double x, std::size_t k) const {
    const double f = std::floor((x - lo_[k]) / cell_side_);
    if (f < 0) return 0;
    return std::min(static_cast<std::size_t>(f), per_dim_ - 1);
  }
  std::size_t cell_of(Coords x) const {
    std::size_t id = 0;
    for (std::size_t k = dim_; k-- > 0;) id = id * per_dim_ + coord_index(x[k], k);
    return id;
  }
  void cell_coords(std::size_t id, std::vector<long>& out) const {
    out.resize(dim_);
    for (std::size_t k = 0; k < dim_; ++k) {
      out[k] = static_cast<long>(id % per_dim_);
      id /= per_dim_;
    }
  }
  // Cell id for integer coordinates, wrapping on the torus; nullopt when outside.
  std::optional<std::size_t> cell_id(const std::vector<long>& c) const {
    std::size_t id = 0;
    const long n = static_cast<long>(per_dim_);
    for (std::size_t k = dim_; k-- > 0;) {
      long v = c[k];
      if (torus_) {
        v = ((v % n) + n) % n;
      } else if (v < 0 || v >= n) {
        return std::nullopt;
      }
      id = id * per_dim_ + static_cast<std::size_t>(v);
    }
    return id;
  }

  template <typename PointAt>
  void fill(std::size_t count, PointAt&& point_at) {
    members_.resize(count);
    std::vector<std::size_t> cell(count);
    for (std::size_t i = 0; i < count; ++i) {
      cell[i] = cell_of(point_at(i));
      ++start_[cell[i] + 1];
    }
    std::partial_sum(start_.begin(), start_.end(), start_.begin());
    std::vector<std::size_t> pos(start_.begin(), start_.end() - 1);
    for (std::size_t i = 0; i < count; ++i) members_[pos[cell[i]]++] = static_cast<VertexId>(i);
  }

  std::span<const VertexId> members(std::size_t cell) const {
    return {members_.data() + start_[cell], start_[cell + 1] - start_[cell]};
  }

  // Distinct cells at Chebyshev offset exactly `ring` from `center`.
  void ring_cells(const std::vector<long>& center, long ring, std::vector<std::size_t>& out) const {
    out.clear();
    std::vector<long> off(dim_, -ring);
    std::vector<long> c(dim_);
    while (true) {
      long cheb = 0;
      for (std::size_t k = 0; k < dim_; ++k) cheb = std::max(cheb, std::abs(off[k]));
      if (cheb == ring) {
        for (std::size_t k = 0; k < dim_; ++k) c[k] = center[k] + off[k];
        if (auto id = cell_id(c)) out.push_back(*id);
      }
      std::size_t k = 0;
      while (k < dim_ && off[k] == ring) off[k++] = -ring;
      if (k == dim_) break;
      ++off[k];
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
  }

 private:
  std::size_t dim_;
  bool torus_;
  double side_ = 0;
  double cell_side_ = 0;
  std::size_t per_dim_ = 1;
  std::vector<double> lo_;
  std::vector<std::size_t> start_;
  std::vector<VertexId> members_;
};

}  // namespace detail

/// Builds the geometric graph with cell lists (cell side >= r).
inline GeometricGraph build_graph(PointSet points, double r, BuildOptions opts = {}) {
  if (!(r > 0.0) || !std::isfinite(r)) throw InvalidParameter("build_graph: r must be > 0");
  if (opts.torus && !(points.box_side() > 2.0 * r))
    throw InvalidParameter("build_graph: torus side must exceed 2r");
  const std::size_t n = points.size();
  if (n > std::numeric_limits<VertexId>::max() - 1) throw InvalidParameter("build_graph: too many points");

  detail::CellGrid grid(points, r, opts.torus);
  grid.fill(n, [&](std::size_t i) { return points[i]; });

  std::vector<std::pair<VertexId, VertexId>> edges;
  const double r2 = r * r;
  const double side = points.box_side();
  auto metric = [&](Coords a, Coords b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
      double t = a[k] - b[k];
      if (opts.torus) {
        if (t > side / 2) t -= side;
        if (t < -side / 2) t += side;
      }
      s += t * t;
    }
    return s;
  };

  // Candidate pairs are gathered cell by cell, then bucketed by lower endpoint
  // so edges come out in (i, j) order.
  std::vector<std::pair<VertexId, VertexId>> raw;
  raw.reserve(n * 8);
  std::vector<std::size_t> count(n + 1, 0);
  std::vector<long> cc;
  std::vector<std::size_t> nbr_cells;
  for (std::size_t cell = 0; cell < grid.cell_count(); ++cell) {
    const auto here = grid.members(cell);
    if (here.empty()) continue;
    grid.cell_coords(cell, cc);
    grid.ring_cells(cc, 1, nbr_cells);
    nbr_cells.push_back(cell);
    std::sort(nbr_cells.begin(), nbr_cells.end());
    nbr_cells.erase(std::unique(nbr_cells.begin(), nbr_cells.end()), nbr_cells.end());
    for (VertexId i : here)
      for (std::size_t other : nbr_cells)
        for (VertexId j : grid.members(other))
          if (j > i && metric(points[i], points[j]) < r2) {
            raw.emplace_back(i, j);
            ++count[i + 1];
          }
  }
  std::partial_sum(count.begin(), count.end(), count.begin());
  std::vector<VertexId> upper(raw.size());
  {
    std::vector<std::size_t> pos(count.begin(), count.end() - 1);
    for (auto [i, j] : raw) upper[pos[i]++] = j;
  }
  raw.clear();
  raw.shrink_to_fit();
  edges.reserve(upper.size());
  for (std::size_t i = 0; i < n; ++i) {
    std::sort(upper.begin() + count[i], upper.begin() + count[i + 1]);
    for (std::size_t k = count[i]; k < count[i + 1]; ++k) edges.emplace_back(static_cast<VertexId>(i), upper[k]);
  }
  return GeometricGraph(std::move(points), r, opts.torus, std::move(edges));
}

/// Component labels (numbered by smallest member) and the giant component.
struct ComponentLabeling {
  std::vector<std::uint32_t> label;
  std::vector<std::size_t> sizes;
  std::optional<std::uint32_t> giant;

  bool in_giant(VertexId v) const { return giant && label[v] == *giant; }
  std::size_t giant_size() const { return giant ? sizes[*giant] : 0; }
  std::vector<VertexId> giant_vertices() const {
    std::vector<VertexId> out;
    if (!giant) return out;
    for (std::size_t v = 0; v < label.size(); ++v)
      if (label[v] == *giant) out.push_back(static_cast<VertexId>(v));
    return out;
  }
};

inline ComponentLabeling components(const GeometricGraph& g) {
  const std::size_t n = g.size();
  std::vector<VertexId> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](VertexId x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  for (auto [i, j] : g.edges()) {
    VertexId a = find(i), b = find(j);
    if (a == b) continue;
    if (a < b) std::swap(a, b);
    parent[a] = b;  // root is always the smallest member
  }
  ComponentLabeling out;
  out.label.assign(n, 0);
  std::vector<std::uint32_t> root_label(n, std::numeric_limits<std::uint32_t>::max());
  for (std::size_t v = 0; v < n; ++v) {
    const VertexId root = find(static_cast<VertexId>(v));
    if (root_label[root] == std::numeric_limits<std::uint32_t>::max()) {
      root_label[root] = static_cast<std::uint32_t>(out.sizes.size());
      out.sizes.push_back(0);
    }
    out.label[v] = root_label[root];
    ++out.sizes[out.label[v]];
  }
  for (std::uint32_t c = 0; c < out.sizes.size(); ++c)
    if (!out.giant || out.sizes[c] > out.sizes[*out.giant]) out.giant = c;
  return out;
}

/// Nearest giant-component vertex q(x); equidistant candidates are resolved
/// by the lexicographically smallest coordinate vector.
class QMap {
 public:
  QMap(const GeometricGraph& g, const ComponentLabeling& labels)
      : g_(&g), labels_(&labels), giant_(labels.giant_vertices()),
        grid_(g.points(), cell_target(g, giant_.size()), g.torus()) {
    grid_.fill(giant_.size(), [&](std::size_t i) { return g.position(giant_[i]); });
  }

  const GeometricGraph& graph() const noexcept { return *g_; }
  const ComponentLabeling& labels() const noexcept { return *labels_; }
  const std::vector<VertexId>& giant_vertices() const noexcept { return giant_; }
  bool empty() const noexcept { return giant_.empty(); }

  VertexId operator()(Coords x) const {
    if (giant_.empty()) throw NoComponent("q: giant component is empty");
    const std::size_t dim = g_->dim();
    Point proj(dim);
    const auto& ps = g_->points();
    for (std::size_t k = 0; k < dim; ++k) {
      const double lo = ps.box_center()[k] - ps.box_side() / 2.0;
      const double hi = ps.box_center()[k] + ps.box_side() / 2.0;
      double v = x[k];
      if (g_->torus()) {
        v = lo + std::fmod(std::fmod(v - lo, ps.box_side()) + ps.box_side(), ps.box_side());
      }
      proj[k] = std::clamp(v, lo, hi);
    }
    std::vector<long> center;
    grid_.cell_coords(grid_.cell_of(proj), center);
    const double h = grid_.cell_side();
    const long max_ring = static_cast<long>(grid_.per_dim());
    VertexId best = kNoVertex;
    double best_d2 = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> cells;
    for (long ring = 0; ring <= max_ring; ++ring) {
      grid_.ring_cells(center, ring, cells);
      for (std::size_t cell : cells) {
        for (VertexId idx : grid_.members(cell)) {
          const VertexId v = giant_[idx];
          const double d2 = g_->metric_dist2(x, g_->position(v));
          if (d2 < best_d2 || (d2 == best_d2 && lex_less(v, best))) {
            best = v;
            best_d2 = d2;
          }
        }
      }
      // Cells at ring + 1 lie at distance >= ring * h from proj(x), and
      // |x - y| >= |proj(x) - y| for y in the box.
      if (best != kNoVertex && std::sqrt(best_d2) < static_cast<double>(ring) * h) break;
    }
    return best;
  }

  VertexId linear_scan(Coords x) const {
    if (giant_.empty()) throw NoComponent("q: giant component is empty");
    VertexId best = kNoVertex;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (VertexId v : giant_) {
      const double d2 = g_->metric_dist2(x, g_->position(v));
      if (d2 < best_d2 || (d2 == best_d2 && lex_less(v, best))) {
        best = v;
        best_d2 = d2;
      }
    }
    return best;
  }

 private:
  // Aim for O(1) giant vertices per cell.
  static double cell_target(const GeometricGraph& g, std::size_t count) {
    const double side = g.points().box_side();
    const double per_dim = std::floor(std::pow(static_cast<double>(std::max<std::size_t>(count, 1)),
                                               1.0 / static_cast<double>(g.dim())));
    return side / std::max(1.0, per_dim);
  }

  bool lex_less(VertexId a, VertexId b) const {
    if (b == kNoVertex) return true;
    auto pa = g_->position(a), pb = g_->position(b);
    return std::lexicographical_compare(pa.begin(), pa.end(), pb.begin(), pb.end());
  }

  const GeometricGraph* g_;
  const ComponentLabeling* labels_;
  std::vector<VertexId> giant_;
  detail::CellGrid grid_;
};

/// q(W): giant vertices resident in W, plus q(p) for probe points p in W on
/// the lattice spacing * Z^d (clipped to the graph box), plus q(c) when W is a
/// single point c. The probe lattice approximates the union of q-cells meeting W.
inline std::vector<VertexId> q_image(const QMap& q, const Region& w, double spacing) {
  if (!(spacing > 0.0)) throw InvalidParameter("q_image: spacing must be > 0");
  const auto& g = q.graph();
  std::vector<VertexId> out;
  if (q.empty()) return out;
  for (VertexId v : q.giant_vertices())
    if (w.contains(g.position(v))) out.push_back(v);
  if (const auto* b = std::get_if<Region::Box>(&w.node()); b && b->side == 0.0) out.push_back(q(b->center));

  const std::size_t d = g.dim();
  const auto& ps = g.points();
  Point lo(d), hi(d);
  for (std::size_t k = 0; k < d; ++k) {
    lo[k] = ps.box_center()[k] - ps.box_side() / 2.0;
    hi[k] = ps.box_center()[k] + ps.box_side() / 2.0;
  }
  if (auto bb = w.bounds())
    for (std::size_t k = 0; k < d; ++k) {
      lo[k] = std::max(lo[k], bb->lo[k]);
      hi[k] = std::min(hi[k], bb->hi[k]);
    }
  auto finish = [&] {
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  };
  std::vector<long> first(d), last(d), idx(d);
  for (std::size_t k = 0; k < d; ++k) {
    if (lo[k] > hi[k]) return finish();
    first[k] = static_cast<long>(std::ceil(lo[k] / spacing));
    last[k] = static_cast<long>(std::floor(hi[k] / spacing));
    if (first[k] > last[k]) return finish();
  }
  idx = first;
  Point p(d);
  while (true) {
    for (std::size_t k = 0; k < d; ++k) p[k] = static_cast<double>(idx[k]) * spacing;
    if (w.contains(p)) out.push_back(q(p));
    std::size_t k = 0;
    while (k < d && idx[k] == last[k]) idx[k] = first[k], ++k;
    if (k == d) break;
    ++idx[k];
  }
  return finish();
}

/// Owns a graph together with its labeling and q-map.
struct Environment {
  GeometricGraph graph;
  ComponentLabeling labels;
  std::optional<QMap> qmap;

  explicit Environment(GeometricGraph g) : graph(std::move(g)), labels(components(graph)) { qmap.emplace(graph, labels); }
  Environment(const Environment&) = delete;
  Environment& operator=(const Environment&) = delete;

  const QMap& q() const { return *qmap; }
};

inline std::unique_ptr<Environment> sample_environment(std::size_t dim, double intensity, double r, double side,
                                                       RngStream& rng, BuildOptions opts = {}) {
  return std::make_unique<Environment>(build_graph(sample_ppp(intensity, dim, side, rng), r, opts));
}

// ---------------------------------------------------------------------------
// Text dump: header "d lambda r n", n coordinate lines, then "i j" edge lines.

namespace detail {
inline void put_double(std::ostream& os, double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  os.write(buf, res.ptr - buf);
}
inline double parse_double(const std::string& s) {
  double v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw InvalidParameter("graph load: bad number '" + s + "'");
  return v;
}
}  // namespace detail

inline void dump_graph(const GeometricGraph& g, std::ostream& os) {
  os << g.dim() << ' ';
  detail::put_double(os, g.points().intensity());
  os << ' ';
  detail::put_double(os, g.radius());
  os << ' ' << g.size() << '\n';
  for (std::size_t v = 0; v < g.size(); ++v) {
    auto p = g.position(static_cast<VertexId>(v));
    for (std::size_t k = 0; k < p.size(); ++k) {
      if (k) os << ' ';
      detail::put_double(os, p[k]);
    }
    os << '\n';
  }
  for (auto [i, j] : g.edges()) os << i << ' ' << j << '\n';
}

/// Loads a dump. The generating box is not part of the format; the loaded
/// point set uses the bounding cube of the coordinates.
inline GeometricGraph load_graph(std::istream& is) {
  std::string sd, sl, sr, sn;
  if (!(is >> sd >> sl >> sr >> sn)) throw InvalidParameter("graph load: missing header");
  const auto dim = static_cast<std::size_t>(std::stoul(sd));
  const double lambda = detail::parse_double(sl);
  const double r = detail::parse_double(sr);
  const auto n = static_cast<std::size_t>(std::stoull(sn));
  std::vector<double> flat(n * dim);
  std::string tok;
  for (auto& x : flat) {
    if (!(is >> tok)) throw InvalidParameter("graph load: truncated coordinates");
    x = detail::parse_double(tok);
  }
  Point center(dim);
  double side = 1.0;
  if (n > 0) {
    for (std::size_t k = 0; k < dim; ++k) {
      double lo = flat[k], hi = flat[k];
      for (std::size_t i = 0; i < n; ++i) {
        lo = std::min(lo, flat[i * dim + k]);
        hi = std::max(hi, flat[i * dim + k]);
      }
      center[k] = (lo + hi) / 2.0;
      side = std::max(side, hi - lo);
    }
  }
  std::vector<std::pair<VertexId, VertexId>> edges;
  std::uint64_t i = 0, j = 0;
  while (is >> i >> j) {
    if (i >= j || j >= n) throw InvalidParameter("graph load: bad edge line");
    edges.emplace_back(static_cast<VertexId>(i), static_cast<VertexId>(j));
  }
  return GeometricGraph(PointSet(dim, center, side * (1.0 + 1e-12), lambda, std::move(flat)), r, false,
                        std::move(edges));
}

// ---------------------------------------------------------------------------
// Experiments on the giant component.

struct ThetaEstimate {
  double estimate = 0;
  Interval ci;
  std::size_t replicas = 0;
  std::size_t hits = 0;
  double mean_giant_fraction = 0;
  // Raised when the pilot giant fraction is below 0.5.
  bool subcritical_warning = false;
};

inline constexpr double kSupercriticalGiantFraction = 0.5;

/// Fraction of replicas in which some giant vertex lies in B(o, r), with the
/// box centred at the origin. Replica i uses stream (seed, i, "graph").
inline ThetaEstimate estimate_theta_r(std::size_t dim, double intensity, double r, double box_side,
                                      std::size_t replicas, std::uint64_t seed, std::size_t workers = 1) {
  if (replicas == 0) throw InvalidParameter("estimate_theta_r: replicas must be >= 1");
  std::vector<char> hit(replicas, 0);
  std::vector<double> frac(replicas, 0.0);
  parallel_for(replicas, workers, [&](std::size_t i) {
    auto rng = seed_stream(seed, i, tag::graph);
    auto pts = sample_ppp(intensity, dim, box_side, rng);
    const std::size_t n = pts.size();
    auto g = build_graph(std::move(pts), r);
    auto lab = components(g);
    frac[i] = n ? static_cast<double>(lab.giant_size()) / static_cast<double>(n) : 0.0;
    const Point o(dim);
    for (std::size_t v = 0; v < g.size(); ++v)
      if (lab.in_giant(static_cast<VertexId>(v)) && dist2(g.position(static_cast<VertexId>(v)), o) < r * r) {
        hit[i] = 1;
        break;
      }
  });
  ThetaEstimate est;
  est.replicas = replicas;
  est.hits = static_cast<std::size_t>(std::count(hit.begin(), hit.end(), 1));
  est.estimate = static_cast<double>(est.hits) / static_cast<double>(replicas);
  est.ci = wilson_interval(est.hits, replicas);
  est.mean_giant_fraction = mean(frac);
  est.subcritical_warning = est.mean_giant_fraction < kSupercriticalGiantFraction;
  return est;
}

struct DensityRow {
  double t = 0;
  std::size_t replica = 0;
  double ratio = 0;  // |H n B(t)| / t^d
  bool inside_band = false;
};

struct DensityTable {
  std::vector<DensityRow> rows;
  std::vector<double> t_values;
  std::vector<double> inside_fraction;  // per t
  double theta = 0;
  double epsilon = 0;
};

/// Empirical law of |H n B(t)| / t^d. The giant component is taken in a box
/// of side t + 2 * margin; replicas outside ((1-eps) theta, (1+eps) theta) are flagged.
inline DensityTable volume_density_experiment(std::size_t dim, double intensity, double r,
                                              const std::vector<double>& t_values, std::size_t replicas,
                                              std::uint64_t seed, double theta, double epsilon, double margin,
                                              std::size_t workers = 1) {
  if (replicas == 0) throw InvalidParameter("volume_density_experiment: replicas must be >= 1");
  DensityTable table;
  table.theta = theta;
  table.epsilon = epsilon;
  table.t_values = t_values;
  table.rows.resize(t_values.size() * replicas);
  for (std::size_t ti = 0; ti < t_values.size(); ++ti) {
    const double t = t_values[ti];
    if (!(t > 0)) throw InvalidParameter("volume_density_experiment: t must be > 0");
    parallel_for(replicas, workers, [&](std::size_t i) {
      auto rng = seed_stream(seed, ti * replicas + i, tag::graph);
      auto g = build_graph(sample_ppp(intensity, dim, t + 2.0 * margin, rng), r);
      auto lab = components(g);
      const Region box = Region::box(Point(dim), t);
      std::size_t count = 0;
      for (std::size_t v = 0; v < g.size(); ++v)
        if (lab.in_giant(static_cast<VertexId>(v)) && box.contains(g.position(static_cast<VertexId>(v)))) ++count;
      DensityRow row;
      row.t = t;
      row.replica = i;
      row.ratio = static_cast<double>(count) / std::pow(t, static_cast<double>(dim));
      row.inside_band = row.ratio > (1.0 - epsilon) * theta && row.ratio < (1.0 + epsilon) * theta;
      table.rows[ti * replicas + i] = row;
    });
    std::size_t inside = 0;
    for (std::size_t i = 0; i < replicas; ++i) inside += table.rows[ti * replicas + i].inside_band ? 1 : 0;
    table.inside_fraction.push_back(static_cast<double>(inside) / static_cast<double>(replicas));
  }
  return table;
}

}  // namespace coexsim
