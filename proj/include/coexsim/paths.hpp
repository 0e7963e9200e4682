#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "coexsim/error.hpp"
#include "coexsim/rgg.hpp"

namespace coexsim {

/// sigma in {0, 1, 2}^V: 0 vacant, 1 red, 2 blue.
using Configuration = std::vector<std::uint8_t>;

/// Exactly one vertex x changes, and it takes the colour sigma_prev(y) in {1, 2}
/// of some neighbour y.
inline bool is_valid_step(const GeometricGraph& g, const Configuration& prev, const Configuration& next) {
  if (prev.size() != g.size() || next.size() != g.size())
    throw InvalidParameter("is_valid_step: configuration size differs from vertex count");
  std::optional<VertexId> changed;
  for (std::size_t v = 0; v < prev.size(); ++v)
    if (prev[v] != next[v]) {
      if (changed) return false;
      changed = static_cast<VertexId>(v);
    }
  if (!changed) return false;
  const std::uint8_t c = next[*changed];
  if (c != 1 && c != 2) return false;
  for (const auto& arc : g.arcs(*changed))
    if (prev[arc.to] == c) return true;
  return false;
}

struct GrowthInvasionPath {
  std::vector<Configuration> steps;  // steps.front() is the initial configuration
  VertexId x = kNoVertex;
  VertexId x1 = kNoVertex;           // red neighbour of x used as anchor
  VertexId x2 = kNoVertex;           // blue neighbour of x used as anchor
  VertexId x3 = kNoVertex;           // third neighbour, sacrificed as a relay
  bool x3_on_target = false;

  const Configuration& final() const { return steps.back(); }
  std::size_t length() const { return steps.size() - 1; }
};

/// Index of the first invalid transition, or nullopt when every step is valid.
inline std::optional<std::size_t> first_invalid_step(const GeometricGraph& g, const GrowthInvasionPath& p) {
  for (std::size_t i = 1; i < p.steps.size(); ++i)
    if (!is_valid_step(g, p.steps[i - 1], p.steps[i])) return i;
  return std::nullopt;
}

inline void write_path(std::ostream& os, const GrowthInvasionPath& p) {
  for (const auto& c : p.steps) {
    for (auto v : c) os << static_cast<char>('0' + v);
    os << '\n';
  }
}

// ---------------------------------------------------------------------------
// Spanning trees

struct SpanningTree {
  VertexId root = kNoVertex;
  std::vector<VertexId> parent;                 // kNoVertex at the root
  std::vector<std::vector<VertexId>> children;  // sorted by id

  std::size_t degree(VertexId v) const { return children[v].size() + (parent[v] == kNoVertex ? 0 : 1); }
  std::vector<std::pair<VertexId, VertexId>> edges() const {
    std::vector<std::pair<VertexId, VertexId>> out;
    for (std::size_t v = 0; v < parent.size(); ++v)
      if (parent[v] != kNoVertex) out.emplace_back(std::min<VertexId>(v, parent[v]), std::max<VertexId>(v, parent[v]));
    std::sort(out.begin(), out.end());
    return out;
  }
  /// Path root -> v.
  std::vector<VertexId> path_from_root(VertexId v) const {
    std::vector<VertexId> out;
    for (VertexId u = v; u != kNoVertex; u = parent[u]) out.push_back(u);
    std::reverse(out.begin(), out.end());
    return out;
  }
  /// Post-order of the subtree rooted at v, children visited by id.
  std::vector<VertexId> post_order(VertexId v) const {
    std::vector<VertexId> out;
    std::vector<std::pair<VertexId, std::size_t>> stack{{v, 0}};
    while (!stack.empty()) {
      auto& [u, k] = stack.back();
      if (k < children[u].size()) {
        const VertexId c = children[u][k++];
        stack.emplace_back(c, 0);
      } else {
        out.push_back(u);
        stack.pop_back();
      }
    }
    return out;
  }
};

inline bool is_connected(const GeometricGraph& g) {
  if (g.size() == 0) return true;
  const auto lab = components(g);
  return std::none_of(lab.label.begin(), lab.label.end(), [](auto l) { return l != 0; });
}

/// Spanning tree rooted at x with deg_T(x) = deg_G(x): remove x, grow a BFS
/// tree of each residual component from its smallest neighbour of x, cut the
/// parent edge of every other neighbour of x, then re-attach the star at x.
inline SpanningTree degree_preserving_spanning_tree(const GeometricGraph& g, VertexId x) {
  if (x >= g.size()) throw InvalidParameter("degree_preserving_spanning_tree: vertex outside graph");
  if (!is_connected(g)) throw InvalidParameter("degree_preserving_spanning_tree: graph is disconnected");
  const std::size_t n = g.size();
  SpanningTree t;
  t.root = x;
  t.parent.assign(n, kNoVertex);
  std::vector<char> seen(n, 0), is_nbr(n, 0);
  seen[x] = 1;
  for (const auto& a : g.arcs(x)) is_nbr[a.to] = 1;
  for (const auto& a : g.arcs(x)) {
    if (seen[a.to]) continue;
    std::vector<VertexId> queue{a.to};
    seen[a.to] = 1;
    for (std::size_t h = 0; h < queue.size(); ++h)
      for (const auto& b : g.arcs(queue[h]))
        if (!seen[b.to]) {
          seen[b.to] = 1;
          t.parent[b.to] = queue[h];
          queue.push_back(b.to);
        }
  }
  for (const auto& a : g.arcs(x)) t.parent[a.to] = x;
  t.children.assign(n, {});
  for (std::size_t v = 0; v < n; ++v)
    if (t.parent[v] != kNoVertex) t.children[t.parent[v]].push_back(static_cast<VertexId>(v));
  for (auto& c : t.children) std::sort(c.begin(), c.end());
  return t;
}

/// Acyclic, spanning, uses only graph edges, and keeps deg(x).
inline bool is_degree_preserving_spanning_tree(const GeometricGraph& g, const SpanningTree& t, VertexId x) {
  const std::size_t n = g.size();
  if (t.parent.size() != n || t.parent[x] != kNoVertex) return false;
  std::size_t edges = 0;
  for (std::size_t v = 0; v < n; ++v) {
    if (t.parent[v] == kNoVertex) {
      if (v != x) return false;
      continue;
    }
    if (!g.adjacent(static_cast<VertexId>(v), t.parent[v])) return false;
    ++edges;
    // Walking up must reach x within n steps (no cycles).
    std::size_t steps = 0;
    VertexId u = static_cast<VertexId>(v);
    while (u != x && u != kNoVertex && steps++ <= n) u = t.parent[u];
    if (u != x) return false;
  }
  return edges + 1 == n && t.degree(x) == g.degree(x);
}

// ---------------------------------------------------------------------------
// Construction of a growth-invasion path

namespace detail {

class PathBuilder {
 public:
  PathBuilder(const GeometricGraph& g, Configuration start) : g_(g) { path_.push_back(std::move(start)); }

  const Configuration& current() const { return path_.back(); }
  std::uint8_t at(VertexId v) const { return path_.back()[v]; }

  bool has_neighbour(VertexId v, std::uint8_t c) const {
    for (const auto& a : g_.arcs(v))
      if (at(a.to) == c) return true;
    return false;
  }

  /// v <- c; a no-op when v already has c. Requires a neighbour coloured c.
  void set(VertexId v, std::uint8_t c) {
    if (at(v) == c) return;
    if (!has_neighbour(v, c)) throw std::logic_error("PathBuilder: no neighbour carries the colour");
    Configuration next = current();
    next[v] = c;
    path_.push_back(std::move(next));
  }

  /// Colour flows along `route` (consecutive vertices adjacent), first vertex
  /// must already be coloured c or have a neighbour coloured c.
  void push(const std::vector<VertexId>& route, std::uint8_t c) {
    for (VertexId v : route) set(v, c);
  }

  std::vector<Configuration> take() { return std::move(path_); }

 private:
  const GeometricGraph& g_;
  std::vector<Configuration> path_;
};

// Shortest path (BFS) from any vertex satisfying `from` to any satisfying `to`,
// avoiding `blocked`; returned without its starting vertex.
inline std::vector<VertexId> bfs_route(const GeometricGraph& g, const std::function<bool(VertexId)>& from,
                                       const std::function<bool(VertexId)>& to, VertexId blocked) {
  const std::size_t n = g.size();
  std::vector<VertexId> prev(n, kNoVertex);
  std::vector<char> seen(n, 0);
  std::vector<VertexId> queue;
  for (std::size_t v = 0; v < n; ++v)
    if (v != blocked && from(static_cast<VertexId>(v))) {
      seen[v] = 1;
      queue.push_back(static_cast<VertexId>(v));
    }
  for (std::size_t h = 0; h < queue.size(); ++h) {
    const VertexId u = queue[h];
    if (to(u)) {
      std::vector<VertexId> route;
      for (VertexId v = u; prev[v] != kNoVertex; v = prev[v]) route.push_back(v);
      std::reverse(route.begin(), route.end());
      return route;
    }
    for (const auto& a : g.arcs(u))
      if (!seen[a.to] && a.to != blocked) {
        seen[a.to] = 1;
        prev[a.to] = u;
        queue.push_back(a.to);
      }
  }
  throw std::logic_error("bfs_route: no route");
}

}  // namespace detail

/// Smallest-id vertex of degree >= 3, if any.
inline std::optional<VertexId> find_branch_vertex(const GeometricGraph& g) {
  for (std::size_t v = 0; v < g.size(); ++v)
    if (g.degree(static_cast<VertexId>(v)) >= 3) return static_cast<VertexId>(v);
  return std::nullopt;
}

/// Builds a growth-invasion path from sigma0 to a fully occupied configuration
/// that agrees with `target` on V \ {x, x3} (and on x3 whenever a neighbour
/// can supply its colour at the end), with sigma_k(x) equal to the colour of
/// some neighbour of x.
///
/// Phases: fill every vacant vertex by growth; make sure the neighbours of x
/// carry both colours and fix a red x1 and a blue x2; paint the part of the
/// degree-preserving tree outside the branches of x1 and x2 in post-order,
/// each vertex reached by pushing its colour from x down the tree path; paint
/// the branch of x1 with x3 held red as the relay, then the branch of x2 with
/// x1 and x3 holding opposite colours; finally repair x3 and x.
inline GrowthInvasionPath construct_growth_invasion_path(const GeometricGraph& g, const Configuration& sigma0,
                                                         const Configuration& target,
                                                         std::optional<VertexId> branch = std::nullopt) {
  const std::size_t n = g.size();
  if (sigma0.size() != n || target.size() != n)
    throw InvalidParameter("construct_growth_invasion_path: configuration size differs from vertex count");
  if (!is_connected(g)) throw InvalidParameter("construct_growth_invasion_path: graph is disconnected");
  for (auto c : target)
    if (c != 1 && c != 2) throw InvalidParameter("construct_growth_invasion_path: target must lie in {1,2}^V");
  if (std::count(sigma0.begin(), sigma0.end(), 1) == 0 || std::count(sigma0.begin(), sigma0.end(), 2) == 0)
    throw PreconditionError("construct_growth_invasion_path: initial configuration needs both colours");
  const auto bx = branch ? branch : find_branch_vertex(g);
  if (!bx || *bx >= n || g.degree(*bx) < 3)
    throw PreconditionError("construct_growth_invasion_path: needs a vertex of degree >= 3");
  const VertexId x = *bx;

  GrowthInvasionPath out;
  out.x = x;
  detail::PathBuilder b(g, sigma0);

  // Growth: fill vacant vertices in BFS order from the occupied set.
  {
    std::vector<VertexId> queue;
    for (std::size_t v = 0; v < n; ++v)
      if (sigma0[v] != 0) queue.push_back(static_cast<VertexId>(v));
    for (std::size_t h = 0; h < queue.size(); ++h)
      for (const auto& a : g.arcs(queue[h]))
        if (b.at(a.to) == 0) {
          b.set(a.to, b.at(queue[h]));
          queue.push_back(a.to);
        }
  }

  // Both colours among the neighbours of x.
  auto nbr_has = [&](std::uint8_t c) { return b.has_neighbour(x, c); };
  if (!nbr_has(1) || !nbr_has(2)) {
    const std::uint8_t missing = nbr_has(1) ? 2 : 1;
    if (b.at(x) == missing) {
      b.set(g.arcs(x)[0].to, missing);
    } else {
      auto route = detail::bfs_route(
          g, [&](VertexId v) { return b.at(v) == missing; },
          [&](VertexId v) { return g.adjacent(v, x); }, x);
      b.push(route, missing);
    }
  }
  for (const auto& a : g.arcs(x)) {
    if (out.x1 == kNoVertex && b.at(a.to) == 1) out.x1 = a.to;
    if (out.x2 == kNoVertex && b.at(a.to) == 2) out.x2 = a.to;
  }
  for (const auto& a : g.arcs(x))
    if (a.to != out.x1 && a.to != out.x2) {
      out.x3 = a.to;
      break;
    }
  const VertexId x1 = out.x1, x2 = out.x2, x3 = out.x3;

  const auto tree = degree_preserving_spanning_tree(g, x);
  // Paint y by recolouring x from a neighbour, then pushing down the tree path.
  auto paint = [&](VertexId y) {
    const std::uint8_t c = target[y];
    const auto route = tree.path_from_root(y);  // x, ..., y
    b.push(route, c);
  };

  // Everything outside the branches of x1 and x2.
  for (VertexId root : tree.children[x]) {
    if (root == x1 || root == x2) continue;
    for (VertexId y : tree.post_order(root)) paint(y);
  }
  // Branch of x1, with x3 held red as a relay next to x.
  b.set(x, 1);
  b.set(x3, 1);
  for (VertexId y : tree.post_order(x1)) paint(y);
  // Branch of x2, with x1 and x3 carrying opposite colours.
  if (b.at(x1) == 1) {
    b.set(x, 2);
    b.set(x3, 2);
  }
  for (VertexId y : tree.post_order(x2)) paint(y);

  // Repair x3, directly or through x.
  const std::uint8_t want3 = target[x3];
  if (b.at(x3) != want3) {
    if (b.has_neighbour(x3, want3)) {
      b.set(x3, want3);
    } else {
      bool relay = false;
      for (const auto& a : g.arcs(x))
        if (a.to != x3 && b.at(a.to) == want3) relay = true;
      if (relay) {
        b.set(x, want3);
        b.set(x3, want3);
      }
    }
  }
  out.x3_on_target = b.at(x3) == want3;
  // x must agree with a neighbour; prefer its own target colour.
  if (!b.has_neighbour(x, b.at(x))) b.set(x, b.has_neighbour(x, target[x]) ? target[x] : b.at(g.arcs(x)[0].to));
  else if (b.at(x) != target[x] && b.has_neighbour(x, target[x])) b.set(x, target[x]);

  out.steps = b.take();
  return out;
}

/// Fully occupied and x agrees with at least one neighbour.
inline bool satisfies_final_conditions(const GeometricGraph& g, const GrowthInvasionPath& p) {
  const auto& f = p.final();
  if (std::any_of(f.begin(), f.end(), [](auto c) { return c == 0; })) return false;
  for (const auto& a : g.arcs(p.x))
    if (f[a.to] == f[p.x]) return true;
  return false;
}

}  // namespace coexsim
