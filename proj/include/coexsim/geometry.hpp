#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <initializer_list>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <utility>
#include <variant>
#include <vector>

#include "coexsim/error.hpp"
#include "coexsim/rng.hpp"

namespace coexsim {

using Coords = std::span<const double>;

class Point {
 public:
  Point() = default;
  explicit Point(std::size_t dim, double fill = 0.0) : c_(dim, fill) {}
  Point(std::initializer_list<double> c) : c_(c) {}
  explicit Point(std::vector<double> c) : c_(std::move(c)) {}
  explicit Point(Coords c) : c_(c.begin(), c.end()) {}

  std::size_t dim() const noexcept { return c_.size(); }
  double operator[](std::size_t i) const { return c_[i]; }
  double& operator[](std::size_t i) { return c_[i]; }
  const std::vector<double>& coords() const noexcept { return c_; }
  operator Coords() const noexcept { return {c_.data(), c_.size()}; }

  static Point origin(std::size_t dim) { return Point(dim); }

  friend bool operator==(const Point&, const Point&) = default;

 private:
  std::vector<double> c_;
};

inline double dot(Coords a, Coords b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm(Coords a) { return std::sqrt(dot(a, a)); }

inline double dist2(Coords a, Coords b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double t = a[i] - b[i];
    s += t * t;
  }
  return s;
}

inline double dist(Coords a, Coords b) { return std::sqrt(dist2(a, b)); }

inline Point scaled(Coords a, double f) {
  Point p(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) p[i] = a[i] * f;
  return p;
}

inline Point unit_vector(Coords a) {
  const double n = norm(a);
  if (!(n > 0.0)) throw InvalidParameter("unit_vector: zero vector");
  return scaled(a, 1.0 / n);
}

/// Unit vector at polar angle `theta` in the (x0, x1) plane of R^dim.
inline Point planar_direction(std::size_t dim, double theta) {
  Point p(dim);
  p[0] = std::cos(theta);
  p[1] = std::sin(theta);
  return p;
}

/// Angle between u and v as seen from the origin, in [0, pi].
inline double angle_between(Coords u, Coords v) {
  const double nu = norm(u);
  const double nv = norm(v);
  if (!(nu > 0.0) || !(nv > 0.0)) throw InvalidParameter("angle_between: zero vector");
  const double c = std::clamp(dot(u, v) / (nu * nv), -1.0, 1.0);
  return std::acos(c);
}

struct BoundingBox {
  Point lo;
  Point hi;
};

/// Subset of R^d described by a predicate tree. Balls are open, boxes and
/// annulus outer/inner boundaries follow the set definitions:
///   Box(c, t)          = c + [-t/2, t/2]^d            (closed; t = 0 is the point {c})
///   Ball(c, t)         = {y : |y - c| < t}
///   Annulus(c, t, t')  = Ball(c, t') \ Ball(c, t)
///   Cone(z, rho)       = {y : angle(y, z) <= rho} u {o}
///   Scaled(f, R)       = {f y : y in R}
class Region {
 public:
  struct Box {
    Point center;
    double side;
  };
  struct Ball {
    Point center;
    double radius;
  };
  struct Annulus {
    Point center;
    double inner;
    double outer;
  };
  struct Cone {
    Point axis;
    double half_angle;
  };
  struct Scaled {
    double factor;
    std::shared_ptr<const Region> inner;
  };
  struct Intersection {
    std::vector<Region> parts;
  };
  struct Union {
    std::vector<Region> parts;
  };
  struct Complement {
    std::shared_ptr<const Region> inner;
  };
  using Variant = std::variant<Box, Ball, Annulus, Cone, Scaled, Intersection, Union, Complement>;

  static Region box(Point center, double side) {
    if (!(side >= 0.0) || !std::isfinite(side)) throw InvalidParameter("Box: side must be >= 0");
    return Region(Box{std::move(center), side});
  }
  static Region point(Point c) { return box(std::move(c), 0.0); }
  static Region ball(Point center, double radius) {
    if (!(radius >= 0.0)) throw InvalidParameter("Ball: radius must be >= 0");
    return Region(Ball{std::move(center), radius});
  }
  static Region annulus(Point center, double inner, double outer) {
    if (!(inner >= 0.0) || !(inner < outer))
      throw InvalidParameter("Annulus: need 0 <= inner < outer");
    return Region(Annulus{std::move(center), inner, outer});
  }
  static Region cone(const Point& axis, double half_angle) {
    const double n = norm(axis);
    if (std::abs(n - 1.0) > 1e-9) throw InvalidParameter("Cone: axis must have unit norm");
    if (!(half_angle > 0.0) || half_angle > std::numbers::pi)
      throw InvalidParameter("Cone: half-angle must lie in (0, pi]");
    return Region(Cone{axis, half_angle});
  }
  static Region scaled(double factor, Region inner) {
    if (!(factor > 0.0)) throw InvalidParameter("Scaled: factor must be > 0");
    return Region(Scaled{factor, std::make_shared<const Region>(std::move(inner))});
  }
  static Region intersect(std::vector<Region> parts) { return Region(Intersection{std::move(parts)}); }
  static Region unite(std::vector<Region> parts) { return Region(Union{std::move(parts)}); }
  static Region complement(Region inner) {
    return Region(Complement{std::make_shared<const Region>(std::move(inner))});
  }
  static Region minus(Region a, Region b) { return intersect({std::move(a), complement(std::move(b))}); }
  // The empty set: an open ball of radius zero.
  static Region empty(std::size_t dim) { return ball(Point(dim), 0.0); }

  const Variant& node() const noexcept { return v_; }

  bool contains(Coords x) const {
    return std::visit([&](const auto& n) { return contains_impl(n, x); }, v_);
  }

  /// Axis-aligned bounds, or nullopt when the region is unbounded.
  std::optional<BoundingBox> bounds() const {
    return std::visit([&](const auto& n) { return bounds_impl(n); }, v_);
  }

 private:
  explicit Region(Variant v) : v_(std::move(v)) {}

  static bool contains_impl(const Box& b, Coords x) {
    const double h = b.side / 2.0;
    for (std::size_t i = 0; i < x.size(); ++i)
      if (std::abs(x[i] - b.center[i]) > h) return false;
    return true;
  }
  static bool contains_impl(const Ball& b, Coords x) { return dist2(x, b.center) < b.radius * b.radius; }
  static bool contains_impl(const Annulus& a, Coords x) {
    const double d2 = dist2(x, a.center);
    return d2 < a.outer * a.outer && !(d2 < a.inner * a.inner);
  }
  static bool contains_impl(const Cone& c, Coords x) {
    const double n = norm(x);
    if (n == 0.0) return true;
    return angle_between(x, c.axis) <= c.half_angle;
  }
  static bool contains_impl(const Scaled& s, Coords x) {
    const Point y = coexsim::scaled(x, 1.0 / s.factor);
    return s.inner->contains(y);
  }
  static bool contains_impl(const Intersection& s, Coords x) {
    return std::all_of(s.parts.begin(), s.parts.end(), [&](const Region& r) { return r.contains(x); });
  }
  static bool contains_impl(const Union& s, Coords x) {
    return std::any_of(s.parts.begin(), s.parts.end(), [&](const Region& r) { return r.contains(x); });
  }
  static bool contains_impl(const Complement& s, Coords x) { return !s.inner->contains(x); }

  static BoundingBox around(const Point& c, double half) {
    BoundingBox b{c, c};
    for (std::size_t i = 0; i < c.dim(); ++i) {
      b.lo[i] -= half;
      b.hi[i] += half;
    }
    return b;
  }
  static std::optional<BoundingBox> bounds_impl(const Box& b) { return around(b.center, b.side / 2.0); }
  static std::optional<BoundingBox> bounds_impl(const Ball& b) { return around(b.center, b.radius); }
  static std::optional<BoundingBox> bounds_impl(const Annulus& a) { return around(a.center, a.outer); }
  static std::optional<BoundingBox> bounds_impl(const Cone&) { return std::nullopt; }
  static std::optional<BoundingBox> bounds_impl(const Complement&) { return std::nullopt; }
  static std::optional<BoundingBox> bounds_impl(const Scaled& s) {
    auto b = s.inner->bounds();
    if (!b) return b;
    return BoundingBox{coexsim::scaled(b->lo, s.factor), coexsim::scaled(b->hi, s.factor)};
  }
  static std::optional<BoundingBox> bounds_impl(const Intersection& s) {
    std::optional<BoundingBox> out;
    for (const auto& part : s.parts) {
      auto b = part.bounds();
      if (!b) continue;
      if (!out) {
        out = b;
        continue;
      }
      for (std::size_t i = 0; i < b->lo.dim(); ++i) {
        out->lo[i] = std::max(out->lo[i], b->lo[i]);
        out->hi[i] = std::min(out->hi[i], b->hi[i]);
      }
    }
    return out;
  }
  static std::optional<BoundingBox> bounds_impl(const Union& s) {
    std::optional<BoundingBox> out;
    for (const auto& part : s.parts) {
      auto b = part.bounds();
      if (!b) return std::nullopt;
      if (!out) {
        out = b;
        continue;
      }
      for (std::size_t i = 0; i < b->lo.dim(); ++i) {
        out->lo[i] = std::min(out->lo[i], b->lo[i]);
        out->hi[i] = std::max(out->hi[i], b->hi[i]);
      }
    }
    return out;
  }

  Variant v_;
};

inline bool region_contains(const Region& reg, Coords x) { return reg.contains(x); }

/// Points of a homogeneous Poisson process restricted to a generating box.
/// Coordinates are stored flat, `dim` doubles per point.
class PointSet {
 public:
  PointSet(std::size_t dim, Point box_center, double box_side, double intensity,
           std::vector<double> flat = {})
      : dim_(dim),
        center_(std::move(box_center)),
        side_(box_side),
        intensity_(intensity),
        coords_(std::move(flat)) {
    if (dim_ < 2) throw InvalidParameter("PointSet: dimension must be >= 2");
    if (center_.dim() != dim_) throw InvalidParameter("PointSet: box center dimension mismatch");
    if (coords_.size() % dim_ != 0) throw InvalidParameter("PointSet: coordinate count not a multiple of dim");
  }

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return coords_.size() / dim_; }
  bool empty() const noexcept { return coords_.empty(); }
  double intensity() const noexcept { return intensity_; }
  double box_side() const noexcept { return side_; }
  const Point& box_center() const noexcept { return center_; }
  Region box() const { return Region::box(center_, side_); }

  Coords operator[](std::size_t i) const { return {coords_.data() + i * dim_, dim_}; }
  const std::vector<double>& flat() const noexcept { return coords_; }

  void push_back(Coords p) {
    if (p.size() != dim_) throw InvalidParameter("PointSet: point dimension mismatch");
    coords_.insert(coords_.end(), p.begin(), p.end());
  }

 private:
  std::size_t dim_;
  Point center_;
  double side_;
  double intensity_;
  std::vector<double> coords_;
};

/// Samples a homogeneous Poisson point process of the given intensity in the
/// box `center + [-side/2, side/2]^dim`.
inline PointSet sample_ppp(double intensity, const Point& center, double side, RngStream& rng) {
  if (!(intensity >= 0.0) || !std::isfinite(intensity))
    throw InvalidParameter("sample_ppp: intensity must be finite and >= 0");
  if (!(side > 0.0) || !std::isfinite(side)) throw InvalidParameter("sample_ppp: box side must be > 0");
  const std::size_t dim = center.dim();
  PointSet ps(dim, center, side, intensity);
  const double volume = std::pow(side, static_cast<double>(dim));
  const std::uint64_t count = rng.poisson(intensity * volume);
  std::vector<double> drawn(count * dim);
  for (std::size_t i = 0; i < count; ++i)
    for (std::size_t k = 0; k < dim; ++k) drawn[i * dim + k] = center[k] + side * (rng.uniform() - 0.5);
  if (count == 0) return PointSet(dim, center, side, intensity, std::move(drawn));

  // The process is an unordered set; emit it in cell-major order so that
  // vertex ids are spatially local. Counting sort keeps draws within a cell in order.
  auto per_dim = static_cast<std::size_t>(std::max(1.0, std::floor(side * std::pow(intensity, 1.0 / dim) / 2.0)));
  while (per_dim > 1 && std::pow(static_cast<double>(per_dim), static_cast<double>(dim)) > 4.0 * count + 64.0)
    per_dim /= 2;
  std::size_t cells = 1;
  for (std::size_t k = 0; k < dim; ++k) cells *= per_dim;
  std::vector<std::size_t> key(count), start(cells + 1, 0);
  for (std::size_t i = 0; i < count; ++i) {
    std::size_t id = 0;
    for (std::size_t k = dim; k-- > 0;) {
      const double f = std::floor((drawn[i * dim + k] - center[k] + side / 2.0) / side * static_cast<double>(per_dim));
      id = id * per_dim + std::min(per_dim - 1, static_cast<std::size_t>(std::max(0.0, f)));
    }
    key[i] = id;
    ++start[id + 1];
  }
  std::partial_sum(start.begin(), start.end(), start.begin());
  std::vector<double> flat(count * dim);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t slot = start[key[i]]++;
    std::copy_n(drawn.begin() + static_cast<std::ptrdiff_t>(i * dim), dim, flat.begin() + static_cast<std::ptrdiff_t>(slot * dim));
  }
  return PointSet(dim, center, side, intensity, std::move(flat));
}

inline PointSet sample_ppp(double intensity, const Region& box, RngStream& rng) {
  const auto* b = std::get_if<Region::Box>(&box.node());
  if (b == nullptr) throw InvalidParameter("sample_ppp: generating region must be a Box");
  return sample_ppp(intensity, b->center, b->side, rng);
}

inline PointSet sample_ppp(double intensity, std::size_t dim, double side, RngStream& rng) {
  return sample_ppp(intensity, Point::origin(dim), side, rng);
}

}  // namespace coexsim
