#include "curveflow/geometry.hpp"

#include <algorithm>
#include <array>
#include <numbers>
#include <numeric>

#include "curveflow/predicates.hpp"

namespace curveflow {
namespace {

std::vector<Vec2> unpack(const Eigen::VectorXd& xy) {
  if (xy.size() % 2 != 0) throw std::invalid_argument("interleaved coordinates need an even length");
  std::vector<Vec2> v(static_cast<std::size_t>(xy.size() / 2));
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = {xy[2 * i], xy[2 * i + 1]};
  return v;
}

}  // namespace

PolygonalCurve::PolygonalCurve(std::vector<Vec2> vertices) : vertices_(std::move(vertices)) {
  if (vertices_.size() < 3) throw std::invalid_argument("a closed curve needs at least 3 vertices");
  const std::size_t n = vertices_.size();
  for (std::size_t j = 0; j < n; ++j) {
    const Vec2 h = vertices_[(j + 1) % n] - vertices_[j];
    if (h.x == 0.0 && h.y == 0.0) throw DegenerateEdgeError(j);
  }
  if (signed_area(std::span<const Vec2>(vertices_)) < 0.0) {
    std::reverse(vertices_.begin() + 1, vertices_.end());
  }
}

PolygonalCurve PolygonalCurve::from_coordinates(const Eigen::VectorXd& xy) { return PolygonalCurve(unpack(xy)); }

Eigen::VectorXd PolygonalCurve::coordinates() const {
  Eigen::VectorXd xy(2 * static_cast<Eigen::Index>(vertices_.size()));
  for (std::size_t i = 0; i < vertices_.size(); ++i) {
    xy[2 * i] = vertices_[i].x;
    xy[2 * i + 1] = vertices_[i].y;
  }
  return xy;
}

PolygonalCurve PolygonalCurve::translated(Vec2 offset) const {
  std::vector<Vec2> v(vertices_);
  for (auto& p : v) p = p + offset;
  return PolygonalCurve(std::move(v));
}

PolygonalCurve PolygonalCurve::rotated(double angle) const {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  std::vector<Vec2> v(vertices_);
  for (auto& p : v) p = {c * p.x - s * p.y, s * p.x + c * p.y};
  return PolygonalCurve(std::move(v));
}

std::vector<EdgeData> edge_data(std::span<const Vec2> vertices) {
  const std::size_t n = vertices.size();
  std::vector<EdgeData> edges(n);
  for (std::size_t j = 0; j < n; ++j) {
    const Vec2 h = vertices[(j + 1) % n] - vertices[j];
    const double len = norm(h);
    if (len == 0.0) throw DegenerateEdgeError(j);
    edges[j] = {h, len, (1.0 / len) * rotate_cw(h)};
  }
  return edges;
}

std::vector<EdgeData> edge_data(const PolygonalCurve& curve) { return edge_data(curve.vertices()); }

double perimeter(std::span<const Vec2> vertices) {
  const std::size_t n = vertices.size();
  double sum = 0.0;
  for (std::size_t j = 0; j < n; ++j) sum += norm(vertices[(j + 1) % n] - vertices[j]);
  return sum;
}

double perimeter(const PolygonalCurve& curve) { return perimeter(curve.vertices()); }

double signed_area(std::span<const Vec2> vertices) {
  const std::size_t n = vertices.size();
  double sum = 0.0;
  for (std::size_t j = 0; j < n; ++j) sum += cross(vertices[j], vertices[(j + 1) % n]);
  return 0.5 * sum;
}

double signed_area(const PolygonalCurve& curve) { return signed_area(curve.vertices()); }

double perimeter(const Eigen::VectorXd& xy) { return perimeter(std::span<const Vec2>(unpack(xy))); }

double signed_area(const Eigen::VectorXd& xy) { return signed_area(std::span<const Vec2>(unpack(xy))); }

double mesh_ratio(const PolygonalCurve& curve) {
  const auto edges = edge_data(curve);
  const auto [lo, hi] = std::minmax_element(edges.begin(), edges.end(),
                                            [](const EdgeData& a, const EdgeData& b) { return a.length < b.length; });
  return hi->length / lo->length;
}

bool is_simple(const PolygonalCurve& curve) {
  using predicates::orient2d;
  using predicates::segments_intersect;
  const std::size_t n = curve.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 a0 = curve[i], a1 = curve[i + 1], a2 = curve[i + 2];
    // adjacent edges may only share their common vertex
    if (orient2d(a0, a1, a2) == 0 && dot(a1 - a0, a2 - a1) < 0.0) return false;
    for (std::size_t j = i + 2; j < n; ++j) {
      if (i == 0 && j == n - 1) continue;
      if (segments_intersect(a0, a1, curve[j], curve[j + 1])) return false;
    }
  }
  return true;
}

PolygonalCurve generate_ellipse(double a, double b, std::size_t n) {
  if (!(a > 0.0 && b > 0.0)) throw std::invalid_argument("ellipse semi-axes must be positive");
  if (n < 3) throw std::invalid_argument("ellipse needs at least 3 vertices");
  std::vector<Vec2> v(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double theta = 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(n);
    v[j] = {a * std::cos(theta), b * std::sin(theta)};
  }
  return PolygonalCurve(std::move(v));
}

PolygonalCurve generate_mikula(std::size_t n) {
  if (n < 3) throw std::invalid_argument("curve needs at least 3 vertices");
  std::vector<Vec2> v(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double rho = static_cast<double>(j) / static_cast<double>(n);
    const double c = std::cos(2.0 * std::numbers::pi * rho);
    const double s = std::sin(2.0 * std::numbers::pi * rho);
    const double s6 = std::sin(6.0 * std::numbers::pi * rho);
    v[j] = {c, std::sin(c) + s * (0.7 + s * s6 * s6)};
  }
  return PolygonalCurve(std::move(v));
}

PolygonalCurve generate_rectangle(double width, double height, std::size_t n) {
  if (!(width > 0.0 && height > 0.0)) throw std::invalid_argument("rectangle sides must be positive");
  if (n < 8) throw std::invalid_argument("rectangle needs at least 8 vertices to place its corners");

  const std::array<double, 4> sides = {width, height, width, height};
  const double total = 2.0 * (width + height);
  // largest-remainder allocation, at least one segment per side
  std::array<std::size_t, 4> segs{};
  std::array<double, 4> rem{};
  std::size_t used = 0;
  for (std::size_t k = 0; k < 4; ++k) {
    const double exact = static_cast<double>(n) * sides[k] / total;
    segs[k] = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(exact)));
    rem[k] = exact - static_cast<double>(segs[k]);
    used += segs[k];
  }
  while (used < n) {
    const auto k = static_cast<std::size_t>(std::max_element(rem.begin(), rem.end()) - rem.begin());
    ++segs[k];
    rem[k] -= 1.0;
    ++used;
  }
  while (used > n) {
    std::size_t k = 4;
    for (std::size_t i = 0; i < 4; ++i) {
      if (segs[i] > 1 && (k == 4 || rem[i] < rem[k])) k = i;
    }
    --segs[k];
    rem[k] += 1.0;
    --used;
  }

  const double hw = 0.5 * width, hh = 0.5 * height;
  const std::array<Vec2, 5> corners = {Vec2{-hw, -hh}, Vec2{hw, -hh}, Vec2{hw, hh}, Vec2{-hw, hh}, Vec2{-hw, -hh}};
  std::vector<Vec2> v;
  v.reserve(n);
  for (std::size_t k = 0; k < 4; ++k) {
    const Vec2 p = corners[k], q = corners[k + 1];
    for (std::size_t i = 0; i < segs[k]; ++i) {
      const double t = static_cast<double>(i) / static_cast<double>(segs[k]);
      v.push_back(i == 0 ? p : Vec2{p.x + t * (q.x - p.x), p.y + t * (q.y - p.y)});
    }
  }
  return PolygonalCurve(std::move(v));
}

}  // namespace curveflow
