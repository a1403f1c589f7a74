#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace curveflow {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend bool operator==(Vec2, Vec2) = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
/// Clockwise rotation by pi/2.
inline Vec2 rotate_cw(Vec2 a) { return {a.y, -a.x}; }

/// Thrown when two consecutive vertices coincide.
class DegenerateEdgeError : public std::runtime_error {
 public:
  explicit DegenerateEdgeError(std::size_t edge)
      : std::runtime_error("degenerate edge " + std::to_string(edge) + " (zero length)"), edge_(edge) {}
  std::size_t edge() const noexcept { return edge_; }

 private:
  std::size_t edge_;
};

/// Closed polygon with periodic vertex indexing.
///
/// Stored curves are always counterclockwise (positive signed area); the
/// constructor reverses the vertex order of a clockwise input while keeping
/// vertex 0 in place. Edge j joins vertex j to vertex j+1 (mod N).
class PolygonalCurve {
 public:
  explicit PolygonalCurve(std::vector<Vec2> vertices);

  /// Build from interleaved coordinates (x0, y0, x1, y1, ...).
  static PolygonalCurve from_coordinates(const Eigen::VectorXd& xy);

  std::size_t size() const noexcept { return vertices_.size(); }
  const Vec2& operator[](std::size_t i) const { return vertices_[i % vertices_.size()]; }
  std::span<const Vec2> vertices() const noexcept { return vertices_; }

  /// Interleaved coordinates (x0, y0, x1, y1, ...).
  Eigen::VectorXd coordinates() const;

  PolygonalCurve translated(Vec2 offset) const;
  PolygonalCurve rotated(double angle) const;

 private:
  std::vector<Vec2> vertices_;
};

struct EdgeData {
  Vec2 vector;   // X_{j+1} - X_j
  double length;
  Vec2 normal;   // outward unit normal
};

/// Per-edge vectors, lengths and outward normals. Throws DegenerateEdgeError.
std::vector<EdgeData> edge_data(std::span<const Vec2> vertices);
std::vector<EdgeData> edge_data(const PolygonalCurve& curve);

double perimeter(std::span<const Vec2> vertices);
double perimeter(const PolygonalCurve& curve);

/// Shoelace area; positive for counterclockwise order.
double signed_area(std::span<const Vec2> vertices);
double signed_area(const PolygonalCurve& curve);

/// Longest edge over shortest edge.
double mesh_ratio(const PolygonalCurve& curve);

/// Interleaved-coordinate overloads used on Newton iterates.
double perimeter(const Eigen::VectorXd& xy);
double signed_area(const Eigen::VectorXd& xy);

/// O(N^2) check that no two non-adjacent edges touch and no adjacent
/// edges fold back onto each other.
bool is_simple(const PolygonalCurve& curve);

PolygonalCurve generate_ellipse(double a, double b, std::size_t n);
/// Mikula-Sevcovic curve with strongly oscillating curvature.
PolygonalCurve generate_mikula(std::size_t n);
/// Axis-aligned rectangle centred at the origin. Corners are vertices; the
/// remaining vertices are spread over the sides proportionally to length.
PolygonalCurve generate_rectangle(double width, double height, std::size_t n);

}  // namespace curveflow
