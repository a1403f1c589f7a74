#include "curveflow/predicates.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace curveflow::predicates {
namespace {

struct Pair {
  double hi;
  double lo;
};

Pair two_sum(double a, double b) {
  const double s = a + b;
  const double bv = s - a;
  const double av = s - bv;
  return {s, (a - av) + (b - bv)};
}

Pair two_product(double a, double b) {
  const double p = a * b;
  return {p, std::fma(a, b, -p)};
}

// Shewchuk's grow-expansion: components kept in increasing magnitude.
template <std::size_t Cap>
void grow(std::array<double, Cap>& e, std::size_t& n, double b) {
  double q = b;
  std::size_t out = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const Pair s = two_sum(q, e[i]);
    q = s.hi;
    if (s.lo != 0.0) e[out++] = s.lo;
  }
  if (q != 0.0 || out == 0) e[out++] = q;
  n = out;
}

int orient2d_exact(Vec2 a, Vec2 b, Vec2 c) {
  const std::array<Pair, 6> terms = {
      two_product(a.x, b.y),  two_product(-a.x, c.y), two_product(-c.x, b.y),
      two_product(-a.y, b.x), two_product(a.y, c.x),  two_product(c.y, b.x),
  };
  std::array<double, 16> e{};
  std::size_t n = 0;
  for (const auto& t : terms) {
    grow(e, n, t.lo);
    grow(e, n, t.hi);
  }
  for (std::size_t i = n; i-- > 0;) {
    if (e[i] > 0.0) return 1;
    if (e[i] < 0.0) return -1;
  }
  return 0;
}

bool on_segment(Vec2 p, Vec2 q, Vec2 r) {
  // r collinear with p-q; inside the bounding box means on the segment.
  return std::min(p.x, q.x) <= r.x && r.x <= std::max(p.x, q.x) && std::min(p.y, q.y) <= r.y &&
         r.y <= std::max(p.y, q.y);
}

}  // namespace

int orient2d(Vec2 a, Vec2 b, Vec2 c) {
  const double left = (a.x - c.x) * (b.y - c.y);
  const double right = (a.y - c.y) * (b.x - c.x);
  const double det = left - right;
  const double bound = 3.3306690738754716e-16 * (std::abs(left) + std::abs(right));
  if (det > bound) return 1;
  if (-det > bound) return -1;
  return orient2d_exact(a, b, c);
}

bool segments_intersect(Vec2 p0, Vec2 p1, Vec2 q0, Vec2 q1) {
  const int o1 = orient2d(p0, p1, q0);
  const int o2 = orient2d(p0, p1, q1);
  const int o3 = orient2d(q0, q1, p0);
  const int o4 = orient2d(q0, q1, p1);
  if (o1 * o2 < 0 && o3 * o4 < 0) return true;
  if (o1 == 0 && on_segment(p0, p1, q0)) return true;
  if (o2 == 0 && on_segment(p0, p1, q1)) return true;
  if (o3 == 0 && on_segment(q0, q1, p0)) return true;
  if (o4 == 0 && on_segment(q0, q1, p1)) return true;
  return false;
}

}  // namespace curveflow::predicates
