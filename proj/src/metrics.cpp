#include "curveflow/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>

#include "curveflow/predicates.hpp"

namespace curveflow::metrics {
namespace {

using predicates::orient2d;

// Winding-number test for a point known not to lie on the boundary.
bool strictly_inside(Vec2 m, std::span<const Vec2> poly) {
  int wn = 0;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 u = poly[i];
    const Vec2 v = poly[(i + 1) % n];
    if (u.y <= m.y) {
      if (v.y > m.y && orient2d(u, v, m) > 0) ++wn;
    } else if (v.y <= m.y && orient2d(u, v, m) < 0) {
      --wn;
    }
  }
  return wn != 0;
}

struct Box {
  double x0, x1, y0, y1;
  static Box of(Vec2 a, Vec2 b) {
    return {std::min(a.x, b.x), std::max(a.x, b.x), std::min(a.y, b.y), std::max(a.y, b.y)};
  }
  bool overlaps(const Box& o) const { return x0 <= o.x1 && o.x0 <= x1 && y0 <= o.y1 && o.y0 <= y1; }
};

// Shoelace contribution of the parts of `self`'s boundary inside `other`.
// Boundary pieces shared with `other` count only when `owner` is set and the
// two edges run the same way (both regions on the same side).
double inside_boundary_sum(std::span<const Vec2> self, std::span<const Vec2> other, bool owner) {
  const std::size_t na = self.size();
  const std::size_t nb = other.size();
  std::vector<Box> other_boxes(nb);
  for (std::size_t j = 0; j < nb; ++j) other_boxes[j] = Box::of(other[j], other[(j + 1) % nb]);

  struct Overlap {
    double s0, s1;
    bool same_direction;
  };
  double sum = 0.0;
  std::vector<double> params;
  std::vector<Overlap> overlaps;
  for (std::size_t i = 0; i < na; ++i) {
    const Vec2 p = self[i];
    const Vec2 q = self[(i + 1) % na];
    const Vec2 d = q - p;
    const double dd = dot(d, d);
    const Box box = Box::of(p, q);
    params.assign({0.0, 1.0});
    overlaps.clear();
    for (std::size_t j = 0; j < nb; ++j) {
      if (!box.overlaps(other_boxes[j])) continue;
      const Vec2 b0 = other[j];
      const Vec2 b1 = other[(j + 1) % nb];
      if (!predicates::segments_intersect(p, q, b0, b1)) continue;
      if (orient2d(p, q, b0) == 0 && orient2d(p, q, b1) == 0) {
        const double s0 = dot(b0 - p, d) / dd;
        const double s1 = dot(b1 - p, d) / dd;
        for (double s : {s0, s1}) {
          if (s > 0.0 && s < 1.0) params.push_back(s);
        }
        overlaps.push_back({std::min(s0, s1), std::max(s0, s1), s1 > s0});
      } else {
        const Vec2 e = b1 - b0;
        const double t = cross(b0 - p, e) / cross(d, e);
        if (t > 0.0 && t < 1.0) params.push_back(t);
      }
    }
    std::sort(params.begin(), params.end());
    params.erase(std::unique(params.begin(), params.end()), params.end());
    for (std::size_t k = 0; k + 1 < params.size(); ++k) {
      const double t0 = params[k];
      const double t1 = params[k + 1];
      const double tm = 0.5 * (t0 + t1);
      const Vec2 a = p + t0 * d;
      const Vec2 b = (k + 2 == params.size()) ? q : p + t1 * d;
      const Vec2 start = k == 0 ? p : a;
      bool include = false;
      const auto shared = std::find_if(overlaps.begin(), overlaps.end(),
                                       [tm](const Overlap& o) { return o.s0 < tm && tm < o.s1; });
      if (shared != overlaps.end()) {
        include = owner && shared->same_direction;
      } else {
        include = strictly_inside(p + tm * d, other);
      }
      if (include) sum += 0.5 * cross(start, b);
    }
  }
  return sum;
}

void require_simple(const PolygonalCurve& c, const char* which) {
  if (!is_simple(c)) throw NonSimpleCurveError(std::string("polygon ") + which + " is not simple");
}

}  // namespace

double polygon_intersection_area(const PolygonalCurve& a, const PolygonalCurve& b) {
  require_simple(a, "A");
  require_simple(b, "B");
  const double area = inside_boundary_sum(a.vertices(), b.vertices(), true) +
                      inside_boundary_sum(b.vertices(), a.vertices(), false);
  return std::clamp(area, 0.0, std::min(signed_area(a), signed_area(b)));
}

double manifold_distance(const PolygonalCurve& a, const PolygonalCurve& b) {
  const double inter = polygon_intersection_area(a, b);
  return std::max(0.0, signed_area(a) + signed_area(b) - 2.0 * inter);
}

std::vector<ConvergenceRow> eoc(std::span<const std::pair<double, double>> tau_error) {
  std::vector<ConvergenceRow> rows;
  rows.reserve(tau_error.size());
  for (std::size_t j = 0; j < tau_error.size(); ++j) {
    const auto [tau, err] = tau_error[j];
    if (!(err > 0.0)) throw std::invalid_argument("eoc: error at row " + std::to_string(j) + " is not positive");
    ConvergenceRow row{tau, 0.0, err, std::nullopt};
    if (j > 0) {
      const auto [tau_prev, err_prev] = tau_error[j - 1];
      if (!(tau < tau_prev)) throw std::invalid_argument("eoc: step sizes must decrease strictly");
      row.order = std::log(err_prev / err) / std::log(tau_prev / tau);
    }
    rows.push_back(row);
  }
  return rows;
}

void DiagnosticsSeries::write_csv(std::ostream& out) const {
  out << kHeader << '\n' << std::setprecision(17);
  for (const auto& r : rows) {
    out << r.t << ',' << r.L_norm << ',' << r.dA << ',' << r.lambda << ',' << r.eta << ',' << r.psi << ','
        << r.newton_iters << ',' << r.deltaL << ',' << r.mode << '\n';
  }
}

void write_convergence_csv(std::ostream& out, std::span<const ConvergenceRow> rows) {
  out << "tau,h,error,order\n" << std::setprecision(17);
  for (const auto& r : rows) {
    out << r.tau << ',' << r.h << ',' << r.error << ',';
    if (r.order) out << *r.order;
    out << '\n';
  }
}

}  // namespace curveflow::metrics
