#pragma once

#include <cstddef>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "curveflow/geometry.hpp"

namespace curveflow::metrics {

class NonSimpleCurveError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// |Omega_A cap Omega_B| for two simple counterclockwise polygons.
///
/// The intersection boundary consists of the parts of each boundary lying
/// inside the other region, so its area is the shoelace sum over those
/// pieces. Collinear overlaps count once when both regions lie on the same
/// side and not at all otherwise. Multi-component intersections are summed.
double polygon_intersection_area(const PolygonalCurve& a, const PolygonalCurve& b);

/// Area of the symmetric difference of the enclosed regions.
double manifold_distance(const PolygonalCurve& a, const PolygonalCurve& b);

struct ConvergenceRow {
  double tau = 0.0;
  double h = 0.0;
  double error = 0.0;
  std::optional<double> order;
};

/// Experimental orders between consecutive (tau, error) pairs:
/// log(e_{j-1}/e_j) / log(tau_{j-1}/tau_j). Errors must be positive.
std::vector<ConvergenceRow> eoc(std::span<const std::pair<double, double>> tau_error);

/// |lambda - 0|; the continuous multipliers vanish.
inline double multiplier_error(double value) { return value < 0.0 ? -value : value; }

struct DiagnosticsRow {
  double t = 0.0;
  double L_norm = 1.0;
  double dA = 0.0;
  double lambda = 0.0;
  double eta = 0.0;
  double psi = 1.0;
  std::size_t newton_iters = 0;
  double deltaL = 0.0;
  std::string mode;
};

struct DiagnosticsSeries {
  std::vector<DiagnosticsRow> rows;

  static constexpr const char* kHeader = "t,L_norm,dA,lambda,eta,psi,newton_iters,deltaL,mode";
  void write_csv(std::ostream& out) const;
};

void write_convergence_csv(std::ostream& out, std::span<const ConvergenceRow> rows);

}  // namespace curveflow::metrics
