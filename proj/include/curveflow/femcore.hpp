#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "curveflow/geometry.hpp"
#include "curveflow/linalg.hpp"

namespace curveflow::fem {

/// One value per vertex, piecewise linear along the polygon.
using NodalField = Eigen::VectorXd;
/// Vector-valued nodal field, interleaved (x0, y0, x1, y1, ...).
using VectorField = Eigen::VectorXd;

/// Field that is linear on every edge but may jump at vertices. For edge j
/// (vertex j -> vertex j+1) `start` holds the one-sided limit at vertex j
/// and `end` the one at vertex j+1; each entry has `components` values.
struct EdgeField {
  int components = 1;
  std::vector<double> start;
  std::vector<double> end;

  static EdgeField from_nodal(const Eigen::VectorXd& nodal, int components);
};

/// Mass-lumped (trapezoidal) inner product on the polygon.
double lumped_inner(const EdgeField& u, const EdgeField& v, const PolygonalCurve& curve);
/// Nodal overload; accepts scalar (size N) or vector (size 2N) fields.
double lumped_inner(const Eigen::VectorXd& u, const Eigen::VectorXd& v, const PolygonalCurve& curve);

/// (d_s u, d_s v) on the polygon; scalar or vector nodal fields.
double stiffness_inner(const Eigen::VectorXd& u, const Eigen::VectorXd& v, const PolygonalCurve& curve);

/// First variation of the perimeter at `curve` in direction `direction`.
double variation_perimeter(const PolygonalCurve& curve, const VectorField& direction);
/// First variation of the enclosed area at `curve` in direction `direction`.
double variation_area(const PolygonalCurve& curve, const VectorField& direction);

/// Gradients of perimeter and area with respect to the interleaved vertex
/// coordinates `xy`; the variations above are their dot products.
VectorField perimeter_gradient(const Eigen::VectorXd& xy);
VectorField area_gradient(const Eigen::VectorXd& xy);

/// Discrete curvature of a polygon: the least-squares solution of
/// (kappa n, w)^h = (d_s X, d_s w) over all nodal test fields w.
NodalField initial_curvature(const PolygonalCurve& curve);

/// Everything the bilinear forms need from a reference polygon.
struct ReferenceGeometry {
  std::vector<double> lengths;  // |h_j|
  Eigen::VectorXd mass;         // lumped mass (1, phi_i)^h
  VectorField vertex_normals;   // (phi_i, n)^h, interleaved

  explicit ReferenceGeometry(std::span<const Vec2> vertices);
  explicit ReferenceGeometry(const PolygonalCurve& curve) : ReferenceGeometry(curve.vertices()) {}
  static ReferenceGeometry of(const Eigen::VectorXd& xy);

  Eigen::Index nodes() const { return mass.size(); }
  /// Stiffness action A u, where (A u)_i = sum over the edges at i of (u_i - u_k)/|h|.
  Eigen::VectorXd stiffness_apply(const Eigen::VectorXd& u) const;
  Eigen::SparseMatrix<double> stiffness_matrix() const;
};

/// Which multiplier constraints are active.
enum class Mode {
  StructurePreserving,  // lambda and eta; perimeter and area laws
  PerimeterDecreasing,  // lambda only; perimeter law
  AreaPreserving,       // eta only; area law
};

const char* mode_name(Mode mode);

/// Unknowns (X, kappa, lambda, eta) at the new time level.
struct Iterate {
  VectorField x;
  NodalField kappa;
  double lambda = 0.0;
  double eta = 0.0;
};

/// One implicit time step of the multiplier-augmented BGN system:
///
///   ((c_x X + s_x)/tau, phi n~)^h + (d_s K, d_s phi) - L (K, phi)^h - E (1, phi)^h = 0
///   (K n~, w)^h - (d_s Xe, d_s w) = 0
///   (c_L L(X) + s_L)/tau + (d_s K, d_s K) = 0          [perimeter law]
///   A(X) - A_target = 0                                 [area law]
///
/// All forms live on the reference (predicted) polygon n~. K, Xe, L, E are
/// theta-averages of the unknowns with the previous level (theta = 1 for
/// Euler/BDF, 1/2 for Crank-Nicolson).
struct StepContext {
  Mode mode = Mode::StructurePreserving;
  double tau = 0.0;
  double theta = 1.0;
  ReferenceGeometry reference;
  double x_coef = 1.0;
  VectorField x_history;
  double perimeter_coef = 1.0;
  double perimeter_history = 0.0;
  double area_target = 0.0;
  Iterate previous;  // used only when theta < 1
};

/// Newton blocks in the layout
///
///   [ P  Q   a1 a2 ] [ X_d ]   [ F1 ]
///   [ R  Pk  0  0  ] [ K_d ] = [ F2 ]
///   [ b1 b2  0  0  ] [ l_d ]   [ f1 ]
///   [ c  0   0  0  ] [ e_d ]   [ f2 ]
///
/// where the right-hand side is the negative residual. The first block row
/// (N rows) is the flow equation scaled by tau, the second (2N rows) the
/// curvature identity; Pk is P transposed up to the theta and c_x factors.
struct NewtonBlocks {
  Eigen::SparseMatrix<double> P;   // N x 2N
  Eigen::SparseMatrix<double> Q;   // N x N
  Eigen::VectorXd a1, a2;          // N
  Eigen::SparseMatrix<double> R;   // 2N x 2N
  Eigen::SparseMatrix<double> Pk;  // 2N x N
  Eigen::VectorXd b1;              // 2N (row)
  Eigen::VectorXd b2;              // N (row)
  Eigen::VectorXd c;               // 2N (row)
  Eigen::VectorXd F1;              // N
  Eigen::VectorXd F2;              // 2N
  double f1 = 0.0;
  double f2 = 0.0;
};

NewtonBlocks assemble_newton_blocks(const StepContext& context, const Iterate& iterate);

/// Bordered system for the active mode; unknown order (X, K, lambda?, eta?).
linalg::BorderedSystem to_bordered_system(const NewtonBlocks& blocks, Mode mode);

/// Residual vector (negated right-hand side) in the same ordering.
Eigen::VectorXd residual(const StepContext& context, const Iterate& iterate);

}  // namespace curveflow::fem
