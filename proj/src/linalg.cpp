#include "curveflow/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <string>

#include <Eigen/LU>
#include <Eigen/SparseLU>

namespace curveflow::linalg {
namespace {

void check_dimensions(const BorderedSystem& s) {
  const Eigen::Index n = s.core.rows();
  const Eigen::Index k = s.border_cols.cols();
  if (s.core.cols() != n || s.border_cols.rows() != n || s.border_rows.rows() != k || s.border_rows.cols() != n ||
      s.rhs.size() != n + k) {
    throw std::invalid_argument("bordered system has inconsistent dimensions");
  }
  if (k < 1 || k > 2) throw std::invalid_argument("bordered system supports 1 or 2 border unknowns");
}

std::string sci(double v) {
  std::ostringstream os;
  os << std::scientific << std::setprecision(3) << v;
  return os.str();
}

// Solves S mu = g for k <= 2 with complete pivoting.
Eigen::VectorXd solve_schur(const Eigen::MatrixXd& s, const Eigen::VectorXd& g) {
  const double scale = s.cwiseAbs().maxCoeff();
  if (!(scale > 0.0) || !std::isfinite(scale)) throw SchurDegeneracyError("multiplier Schur complement vanishes");
  if (s.rows() == 1) return Eigen::VectorXd::Constant(1, g[0] / s(0, 0));

  Eigen::Index pr = 0, pc = 0;
  s.cwiseAbs().maxCoeff(&pr, &pc);
  const Eigen::Index qr = 1 - pr, qc = 1 - pc;
  const double l = s(qr, pc) / s(pr, pc);
  const double pivot2 = s(qr, qc) - l * s(pr, qc);
  if (std::abs(pivot2) < kPivotThreshold * scale) {
    throw SchurDegeneracyError("multiplier Schur complement is singular (relative pivot " +
                               sci(std::abs(pivot2) / scale) + ")");
  }
  Eigen::VectorXd mu(2);
  mu[qc] = (g[qr] - l * g[pr]) / pivot2;
  mu[pc] = (g[pr] - s(pr, qc) * mu[qc]) / s(pr, pc);
  return mu;
}

}  // namespace

Eigen::VectorXd BorderedSystem::apply(const Eigen::VectorXd& z) const {
  const Eigen::Index n = core_size();
  const Eigen::Index k = border_size();
  Eigen::VectorXd out(n + k);
  out.head(n) = core * z.head(n) + border_cols * z.tail(k);
  out.tail(k) = border_rows * z.head(n);
  return out;
}

Eigen::MatrixXd BorderedSystem::to_dense() const {
  const Eigen::Index n = core_size();
  const Eigen::Index k = border_size();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n + k, n + k);
  m.topLeftCorner(n, n) = Eigen::MatrixXd(core);
  m.topRightCorner(n, k) = border_cols;
  m.bottomLeftCorner(k, n) = border_rows;
  return m;
}

Eigen::VectorXd solve_bordered(const BorderedSystem& system) {
  check_dimensions(system);
  const Eigen::Index n = system.core_size();
  const Eigen::Index k = system.border_size();

  Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
  lu.analyzePattern(system.core);
  lu.factorize(system.core);
  if (lu.info() != Eigen::Success) throw SingularCoreError("core factorization failed: " + lu.lastErrorMessage());

  Eigen::MatrixXd rhs(n, k + 1);
  rhs.col(0) = system.rhs.head(n);
  rhs.rightCols(k) = system.border_cols;
  const Eigen::MatrixXd sol = lu.solve(rhs);
  if (lu.info() != Eigen::Success || !sol.allFinite()) throw SingularCoreError("core solve failed");

  // SparseLU only rejects exact zero pivots; a near-singular core shows up
  // as a solve that does not reproduce its right-hand side.
  double core_scale = 0.0;
  for (Eigen::Index c = 0; c < system.core.outerSize(); ++c) {
    for (SparseMatrix::InnerIterator it(system.core, c); it; ++it) core_scale = std::max(core_scale, std::abs(it.value()));
  }
  const Eigen::MatrixXd back = system.core * sol - rhs;
  const double tol = 1e-8 * (core_scale * sol.cwiseAbs().maxCoeff() + rhs.cwiseAbs().maxCoeff());
  if (back.cwiseAbs().maxCoeff() > tol) throw SingularCoreError("core matrix is numerically singular");

  const Eigen::VectorXd y0 = sol.col(0);
  const Eigen::MatrixXd y = sol.rightCols(k);
  const Eigen::MatrixXd schur = system.border_rows * y;
  const Eigen::VectorXd g = system.border_rows * y0 - system.rhs.tail(k);
  const Eigen::VectorXd mu = solve_schur(schur, g);

  Eigen::VectorXd z(n + k);
  z.head(n) = y0 - y * mu;
  z.tail(k) = mu;
  return z;
}

Eigen::VectorXd solve_dense(const BorderedSystem& system) {
  check_dimensions(system);
  const Eigen::MatrixXd m = system.to_dense();
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(m);
  const Eigen::VectorXd pivots = lu.matrixLU().diagonal();
  if (pivots.cwiseAbs().minCoeff() < kPivotThreshold * m.cwiseAbs().maxCoeff()) {
    throw SingularSystemError("dense system is singular");
  }
  return lu.solve(system.rhs);
}

double residual_norm(const BorderedSystem& system, const Eigen::VectorXd& z) {
  check_dimensions(system);
  if (z.size() != system.size()) throw std::invalid_argument("solution vector has the wrong length");
  return (system.apply(z) - system.rhs).cwiseAbs().maxCoeff();
}

}  // namespace curveflow::linalg
