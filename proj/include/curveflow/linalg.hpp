#pragma once

#include <stdexcept>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace curveflow::linalg {

using SparseMatrix = Eigen::SparseMatrix<double>;

class SingularSystemError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The sparse core block could not be factorized.
class SingularCoreError : public SingularSystemError {
 public:
  using SingularSystemError::SingularSystemError;
};

/// The multiplier Schur complement is (numerically) singular. For the
/// two-multiplier Newton system this happens when the curvature iterate is
/// constant, i.e. at the circular equilibrium.
class SchurDegeneracyError : public SingularSystemError {
 public:
  using SingularSystemError::SingularSystemError;
};

/// Saddle-point system
///
///     [ core          border_cols ] [ y  ]   [ rhs_head ]
///     [ border_rows   0           ] [ mu ] = [ rhs_tail ]
///
/// with a square sparse core of size n and k = 1 or 2 border unknowns.
struct BorderedSystem {
  SparseMatrix core;
  Eigen::MatrixXd border_cols;  // n x k
  Eigen::MatrixXd border_rows;  // k x n
  Eigen::VectorXd rhs;          // n + k

  Eigen::Index core_size() const { return core.rows(); }
  Eigen::Index border_size() const { return border_cols.cols(); }
  Eigen::Index size() const { return core_size() + border_size(); }

  /// Full matrix-vector product.
  Eigen::VectorXd apply(const Eigen::VectorXd& z) const;
  Eigen::MatrixXd to_dense() const;
};

/// Relative pivot size below which a matrix is treated as singular.
inline constexpr double kPivotThreshold = 1e-13;

/// Sparse LU of the core, then a k x k Schur complement on the border
/// unknowns. Throws SingularCoreError or SchurDegeneracyError.
Eigen::VectorXd solve_bordered(const BorderedSystem& system);

/// Dense partial-pivoting LU on the assembled matrix; for small systems and
/// cross-checks.
Eigen::VectorXd solve_dense(const BorderedSystem& system);

/// Max-norm of M z - rhs.
double residual_norm(const BorderedSystem& system, const Eigen::VectorXd& z);

}  // namespace curveflow::linalg
