#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "mechmix/errors.hpp"

namespace mechmix {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

namespace linalg {

struct SvdResult {
  Vector singular_values;  // descending
  Matrix u;                // rows x r
  Matrix v;                // cols x r
};

// Thin SVD. Singular values come back sorted descending; u * diag(s) * v^T
// reconstructs the input within 1e-8 relative Frobenius error.
SvdResult svd(const Matrix& m);

// Left pseudoinverse (m^T m)^{-1} m^T for full-column-rank m. Throws
// DegenerateBasisError when sigma_min < 1e-10 * sigma_max.
Matrix pseudoinverse(const Matrix& m);

// Relative rank floor used by pseudoinverse.
inline constexpr double kRankTolerance = 1e-10;

// Solves the symmetric tridiagonal system with main diagonal `diag` and
// sub/super diagonal `off` (size diag.size() - 1) by the Thomas algorithm.
// The systems that arise here (lambda_j*I + lambda*D1^T*D1) are diagonally
// dominant, so no pivoting is needed.
Vector solve_tridiagonal(const Vector& diag, const Vector& off,
                         const Vector& rhs);

// Eigendecomposition of a symmetric matrix; eigenvalues descending,
// eigenvectors orthonormal columns.
std::pair<Vector, Matrix> symmetric_eigendecomposition(const Matrix& m);

// Minimum-cost assignment on a square cost matrix (Hungarian algorithm).
// Returns perm with perm[row] = assigned column.
std::vector<int> optimal_assignment(const Matrix& cost);

}  // namespace linalg
}  // namespace mechmix
