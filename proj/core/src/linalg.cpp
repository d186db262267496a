#include "mechmix/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace mechmix::linalg {

namespace {

void require_finite(const Matrix& m, const char* op) {
  if (!m.allFinite()) {
    throw InvalidInputError(std::string(op) + ": input has non-finite entries");
  }
}

}  // namespace

SvdResult svd(const Matrix& m) {
  if (m.rows() < 1 || m.cols() < 1) {
    throw InvalidInputError("svd: empty matrix");
  }
  require_finite(m, "svd");
  Eigen::JacobiSVD<Matrix> dec(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return SvdResult{dec.singularValues(), dec.matrixU(), dec.matrixV()};
}

Matrix pseudoinverse(const Matrix& m) {
  require_finite(m, "pseudoinverse");
  const SvdResult s = svd(m);
  const double smax = s.singular_values(0);
  const double smin = s.singular_values(s.singular_values.size() - 1);
  if (smin < kRankTolerance * smax || smax == 0.0) {
    throw DegenerateBasisError(
        "pseudoinverse: rank-deficient matrix (sigma_min=" +
            std::to_string(smin) + ")",
        smin);
  }
  return s.v * s.singular_values.cwiseInverse().asDiagonal() *
         s.u.transpose();
}

Vector solve_tridiagonal(const Vector& diag, const Vector& off,
                         const Vector& rhs) {
  const Eigen::Index n = diag.size();
  if (n == 0) throw InvalidInputError("solve_tridiagonal: empty system");
  if (off.size() != n - 1 || rhs.size() != n) {
    throw InvalidInputError("solve_tridiagonal: length mismatch");
  }
  if (n == 1) {
    Vector x(1);
    x(0) = rhs(0) / diag(0);
    return x;
  }
  Vector c(n - 1), d(n);
  c(0) = off(0) / diag(0);
  d(0) = rhs(0) / diag(0);
  for (Eigen::Index i = 1; i < n; ++i) {
    const double denom = diag(i) - off(i - 1) * c(i - 1);
    if (i < n - 1) c(i) = off(i) / denom;
    d(i) = (rhs(i) - off(i - 1) * d(i - 1)) / denom;
  }
  Vector x(n);
  x(n - 1) = d(n - 1);
  for (Eigen::Index i = n - 2; i >= 0; --i) {
    x(i) = d(i) - c(i) * x(i + 1);
  }
  return x;
}

std::pair<Vector, Matrix> symmetric_eigendecomposition(const Matrix& m) {
  if (m.rows() != m.cols()) {
    throw InvalidInputError("symmetric_eigendecomposition: matrix not square");
  }
  require_finite(m, "symmetric_eigendecomposition");
  const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-10) {
    throw InvalidInputError(
        "symmetric_eigendecomposition: input asymmetric beyond 1e-10");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> dec(m);
  if (dec.info() != Eigen::Success) {
    throw InvalidInputError("symmetric_eigendecomposition: solver failed");
  }
  // Eigen returns ascending order; flip to descending.
  const Eigen::Index n = m.rows();
  Vector vals(n);
  Matrix vecs(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    vals(i) = dec.eigenvalues()(n - 1 - i);
    vecs.col(i) = dec.eigenvectors().col(n - 1 - i);
  }
  return {vals, vecs};
}

std::vector<int> optimal_assignment(const Matrix& cost) {
  if (cost.rows() != cost.cols()) {
    throw InvalidInputError("optimal_assignment: cost matrix not square");
  }
  require_finite(cost, "optimal_assignment");
  const int n = static_cast<int>(cost.rows());
  const double inf = std::numeric_limits<double>::infinity();

  // Potential-based Hungarian algorithm, O(n^3).
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      int j1 = 0;
      double delta = inf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<int> perm(n, -1);
  for (int j = 1; j <= n; ++j) {
    if (p[j] != 0) perm[p[j] - 1] = j - 1;
  }
  return perm;
}

}  // namespace mechmix::linalg
