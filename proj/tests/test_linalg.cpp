#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "mechmix/linalg.hpp"
#include "mechmix/reference.hpp"
#include "mechmix/rng.hpp"

using namespace mechmix;

namespace {

Matrix random_matrix(int rows, int cols, Rng& rng) {
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = rng.next_normal();
  return m;
}

}  // namespace

TEST_CASE("svd identity and diagonal cases") {
  const auto id = linalg::svd(Matrix::Identity(3, 3));
  for (int i = 0; i < 3; ++i) CHECK(id.singular_values(i) == doctest::Approx(1.0));

  Matrix diag = Matrix::Zero(3, 3);
  diag(0, 0) = 3.0;
  diag(1, 1) = 2.0;
  diag(2, 2) = 1.0;
  const auto d = linalg::svd(diag);
  CHECK(d.singular_values(0) == doctest::Approx(3.0));
  CHECK(d.singular_values(1) == doctest::Approx(2.0));
  CHECK(d.singular_values(2) == doctest::Approx(1.0));
}

TEST_CASE("svd reconstructs and matches characteristic-polynomial oracle") {
  Rng rng(11);
  const Matrix m = random_matrix(8, 4, rng);
  const auto s = linalg::svd(m);

  const Matrix recon =
      s.u * s.singular_values.asDiagonal() * s.v.transpose();
  CHECK((recon - m).norm() / m.norm() <= 1e-8);

  // Squared singular values are the eigenvalues of m^T m; get those from
  // char-poly root finding, independently of any SVD routine.
  const auto eigs = reference::symmetric_eigenvalues_charpoly(
      (m.transpose() * m).eval());
  REQUIRE(eigs.size() == 4);
  for (int i = 0; i < 4; ++i) {
    CHECK(s.singular_values(i) ==
          doctest::Approx(std::sqrt(std::max(0.0, eigs[i]))).epsilon(1e-6));
  }
}

TEST_CASE("svd singular values invariant under row permutation") {
  Rng rng(12);
  const Matrix m = random_matrix(6, 3, rng);
  Matrix permuted(6, 3);
  const int order[6] = {4, 2, 0, 5, 1, 3};
  for (int i = 0; i < 6; ++i) permuted.row(i) = m.row(order[i]);
  const auto a = linalg::svd(m);
  const auto b = linalg::svd(permuted);
  CHECK((a.singular_values - b.singular_values).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("svd rejects non-finite input") {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = std::nan("");
  CHECK_THROWS_AS(linalg::svd(m), InvalidInputError);
}

TEST_CASE("pseudoinverse identity and orthonormal columns") {
  const Matrix id = Matrix::Identity(4, 4);
  CHECK((linalg::pseudoinverse(id) - id).norm() <= 1e-12);

  Rng rng(13);
  const Matrix g = random_matrix(4, 2, rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  const Matrix q = qr.householderQ() * Matrix::Identity(4, 2);
  CHECK((linalg::pseudoinverse(q) - q.transpose()).norm() <= 1e-10);
}

TEST_CASE("pseudoinverse is a left inverse on random full-rank inputs") {
  Rng rng(14);
  for (int rep = 0; rep < 100; ++rep) {
    const int rows = 3 + static_cast<int>(rng.next_below(6));
    const int cols = 1 + static_cast<int>(rng.next_below(rows));
    const Matrix m = random_matrix(rows, cols, rng);
    const Matrix pinv = linalg::pseudoinverse(m);
    CHECK((pinv * m - Matrix::Identity(cols, cols)).cwiseAbs().maxCoeff() <=
          1e-8);
  }
}

TEST_CASE("pseudoinverse rejects rank-deficient input with sigma_min") {
  Matrix m(3, 2);
  m.col(0) << 1.0, 2.0, 3.0;
  m.col(1) = 2.0 * m.col(0);
  try {
    linalg::pseudoinverse(m);
    FAIL("expected DegenerateBasisError");
  } catch (const DegenerateBasisError& e) {
    CHECK(e.sigma_min() <= 1e-10);
  }
}

TEST_CASE("tridiagonal solver identity and constant-invariance cases") {
  Vector diag = Vector::Ones(4), off = Vector::Zero(3), rhs(4);
  rhs << 1.0, -2.0, 0.5, 3.0;
  CHECK((linalg::solve_tridiagonal(diag, off, rhs) - rhs).norm() <= 1e-14);

  // I + D1^T D1 applied to the constant vector gives it back, so ones must
  // solve to ones.
  const int t_len = 5;
  Vector d2 = Vector::Constant(t_len, 3.0);
  d2(0) = 2.0;
  d2(t_len - 1) = 2.0;
  const Vector o2 = Vector::Constant(t_len - 1, -1.0);
  const Vector x = linalg::solve_tridiagonal(d2, o2, Vector::Ones(t_len));
  CHECK((x - Vector::Ones(t_len)).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("tridiagonal solver matches dense elimination on 100 systems") {
  Rng rng(15);
  for (int rep = 0; rep < 100; ++rep) {
    const int n = 3 + static_cast<int>(rng.next_below(198));
    Vector diag(n), off(n - 1), rhs(n);
    for (int i = 0; i < n - 1; ++i) off(i) = rng.next_uniform(-1.0, 1.0);
    for (int i = 0; i < n; ++i) {
      rhs(i) = rng.next_uniform(-2.0, 2.0);
      const double row = (i > 0 ? std::abs(off(i - 1)) : 0.0) +
                         (i + 1 < n ? std::abs(off(i)) : 0.0);
      diag(i) = row + rng.next_uniform(0.5, 2.0);
    }
    Matrix a = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i) {
      a(i, i) = diag(i);
      if (i + 1 < n) {
        a(i, i + 1) = off(i);
        a(i + 1, i) = off(i);
      }
    }
    const Vector x = linalg::solve_tridiagonal(diag, off, rhs);
    const Vector y = reference::solve_dense(a, rhs);
    CHECK((x - y).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((a * x - rhs).cwiseAbs().maxCoeff() <=
          1e-10 * std::max(1.0, rhs.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("tridiagonal solver rejects length mismatch") {
  CHECK_THROWS_AS(
      linalg::solve_tridiagonal(Vector::Ones(4), Vector::Zero(2), Vector::Ones(4)),
      InvalidInputError);
}

TEST_CASE("symmetric eigendecomposition basic cases") {
  const auto [vi, mi] = linalg::symmetric_eigendecomposition(Matrix::Identity(3, 3));
  for (int i = 0; i < 3; ++i) CHECK(vi(i) == doctest::Approx(1.0));

  Matrix diag = Matrix::Zero(2, 2);
  diag(0, 0) = 4.0;
  diag(1, 1) = 1.0;
  const auto [vals, vecs] = linalg::symmetric_eigendecomposition(diag);
  CHECK(vals(0) == doctest::Approx(4.0));
  CHECK(vals(1) == doctest::Approx(1.0));
  CHECK(std::abs(vecs(0, 0)) == doctest::Approx(1.0));
  CHECK(std::abs(vecs(1, 1)) == doctest::Approx(1.0));
}

TEST_CASE("symmetric eigendecomposition reconstructs random matrices") {
  Rng rng(16);
  const Matrix g = random_matrix(3, 3, rng);
  const Matrix sym = 0.5 * (g + g.transpose());
  const auto [vals, vecs] = linalg::symmetric_eigendecomposition(sym);
  const Matrix recon = vecs * vals.asDiagonal() * vecs.transpose();
  CHECK((recon - sym).norm() <= 1e-8);
  CHECK((vecs.transpose() * vecs - Matrix::Identity(3, 3)).norm() <= 1e-10);
}

TEST_CASE("symmetric eigendecomposition rejects asymmetric input") {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 1) = 1.0;
  CHECK_THROWS_AS(linalg::symmetric_eigendecomposition(m), InvalidInputError);
}

TEST_CASE("assignment trivial cases") {
  Matrix cost = Matrix::Ones(3, 3);
  cost.diagonal().setZero();
  const auto perm = linalg::optimal_assignment(cost);
  for (int i = 0; i < 3; ++i) CHECK(perm[i] == i);

  Matrix swap(2, 2);
  swap << 1.0, 0.0, 0.0, 1.0;
  const auto sp = linalg::optimal_assignment(swap);
  CHECK(sp[0] == 1);
  CHECK(sp[1] == 0);
}

TEST_CASE("assignment matches exhaustive search up to size 8") {
  Rng rng(17);
  for (int rep = 0; rep < 30; ++rep) {
    const int n = 2 + static_cast<int>(rng.next_below(7));
    Matrix cost(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) cost(i, j) = rng.next_uniform(0.0, 1.0);
    const auto fast = linalg::optimal_assignment(cost);
    const auto brute = reference::assignment_bruteforce(cost);
    double cf = 0.0, cb = 0.0;
    for (int i = 0; i < n; ++i) {
      cf += cost(i, fast[i]);
      cb += cost(i, brute[i]);
    }
    CHECK(cf == doctest::Approx(cb).epsilon(1e-12));
  }
}

TEST_CASE("assignment rejects non-square input") {
  CHECK_THROWS_AS(linalg::optimal_assignment(Matrix::Zero(2, 3)),
                  InvalidInputError);
}
