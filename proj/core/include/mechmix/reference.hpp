#pragma once

#include <vector>

#include "mechmix/linalg.hpp"

namespace mechmix::reference {

// Independent reference implementations used only for verification (the
// selftest command and the test suites). Nothing in the main pipeline calls
// into this header, so each routine stays a genuine cross-check of the
// production path.

// Simplex projection by iterative grid refinement: coarse simplex grid,
// then successively finer local grids around the incumbent. Accuracy is
// roughly resolution^rounds.
Vector project_simplex_grid(const Vector& v, int rounds = 6);

// Exact simplex projection by enumerating KKT support sets (2^K - 1
// candidates); practical for K <= ~16.
Vector project_simplex_support_enum(const Vector& v);

// Dense Gaussian elimination with partial pivoting (no library calls).
Vector solve_dense(Matrix a, Vector rhs);

// Exhaustive minimum-cost assignment; n <= 9 or it will not return soon.
std::vector<int> assignment_bruteforce(const Matrix& cost);

// Eigenvalues of a small symmetric matrix via its characteristic
// polynomial (Faddeev-LeVerrier coefficients, then bisection on sign
// changes). Returned descending. Intended for n <= 6.
std::vector<double> symmetric_eigenvalues_charpoly(const Matrix& m);

}  // namespace mechmix::reference
