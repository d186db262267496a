#include "mechmix/reference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace mechmix::reference {

namespace {

// Recursively enumerates grid points (counts summing to `total`, scaled by
// 1/total) inside the box [lo, hi] and keeps the one closest to v.
void enumerate_box(const Vector& v, int idx, int remaining, int total,
                   const Vector& lo, const Vector& hi, Vector& point,
                   Vector& best, double& best_dist) {
  const int k = static_cast<int>(v.size());
  if (idx == k - 1) {
    const double x = static_cast<double>(remaining) / total;
    if (x < lo(idx) - 1e-12 || x > hi(idx) + 1e-12) return;
    point(idx) = x;
    const double dist = (point - v).squaredNorm();
    if (dist < best_dist) {
      best_dist = dist;
      best = point;
    }
    return;
  }
  const int c_lo = std::max(0, static_cast<int>(std::ceil(lo(idx) * total - 1e-9)));
  const int c_hi =
      std::min(remaining, static_cast<int>(std::floor(hi(idx) * total + 1e-9)));
  for (int c = c_lo; c <= c_hi; ++c) {
    point(idx) = static_cast<double>(c) / total;
    enumerate_box(v, idx + 1, remaining - c, total, lo, hi, point, best,
                  best_dist);
  }
}

}  // namespace

Vector project_simplex_grid(const Vector& v, int rounds) {
  const int k = static_cast<int>(v.size());
  Vector lo = Vector::Zero(k), hi = Vector::Ones(k);
  Vector best = Vector::Constant(k, 1.0 / k);
  double best_dist = (best - v).squaredNorm();
  Vector point(k);

  int total = 12;
  for (int round = 0; round < rounds; ++round) {
    enumerate_box(v, 0, total, total, lo, hi, point, best, best_dist);
    // Keep a generous box around the incumbent so the true minimizer stays
    // inside while the grid halves.
    const double margin = 3.0 / total;
    for (int i = 0; i < k; ++i) {
      lo(i) = std::max(0.0, best(i) - margin);
      hi(i) = std::min(1.0, best(i) + margin);
    }
    total *= 2;
  }
  return best;
}

Vector project_simplex_support_enum(const Vector& v) {
  const int k = static_cast<int>(v.size());
  Vector best;
  double best_dist = std::numeric_limits<double>::infinity();
  for (unsigned mask = 1; mask < (1u << k); ++mask) {
    double sum = 0.0;
    int size = 0;
    for (int i = 0; i < k; ++i) {
      if (mask & (1u << i)) {
        sum += v(i);
        ++size;
      }
    }
    const double tau = (sum - 1.0) / size;
    Vector x = Vector::Zero(k);
    bool feasible = true;
    for (int i = 0; i < k && feasible; ++i) {
      if (mask & (1u << i)) {
        x(i) = v(i) - tau;
        feasible = x(i) >= -1e-12;
      }
    }
    if (!feasible) continue;
    const double dist = (x - v).squaredNorm();
    if (dist < best_dist) {
      best_dist = dist;
      best = x;
    }
  }
  return best;
}

Vector solve_dense(Matrix a, Vector rhs) {
  const int n = static_cast<int>(a.rows());
  if (a.cols() != n || rhs.size() != n) {
    throw InvalidInputError("solve_dense: shape mismatch");
  }
  for (int col = 0; col < n; ++col) {
    int pivot = col;
    for (int r = col + 1; r < n; ++r) {
      if (std::abs(a(r, col)) > std::abs(a(pivot, col))) pivot = r;
    }
    if (a(pivot, col) == 0.0) {
      throw InvalidInputError("solve_dense: singular matrix");
    }
    if (pivot != col) {
      a.row(pivot).swap(a.row(col));
      std::swap(rhs(pivot), rhs(col));
    }
    for (int r = col + 1; r < n; ++r) {
      const double f = a(r, col) / a(col, col);
      a.row(r).tail(n - col) -= f * a.row(col).tail(n - col);
      rhs(r) -= f * rhs(col);
    }
  }
  Vector x(n);
  for (int r = n - 1; r >= 0; --r) {
    double acc = rhs(r);
    for (int c = r + 1; c < n; ++c) acc -= a(r, c) * x(c);
    x(r) = acc / a(r, r);
  }
  return x;
}

std::vector<int> assignment_bruteforce(const Matrix& cost) {
  const int n = static_cast<int>(cost.rows());
  std::vector<int> perm(n), best(n);
  std::iota(perm.begin(), perm.end(), 0);
  best = perm;
  double best_cost = std::numeric_limits<double>::infinity();
  do {
    double total = 0.0;
    for (int i = 0; i < n; ++i) total += cost(i, perm[i]);
    if (total < best_cost) {
      best_cost = total;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

std::vector<double> symmetric_eigenvalues_charpoly(const Matrix& m) {
  const int n = static_cast<int>(m.rows());
  // Faddeev-LeVerrier: charpoly coefficients of det(lambda I - M).
  std::vector<double> coeff(n + 1, 0.0);
  coeff[0] = 1.0;
  Matrix mk = Matrix::Zero(n, n);
  Matrix eye = Matrix::Identity(n, n);
  for (int k = 1; k <= n; ++k) {
    mk = (m * (mk + coeff[k - 1] * eye)).eval();
    coeff[k] = -mk.trace() / k;
  }
  auto poly = [&](double x) {
    double acc = 0.0;
    for (int i = 0; i <= n; ++i) acc = acc * x + coeff[i];
    return acc;
  };
  // All roots are real; bracket them inside the Gershgorin bound and find
  // sign changes on a fine scan, then bisect.
  double radius = 0.0;
  for (int i = 0; i < n; ++i) {
    radius = std::max(radius, m.row(i).cwiseAbs().sum());
  }
  radius += 1.0;
  const int scan = 200000;
  std::vector<double> roots;
  double prev_x = -radius, prev_f = poly(prev_x);
  for (int i = 1; i <= scan && static_cast<int>(roots.size()) < n; ++i) {
    const double x = -radius + 2.0 * radius * i / scan;
    const double f = poly(x);
    if (prev_f == 0.0) roots.push_back(prev_x);
    if ((prev_f < 0.0 && f > 0.0) || (prev_f > 0.0 && f < 0.0)) {
      double a = prev_x, b = x;
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (a + b);
        if ((poly(a) <= 0.0) == (poly(mid) <= 0.0)) {
          a = mid;
        } else {
          b = mid;
        }
      }
      roots.push_back(0.5 * (a + b));
    }
    prev_x = x;
    prev_f = f;
  }
  std::sort(roots.begin(), roots.end(), std::greater<double>());
  return roots;
}

}  // namespace mechmix::reference
