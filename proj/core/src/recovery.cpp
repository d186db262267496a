#include "mechmix/recovery.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace mechmix {

std::vector<double> SmoothingConfig::default_lambda_grid() {
  // Log-spaced over [0.1, 50].
  std::vector<double> grid;
  const int n = 12;
  for (int i = 0; i < n; ++i) {
    grid.push_back(0.1 * std::pow(500.0, static_cast<double>(i) / (n - 1)));
  }
  return grid;
}

Vector project_simplex(const Vector& v) {
  if (!v.allFinite()) {
    throw InvalidInputError("project_simplex: non-finite input");
  }
  const Eigen::Index k = v.size();
  if (k == 0) throw InvalidInputError("project_simplex: empty input");
  std::vector<double> u(v.data(), v.data() + k);
  std::sort(u.begin(), u.end(), std::greater<double>());
  double cumsum = 0.0;
  double tau = 0.0;
  int support = 0;
  for (Eigen::Index j = 0; j < k; ++j) {
    cumsum += u[j];
    const double candidate = (cumsum - 1.0) / static_cast<double>(j + 1);
    if (u[j] - candidate > 0.0) {
      tau = candidate;
      support = static_cast<int>(j + 1);
    }
  }
  (void)support;
  Vector out(k);
  for (Eigen::Index i = 0; i < k; ++i) out(i) = std::max(v(i) - tau, 0.0);
  return out;
}

Vector lift_shift(const Vector& shift) {
  Vector full(shift.size() + 1);
  full(0) = 1.0 - shift.sum();
  full.tail(shift.size()) = shift;
  return full;
}

namespace {

struct PointwiseFit {
  Matrix shift;      // T x (K-1), unprojected
  Matrix projected;  // T x K
  Vector residuals;  // T
};

PointwiseFit pointwise_fit(const Matrix& encoded, const DomainBasis& basis) {
  if (encoded.cols() != basis.mu0.size()) {
    throw InvalidInputError("encoded dimension does not match basis");
  }
  const Matrix pinv = linalg::pseudoinverse(basis.b);
  const int t_len = static_cast<int>(encoded.rows());
  const int km1 = static_cast<int>(basis.b.cols());

  PointwiseFit fit;
  fit.shift = Matrix(t_len, km1);
  fit.projected = Matrix(t_len, km1 + 1);
  fit.residuals = Vector(t_len);
  for (int t = 0; t < t_len; ++t) {
    const Vector y = encoded.row(t).transpose() - basis.mu0;
    const Vector shift = pinv * y;
    fit.shift.row(t) = shift.transpose();
    fit.residuals(t) = (y - basis.b * shift).norm();
    fit.projected.row(t) = project_simplex(lift_shift(shift)).transpose();
  }
  return fit;
}

Matrix project_rows(const Matrix& shift_rows) {
  Matrix out(shift_rows.rows(), shift_rows.cols() + 1);
  for (int t = 0; t < shift_rows.rows(); ++t) {
    out.row(t) =
        project_simplex(lift_shift(shift_rows.row(t).transpose())).transpose();
  }
  return out;
}

}  // namespace

RecoveryResult recover_pointwise(const Matrix& encoded,
                                 const DomainBasis& basis) {
  PointwiseFit fit = pointwise_fit(encoded, basis);
  RecoveryResult result;
  result.raw = fit.projected;
  result.smoothed = fit.projected;
  result.residual_norms = std::move(fit.residuals);
  result.raw_pre = fit.shift;
  result.smoothed_pre = std::move(fit.shift);
  result.bottleneck_warning = basis.bottleneck_warning;
  return result;
}

RecoveryResult smooth_window(RecoveryResult result, int window) {
  const int t_len = result.length();
  if (window < 0 || 2 * window + 1 > t_len) {
    throw InvalidInputError("smoothing window too large for trajectory");
  }
  result.window_used = window;
  if (window == 0) {
    result.smoothed = result.raw;
    result.smoothed_pre = result.raw_pre;
    return result;
  }
  Matrix smoothed = result.raw;
  Matrix smoothed_pre = result.raw_pre;
  for (int t = window; t < t_len - window; ++t) {
    Vector acc = Vector::Zero(result.raw.cols());
    Vector acc_pre = Vector::Zero(result.raw_pre.cols());
    for (int s = t - window; s <= t + window; ++s) {
      acc += result.raw.row(s).transpose();
      acc_pre += result.raw_pre.row(s).transpose();
    }
    acc /= 2.0 * window + 1.0;
    acc_pre /= 2.0 * window + 1.0;
    smoothed.row(t) = project_simplex(acc).transpose();
    smoothed_pre.row(t) = acc_pre.transpose();
  }
  result.smoothed = std::move(smoothed);
  result.smoothed_pre = std::move(smoothed_pre);
  return result;
}

namespace {

// Path-graph Laplacian diagonal degrees: 1 at the ends, 2 inside.
Vector laplacian_diagonal(int t_len) {
  Vector deg = Vector::Constant(t_len, 2.0);
  deg(0) = 1.0;
  deg(t_len - 1) = 1.0;
  return deg;
}

}  // namespace

double tv_degrees_of_freedom(const Vector& basis_eigenvalues, double lambda,
                             int length) {
  const double pi = 3.14159265358979323846;
  double df = 0.0;
  for (Eigen::Index j = 0; j < basis_eigenvalues.size(); ++j) {
    const double ev = basis_eigenvalues(j);
    for (int m = 0; m < length; ++m) {
      const double s = std::sin(pi * m / (2.0 * length));
      df += ev / (ev + lambda * 4.0 * s * s);
    }
  }
  return df;
}

RecoveryResult smooth_tv(const Matrix& encoded, const DomainBasis& basis,
                         double lambda) {
  if (encoded.rows() < 3) throw InvalidInputError("smooth_tv needs T >= 3");
  if (lambda < 0.0) {
    lambda = select_lambda_gcv(encoded, basis,
                               SmoothingConfig::default_lambda_grid());
  }

  RecoveryResult result = recover_pointwise(encoded, basis);
  const int t_len = result.length();
  const int km1 = static_cast<int>(basis.b.cols());

  auto [eig, rot] = linalg::symmetric_eigendecomposition(
      (basis.b.transpose() * basis.b).eval());

  // Right-hand sides in the rotated coordinates.
  Matrix c(t_len, km1);
  for (int t = 0; t < t_len; ++t) {
    const Vector y = encoded.row(t).transpose() - basis.mu0;
    c.row(t) = (rot.transpose() * (basis.b.transpose() * y)).transpose();
  }

  const Vector deg = laplacian_diagonal(t_len);
  const Vector off = Vector::Constant(t_len - 1, -lambda);
  Matrix beta(t_len, km1);
  for (int j = 0; j < km1; ++j) {
    const Vector diag = Vector::Constant(t_len, eig(j)) + lambda * deg;
    beta.col(j) = linalg::solve_tridiagonal(diag, off, c.col(j));
  }

  Matrix smoothed_pre = beta * rot.transpose();
  result.smoothed = project_rows(smoothed_pre);
  result.smoothed_pre = std::move(smoothed_pre);
  result.lambda_used = lambda;
  return result;
}

double select_lambda_gcv(const Matrix& encoded, const DomainBasis& basis,
                         const std::vector<double>& grid) {
  if (grid.empty()) throw InvalidInputError("empty lambda grid");
  for (double lam : grid) {
    if (lam < 0.0) throw InvalidInputError("lambda must be >= 0");
  }
  if (grid.size() == 1) return grid[0];

  const int t_len = static_cast<int>(encoded.rows());
  const Vector eig = linalg::symmetric_eigendecomposition(
                         (basis.b.transpose() * basis.b).eval())
                         .first;

  double best_lambda = grid[0];
  double best_score = std::numeric_limits<double>::infinity();
  for (double lam : grid) {
    const RecoveryResult fit = smooth_tv(encoded, basis, lam);
    double rss = 0.0;
    for (int t = 0; t < t_len; ++t) {
      const Vector y = encoded.row(t).transpose() - basis.mu0;
      rss += (y - basis.b * fit.smoothed_pre.row(t).transpose()).squaredNorm();
    }
    const double df = tv_degrees_of_freedom(eig, lam, t_len);
    const double denom = static_cast<double>(t_len) - df;
    const double score = std::abs(denom) < 1e-9
                             ? std::numeric_limits<double>::infinity()
                             : rss / (denom * denom);
    if (score < best_score) {
      best_score = score;
      best_lambda = lam;
    }
  }
  return best_lambda;
}

RecoveryResult calibrate_two_point(RecoveryResult result,
                                   const Vector& alpha_start,
                                   const Vector& alpha_end,
                                   int boundary_window) {
  const int k = result.num_components();
  require_simplex(alpha_start, k);
  require_simplex(alpha_end, k);
  if ((alpha_start - alpha_end).cwiseAbs().maxCoeff() < 1e-9) {
    throw CalibrationError("boundary mixtures coincide; calibration degenerate");
  }
  const int t_len = result.length();
  if (boundary_window < 1 || 2 * boundary_window > t_len) {
    throw InvalidInputError("calibration boundary window too large");
  }

  Vector start_mean = Vector::Zero(k), end_mean = Vector::Zero(k);
  for (int t = 0; t < boundary_window; ++t) {
    start_mean += result.smoothed.row(t).transpose();
    end_mean += result.smoothed.row(t_len - 1 - t).transpose();
  }
  start_mean /= boundary_window;
  end_mean /= boundary_window;

  // Global affine fit pooled over all 2K boundary equations; it captures
  // the uniform shrinkage toward the simplex center and serves as the
  // fallback for components whose endpoints cannot identify a slope.
  double sxx = 0.0, sx = 0.0, sxy = 0.0, sy = 0.0;
  for (int j = 0; j < k; ++j) {
    sxx += start_mean(j) * start_mean(j) + end_mean(j) * end_mean(j);
    sx += start_mean(j) + end_mean(j);
    sxy += start_mean(j) * alpha_start(j) + end_mean(j) * alpha_end(j);
    sy += alpha_start(j) + alpha_end(j);
  }
  const int n_eq = 2 * k;
  const double det = n_eq * sxx - sx * sx;
  double global_gain = 1.0, global_offset = 0.0;
  if (std::abs(det) > 1e-12) {
    global_gain = (n_eq * sxy - sx * sy) / det;
    global_offset = (sy - global_gain * sx) / n_eq;
  }

  Vector gain(k), offset(k);
  for (int j = 0; j < k; ++j) {
    const double denom = end_mean(j) - start_mean(j);
    const double target_range = alpha_end(j) - alpha_start(j);
    if (std::abs(denom) < 1e-6 || std::abs(target_range) < 1e-9) {
      // Component flat at the boundary (e.g. a domain inactive at both
      // ends): the per-component slope is unidentified, use the global fit.
      gain(j) = global_gain;
      offset(j) = global_offset;
    } else {
      gain(j) = target_range / denom;
      offset(j) = alpha_start(j) - gain(j) * start_mean(j);
    }
  }

  Matrix calibrated(t_len, k);
  for (int t = 0; t < t_len; ++t) {
    Vector v = result.smoothed.row(t).transpose();
    for (int j = 0; j < k; ++j) v(j) = gain(j) * v(j) + offset(j);
    calibrated.row(t) = project_simplex(v).transpose();
  }
  result.calibrated = std::move(calibrated);
  return result;
}

RecoveryResult calibrate_linear_map(
    RecoveryResult result, const std::vector<std::pair<int, Vector>>& anchors) {
  const int k = result.num_components();
  const int km1 = k - 1;
  if (static_cast<int>(anchors.size()) < k) {
    throw CalibrationError("linear-map calibration needs at least K anchors");
  }
  // Fit alpha_true_shift = G * alpha_est_shift + g0 by least squares over
  // the anchors; unknowns are the rows of [G | g0].
  const int n = static_cast<int>(anchors.size());
  Matrix design(n, km1 + 1);
  Matrix target(n, km1);
  for (int i = 0; i < n; ++i) {
    const auto& [t, alpha] = anchors[i];
    if (t < 0 || t >= result.length()) {
      throw InvalidInputError("anchor timestep out of range");
    }
    require_simplex(alpha, k);
    design.row(i).head(km1) = result.smoothed.row(t).tail(km1);
    design(i, km1) = 1.0;
    target.row(i) = alpha.tail(km1).transpose();
  }
  const Matrix coeffs =
      design.colPivHouseholderQr().solve(target);  // (km1+1) x km1

  Matrix calibrated(result.length(), k);
  for (int t = 0; t < result.length(); ++t) {
    Vector est(km1 + 1);
    est.head(km1) = result.smoothed.row(t).tail(km1);
    est(km1) = 1.0;
    const Vector shift = coeffs.transpose() * est;
    calibrated.row(t) = project_simplex(lift_shift(shift)).transpose();
  }
  result.calibrated = std::move(calibrated);
  return result;
}

}  // namespace mechmix
