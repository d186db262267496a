#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "mechmix/basis.hpp"
#include "mechmix/linalg.hpp"

namespace mechmix {

struct SmoothingConfig {
  enum class Mode { kWindowAverage, kTvRegularized };
  Mode mode = Mode::kWindowAverage;
  int window = 5;
  // lambda < 0 means automatic selection by GCV over lambda_grid.
  double lambda = -1.0;
  std::vector<double> lambda_grid;

  static std::vector<double> default_lambda_grid();
};

// Recovered mixing trajectory. All stored alpha rows live on the full
// K-simplex of the basis ordering (column j is the weight of
// basis.domains[j]); *_pre hold the unprojected (K-1)-dimensional shift
// coordinates the theory reasons about. residual_norms are the pointwise
// least-squares data residuals ||zhat_t - mu0 - B a_t|| at the unprojected
// pointwise solution.
struct RecoveryResult {
  Matrix raw;       // T x K
  Matrix smoothed;  // T x K
  std::optional<Matrix> calibrated;
  Vector residual_norms;
  Matrix raw_pre;       // T x (K-1)
  Matrix smoothed_pre;  // T x (K-1)
  double lambda_used = 0.0;
  int window_used = 0;
  bool bottleneck_warning = false;

  int length() const { return static_cast<int>(raw.rows()); }
  int num_components() const { return static_cast<int>(raw.cols()); }
  const Matrix& best() const {
    return calibrated.has_value() ? *calibrated : smoothed;
  }
};

// Euclidean projection onto the probability simplex over the full
// coordinate set (sort-based, O(K log K)).
Vector project_simplex(const Vector& v);

// Lifts shift coordinates to the full simplex vector by prepending
// alpha_0 = 1 - sum(shift).
Vector lift_shift(const Vector& shift);

// Pointwise least squares: a_t = B^+ (zhat_t - mu0); raw alphas are the
// simplex projection of the lifted solution.
RecoveryResult recover_pointwise(const Matrix& encoded,
                                 const DomainBasis& basis);

// Centered moving average of width 2w+1 over the raw alphas; boundary
// timesteps keep their unsmoothed values; rows re-projected.
RecoveryResult smooth_window(RecoveryResult result, int window);

// Quadratic-difference-penalized estimator
//   min sum_t ||zhat_t - mu0 - B a_t||^2 + lambda sum_t ||a_{t+1} - a_t||^2,
// solved exactly by rotating into the eigenbasis of B^T B and solving one
// symmetric tridiagonal system per component, then projecting each row.
// lambda < 0 selects lambda by GCV over config-default grid.
RecoveryResult smooth_tv(const Matrix& encoded, const DomainBasis& basis,
                         double lambda);

// GCV score sum||resid||^2 / (T - df)^2 with
// df = sum_j trace((eig_j I + lambda L)^{-1} eig_j), evaluated analytically
// through the path-Laplacian eigenvalues. Returns the grid minimizer.
double select_lambda_gcv(const Matrix& encoded, const DomainBasis& basis,
                         const std::vector<double>& grid);

// Effective degrees of freedom of the unconstrained smoother (exposed for
// tests).
double tv_degrees_of_freedom(const Vector& basis_eigenvalues, double lambda,
                             int length);

// Per-component affine correction fit from boundary conditions: averages of
// the first/last `boundary_window` smoothed steps are mapped onto the known
// endpoint mixtures. Endpoints must differ; results are re-projected.
RecoveryResult calibrate_two_point(RecoveryResult result,
                                   const Vector& alpha_start,
                                   const Vector& alpha_end,
                                   int boundary_window = 5);

// Full linear-map correction: fits alpha_true ~ G * alpha_est + g0 in shift
// coordinates from anchor timesteps with known mixtures (needs at least K
// anchors), then applies it everywhere.
RecoveryResult calibrate_linear_map(
    RecoveryResult result,
    const std::vector<std::pair<int, Vector>>& anchors);

}  // namespace mechmix
