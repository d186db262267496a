#include "mechmix/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mechmix {

namespace {

double pearson(const Vector& x, const Vector& y) {
  const double mx = x.mean(), my = y.mean();
  const Vector cx = x.array() - mx;
  const Vector cy = y.array() - my;
  const double sx = cx.norm(), sy = cy.norm();
  if (sx == 0.0 || sy == 0.0) {
    throw UndefinedCorrelationError("correlation undefined for zero variance");
  }
  return cx.dot(cy) / (sx * sy);
}

// Ranks with ties averaged.
Vector ranks(const Vector& x) {
  const Eigen::Index n = x.size();
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int i, int j) { return x(i) < x(j); });
  Vector r(n);
  Eigen::Index i = 0;
  while (i < n) {
    Eigen::Index j = i;
    while (j + 1 < n && x(order[j + 1]) == x(order[i])) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (Eigen::Index t = i; t <= j; ++t) r(order[t]) = avg;
    i = j + 1;
  }
  return r;
}

}  // namespace

MccResult mcc(const Matrix& estimated, const Matrix& truth,
              CorrelationKind kind) {
  if (estimated.rows() != truth.rows() || estimated.cols() != truth.cols()) {
    throw InvalidInputError("mcc: shape mismatch");
  }
  if (estimated.rows() < 3) throw InvalidInputError("mcc: need T >= 3");
  const int d = static_cast<int>(estimated.cols());

  Matrix est = estimated, tru = truth;
  if (kind == CorrelationKind::kSpearmanAbs) {
    for (int j = 0; j < d; ++j) {
      est.col(j) = ranks(estimated.col(j));
      tru.col(j) = ranks(truth.col(j));
    }
  }

  Matrix abs_corr(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      abs_corr(i, j) = std::abs(pearson(est.col(i), tru.col(j)));
    }
  }

  const std::vector<int> perm = linalg::optimal_assignment(-abs_corr);
  double total = 0.0;
  for (int i = 0; i < d; ++i) total += abs_corr(i, perm[i]);

  MccResult result;
  result.score = total / d;
  result.permutation = perm;
  return result;
}

namespace {

std::vector<int> active_columns(const Matrix& truth) {
  std::vector<int> active;
  for (int j = 0; j < truth.cols(); ++j) {
    if (truth.col(j).cwiseAbs().maxCoeff() > 0.0) active.push_back(j);
  }
  if (active.empty()) {
    throw UndefinedCorrelationError("no active components in truth");
  }
  return active;
}

}  // namespace

double weight_correlation(const Matrix& estimated, const Matrix& truth) {
  if (estimated.rows() != truth.rows() || estimated.cols() != truth.cols()) {
    throw InvalidInputError("weight_correlation: shape mismatch");
  }
  const std::vector<int> active = active_columns(truth);
  const Eigen::Index t_len = truth.rows();
  Vector est_flat(t_len * active.size()), tru_flat(t_len * active.size());
  Eigen::Index pos = 0;
  for (int j : active) {
    est_flat.segment(pos, t_len) = estimated.col(j);
    tru_flat.segment(pos, t_len) = truth.col(j);
    pos += t_len;
  }
  return pearson(est_flat, tru_flat);
}

Vector per_component_weight_correlations(const Matrix& estimated,
                                         const Matrix& truth) {
  const std::vector<int> active = active_columns(truth);
  Vector out(active.size());
  for (size_t i = 0; i < active.size(); ++i) {
    out(i) = pearson(estimated.col(active[i]), truth.col(active[i]));
  }
  return out;
}

double w_trajectory_correlation(const MechanismSet& ms,
                                const Matrix& estimated_alphas,
                                const Matrix& truth_alphas) {
  if (estimated_alphas.rows() != truth_alphas.rows() ||
      estimated_alphas.cols() != truth_alphas.cols()) {
    throw InvalidInputError("w_trajectory_correlation: shape mismatch");
  }
  const int t_len = static_cast<int>(truth_alphas.rows());
  const int d = ms.latent_dim();
  Vector est_flat(t_len * d * d), tru_flat(t_len * d * d);
  Eigen::Index pos = 0;
  for (int t = 0; t < t_len; ++t) {
    const Matrix w_est =
        ms.effective_transition(estimated_alphas.row(t).transpose());
    const Matrix w_tru =
        ms.effective_transition(truth_alphas.row(t).transpose());
    est_flat.segment(pos, d * d) =
        Eigen::Map<const Vector>(w_est.data(), d * d);
    tru_flat.segment(pos, d * d) =
        Eigen::Map<const Vector>(w_tru.data(), d * d);
    pos += d * d;
  }
  return pearson(est_flat, tru_flat);
}

double mae(const Matrix& estimated, const Matrix& truth) {
  if (estimated.rows() != truth.rows() || estimated.cols() != truth.cols()) {
    throw InvalidInputError("mae: shape mismatch");
  }
  return (estimated - truth).cwiseAbs().mean();
}

}  // namespace mechmix
