#pragma once

#include <optional>
#include <vector>

#include "mechmix/generator.hpp"
#include "mechmix/linalg.hpp"

namespace mechmix {

enum class CorrelationKind { kPearsonAbs, kSpearmanAbs };

struct MccResult {
  double score = 0.0;
  // permutation[i] = truth column matched to estimated column i.
  std::vector<int> permutation;
};

// Mean best-matched |correlation| between estimated and true components.
// Spearman (rank) correlation is exactly invariant under strictly monotone
// per-column warps, which is what the encoder indeterminacy class permits.
MccResult mcc(const Matrix& estimated, const Matrix& truth,
              CorrelationKind kind = CorrelationKind::kSpearmanAbs);

// Pearson correlation over flattened (t, k) pairs, restricted to columns
// where the truth is not identically zero.
double weight_correlation(const Matrix& estimated, const Matrix& truth);

// Per-column Pearson correlations over the same active set (NaN-free; throws
// on zero variance), for debugging alongside the pooled scalar.
Vector per_component_weight_correlations(const Matrix& estimated,
                                         const Matrix& truth);

// Pearson correlation between the effective transition matrices
// W(alpha_est(t)) and W(alpha_true(t)) over all (t, i, j) entries.
double w_trajectory_correlation(const MechanismSet& ms,
                                const Matrix& estimated_alphas,
                                const Matrix& truth_alphas);

// Mean absolute error over all (t, k).
double mae(const Matrix& estimated, const Matrix& truth);

struct ScoreCard {
  double mcc = 0.0;
  double weight_corr = 0.0;
  double mae_raw = 0.0;
  std::optional<double> mae_cal;
  double w_traj_corr = 0.0;
  std::vector<int> assignment;
};

}  // namespace mechmix
