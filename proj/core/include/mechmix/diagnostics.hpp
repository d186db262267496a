#pragma once

#include <string>
#include <vector>

#include "mechmix/basis.hpp"
#include "mechmix/recovery.hpp"

namespace mechmix {

// Effective signal-to-noise ratio sigma_min / (mean residual + delta_approx).
double compute_snr_eff(const DomainBasis& basis, const Vector& residual_norms,
                       double delta_approx);

struct BoundReport {
  Vector errors;  // per-t unprojected recovery error, shift coordinates
  Vector bounds;  // per-t (||eps_t|| + delta) / sigma_min
  long violations = 0;
  double fraction_satisfied = 1.0;
};

// Compares per-timestep unprojected recovery errors with the pointwise
// bound. `injected_epsilons` are the known per-step representation
// deviations ||zhat_t - mu_mixed(alpha*_t)|| (synthetic runs only).
BoundReport check_pointwise_bound(const RecoveryResult& result,
                                  const MixingSchedule& truth,
                                  const DomainBasis& basis,
                                  double delta_approx,
                                  const Vector& injected_epsilons);

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

// Two-sample Kolmogorov-Smirnov test; p-value from the asymptotic
// Kolmogorov distribution at effective size n_a n_b / (n_a + n_b). Both
// samples need at least 20 points.
KsResult ks_two_sample(const std::vector<double>& sample_a,
                       const std::vector<double>& sample_b);

// Survival function Q(x) = 2 sum_{j>=1} (-1)^{j-1} exp(-2 j^2 x^2),
// truncated at 100 terms (exposed for tests).
double kolmogorov_survival(double x);

enum class Verdict { kSupported, kMarginal, kViolated };
std::string to_string(Verdict v);

struct AssumptionCheck {
  KsResult ks;
  Verdict verdict = Verdict::kSupported;
};

// KS test of pure-domain residuals against transition residuals with the
// standard interpretation thresholds: p > 0.05 supported, p <= 0.01
// violated, in between marginal.
AssumptionCheck verify_assumption(const std::vector<double>& pure_residuals,
                                  const std::vector<double>& transition_residuals);

struct DiagnosticsReport {
  double snr_eff = 0.0;
  double sigma_min = 0.0;
  double mean_residual = 0.0;
  double delta_approx = 0.0;
  long bound_violations = 0;
  double bound_violation_fraction = 0.0;
  double ks_statistic = 0.0;
  double ks_p_value = 1.0;
  Verdict verdict = Verdict::kSupported;
};

}  // namespace mechmix
