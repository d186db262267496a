#include "mechmix/diagnostics.hpp"

#include <algorithm>
#include <cmath>

namespace mechmix {

double compute_snr_eff(const DomainBasis& basis, const Vector& residual_norms,
                       double delta_approx) {
  if (delta_approx < 0.0) {
    throw InvalidInputError("delta_approx must be >= 0");
  }
  if (residual_norms.size() == 0 || residual_norms.minCoeff() < 0.0) {
    throw InvalidInputError("residual norms must be nonnegative and nonempty");
  }
  const double denom = residual_norms.mean() + delta_approx;
  if (denom < 1e-12) {
    throw DegenerateInputError(
        "snr_eff denominator vanishes (zero residuals and zero delta)");
  }
  return basis.sigma_min / denom;
}

BoundReport check_pointwise_bound(const RecoveryResult& result,
                                  const MixingSchedule& truth,
                                  const DomainBasis& basis,
                                  double delta_approx,
                                  const Vector& injected_epsilons) {
  const int t_len = result.length();
  if (truth.length != t_len || injected_epsilons.size() != t_len) {
    throw InvalidInputError("bound check: length mismatch");
  }
  BoundReport report;
  report.errors = Vector(t_len);
  report.bounds = Vector(t_len);
  for (int t = 0; t < t_len; ++t) {
    const Vector truth_shift =
        shift_coordinates(basis, truth.alpha_at(t));
    report.errors(t) =
        (result.raw_pre.row(t).transpose() - truth_shift).norm();
    report.bounds(t) =
        (injected_epsilons(t) + delta_approx) / basis.sigma_min;
    if (report.errors(t) > report.bounds(t) + 1e-9) ++report.violations;
  }
  report.fraction_satisfied =
      1.0 - static_cast<double>(report.violations) / t_len;
  return report;
}

double kolmogorov_survival(double x) {
  if (x <= 0.0) return 1.0;
  double sum = 0.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = std::exp(-2.0 * j * j * x * x);
    sum += (j % 2 == 1 ? term : -term);
    if (term < 1e-18) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_two_sample(const std::vector<double>& sample_a,
                       const std::vector<double>& sample_b) {
  if (sample_a.size() < 20 || sample_b.size() < 20) {
    throw InvalidInputError("ks_two_sample: need at least 20 points per sample");
  }
  std::vector<double> a = sample_a, b = sample_b;
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());

  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  double stat = 0.0;
  size_t ia = 0, ib = 0;
  while (ia < a.size() && ib < b.size()) {
    const double x = std::min(a[ia], b[ib]);
    while (ia < a.size() && a[ia] <= x) ++ia;
    while (ib < b.size() && b[ib] <= x) ++ib;
    stat = std::max(stat, std::abs(ia / na - ib / nb));
  }

  const double n_eff = na * nb / (na + nb);
  KsResult result;
  result.statistic = stat;
  result.p_value = kolmogorov_survival(std::sqrt(n_eff) * stat);
  return result;
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::kSupported: return "supported";
    case Verdict::kMarginal: return "marginal";
    case Verdict::kViolated: return "violated";
  }
  return "unknown";
}

AssumptionCheck verify_assumption(
    const std::vector<double>& pure_residuals,
    const std::vector<double>& transition_residuals) {
  AssumptionCheck check;
  check.ks = ks_two_sample(pure_residuals, transition_residuals);
  if (check.ks.p_value > 0.05) {
    check.verdict = Verdict::kSupported;
  } else if (check.ks.p_value > 0.01) {
    check.verdict = Verdict::kMarginal;
  } else {
    check.verdict = Verdict::kViolated;
  }
  return check;
}

}  // namespace mechmix
