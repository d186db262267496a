#include "mechmix/basis.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "mechmix/rng.hpp"

namespace mechmix {

DomainBasis estimate_basis(const std::vector<Matrix>& per_domain_samples,
                           std::vector<int> domain_ids) {
  const int k = static_cast<int>(per_domain_samples.size());
  if (k < 2) throw InvalidInputError("basis needs at least two domains");
  if (domain_ids.empty()) {
    domain_ids.resize(k);
    std::iota(domain_ids.begin(), domain_ids.end(), 0);
  }
  if (static_cast<int>(domain_ids.size()) != k) {
    throw InvalidInputError("domain id list does not match sample sets");
  }
  const Eigen::Index d = per_domain_samples[0].cols();

  std::vector<Vector> means;
  std::vector<long> counts;
  for (const Matrix& samples : per_domain_samples) {
    if (samples.rows() < 1 || samples.cols() != d) {
      throw InvalidInputError("per-domain sample sets must be nonempty N x d");
    }
    means.push_back(samples.colwise().mean().transpose());
    counts.push_back(samples.rows());
  }

  DomainBasis basis;
  basis.mu0 = means[0];
  basis.b = Matrix(d, k - 1);
  for (int j = 1; j < k; ++j) basis.b.col(j - 1) = means[j] - means[0];
  basis.sample_counts = std::move(counts);
  basis.domains = std::move(domain_ids);

  const Vector sv = linalg::svd(basis.b).singular_values;
  basis.sigma_min = sv(sv.size() - 1);
  if (basis.sigma_min < kSigmaMinHardFloor) {
    throw DegenerateBasisError(
        "degenerate basis: sigma_min=" + std::to_string(basis.sigma_min) +
            " below hard floor; recovery is ill-posed in this regime",
        basis.sigma_min);
  }
  basis.bottleneck_warning = basis.sigma_min < kSigmaMinWarningBand;
  return basis;
}

Matrix estimate_mixed_means(const MechanismSet& ms, const Matrix& alphas,
                            const EncoderModel& encoder,
                            const MeanEstimationPlan& plan,
                            const EdgeInjectionRule* rule) {
  if (alphas.cols() != ms.num_domains()) {
    throw InvalidInputError("probe mixtures must have K columns");
  }
  const int d = ms.latent_dim();
  Matrix means(alphas.rows(), d);

  for (int r = 0; r < alphas.rows(); ++r) {
    const Vector alpha = alphas.row(r).transpose();
    Matrix samples;
    if (plan.mode == MeanEstimationPlan::Mode::kSharedContext) {
      if (plan.contexts == nullptr) {
        throw InvalidInputError("shared-context plan needs a context set");
      }
      samples = one_step_ensemble(
          ms, alpha, *plan.contexts, plan.noise_sigma,
          Rng::substream(plan.seed, {streams::kEnsemble, (std::uint64_t)r}),
          rule);
    } else {
      const long total =
          static_cast<long>(plan.trajectories) * plan.trajectory_length;
      samples = Matrix(total, d);
      MixingSchedule constant =
          MixingSchedule::constant(plan.trajectory_length, alpha);
      for (int j = 0; j < plan.trajectories; ++j) {
        TrajectoryBundle bundle = simulate(
            ms, constant, plan.noise_sigma,
            Rng::substream(plan.seed,
                           {streams::kBasis, (std::uint64_t)r, (std::uint64_t)j}),
            nullptr, rule, plan.burn_in);
        samples.middleRows(static_cast<long>(j) * plan.trajectory_length,
                           plan.trajectory_length) = bundle.latents;
      }
    }
    const Matrix encoded = encoder.apply(
        samples,
        Rng::substream(plan.seed, {streams::kEncoderNoise, (std::uint64_t)r}));
    means.row(r) = encoded.colwise().mean();
  }
  return means;
}

DomainBasis estimate_basis_with_plan(const MechanismSet& ms,
                                     const std::vector<int>& domains,
                                     const EncoderModel& encoder,
                                     const MeanEstimationPlan& plan) {
  if (domains.size() < 2) {
    throw InvalidInputError("basis needs at least two domains");
  }
  Matrix alphas = Matrix::Zero(static_cast<int>(domains.size()),
                               ms.num_domains());
  for (size_t j = 0; j < domains.size(); ++j) {
    if (domains[j] < 0 || domains[j] >= ms.num_domains()) {
      throw InvalidInputError("domain index out of range");
    }
    alphas(static_cast<int>(j), domains[j]) = 1.0;
  }
  const Matrix means = estimate_mixed_means(ms, alphas, encoder, plan);

  long per_domain_count =
      plan.mode == MeanEstimationPlan::Mode::kSharedContext
          ? (plan.contexts ? plan.contexts->count() : 0)
          : static_cast<long>(plan.trajectories) * plan.trajectory_length;

  DomainBasis basis;
  basis.mu0 = means.row(0).transpose();
  basis.b = Matrix(ms.latent_dim(), static_cast<int>(domains.size()) - 1);
  for (int j = 1; j < static_cast<int>(domains.size()); ++j) {
    basis.b.col(j - 1) = (means.row(j) - means.row(0)).transpose();
  }
  basis.sample_counts.assign(domains.size(), per_domain_count);
  basis.domains = domains;

  const Vector sv = linalg::svd(basis.b).singular_values;
  basis.sigma_min = sv(sv.size() - 1);
  if (basis.sigma_min < kSigmaMinHardFloor) {
    throw DegenerateBasisError(
        "degenerate basis: sigma_min=" + std::to_string(basis.sigma_min),
        basis.sigma_min);
  }
  basis.bottleneck_warning = basis.sigma_min < kSigmaMinWarningBand;
  return basis;
}

double estimate_delta_approx(const MechanismSet& ms, const DomainBasis& basis,
                             const Matrix& probe_alphas,
                             const EncoderModel& encoder,
                             const MeanEstimationPlan& plan) {
  for (int r = 0; r < probe_alphas.rows(); ++r) {
    require_simplex(probe_alphas.row(r).transpose(), ms.num_domains());
  }
  const Matrix means = estimate_mixed_means(ms, probe_alphas, encoder, plan);
  double worst = 0.0;
  for (int r = 0; r < probe_alphas.rows(); ++r) {
    const Vector shift =
        shift_coordinates(basis, probe_alphas.row(r).transpose());
    const Vector linear = basis.mu0 + basis.b * shift;
    worst = std::max(worst, (means.row(r).transpose() - linear).norm());
  }
  return worst;
}

Matrix default_delta_probes(int num_domains, const std::vector<int>& domains) {
  if (domains.size() < 2) {
    throw InvalidInputError("need at least two domains for probes");
  }
  const int baseline = domains[0];
  const int pairs = static_cast<int>(domains.size()) - 1;
  Matrix probes = Matrix::Zero(3 * pairs, num_domains);
  int row = 0;
  for (int j = 1; j <= pairs; ++j) {
    for (double w : {0.25, 0.5, 0.75}) {
      probes(row, baseline) = 1.0 - w;
      probes(row, domains[j]) = w;
      ++row;
    }
  }
  return probes;
}

Vector shift_coordinates(const DomainBasis& basis, const Vector& alpha_full) {
  const int k = static_cast<int>(basis.domains.size());
  Vector shift(k - 1);
  for (int j = 1; j < k; ++j) {
    if (basis.domains[j] >= alpha_full.size()) {
      throw InvalidInputError("mixture vector shorter than basis domains");
    }
    shift(j - 1) = alpha_full(basis.domains[j]);
  }
  return shift;
}

}  // namespace mechmix
