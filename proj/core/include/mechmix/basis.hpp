#pragma once

#include <cstdint>
#include <vector>

#include "mechmix/encoder.hpp"
#include "mechmix/generator.hpp"
#include "mechmix/linalg.hpp"

namespace mechmix {

// Domain basis in encoded space: baseline conditional mean, shift matrix
// B = [mu^(k) - mu^(0)] over the listed domains (first entry is the
// baseline), and the smallest singular value of B.
struct DomainBasis {
  Vector mu0;
  Matrix b;  // d x (K-1)
  double sigma_min = 0.0;
  std::vector<long> sample_counts;
  std::vector<int> domains;  // domains[0] is the baseline
  // Set when sigma_min is above the hard floor but inside the
  // ill-conditioned band [1e-6, 0.05); downstream results inherit it.
  bool bottleneck_warning = false;
};

inline constexpr double kSigmaMinHardFloor = 1e-6;
inline constexpr double kSigmaMinWarningBand = 0.05;

// Low-level estimator: per-domain sample sets (rows are encoded states or
// one-step outputs) -> column means -> shifts -> sigma_min. Throws on fewer
// than two domains or a basis below the hard floor.
DomainBasis estimate_basis(const std::vector<Matrix>& per_domain_samples,
                           std::vector<int> domain_ids = {});

// How conditional means are estimated from the simulator.
//   kSharedContext: one transition step from a common set of lag contexts,
//     averaged — a conditional mean at matched contexts.
//   kStationary:    plain means of encoded states from constant-mixture
//     trajectories — the unconditional estimator; biased when domains induce
//     different stationary distributions, but it is the geometry transition
//     trajectories actually live in.
struct MeanEstimationPlan {
  enum class Mode { kSharedContext, kStationary };
  Mode mode = Mode::kStationary;

  // Shared-context mode.
  const ContextSet* contexts = nullptr;

  // Stationary mode.
  int trajectories = 200;
  int trajectory_length = 50;
  int burn_in = 10;

  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
};

// Mean encoded response at each mixture in `alphas` (rows are full-K simplex
// vectors), estimated per the plan. Returns one row per input mixture.
Matrix estimate_mixed_means(const MechanismSet& ms, const Matrix& alphas,
                            const EncoderModel& encoder,
                            const MeanEstimationPlan& plan,
                            const EdgeInjectionRule* rule = nullptr);

// Convenience: estimates mu^(k) for every domain in `domains` via the plan
// and assembles the basis.
DomainBasis estimate_basis_with_plan(const MechanismSet& ms,
                                     const std::vector<int>& domains,
                                     const EncoderModel& encoder,
                                     const MeanEstimationPlan& plan);

// Worst-case gap between the mixed-domain mean and the linear prediction
// mu0 + B * alpha over the probe mixtures (rows of `probe_alphas`, full-K).
double estimate_delta_approx(const MechanismSet& ms, const DomainBasis& basis,
                             const Matrix& probe_alphas,
                             const EncoderModel& encoder,
                             const MeanEstimationPlan& plan);

// Default probe set: per non-baseline active domain, the points 1/4, 1/2,
// 3/4 along the edge from the baseline vertex.
Matrix default_delta_probes(int num_domains, const std::vector<int>& domains);

// Shift coordinates of a full-K mixture relative to the basis ordering:
// component j is alpha[domains[j+1]].
Vector shift_coordinates(const DomainBasis& basis, const Vector& alpha_full);

}  // namespace mechmix
