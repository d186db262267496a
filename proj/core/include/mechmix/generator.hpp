#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mechmix/linalg.hpp"

namespace mechmix {

// ---------------------------------------------------------------------------
// Mechanism sets
// ---------------------------------------------------------------------------

struct MechanismSetOptions {
  double activation_slope = 0.2;   // LeakyReLU negative slope; 1.0 = identity
  double base_spectral_norm = 0.8;
  double lag2_scale = 0.3;         // ||w_lag2||_2 relative to ||w_base||_2
  // The capacity constraint K <= d+1 is enforced unless this is set. The
  // over-capacity regime is still simulatable (recovery quality degrades by
  // design); it is used by the scaling studies.
  bool allow_capacity_excess = false;
};

struct RowUsageReport {
  // For each latent dimension, which perturbations touch that row, and
  // whether the touching rows are linearly independent.
  std::vector<std::vector<int>> touching;  // per row: delta indices (1-based domain ids)
  std::vector<bool> full_row_rank;         // per row
  bool all_ok = true;
};

// The dynamical family: a base transition matrix, K-1 sparse perturbations
// (domain 0 is the unperturbed baseline), and a fixed lag-2 matrix shared by
// all domains. Column convention throughout: z_t depends on W * z_{t-1}.
class MechanismSet {
 public:
  // Random family with each perturbation placed on a distinct off-diagonal
  // cell of Frobenius norm `perturbation_norm`. Rows are kept distinct while
  // possible so the perturbations stay row-wise independent.
  static MechanismSet build(int d, int num_domains, double perturbation_norm,
                            std::uint64_t seed, MechanismSetOptions opts = {});

  // Direct construction from explicit matrices; validates the same
  // invariants as build().
  MechanismSet(Matrix w_base, std::vector<Matrix> deltas, Matrix w_lag2,
               double activation_slope, bool allow_capacity_excess = false);

  int latent_dim() const { return d_; }
  int num_domains() const { return k_; }
  double activation_slope() const { return slope_; }
  const Matrix& w_base() const { return w_base_; }
  const Matrix& w_lag2() const { return w_lag2_; }
  // delta for domain k in [1, K-1]; domain 0 has delta zero.
  const Matrix& delta(int domain) const;
  double perturbation_norm() const;

  // W(alpha) = w_base + sum_k alpha_k * delta_k for alpha on the simplex.
  Matrix effective_transition(const Vector& alpha) const;

  // Componentwise activation.
  double activate(double x) const { return x >= 0.0 ? x : slope_ * x; }
  Vector activate(const Vector& x) const;

  RowUsageReport row_usage_report() const;

 private:
  int d_ = 0;
  int k_ = 0;
  double slope_ = 0.2;
  Matrix w_base_;
  std::vector<Matrix> deltas_;  // size k_-1
  Matrix w_lag2_;

  void validate(bool allow_capacity_excess) const;
};

// ---------------------------------------------------------------------------
// Mixing schedules
// ---------------------------------------------------------------------------

enum class ScheduleFamily {
  kSequential,   // piecewise-linear ramps; <=2 domains nonzero, peaks 1.0
  kOverlapping,  // normalized Gaussian bumps, interior peaks ~0.7
  kOscillating,  // normalized cosine superposition, no dominant domain
  kLinear,       // straight ramp from first to last active vertex
  kSinusoidal,   // sequential with cosine-eased ramps
  kOneHot,       // constant vertex
  kConstant,     // constant interior point (utility)
};

std::string to_string(ScheduleFamily f);
ScheduleFamily schedule_family_from_string(const std::string& s);

struct MixingSchedule {
  int length = 0;         // T
  int num_domains = 0;    // K
  ScheduleFamily family = ScheduleFamily::kConstant;
  std::vector<int> active_domains;
  Matrix alphas;          // T x K, rows on the simplex
  double total_variation = 0.0;

  Vector alpha_at(int t) const { return alphas.row(t).transpose(); }

  static MixingSchedule one_hot(int length, int domain, int num_domains);
  static MixingSchedule constant(int length, const Vector& alpha);
};

// Family-specific ground-truth trajectory over the chosen active domains.
// Inactive domains are identically zero. Throws InvalidInputError when
// fewer than two active domains are requested.
MixingSchedule make_schedule(ScheduleFamily family, int length, int num_domains,
                             const std::vector<int>& active_domains);

// ---------------------------------------------------------------------------
// Emergent-edge violation
// ---------------------------------------------------------------------------

// While alpha[watch_component] is strictly inside (lo, hi), an extra edge
// z_from -> z_to of the given strength is added to W(t). This breaks the
// convex-combination structure only at intermediate mixtures.
struct EdgeInjectionRule {
  int from = 2;
  int to = 5;
  double strength = 0.6;
  double lo = 0.3;
  double hi = 0.7;
  int watch_component = 1;

  bool active_at(const Vector& alpha) const {
    const double a = alpha(watch_component);
    return a > lo && a < hi;
  }
};

std::pair<MixingSchedule, EdgeInjectionRule> make_violation_schedule(
    int length, int num_domains, double strength = 0.6);

// ---------------------------------------------------------------------------
// Observation map
// ---------------------------------------------------------------------------

// Injective map R^d -> R^p: an orthonormal-column lift followed by
// (depth - 1) orthogonal layers, each with a LeakyReLU(0.2) nonlinearity.
// depth 0 is the zero-padded identity embedding. Every layer has an exact
// left inverse, which invert() applies in reverse.
class MixingMap {
 public:
  MixingMap(int d, int p, int depth, std::uint64_t seed);

  int input_dim() const { return d_; }
  int output_dim() const { return p_; }
  int depth() const { return depth_; }

  Matrix apply(const Matrix& latents) const;    // T x d -> T x p
  // Throws InversionError when a row is off the image manifold by more than
  // `tol` (absolute residual after projecting back onto the layer range).
  Matrix invert(const Matrix& observations, double tol = 1e-6) const;

 private:
  int d_, p_, depth_;
  std::vector<Matrix> layers_;  // layers_[0] is p x d, the rest p x p

  static double leaky(double x) { return x >= 0.0 ? x : 0.2 * x; }
  static double leaky_inv(double y) { return y >= 0.0 ? y : y / 0.2; }
};

// One-call form used by file-level tooling.
Matrix mix_to_observations(const Matrix& latents, int mixing_depth, int p,
                           std::uint64_t seed);

// ---------------------------------------------------------------------------
// Simulation
// ---------------------------------------------------------------------------

struct TrajectoryBundle {
  Matrix latents;       // T x d
  Matrix observations;  // T x p
  MixingSchedule schedule;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
};

// Second-order latent recurrence
//   z_t = act(act(W(t) z_{t-1}) + act(W_lag2 z_{t-2})) + eps_t
// with z_1, z_2 ~ N(0, I) and `burn_in` discarded steps run under the
// schedule's first alpha. Observations are mixing_map(latents); a null map
// means the identity embedding (p = d).
TrajectoryBundle simulate(const MechanismSet& ms, const MixingSchedule& schedule,
                          double noise_sigma, std::uint64_t seed,
                          const MixingMap* mixing_map = nullptr,
                          const EdgeInjectionRule* rule = nullptr,
                          int burn_in = 10);

// ---------------------------------------------------------------------------
// Shared lag contexts and one-step ensembles
// ---------------------------------------------------------------------------

// A set of lag contexts (z_{t-1}, z_{t-2}) used to estimate conditional
// means at matched contexts across domains.
struct ContextSet {
  Matrix lag1;  // N x d
  Matrix lag2;  // N x d
  int count() const { return static_cast<int>(lag1.rows()); }
};

// Harvests consecutive state pairs from a trajectory simulated under a
// constant mixture.
ContextSet draw_contexts(const MechanismSet& ms, const Vector& alpha, int count,
                         double noise_sigma, std::uint64_t seed,
                         int burn_in = 10);

// Synthetic contexts ~ N(mean * 1, I); useful when the dynamics of interest
// have a degenerate stationary distribution (e.g. noise-free linear runs).
ContextSet gaussian_contexts(int d, int count, double mean, std::uint64_t seed);

// One transition step applied to every context under W(alpha), plus noise.
Matrix one_step_ensemble(const MechanismSet& ms, const Vector& alpha,
                         const ContextSet& contexts, double noise_sigma,
                         std::uint64_t seed,
                         const EdgeInjectionRule* rule = nullptr);

// Validates shape, nonnegativity and unit sum (within tol); throws
// InvalidInputError otherwise.
void require_simplex(const Vector& alpha, int expected_size, double tol = 1e-9);

}  // namespace mechmix
