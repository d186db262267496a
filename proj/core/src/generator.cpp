#include "mechmix/generator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "mechmix/rng.hpp"

namespace mechmix {

namespace {

double spectral_norm(const Matrix& m) {
  return linalg::svd(m).singular_values(0);
}

Matrix random_gaussian(int rows, int cols, Rng& rng) {
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = rng.next_normal();
  return m;
}

}  // namespace

void require_simplex(const Vector& alpha, int expected_size, double tol) {
  if (alpha.size() != expected_size) {
    throw InvalidInputError("mixing vector has wrong size");
  }
  if (!alpha.allFinite()) {
    throw InvalidInputError("mixing vector has non-finite entries");
  }
  if (alpha.minCoeff() < -tol || std::abs(alpha.sum() - 1.0) > tol) {
    throw InvalidInputError("mixing vector is off the simplex");
  }
}

// ---------------------------------------------------------------------------
// MechanismSet
// ---------------------------------------------------------------------------

MechanismSet MechanismSet::build(int d, int num_domains,
                                 double perturbation_norm, std::uint64_t seed,
                                 MechanismSetOptions opts) {
  if (d < 1) throw InvalidInputError("latent dimension must be positive");
  if (num_domains < 2) throw InvalidInputError("need at least two domains");
  if (perturbation_norm <= 0.0) {
    throw InvalidInputError("perturbation norm must be positive");
  }
  if (num_domains > d + 1 && !opts.allow_capacity_excess) {
    throw CapacityError("mechanism count K=" + std::to_string(num_domains) +
                        " exceeds capacity d+1=" + std::to_string(d + 1));
  }

  Rng rng(Rng::substream(seed, {streams::kMechanism}));

  Matrix w_base = random_gaussian(d, d, rng);
  w_base *= opts.base_spectral_norm / spectral_norm(w_base);

  Matrix w_lag2 = random_gaussian(d, d, rng);
  w_lag2 *= opts.lag2_scale * opts.base_spectral_norm / spectral_norm(w_lag2);

  // Assign each perturbation a distinct off-diagonal cell. Rows are visited
  // in shuffled order and reused only once all rows are taken, so the
  // row-wise independence needed by the capacity argument holds whenever it
  // can.
  std::vector<int> row_order(d);
  std::iota(row_order.begin(), row_order.end(), 0);
  for (int i = d - 1; i > 0; --i) {
    std::swap(row_order[i], row_order[rng.next_below(i + 1)]);
  }
  std::set<std::pair<int, int>> used;
  std::vector<Matrix> deltas;
  for (int k = 1; k < num_domains; ++k) {
    const int row = row_order[(k - 1) % d];
    int col = -1;
    for (int attempt = 0; attempt < 1000; ++attempt) {
      const int c = static_cast<int>(rng.next_below(d));
      if (c != row && !used.count({row, c})) {
        col = c;
        break;
      }
    }
    if (col < 0) throw InvalidInputError("failed to place perturbation cell");
    used.insert({row, col});
    Matrix delta = Matrix::Zero(d, d);
    delta(row, col) = perturbation_norm;
    deltas.push_back(std::move(delta));
  }

  return MechanismSet(std::move(w_base), std::move(deltas), std::move(w_lag2),
                      opts.activation_slope, opts.allow_capacity_excess);
}

MechanismSet::MechanismSet(Matrix w_base, std::vector<Matrix> deltas,
                           Matrix w_lag2, double activation_slope,
                           bool allow_capacity_excess)
    : d_(static_cast<int>(w_base.rows())),
      k_(static_cast<int>(deltas.size()) + 1),
      slope_(activation_slope),
      w_base_(std::move(w_base)),
      deltas_(std::move(deltas)),
      w_lag2_(std::move(w_lag2)) {
  validate(allow_capacity_excess);
}

void MechanismSet::validate(bool allow_capacity_excess) const {
  if (w_base_.rows() != d_ || w_base_.cols() != d_ || w_lag2_.rows() != d_ ||
      w_lag2_.cols() != d_) {
    throw InvalidInputError("mechanism matrices must be d x d");
  }
  if (!w_base_.allFinite() || !w_lag2_.allFinite()) {
    throw InvalidInputError("mechanism matrices must be finite");
  }
  if (slope_ <= 0.0) {
    throw InvalidInputError("activation slope must be positive");
  }
  if (k_ < 2) throw InvalidInputError("need at least two domains");
  if (k_ > d_ + 1 && !allow_capacity_excess) {
    throw CapacityError("mechanism count K=" + std::to_string(k_) +
                        " exceeds capacity d+1=" + std::to_string(d_ + 1));
  }
  // Distinguishability: the stacked vec(delta_k) must be linearly
  // independent.
  Matrix stacked(k_ - 1, d_ * d_);
  for (int k = 0; k < k_ - 1; ++k) {
    if (deltas_[k].rows() != d_ || deltas_[k].cols() != d_ ||
        !deltas_[k].allFinite()) {
      throw InvalidInputError("perturbation matrices must be finite d x d");
    }
    stacked.row(k) =
        Eigen::Map<const Eigen::RowVectorXd>(deltas_[k].data(), d_ * d_);
  }
  const Vector sv = linalg::svd(stacked).singular_values;
  if (sv(sv.size() - 1) <= 1e-8) {
    throw InvalidInputError(
        "perturbations are not mutually distinguishable (stacked sigma_min <= "
        "1e-8)");
  }
}

const Matrix& MechanismSet::delta(int domain) const {
  if (domain < 1 || domain >= k_) {
    throw InvalidInputError("delta index out of range");
  }
  return deltas_[domain - 1];
}

double MechanismSet::perturbation_norm() const {
  double m = 0.0;
  for (const auto& delta : deltas_) m = std::max(m, delta.norm());
  return m;
}

Matrix MechanismSet::effective_transition(const Vector& alpha) const {
  require_simplex(alpha, k_);
  Matrix w = w_base_;
  for (int k = 1; k < k_; ++k) w += alpha(k) * deltas_[k - 1];
  return w;
}

Vector MechanismSet::activate(const Vector& x) const {
  Vector y(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) y(i) = activate(x(i));
  return y;
}

RowUsageReport MechanismSet::row_usage_report() const {
  RowUsageReport report;
  report.touching.resize(d_);
  report.full_row_rank.resize(d_, true);
  for (int k = 1; k < k_; ++k) {
    for (int i = 0; i < d_; ++i) {
      if (deltas_[k - 1].row(i).cwiseAbs().maxCoeff() > 0.0) {
        report.touching[i].push_back(k);
      }
    }
  }
  for (int i = 0; i < d_; ++i) {
    const auto& touch = report.touching[i];
    if (touch.empty()) continue;
    Matrix rows(static_cast<int>(touch.size()), d_);
    for (size_t j = 0; j < touch.size(); ++j) {
      rows.row(static_cast<int>(j)) = deltas_[touch[j] - 1].row(i);
    }
    const Vector sv = linalg::svd(rows).singular_values;
    const bool ok = static_cast<int>(touch.size()) <= d_ &&
                    sv(sv.size() - 1) > 1e-10 * sv(0);
    report.full_row_rank[i] = ok;
    report.all_ok = report.all_ok && ok;
  }
  return report;
}

// ---------------------------------------------------------------------------
// Schedules
// ---------------------------------------------------------------------------

std::string to_string(ScheduleFamily f) {
  switch (f) {
    case ScheduleFamily::kSequential: return "sequential";
    case ScheduleFamily::kOverlapping: return "overlapping";
    case ScheduleFamily::kOscillating: return "oscillating";
    case ScheduleFamily::kLinear: return "linear";
    case ScheduleFamily::kSinusoidal: return "sinusoidal";
    case ScheduleFamily::kOneHot: return "one_hot";
    case ScheduleFamily::kConstant: return "constant";
  }
  return "unknown";
}

ScheduleFamily schedule_family_from_string(const std::string& s) {
  if (s == "sequential") return ScheduleFamily::kSequential;
  if (s == "overlapping") return ScheduleFamily::kOverlapping;
  if (s == "oscillating") return ScheduleFamily::kOscillating;
  if (s == "linear") return ScheduleFamily::kLinear;
  if (s == "sinusoidal") return ScheduleFamily::kSinusoidal;
  if (s == "one_hot") return ScheduleFamily::kOneHot;
  if (s == "constant") return ScheduleFamily::kConstant;
  throw ConfigError("unknown schedule family: " + s);
}

namespace {

double schedule_total_variation(const Matrix& alphas) {
  double tv = 0.0;
  for (int t = 0; t + 1 < alphas.rows(); ++t) {
    tv += (alphas.row(t + 1) - alphas.row(t)).norm();
  }
  return tv;
}

void normalize_rows(Matrix& alphas) {
  for (int t = 0; t < alphas.rows(); ++t) {
    const double s = alphas.row(t).sum();
    if (s < 1e-6) {
      throw InvalidInputError("schedule row degenerated to zero mass");
    }
    alphas.row(t) /= s;
  }
}

MixingSchedule finish_schedule(ScheduleFamily family, int length,
                               int num_domains, std::vector<int> active,
                               Matrix alphas) {
  normalize_rows(alphas);
  MixingSchedule s;
  s.length = length;
  s.num_domains = num_domains;
  s.family = family;
  s.active_domains = std::move(active);
  s.alphas = std::move(alphas);
  s.total_variation = schedule_total_variation(s.alphas);
  return s;
}

}  // namespace

MixingSchedule MixingSchedule::one_hot(int length, int domain,
                                       int num_domains) {
  if (length < 1 || domain < 0 || domain >= num_domains) {
    throw InvalidInputError("one_hot: bad arguments");
  }
  Matrix alphas = Matrix::Zero(length, num_domains);
  alphas.col(domain).setOnes();
  return finish_schedule(ScheduleFamily::kOneHot, length, num_domains,
                         {domain}, std::move(alphas));
}

MixingSchedule MixingSchedule::constant(int length, const Vector& alpha) {
  require_simplex(alpha, static_cast<int>(alpha.size()), 1e-9);
  Matrix alphas(length, alpha.size());
  for (int t = 0; t < length; ++t) alphas.row(t) = alpha.transpose();
  std::vector<int> active;
  for (int k = 0; k < alpha.size(); ++k) {
    if (alpha(k) > 0.0) active.push_back(k);
  }
  return finish_schedule(ScheduleFamily::kConstant, length,
                         static_cast<int>(alpha.size()), std::move(active),
                         std::move(alphas));
}

MixingSchedule make_schedule(ScheduleFamily family, int length, int num_domains,
                             const std::vector<int>& active_domains) {
  if (length < 2) throw InvalidInputError("schedule length must be >= 2");
  const int ka = static_cast<int>(active_domains.size());
  if (ka < 2) throw InvalidInputError("need at least two active domains");
  if (ka > num_domains) {
    throw InvalidInputError("more active domains than domains");
  }
  std::set<int> distinct(active_domains.begin(), active_domains.end());
  if (static_cast<int>(distinct.size()) != ka) {
    throw InvalidInputError("active domains must be distinct");
  }
  for (int a : active_domains) {
    if (a < 0 || a >= num_domains) {
      throw InvalidInputError("active domain index out of range");
    }
  }

  const double pi = 3.14159265358979323846;
  Matrix alphas = Matrix::Zero(length, num_domains);

  switch (family) {
    case ScheduleFamily::kSequential:
    case ScheduleFamily::kSinusoidal: {
      // Visit each active vertex in order with linear (or cosine-eased)
      // ramps; at most two domains are nonzero at once.
      for (int t = 0; t < length; ++t) {
        const double s = static_cast<double>(t) / (length - 1);
        double q = s * (ka - 1);
        int j = std::min(static_cast<int>(q), ka - 2);
        double frac = q - j;
        if (family == ScheduleFamily::kSinusoidal) {
          frac = 0.5 * (1.0 - std::cos(pi * frac));
        }
        alphas(t, active_domains[j]) = 1.0 - frac;
        alphas(t, active_domains[j + 1]) = frac;
      }
      break;
    }
    case ScheduleFamily::kOverlapping: {
      // Gaussian bumps with width tuned so interior peaks normalize to ~0.7.
      const double spacing = static_cast<double>(length) / ka;
      const double width = 0.57 * spacing;
      for (int j = 0; j < ka; ++j) {
        const double center = (j + 0.5) * spacing;
        for (int t = 0; t < length; ++t) {
          const double u = (t - center) / width;
          alphas(t, active_domains[j]) = std::exp(-0.5 * u * u);
        }
      }
      break;
    }
    case ScheduleFamily::kOscillating: {
      // Raised-cosine superposition with a baseline floor. The floor keeps
      // every active domain contributing throughout and caps the normalized
      // peak near 0.5 for three or more active domains; without it two
      // bumps can vanish simultaneously and hand one domain full weight.
      const double floor = 0.7;
      for (int j = 0; j < ka; ++j) {
        const double freq = 1.0 + 0.5 * j;
        const double phase = j * pi / ka;
        for (int t = 0; t < length; ++t) {
          const double arg = freq * 2.0 * pi * t / length + phase;
          alphas(t, active_domains[j]) = floor + 0.5 * (1.0 + std::cos(arg));
        }
      }
      break;
    }
    case ScheduleFamily::kLinear: {
      // Straight path from the first to the last active vertex.
      for (int t = 0; t < length; ++t) {
        const double s = static_cast<double>(t) / (length - 1);
        alphas(t, active_domains.front()) = 1.0 - s;
        alphas(t, active_domains.back()) = s;
      }
      break;
    }
    case ScheduleFamily::kOneHot:
    case ScheduleFamily::kConstant:
      throw InvalidInputError(
          "use MixingSchedule::one_hot / MixingSchedule::constant for "
          "constant schedules");
  }

  return finish_schedule(family, length, num_domains, active_domains,
                         std::move(alphas));
}

std::pair<MixingSchedule, EdgeInjectionRule> make_violation_schedule(
    int length, int num_domains, double strength) {
  if (num_domains < 3) {
    throw InvalidInputError("violation schedule needs at least three domains");
  }
  MixingSchedule schedule =
      make_schedule(ScheduleFamily::kSequential, length, num_domains, {0, 1, 2});
  EdgeInjectionRule rule;
  rule.strength = strength;
  return {std::move(schedule), rule};
}

// ---------------------------------------------------------------------------
// MixingMap
// ---------------------------------------------------------------------------

MixingMap::MixingMap(int d, int p, int depth, std::uint64_t seed)
    : d_(d), p_(p), depth_(depth) {
  if (p < d) throw InvalidInputError("observation dim must be >= latent dim");
  if (depth < 0) throw InvalidInputError("mixing depth must be >= 0");
  Rng rng(Rng::substream(seed, {streams::kMixingMap}));
  for (int layer = 0; layer < depth; ++layer) {
    const int in = layer == 0 ? d : p;
    Matrix g = random_gaussian(p, in, rng);
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix q = qr.householderQ() * Matrix::Identity(p, in);
    layers_.push_back(std::move(q));
  }
}

Matrix MixingMap::apply(const Matrix& latents) const {
  if (latents.cols() != d_) {
    throw InvalidInputError("mixing map: latent dimension mismatch");
  }
  if (depth_ == 0) {
    Matrix out = Matrix::Zero(latents.rows(), p_);
    out.leftCols(d_) = latents;
    return out;
  }
  Matrix h = latents;
  for (const Matrix& q : layers_) {
    h = (h * q.transpose()).eval();
    for (int i = 0; i < h.rows(); ++i)
      for (int j = 0; j < h.cols(); ++j) h(i, j) = leaky(h(i, j));
  }
  return h;
}

Matrix MixingMap::invert(const Matrix& observations, double tol) const {
  if (observations.cols() != p_) {
    throw InvalidInputError("mixing map: observation dimension mismatch");
  }
  if (depth_ == 0) {
    if (p_ > d_) {
      const double residual =
          observations.rightCols(p_ - d_).cwiseAbs().maxCoeff();
      if (residual > tol) {
        throw InversionError("observation off padded embedding", residual);
      }
    }
    return observations.leftCols(d_);
  }
  Matrix h = observations;
  for (int layer = depth_ - 1; layer >= 0; --layer) {
    for (int i = 0; i < h.rows(); ++i)
      for (int j = 0; j < h.cols(); ++j) h(i, j) = leaky_inv(h(i, j));
    const Matrix& q = layers_[layer];
    Matrix back = h * q;  // Q^T applied rowwise
    if (q.cols() < q.rows()) {
      // First layer is a strict lift; verify membership of its range.
      const Matrix reproj = back * q.transpose();
      const double residual = (reproj - h).cwiseAbs().maxCoeff();
      if (residual > tol) {
        throw InversionError("observation off the mixing-map image manifold",
                             residual);
      }
    }
    h = std::move(back);
  }
  return h;
}

Matrix mix_to_observations(const Matrix& latents, int mixing_depth, int p,
                           std::uint64_t seed) {
  MixingMap map(static_cast<int>(latents.cols()), p, mixing_depth, seed);
  return map.apply(latents);
}

// ---------------------------------------------------------------------------
// Simulation
// ---------------------------------------------------------------------------

namespace {

Vector transition_step(const MechanismSet& ms, const Matrix& w_t,
                       const Vector& z1, const Vector& z2) {
  return ms.activate(ms.activate(w_t * z1) + ms.activate(ms.w_lag2() * z2));
}

}  // namespace

TrajectoryBundle simulate(const MechanismSet& ms, const MixingSchedule& schedule,
                          double noise_sigma, std::uint64_t seed,
                          const MixingMap* mixing_map,
                          const EdgeInjectionRule* rule, int burn_in) {
  if (schedule.num_domains != ms.num_domains()) {
    throw InvalidInputError("schedule domain count does not match mechanisms");
  }
  if (schedule.length < 3) throw InvalidInputError("need T >= 3");
  if (noise_sigma < 0.0) throw InvalidInputError("noise sigma must be >= 0");
  if (rule && (rule->to >= ms.latent_dim() || rule->from >= ms.latent_dim())) {
    throw InvalidInputError("edge injection indices exceed latent dimension");
  }

  const int d = ms.latent_dim();
  const int total = burn_in + schedule.length;

  Rng init_rng(Rng::substream(seed, {streams::kInitState}));
  Rng noise_rng(Rng::substream(seed, {streams::kTransitionNoise}));

  Vector prev2(d), prev1(d);
  for (int i = 0; i < d; ++i) prev2(i) = init_rng.next_normal();
  for (int i = 0; i < d; ++i) prev1(i) = init_rng.next_normal();

  Matrix latents(schedule.length, d);
  for (int step = 0; step < total; ++step) {
    const int sched_t = std::max(0, step - burn_in);
    const Vector alpha = schedule.alpha_at(sched_t);
    Matrix w_t = ms.effective_transition(alpha);
    if (rule && rule->active_at(alpha)) {
      w_t(rule->to, rule->from) += rule->strength;
    }
    Vector z = transition_step(ms, w_t, prev1, prev2);
    for (int i = 0; i < d; ++i) z(i) += noise_sigma * noise_rng.next_normal();
    prev2 = std::move(prev1);
    prev1 = std::move(z);
    if (step >= burn_in) latents.row(step - burn_in) = prev1.transpose();
  }

  TrajectoryBundle bundle;
  bundle.latents = std::move(latents);
  bundle.observations =
      mixing_map ? mixing_map->apply(bundle.latents) : bundle.latents;
  bundle.schedule = schedule;
  bundle.noise_sigma = noise_sigma;
  bundle.seed = seed;
  return bundle;
}

ContextSet draw_contexts(const MechanismSet& ms, const Vector& alpha, int count,
                         double noise_sigma, std::uint64_t seed, int burn_in) {
  if (count < 1) throw InvalidInputError("need at least one context");
  MixingSchedule constant = MixingSchedule::constant(count + 1, alpha);
  TrajectoryBundle bundle = simulate(ms, constant, noise_sigma,
                                     Rng::substream(seed, {streams::kContexts}),
                                     nullptr, nullptr, burn_in);
  // Consecutive state pairs: lag1 row t is state t+1, lag2 row t is state t.
  ContextSet ctx;
  ctx.lag2 = bundle.latents.topRows(count);
  ctx.lag1 = bundle.latents.bottomRows(count);
  return ctx;
}

ContextSet gaussian_contexts(int d, int count, double mean,
                             std::uint64_t seed) {
  Rng rng(Rng::substream(seed, {streams::kContexts, 0x5EED}));
  ContextSet ctx;
  ctx.lag1 = Matrix(count, d);
  ctx.lag2 = Matrix(count, d);
  for (int t = 0; t < count; ++t) {
    for (int i = 0; i < d; ++i) ctx.lag1(t, i) = mean + rng.next_normal();
    for (int i = 0; i < d; ++i) ctx.lag2(t, i) = mean + rng.next_normal();
  }
  return ctx;
}

Matrix one_step_ensemble(const MechanismSet& ms, const Vector& alpha,
                         const ContextSet& contexts, double noise_sigma,
                         std::uint64_t seed, const EdgeInjectionRule* rule) {
  require_simplex(alpha, ms.num_domains());
  if (noise_sigma < 0.0) throw InvalidInputError("noise sigma must be >= 0");
  Matrix w_t = ms.effective_transition(alpha);
  if (rule && rule->active_at(alpha)) {
    if (rule->to >= ms.latent_dim() || rule->from >= ms.latent_dim()) {
      throw InvalidInputError("edge injection indices exceed latent dimension");
    }
    w_t(rule->to, rule->from) += rule->strength;
  }
  const int n = contexts.count();
  const int d = ms.latent_dim();
  Rng noise_rng(Rng::substream(seed, {streams::kEnsemble}));
  Matrix out(n, d);
  for (int r = 0; r < n; ++r) {
    Vector z = transition_step(ms, w_t, contexts.lag1.row(r).transpose(),
                               contexts.lag2.row(r).transpose());
    for (int i = 0; i < d; ++i) z(i) += noise_sigma * noise_rng.next_normal();
    out.row(r) = z.transpose();
  }
  return out;
}

}  // namespace mechmix
