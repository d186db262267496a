#include "mechmix/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <thread>

#include "mechmix/reference.hpp"
#include "mechmix/rng.hpp"

namespace mechmix {

namespace {

std::vector<std::string> split_list(const std::string& s) {
  if (s.empty()) return {};
  return io::split(s, ',');
}

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "1" || v == "true") return true;
  if (v == "0" || v == "false") return false;
  throw ConfigError("boolean expected for " + key + ", got '" + v + "'");
}

}  // namespace

void ExperimentConfig::validate() const {
  if (d < 1) throw ConfigError("d must be positive");
  if (k_total < 2) throw ConfigError("k_total must be >= 2");
  if (k_active < 2 || k_active > k_total) {
    throw ConfigError("k_active must be in [2, k_total]");
  }
  if (k_total > d + 1 && !allow_capacity_excess) {
    throw ConfigError(
        "k_total exceeds capacity d+1; set allow_capacity_excess to study "
        "the over-capacity regime");
  }
  if (t < 3) throw ConfigError("t must be >= 3");
  if (noise_sigma < 0 || repr_noise_sigma < 0) {
    throw ConfigError("noise levels must be >= 0");
  }
  if (perturbation_norm <= 0) throw ConfigError("perturbation_norm must be > 0");
  if (p < d) throw ConfigError("p must be >= d");
  if (mixing_depth < 0) throw ConfigError("mixing_depth must be >= 0");
  if (encoder != "oracle" && encoder != "distorted") {
    throw ConfigError("encoder must be oracle or distorted");
  }
  if (smoothing != "window" && smoothing != "tv") {
    throw ConfigError("smoothing must be window or tv");
  }
  if (window < 0) throw ConfigError("window must be >= 0");
  if (basis != "observational" && basis != "shared_context") {
    throw ConfigError("basis must be observational or shared_context");
  }
  if (basis_trajectories < 1 || basis_length < 3 || contexts < 2) {
    throw ConfigError("basis sample sizes too small");
  }
  if (eval_trajectories < 1) {
    throw ConfigError("eval_trajectories must be >= 1");
  }
  if (seeds.empty()) throw ConfigError("seeds must be nonempty");
  if (!active_domains.empty() &&
      static_cast<int>(active_domains.size()) != k_active) {
    throw ConfigError("active_domains length must equal k_active");
  }
  if (violation && k_total < 3) {
    throw ConfigError("violation runs need k_total >= 3");
  }
}

std::vector<int> ExperimentConfig::resolve_active_domains() const {
  if (!active_domains.empty()) return active_domains;
  std::vector<int> active(k_active);
  if (k_active == k_total) {
    for (int i = 0; i < k_active; ++i) active[i] = i;
    return active;
  }
  for (int i = 0; i < k_active; ++i) {
    active[i] = static_cast<int>(
        std::lround(static_cast<double>(i) * (k_total - 1) / (k_active - 1)));
  }
  // Collisions are possible only for tiny k_total; fix them up linearly.
  for (int i = 1; i < k_active; ++i) {
    if (active[i] <= active[i - 1]) active[i] = active[i - 1] + 1;
  }
  return active;
}

std::string ExperimentConfig::serialize() const {
  std::ostringstream out;
  out << "d=" << d << "\n";
  out << "k_total=" << k_total << "\n";
  out << "k_active=" << k_active << "\n";
  out << "active_domains=";
  for (size_t i = 0; i < active_domains.size(); ++i) {
    out << (i ? "," : "") << active_domains[i];
  }
  out << "\n";
  out << "t=" << t << "\n";
  out << "family=" << to_string(family) << "\n";
  out << "noise_sigma=" << io::format_double(noise_sigma) << "\n";
  out << "perturbation_norm=" << io::format_double(perturbation_norm) << "\n";
  out << "activation_slope=" << io::format_double(activation_slope) << "\n";
  out << "p=" << p << "\n";
  out << "mixing_depth=" << mixing_depth << "\n";
  out << "burn_in=" << burn_in << "\n";
  out << "encoder=" << encoder << "\n";
  out << "repr_noise_sigma=" << io::format_double(repr_noise_sigma) << "\n";
  out << "decreasing_warps=" << (decreasing_warps ? 1 : 0) << "\n";
  out << "smoothing=" << smoothing << "\n";
  out << "window=" << window << "\n";
  out << "lambda=" << io::format_double(lambda) << "\n";
  out << "lambda_grid=";
  for (size_t i = 0; i < lambda_grid.size(); ++i) {
    out << (i ? "," : "") << io::format_double(lambda_grid[i]);
  }
  out << "\n";
  out << "calibrate=" << (calibrate ? 1 : 0) << "\n";
  out << "basis=" << basis << "\n";
  out << "basis_trajectories=" << basis_trajectories << "\n";
  out << "basis_length=" << basis_length << "\n";
  out << "contexts=" << contexts << "\n";
  out << "eval_trajectories=" << eval_trajectories << "\n";
  out << "violation=" << (violation ? 1 : 0) << "\n";
  out << "violation_strength=" << io::format_double(violation_strength) << "\n";
  out << "allow_capacity_excess=" << (allow_capacity_excess ? 1 : 0) << "\n";
  out << "seeds=";
  for (size_t i = 0; i < seeds.size(); ++i) out << (i ? "," : "") << seeds[i];
  out << "\n";
  out << "out=" << this->out << "\n";
  return out.str();
}

ExperimentConfig ExperimentConfig::parse(const std::string& text) {
  ExperimentConfig config;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    // Strip comments and whitespace-only lines.
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    size_t begin = line.find_first_not_of(" \t\r");
    if (begin == std::string::npos) continue;
    size_t end = line.find_last_not_of(" \t\r");
    line = line.substr(begin, end - begin + 1);
    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_no) +
                        ": expected key=value");
    }
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    try {
      if (key == "d") config.d = std::stoi(value);
      else if (key == "k_total") config.k_total = std::stoi(value);
      else if (key == "k_active") config.k_active = std::stoi(value);
      else if (key == "active_domains") {
        config.active_domains.clear();
        for (const auto& part : split_list(value)) {
          config.active_domains.push_back(std::stoi(part));
        }
      } else if (key == "t") config.t = std::stoi(value);
      else if (key == "family") config.family = schedule_family_from_string(value);
      else if (key == "noise_sigma") config.noise_sigma = std::stod(value);
      else if (key == "perturbation_norm") config.perturbation_norm = std::stod(value);
      else if (key == "activation_slope") config.activation_slope = std::stod(value);
      else if (key == "p") config.p = std::stoi(value);
      else if (key == "mixing_depth") config.mixing_depth = std::stoi(value);
      else if (key == "burn_in") config.burn_in = std::stoi(value);
      else if (key == "encoder") config.encoder = value;
      else if (key == "repr_noise_sigma") config.repr_noise_sigma = std::stod(value);
      else if (key == "decreasing_warps") config.decreasing_warps = parse_bool(value, key);
      else if (key == "smoothing") config.smoothing = value;
      else if (key == "window") config.window = std::stoi(value);
      else if (key == "lambda") {
        config.lambda = value == "auto" ? -1.0 : std::stod(value);
      } else if (key == "lambda_grid") {
        config.lambda_grid.clear();
        for (const auto& part : split_list(value)) {
          config.lambda_grid.push_back(std::stod(part));
        }
      } else if (key == "calibrate") config.calibrate = parse_bool(value, key);
      else if (key == "basis") config.basis = value;
      else if (key == "basis_trajectories") config.basis_trajectories = std::stoi(value);
      else if (key == "basis_length") config.basis_length = std::stoi(value);
      else if (key == "contexts") config.contexts = std::stoi(value);
      else if (key == "eval_trajectories") config.eval_trajectories = std::stoi(value);
      else if (key == "violation") config.violation = parse_bool(value, key);
      else if (key == "violation_strength") config.violation_strength = std::stod(value);
      else if (key == "allow_capacity_excess") config.allow_capacity_excess = parse_bool(value, key);
      else if (key == "seeds") {
        config.seeds.clear();
        for (const auto& part : split_list(value)) {
          config.seeds.push_back(std::stoull(part));
        }
      } else if (key == "out") config.out = value;
      else throw ConfigError("unknown config key: " + key);
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception&) {
      throw ConfigError("bad value for " + key + ": '" + value + "'");
    }
  }
  config.validate();
  return config;
}

std::vector<std::string> ExperimentConfig::preset_names() {
  return {"table2",  "table3_scheme1", "table3_scheme2", "table5",
          "table7",  "table9",         "fig4",           "ks_violation"};
}

ExperimentConfig ExperimentConfig::preset(const std::string& name) {
  ExperimentConfig c;  // defaults match the headline configuration
  if (name == "table2") {
    // d=8, K=5, three active domains, sequential transitions.
  } else if (name == "table3_scheme1" || name == "table3_scheme2" ||
             name == "fig4") {
    // Sweep bases; the axis is applied by the sweep/bounds drivers.
    if (name == "fig4") {
      c.basis = "shared_context";
      c.calibrate = false;
    }
  } else if (name == "table5" || name == "table7") {
    c.k_total = 10;
    c.allow_capacity_excess = true;
    c.family = ScheduleFamily::kOscillating;
    c.k_active = 3;
    c.active_domains.clear();
  } else if (name == "table9") {
    c.k_total = 10;
    c.allow_capacity_excess = true;
    c.family = ScheduleFamily::kOscillating;
    c.k_active = 5;
    c.t = 100;
  } else if (name == "ks_violation") {
    c.k_total = 3;
    c.k_active = 3;
    c.active_domains = {0, 1, 2};
    c.violation = true;
  } else {
    throw ConfigError("unknown preset: " + name);
  }
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------
// Single run
// ---------------------------------------------------------------------------

namespace {

Vector one_hot_vector(int k, int domain) {
  Vector v = Vector::Zero(k);
  v(domain) = 1.0;
  return v;
}

// Builds the run's encoder and standardizes its output scale from a pilot
// sample of baseline-domain data, the way a trained encoder's unit-variance
// prior would.
EncoderModel make_encoder(const ExperimentConfig& config, std::uint64_t seed,
                          const MechanismSet& ms,
                          const std::vector<int>& active) {
  EncoderModel model =
      config.encoder == "oracle"
          ? EncoderModel::oracle()
          : EncoderModel::distorted(EncoderDistortion::random(
                config.d, Rng::substream(seed, {streams::kDistortion}),
                config.repr_noise_sigma, config.decreasing_warps));

  const int pilot_trajectories = 40;
  const MixingSchedule pure =
      MixingSchedule::one_hot(config.basis_length, active[0], config.k_total);
  Matrix pilot(pilot_trajectories * config.basis_length, config.d);
  for (int j = 0; j < pilot_trajectories; ++j) {
    const TrajectoryBundle bundle = simulate(
        ms, pure, config.noise_sigma,
        Rng::substream(seed, {streams::kStandardize, (std::uint64_t)j}),
        nullptr, nullptr, config.burn_in);
    pilot.middleRows(static_cast<long>(j) * config.basis_length,
                     config.basis_length) = bundle.latents;
  }
  model.standardize_from(pilot, Rng::substream(seed, {streams::kStandardize}));
  return model;
}

MeanEstimationPlan make_plan(const ExperimentConfig& config,
                             const ContextSet* contexts, std::uint64_t seed) {
  MeanEstimationPlan plan;
  if (config.basis == "shared_context") {
    plan.mode = MeanEstimationPlan::Mode::kSharedContext;
    plan.contexts = contexts;
  } else {
    plan.mode = MeanEstimationPlan::Mode::kStationary;
    plan.trajectories = config.basis_trajectories;
    plan.trajectory_length = config.basis_length;
    plan.burn_in = config.burn_in;
  }
  plan.noise_sigma = config.noise_sigma;
  plan.seed = seed;
  return plan;
}

}  // namespace

Matrix restrict_to_domains(const Matrix& full, const std::vector<int>& domains) {
  Matrix out(full.rows(), static_cast<int>(domains.size()));
  for (size_t j = 0; j < domains.size(); ++j) {
    out.col(static_cast<int>(j)) = full.col(domains[j]);
  }
  return out;
}

Matrix embed_from_domains(const Matrix& restricted,
                          const std::vector<int>& domains, int k_total) {
  Matrix out = Matrix::Zero(restricted.rows(), k_total);
  for (size_t j = 0; j < domains.size(); ++j) {
    out.col(domains[j]) = restricted.col(static_cast<int>(j));
  }
  return out;
}

RunArtifacts run_single(const ExperimentConfig& config, std::uint64_t seed) {
  config.validate();
  const std::vector<int> active = config.resolve_active_domains();

  MechanismSetOptions opts;
  opts.activation_slope = config.activation_slope;
  opts.allow_capacity_excess = config.allow_capacity_excess;
  const MechanismSet ms = MechanismSet::build(
      config.d, config.k_total, config.perturbation_norm, seed, opts);
  const MixingMap map(config.d, config.p, config.mixing_depth,
                      Rng::substream(seed, {streams::kMixingMap}));

  MixingSchedule schedule =
      make_schedule(config.family, config.t, config.k_total, active);
  std::optional<EdgeInjectionRule> rule;
  if (config.violation) {
    auto [sched, r] = make_violation_schedule(config.t, config.k_total,
                                              config.violation_strength);
    schedule = std::move(sched);
    rule = r;
  }

  RunArtifacts run;
  run.config = config;
  run.seed = seed;

  const EncoderModel encoder = make_encoder(config, seed, ms, active);
  // Evaluation ensemble: eval_trajectories runs under the same schedule.
  // The recovery input is the per-step mean encoding. The oracle routes
  // through the observation map's exact inverse; the distorted encoder
  // consumes true latents (the indeterminacy class it simulates already
  // subsumes the inversion).
  run.encoded_mean = Matrix::Zero(config.t, config.d);
  for (int m = 0; m < config.eval_trajectories; ++m) {
    TrajectoryBundle bundle = simulate(
        ms, schedule, config.noise_sigma,
        Rng::substream(seed, {streams::kTrajectory, (std::uint64_t)m}), &map,
        rule ? &*rule : nullptr, config.burn_in);
    const Matrix representation_input =
        encoder.kind == EncoderModel::Kind::kOracle
            ? oracle_encode(bundle.observations, map)
            : bundle.latents;
    const Matrix enc = encoder.apply(
        representation_input,
        Rng::substream(seed, {streams::kEncoderNoise, streams::kTrajectory,
                              (std::uint64_t)m}));
    run.encoded_mean += enc;
    if (m == 0) {
      run.bundle = std::move(bundle);
      run.encoded = enc;
    }
  }
  run.encoded_mean /= config.eval_trajectories;

  // Basis from pure-domain data over the active set; the violation rule
  // never fires on pure domains (intermediate mixtures only).
  std::optional<ContextSet> contexts;
  if (config.basis == "shared_context") {
    contexts = draw_contexts(ms, one_hot_vector(config.k_total, active[0]),
                             config.contexts, config.noise_sigma,
                             Rng::substream(seed, {streams::kContexts}),
                             config.burn_in);
  }
  const MeanEstimationPlan plan =
      make_plan(config, contexts ? &*contexts : nullptr,
                Rng::substream(seed, {streams::kBasis}));
  run.basis = estimate_basis_with_plan(ms, active, encoder, plan);

  MeanEstimationPlan delta_plan = plan;
  delta_plan.seed = Rng::substream(seed, {streams::kDeltaProbe});
  run.delta_approx = estimate_delta_approx(
      ms, run.basis, default_delta_probes(config.k_total, run.basis.domains),
      encoder, delta_plan);

  // Recover and smooth on the ensemble-mean encoding.
  if (config.smoothing == "tv") {
    double lambda = config.lambda;
    if (lambda < 0.0) {
      lambda = select_lambda_gcv(run.encoded_mean, run.basis,
                                 config.lambda_grid.empty()
                                     ? SmoothingConfig::default_lambda_grid()
                                     : config.lambda_grid);
    }
    run.recovery = smooth_tv(run.encoded_mean, run.basis, lambda);
  } else {
    run.recovery = smooth_window(recover_pointwise(run.encoded_mean, run.basis),
                                 config.window);
  }

  run.truth_active =
      restrict_to_domains(run.bundle.schedule.alphas, run.basis.domains);
  if (config.calibrate) {
    run.recovery = calibrate_two_point(
        std::move(run.recovery), run.truth_active.row(0).transpose(),
        run.truth_active.row(config.t - 1).transpose());
  }

  // Scores. Latent identifiability compares encoded vs true latents; weight
  // metrics compare mixing trajectories over the active set.
  MccResult mcc_result =
      mcc(run.encoded, run.bundle.latents, CorrelationKind::kSpearmanAbs);
  run.scorecard.mcc = mcc_result.score;
  run.scorecard.assignment = mcc_result.permutation;
  run.scorecard.weight_corr =
      weight_correlation(run.recovery.best(), run.truth_active);
  run.scorecard.mae_raw = mae(run.recovery.smoothed, run.truth_active);
  if (run.recovery.calibrated.has_value()) {
    run.scorecard.mae_cal = mae(*run.recovery.calibrated, run.truth_active);
  }
  run.scorecard.w_traj_corr = w_trajectory_correlation(
      ms,
      embed_from_domains(run.recovery.best(), run.basis.domains,
                         config.k_total),
      run.bundle.schedule.alphas);

  // Assumption verification: pure-domain residuals from fresh validation
  // data vs transition residuals at the smoothed mixtures.
  std::vector<double> pure_residuals;
  const std::uint64_t val_seed = Rng::substream(seed, {streams::kValidation});
  for (size_t j = 0; j < run.basis.domains.size(); ++j) {
    const int domain = run.basis.domains[j];
    const Vector mu_k =
        j == 0 ? run.basis.mu0
               : Vector(run.basis.mu0 + run.basis.b.col(j - 1));
    Matrix samples;
    if (config.basis == "shared_context") {
      ContextSet val_ctx = draw_contexts(
          ms, one_hot_vector(config.k_total, active[0]), config.contexts,
          config.noise_sigma, Rng::substream(val_seed, {(std::uint64_t)j, 1}),
          config.burn_in);
      samples = one_step_ensemble(ms, one_hot_vector(config.k_total, domain),
                                  val_ctx, config.noise_sigma,
                                  Rng::substream(val_seed, {(std::uint64_t)j, 2}));
    } else {
      MixingSchedule pure = MixingSchedule::one_hot(
          config.basis_length, domain, config.k_total);
      TrajectoryBundle val = simulate(
          ms, pure, config.noise_sigma,
          Rng::substream(val_seed, {(std::uint64_t)j, 3}), nullptr, nullptr,
          config.burn_in);
      samples = val.latents;
    }
    const Matrix enc = encoder.apply(
        samples, Rng::substream(val_seed, {(std::uint64_t)j, 4}));
    for (int r = 0; r < enc.rows(); ++r) {
      pure_residuals.push_back((enc.row(r).transpose() - mu_k).norm());
    }
  }
  // Per-sample residuals of the first trajectory against the recovered
  // mixtures; this is the epsilon-bar scale the SNR diagnostic reports.
  const int k_sub = static_cast<int>(run.basis.domains.size());
  Vector per_sample_residuals(config.t);
  for (int t = 0; t < config.t; ++t) {
    const Vector alpha_sm = run.recovery.smoothed.row(t).transpose();
    const Vector pred = run.basis.mu0 + run.basis.b * alpha_sm.tail(k_sub - 1);
    per_sample_residuals(t) = (run.encoded.row(t).transpose() - pred).norm();
  }
  std::vector<double> transition_residuals;
  for (int t = 0; t < config.t; t += 2) {
    transition_residuals.push_back(per_sample_residuals(t));
  }
  const AssumptionCheck check =
      verify_assumption(pure_residuals, transition_residuals);

  run.diagnostics.sigma_min = run.basis.sigma_min;
  run.diagnostics.mean_residual = per_sample_residuals.mean();
  run.diagnostics.delta_approx = run.delta_approx;
  run.diagnostics.snr_eff =
      compute_snr_eff(run.basis, per_sample_residuals, run.delta_approx);
  run.diagnostics.ks_statistic = check.ks.statistic;
  run.diagnostics.ks_p_value = check.ks.p_value;
  run.diagnostics.verdict = check.verdict;

  if (!config.out.empty()) {
    namespace fs = std::filesystem;
    const fs::path dir =
        fs::path(config.out) / ("run_seed" + std::to_string(seed));
    fs::create_directories(dir);
    std::map<std::string, std::string> meta{
        {"d", std::to_string(config.d)},
        {"K", std::to_string(config.k_total)},
        {"T", std::to_string(config.t)},
        {"sigma", io::format_double(config.noise_sigma)},
        {"seed", std::to_string(seed)},
        {"family", to_string(run.bundle.schedule.family)},
        {"perturbation_norm", io::format_double(config.perturbation_norm)},
        {"p", std::to_string(config.p)},
        {"mixing_depth", std::to_string(config.mixing_depth)},
    };
    io::write_trajectory_csv((dir / "trajectory.csv").string(), run.bundle,
                             meta);
    io::write_encoded_csv((dir / "encoded.csv").string(), run.encoded);
    io::write_basis((dir / "basis.txt").string(), run.basis);
    io::write_recovery_csv((dir / "recovery.csv").string(), run.recovery);
    io::write_diagnostics((dir / "diagnostics.txt").string(), run.diagnostics);
  }
  return run;
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

ExperimentConfig apply_axis(ExperimentConfig config, const std::string& axis,
                            double value) {
  if (axis == "noise_sigma") config.noise_sigma = value;
  else if (axis == "perturbation_norm") config.perturbation_norm = value;
  else if (axis == "repr_noise_sigma") config.repr_noise_sigma = value;
  else if (axis == "violation_strength") config.violation_strength = value;
  else if (axis == "lambda") config.lambda = value;
  else if (axis == "window") config.window = static_cast<int>(value);
  else if (axis == "t") config.t = static_cast<int>(value);
  else if (axis == "k_active") {
    config.k_active = static_cast<int>(value);
    config.active_domains.clear();
  } else {
    throw InvalidInputError("unknown sweep axis: " + axis);
  }
  return config;
}

namespace {

struct MetricAccumulator {
  std::map<std::string, std::vector<double>> values;

  void add(const RunArtifacts& run) {
    values["mcc"].push_back(run.scorecard.mcc);
    values["weight_corr"].push_back(run.scorecard.weight_corr);
    values["mae_raw"].push_back(run.scorecard.mae_raw);
    if (run.scorecard.mae_cal.has_value()) {
      values["mae_cal"].push_back(*run.scorecard.mae_cal);
    }
    values["w_traj_corr"].push_back(run.scorecard.w_traj_corr);
    values["snr_eff"].push_back(run.diagnostics.snr_eff);
    values["sigma_min"].push_back(run.diagnostics.sigma_min);
    values["ks_p_value"].push_back(run.diagnostics.ks_p_value);
  }
};

double vec_mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / v.size();
}

double vec_sd(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = vec_mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / (v.size() - 1));
}

}  // namespace

SweepResult run_sweep(const ExperimentConfig& base, const std::string& axis,
                      const std::vector<double>& values) {
  if (values.empty()) throw InvalidInputError("sweep values must be nonempty");
  // Validate the axis (and every value) before spawning work.
  for (double v : values) apply_axis(base, axis, v).validate();

  const int per_value = static_cast<int>(base.seeds.size());
  const int total = static_cast<int>(values.size()) * per_value;
  std::vector<RunArtifacts> runs(total);

  std::atomic<int> next{0};
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const unsigned workers = std::min<unsigned>(hw, total);
  std::vector<std::thread> pool;
  std::vector<std::string> failures(total);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&]() {
      while (true) {
        const int idx = next.fetch_add(1);
        if (idx >= total) break;
        const int vi = idx / per_value;
        const int si = idx % per_value;
        try {
          ExperimentConfig config = apply_axis(base, axis, values[vi]);
          config.out.clear();  // per-run files only for single runs
          runs[idx] = run_single(config, base.seeds[si]);
        } catch (const std::exception& e) {
          failures[idx] = e.what();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  for (int i = 0; i < total; ++i) {
    if (!failures[i].empty()) {
      throw Error("sweep run failed (axis=" + axis + ", value=" +
                  io::format_double(values[i / per_value]) + ", seed=" +
                  std::to_string(base.seeds[i % per_value]) +
                  "): " + failures[i]);
    }
  }

  SweepResult result;
  result.axis = axis;
  result.runs = std::move(runs);

  std::ostringstream per_run;
  per_run << "axis,value,seed,mcc,weight_corr,mae_raw,mae_cal,w_traj_corr,"
          << io::diagnostics_csv_header() << "\n";
  std::ostringstream agg;
  agg << "axis,value,n,mcc_mean,mcc_sd,weight_corr_mean,weight_corr_sd,"
         "mae_raw_mean,mae_raw_sd,mae_cal_mean,mae_cal_sd,w_traj_corr_mean,"
         "w_traj_corr_sd,snr_eff_mean,snr_eff_sd,sigma_min_mean,sigma_min_sd,"
         "ks_p_value_mean,ks_p_value_sd\n";

  for (size_t vi = 0; vi < values.size(); ++vi) {
    MetricAccumulator acc;
    for (int si = 0; si < per_value; ++si) {
      const RunArtifacts& run = result.runs[vi * per_value + si];
      acc.add(run);
      per_run << axis << "," << io::format_double(values[vi]) << ","
              << run.seed << "," << io::format_double(run.scorecard.mcc) << ","
              << io::format_double(run.scorecard.weight_corr) << ","
              << io::format_double(run.scorecard.mae_raw) << ","
              << (run.scorecard.mae_cal
                      ? io::format_double(*run.scorecard.mae_cal)
                      : "")
              << "," << io::format_double(run.scorecard.w_traj_corr) << ","
              << io::diagnostics_csv_row(run.diagnostics) << "\n";
    }
    SweepRow row;
    row.value = values[vi];
    row.n = per_value;
    for (const auto& [key, vals] : acc.values) {
      row.mean[key] = vec_mean(vals);
      row.sd[key] = vec_sd(vals);
    }
    result.rows.push_back(row);

    auto cell = [&](const std::string& key, bool sd) {
      const auto& m = sd ? result.rows.back().sd : result.rows.back().mean;
      auto it = m.find(key);
      return it == m.end() ? std::string() : io::format_double(it->second);
    };
    agg << axis << "," << io::format_double(values[vi]) << "," << per_value;
    for (const char* key : {"mcc", "weight_corr", "mae_raw", "mae_cal",
                            "w_traj_corr", "snr_eff", "sigma_min",
                            "ks_p_value"}) {
      agg << "," << cell(key, false) << "," << cell(key, true);
    }
    agg << "\n";
  }
  result.per_run_csv = per_run.str();
  result.aggregate_csv = agg.str();

  if (!base.out.empty()) {
    namespace fs = std::filesystem;
    fs::create_directories(base.out);
    io::write_text((fs::path(base.out) / ("sweep_" + axis + "_runs.csv")).string(),
                   result.per_run_csv);
    io::write_text((fs::path(base.out) / ("sweep_" + axis + ".csv")).string(),
                   result.aggregate_csv);
  }
  return result;
}

// ---------------------------------------------------------------------------
// Pointwise-bound protocol
// ---------------------------------------------------------------------------

BoundsProtocolReport run_bounds_protocol(
    const ExperimentConfig& base, double delta_scale,
    const std::vector<double>* noise_values,
    const std::vector<double>* perturbation_values) {
  const std::vector<double> default_noise{0.01, 0.05, 0.1, 0.2, 0.5};
  const std::vector<double> default_pert{0.1, 0.2, 0.3, 0.5, 0.7};
  const std::vector<double>& noises =
      noise_values ? *noise_values : default_noise;
  const std::vector<double>& perts =
      perturbation_values ? *perturbation_values : default_pert;

  BoundsProtocolReport report;
  auto run_one = [&](const std::string& scheme, const std::string& axis,
                     double value) {
    for (std::uint64_t seed : base.seeds) {
      ExperimentConfig config = apply_axis(base, axis, value);
      config.basis = "shared_context";
      config.validate();
      const std::vector<int> active = config.resolve_active_domains();

      MechanismSetOptions opts;
      opts.activation_slope = config.activation_slope;
      opts.allow_capacity_excess = config.allow_capacity_excess;
      const MechanismSet ms = MechanismSet::build(
          config.d, config.k_total, config.perturbation_norm, seed, opts);
      const MixingSchedule schedule =
          make_schedule(config.family, config.t, config.k_total, active);
      const TrajectoryBundle bundle =
          simulate(ms, schedule, config.noise_sigma,
                   Rng::substream(seed, {streams::kTrajectory}), nullptr,
                   nullptr, config.burn_in);
      const EncoderModel encoder = make_encoder(config, seed, ms, active);
      const Matrix encoded = encoder.apply(
          bundle.latents,
          Rng::substream(seed, {streams::kEncoderNoise, streams::kTrajectory}));

      const ContextSet contexts = draw_contexts(
          ms, one_hot_vector(config.k_total, active[0]), config.contexts,
          config.noise_sigma, Rng::substream(seed, {streams::kContexts}),
          config.burn_in);
      MeanEstimationPlan plan;
      plan.mode = MeanEstimationPlan::Mode::kSharedContext;
      plan.contexts = &contexts;
      plan.noise_sigma = config.noise_sigma;
      plan.seed = Rng::substream(seed, {streams::kBasis});
      const DomainBasis basis =
          estimate_basis_with_plan(ms, active, encoder, plan);

      // Mixed means along the true schedule give both the per-step
      // deviations and the worst-case linearization gap.
      MeanEstimationPlan curve_plan = plan;
      curve_plan.seed = Rng::substream(seed, {streams::kDeltaProbe});
      const Matrix mixed_means =
          estimate_mixed_means(ms, schedule.alphas, encoder, curve_plan);
      double delta = 0.0;
      Vector epsilons(config.t);
      for (int t = 0; t < config.t; ++t) {
        const Vector shift = shift_coordinates(basis, schedule.alpha_at(t));
        const Vector linear = basis.mu0 + basis.b * shift;
        delta = std::max(delta,
                         (mixed_means.row(t).transpose() - linear).norm());
        epsilons(t) =
            (encoded.row(t).transpose() - mixed_means.row(t).transpose())
                .norm();
      }
      delta *= delta_scale;

      const RecoveryResult rec = recover_pointwise(encoded, basis);
      const BoundReport bound =
          check_pointwise_bound(rec, schedule, basis, delta, epsilons);

      BoundsRunReport r;
      r.scheme = scheme;
      r.value = value;
      r.seed = seed;
      r.violations = bound.violations;
      r.total = config.t;
      r.max_error = bound.errors.maxCoeff();
      r.min_slack = (bound.bounds - bound.errors).minCoeff();
      report.runs.push_back(r);
      report.total_violations += bound.violations;
      report.total_points += config.t;
    }
  };

  for (double v : noises) run_one("vary_noise", "noise_sigma", v);
  for (double v : perts) run_one("vary_perturbation", "perturbation_norm", v);
  return report;
}

// ---------------------------------------------------------------------------
// Selftest
// ---------------------------------------------------------------------------

bool selftest(std::ostream& out) {
  bool ok = true;
  auto report = [&](const std::string& name, bool pass, double worst) {
    out << (pass ? "[ok]   " : "[FAIL] ") << name
        << " (worst=" << io::format_double(worst) << ")\n";
    ok = ok && pass;
  };

  {
    Rng rng(20240001);
    double worst = 0.0;
    for (int rep = 0; rep < 100; ++rep) {
      const int k = 2 + static_cast<int>(rng.next_below(4));
      Vector v(k);
      for (int i = 0; i < k; ++i) v(i) = rng.next_uniform(-2.0, 2.0);
      const Vector ours = project_simplex(v);
      const Vector exact = reference::project_simplex_support_enum(v);
      worst = std::max(worst, (ours - exact).norm());
    }
    report("simplex projection vs support enumeration", worst <= 1e-9, worst);
  }
  {
    Rng rng(20240002);
    double worst = 0.0;
    for (int rep = 0; rep < 20; ++rep) {
      const int n = 3 + static_cast<int>(rng.next_below(60));
      Vector diag(n), off(n - 1), rhs(n);
      for (int i = 0; i < n - 1; ++i) off(i) = rng.next_uniform(-1.0, 1.0);
      for (int i = 0; i < n; ++i) {
        rhs(i) = rng.next_uniform(-1.0, 1.0);
        const double row = (i > 0 ? std::abs(off(i - 1)) : 0.0) +
                           (i < n - 1 ? std::abs(off(i)) : 0.0);
        diag(i) = row + rng.next_uniform(0.5, 2.0);
      }
      Matrix a = Matrix::Zero(n, n);
      for (int i = 0; i < n; ++i) {
        a(i, i) = diag(i);
        if (i < n - 1) {
          a(i, i + 1) = off(i);
          a(i + 1, i) = off(i);
        }
      }
      const Vector x = linalg::solve_tridiagonal(diag, off, rhs);
      const Vector y = reference::solve_dense(a, rhs);
      worst = std::max(worst, (x - y).cwiseAbs().maxCoeff());
    }
    report("tridiagonal solver vs dense elimination", worst <= 1e-10, worst);
  }
  {
    Rng rng(20240003);
    bool pass = true;
    for (int rep = 0; rep < 10; ++rep) {
      const int n = 7;
      Matrix cost(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) cost(i, j) = rng.next_uniform(0.0, 1.0);
      const auto fast = linalg::optimal_assignment(cost);
      const auto brute = reference::assignment_bruteforce(cost);
      double cf = 0.0, cb = 0.0;
      for (int i = 0; i < n; ++i) {
        cf += cost(i, fast[i]);
        cb += cost(i, brute[i]);
      }
      pass = pass && std::abs(cf - cb) <= 1e-12;
    }
    report("assignment vs exhaustive enumeration", pass, 0.0);
  }
  {
    Rng rng(20240004);
    Matrix latents(50, 8);
    for (int t = 0; t < 50; ++t)
      for (int i = 0; i < 8; ++i) latents(t, i) = rng.next_normal();
    const MixingMap map(8, 16, 3, 77);
    const Matrix round = map.invert(map.apply(latents));
    const double worst = (round - latents).cwiseAbs().maxCoeff();
    report("mixing-map round trip", worst <= 1e-8, worst);
  }
  return ok;
}

}  // namespace mechmix
