#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mechmix/basis.hpp"
#include "mechmix/diagnostics.hpp"
#include "mechmix/encoder.hpp"
#include "mechmix/generator.hpp"
#include "mechmix/io.hpp"
#include "mechmix/metrics.hpp"
#include "mechmix/recovery.hpp"

namespace mechmix {

// Flat experiment configuration. Parsed from key=value text; unknown keys
// are hard errors so sweep axes cannot be silently misspelled.
struct ExperimentConfig {
  int d = 8;
  int k_total = 5;
  int k_active = 3;
  std::vector<int> active_domains;  // empty: spread evenly over [0, k_total)
  int t = 200;
  ScheduleFamily family = ScheduleFamily::kSequential;
  double noise_sigma = 0.1;
  double perturbation_norm = 0.5;
  double activation_slope = 0.2;
  int p = 16;
  int mixing_depth = 3;
  int burn_in = 10;

  std::string encoder = "oracle";  // oracle | distorted
  double repr_noise_sigma = 0.0;
  bool decreasing_warps = false;

  std::string smoothing = "window";  // window | tv
  int window = 5;
  double lambda = -1.0;              // < 0: select by GCV
  std::vector<double> lambda_grid;   // empty: default grid
  bool calibrate = true;

  // observational: means of constant-mixture trajectories (the geometry
  // transition data lives in). shared_context: one-step conditional means at
  // matched contexts (used by the theorem-verification protocols).
  std::string basis = "observational";
  int basis_trajectories = 200;
  int basis_length = 50;
  int contexts = 200;

  // Test trajectories per run sharing the schedule; the recovery input is
  // the per-step mean encoding, which tames the per-step state deviations
  // the pointwise bound treats as noise.
  int eval_trajectories = 300;

  bool violation = false;
  double violation_strength = 0.6;
  bool allow_capacity_excess = false;

  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::string out;

  void validate() const;
  std::vector<int> resolve_active_domains() const;
  std::string serialize() const;

  static ExperimentConfig parse(const std::string& text);
  static ExperimentConfig preset(const std::string& name);
  static std::vector<std::string> preset_names();
};

// Everything a single run produces, kept in memory for tests and tooling.
struct RunArtifacts {
  ExperimentConfig config;
  std::uint64_t seed = 0;
  TrajectoryBundle bundle;  // first trajectory of the evaluation ensemble
  Matrix encoded;           // its encoding
  Matrix encoded_mean;      // per-step mean encoding across the ensemble
  DomainBasis basis;
  double delta_approx = 0.0;
  RecoveryResult recovery;
  Matrix truth_active;  // T x K_active, schedule restricted to basis order
  ScoreCard scorecard;
  DiagnosticsReport diagnostics;
};

// generate -> encode -> estimate basis -> recover -> smooth -> calibrate ->
// score -> verify. Writes artifact files when config.out is set.
RunArtifacts run_single(const ExperimentConfig& config, std::uint64_t seed);

struct SweepRow {
  double value = 0.0;
  int n = 0;
  std::map<std::string, double> mean;
  std::map<std::string, double> sd;
};

struct SweepResult {
  std::string axis;
  std::vector<SweepRow> rows;
  std::vector<RunArtifacts> runs;  // in (value-major, seed-minor) order
  std::string per_run_csv;
  std::string aggregate_csv;
};

// One run per (value, seed), executed concurrently, aggregated mean/sd per
// value. Axis must name a numeric config field.
SweepResult run_sweep(const ExperimentConfig& base, const std::string& axis,
                      const std::vector<double>& values);

ExperimentConfig apply_axis(ExperimentConfig config, const std::string& axis,
                            double value);

// Pointwise-bound validation over the two standard sweep schemes (noise and
// perturbation), shared-context protocol. For each run the per-step
// representation deviations and the worst-case linearization gap are
// estimated from the simulator, then every unprojected recovery error is
// compared against the bound.
struct BoundsRunReport {
  std::string scheme;
  double value = 0.0;
  std::uint64_t seed = 0;
  long violations = 0;
  int total = 0;
  double max_error = 0.0;
  double min_slack = 0.0;  // min over t of bound - error
};

struct BoundsProtocolReport {
  std::vector<BoundsRunReport> runs;
  long total_violations = 0;
  long total_points = 0;
};

BoundsProtocolReport run_bounds_protocol(
    const ExperimentConfig& base, double delta_scale = 1.0,
    const std::vector<double>* noise_values = nullptr,
    const std::vector<double>* perturbation_values = nullptr);

// Quick oracle equivalences (projection, tridiagonal solve, assignment,
// mixing-map round trip). Prints one line per check; returns false on any
// mismatch.
bool selftest(std::ostream& out);

// Helpers shared by the CLI and tests.
Matrix restrict_to_domains(const Matrix& full, const std::vector<int>& domains);
Matrix embed_from_domains(const Matrix& restricted,
                          const std::vector<int>& domains, int k_total);

}  // namespace mechmix
