#pragma once

#include <map>
#include <string>
#include <vector>

#include "mechmix/basis.hpp"
#include "mechmix/diagnostics.hpp"
#include "mechmix/generator.hpp"
#include "mechmix/metrics.hpp"
#include "mechmix/recovery.hpp"

namespace mechmix::io {

// All floating-point output uses round-trip precision so that identical
// runs produce byte-identical files.
std::string format_double(double v);

// Trajectory CSV: one row per timestep with columns
//   t, z_0..z_{d-1}, x_0..x_{p-1}, alpha_0..alpha_{K-1}
// plus a plain-text sidecar <path>.meta holding the generation record.
void write_trajectory_csv(const std::string& path,
                          const TrajectoryBundle& bundle,
                          const std::map<std::string, std::string>& meta);

// Encoded representations reuse the layout with zhat_ columns:
//   t, zhat_0..zhat_{d-1}
void write_encoded_csv(const std::string& path, const Matrix& encoded);
Matrix read_encoded_csv(const std::string& path);

// Basis text format: mu0 line, one line per basis column, sigma_min,
// per-domain sample counts, domain ids.
void write_basis(const std::string& path, const DomainBasis& basis);
DomainBasis read_basis(const std::string& path);

// Recovery CSV: t, alpha_raw_*, alpha_smooth_*, [alpha_cal_*,] residual_norm.
void write_recovery_csv(const std::string& path, const RecoveryResult& result);

// Diagnostics: flat key-value text block, and a single CSV row for sweep
// aggregation.
void write_diagnostics(const std::string& path,
                       const DiagnosticsReport& report);
std::string diagnostics_csv_header();
std::string diagnostics_csv_row(const DiagnosticsReport& report);

std::string scorecard_csv_header(const std::vector<std::string>& config_keys);
std::string scorecard_csv_row(const std::vector<std::string>& config_values,
                              const ScoreCard& card,
                              const DiagnosticsReport& report);

void write_text(const std::string& path, const std::string& content);
std::string read_text(const std::string& path);

std::vector<std::string> split(const std::string& line, char sep);

}  // namespace mechmix::io
