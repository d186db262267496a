#include "mechmix/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace mechmix::io {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open for writing: " + path);
  out << content;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open for reading: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  for (char ch : line) {
    if (ch == sep) {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  parts.push_back(cur);
  return parts;
}

namespace {

double parse_double(const std::string& s) {
  try {
    size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error("malformed number: '" + s + "'");
  }
}

}  // namespace

void write_trajectory_csv(const std::string& path,
                          const TrajectoryBundle& bundle,
                          const std::map<std::string, std::string>& meta) {
  const int d = static_cast<int>(bundle.latents.cols());
  const int p = static_cast<int>(bundle.observations.cols());
  const int k = bundle.schedule.num_domains;

  std::ostringstream out;
  out << "t";
  for (int i = 0; i < d; ++i) out << ",z_" << i;
  for (int i = 0; i < p; ++i) out << ",x_" << i;
  for (int i = 0; i < k; ++i) out << ",alpha_" << i;
  out << "\n";
  for (int t = 0; t < bundle.latents.rows(); ++t) {
    out << t;
    for (int i = 0; i < d; ++i)
      out << "," << format_double(bundle.latents(t, i));
    for (int i = 0; i < p; ++i)
      out << "," << format_double(bundle.observations(t, i));
    for (int i = 0; i < k; ++i)
      out << "," << format_double(bundle.schedule.alphas(t, i));
    out << "\n";
  }
  write_text(path, out.str());

  std::ostringstream side;
  for (const auto& [key, value] : meta) side << key << "=" << value << "\n";
  write_text(path + ".meta", side.str());
}

void write_encoded_csv(const std::string& path, const Matrix& encoded) {
  std::ostringstream out;
  out << "t";
  for (int i = 0; i < encoded.cols(); ++i) out << ",zhat_" << i;
  out << "\n";
  for (int t = 0; t < encoded.rows(); ++t) {
    out << t;
    for (int i = 0; i < encoded.cols(); ++i)
      out << "," << format_double(encoded(t, i));
    out << "\n";
  }
  write_text(path, out.str());
}

Matrix read_encoded_csv(const std::string& path) {
  const std::string text = read_text(path);
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw Error("empty encoded CSV: " + path);
  const auto header = split(line, ',');
  if (header.size() < 2 || header[0] != "t") {
    throw Error("bad encoded CSV header in " + path);
  }
  int d = 0;
  for (size_t i = 1; i < header.size(); ++i) {
    if (header[i].rfind("zhat_", 0) == 0) ++d;
  }
  if (d == 0) throw Error("no zhat_ columns in " + path);

  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto parts = split(line, ',');
    if (static_cast<int>(parts.size()) != d + 1) {
      throw Error("row width mismatch in " + path);
    }
    std::vector<double> row;
    for (int i = 0; i < d; ++i) row.push_back(parse_double(parts[i + 1]));
    rows.push_back(std::move(row));
  }
  Matrix m(static_cast<int>(rows.size()), d);
  for (size_t t = 0; t < rows.size(); ++t)
    for (int i = 0; i < d; ++i) m(static_cast<int>(t), i) = rows[t][i];
  return m;
}

void write_basis(const std::string& path, const DomainBasis& basis) {
  std::ostringstream out;
  out << "mu0";
  for (int i = 0; i < basis.mu0.size(); ++i)
    out << " " << format_double(basis.mu0(i));
  out << "\n";
  for (int j = 0; j < basis.b.cols(); ++j) {
    out << "col_" << j + 1;
    for (int i = 0; i < basis.b.rows(); ++i)
      out << " " << format_double(basis.b(i, j));
    out << "\n";
  }
  out << "sigma_min " << format_double(basis.sigma_min) << "\n";
  out << "counts";
  for (long c : basis.sample_counts) out << " " << c;
  out << "\n";
  out << "domains";
  for (int id : basis.domains) out << " " << id;
  out << "\n";
  write_text(path, out.str());
}

DomainBasis read_basis(const std::string& path) {
  const std::string text = read_text(path);
  std::istringstream in(text);
  std::string line;
  DomainBasis basis;
  std::vector<Vector> cols;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto parts = split(line, ' ');
    const std::string& tag = parts[0];
    if (tag == "mu0") {
      basis.mu0 = Vector(parts.size() - 1);
      for (size_t i = 1; i < parts.size(); ++i)
        basis.mu0(i - 1) = parse_double(parts[i]);
    } else if (tag.rfind("col_", 0) == 0) {
      Vector col(parts.size() - 1);
      for (size_t i = 1; i < parts.size(); ++i)
        col(i - 1) = parse_double(parts[i]);
      cols.push_back(std::move(col));
    } else if (tag == "sigma_min") {
      basis.sigma_min = parse_double(parts[1]);
    } else if (tag == "counts") {
      for (size_t i = 1; i < parts.size(); ++i)
        basis.sample_counts.push_back(std::stol(parts[i]));
    } else if (tag == "domains") {
      for (size_t i = 1; i < parts.size(); ++i)
        basis.domains.push_back(std::stoi(parts[i]));
    } else {
      throw Error("unknown basis line tag: " + tag);
    }
  }
  if (basis.mu0.size() == 0 || cols.empty()) {
    throw Error("incomplete basis file: " + path);
  }
  basis.b = Matrix(basis.mu0.size(), static_cast<int>(cols.size()));
  for (size_t j = 0; j < cols.size(); ++j) basis.b.col(j) = cols[j];
  if (basis.domains.empty()) {
    for (int j = 0; j <= static_cast<int>(cols.size()); ++j)
      basis.domains.push_back(j);
  }
  basis.bottleneck_warning = basis.sigma_min < kSigmaMinWarningBand;
  return basis;
}

void write_recovery_csv(const std::string& path,
                        const RecoveryResult& result) {
  const int k = result.num_components();
  std::ostringstream out;
  out << "t";
  for (int i = 0; i < k; ++i) out << ",alpha_raw_" << i;
  for (int i = 0; i < k; ++i) out << ",alpha_smooth_" << i;
  if (result.calibrated.has_value()) {
    for (int i = 0; i < k; ++i) out << ",alpha_cal_" << i;
  }
  out << ",residual_norm\n";
  for (int t = 0; t < result.length(); ++t) {
    out << t;
    for (int i = 0; i < k; ++i) out << "," << format_double(result.raw(t, i));
    for (int i = 0; i < k; ++i)
      out << "," << format_double(result.smoothed(t, i));
    if (result.calibrated.has_value()) {
      for (int i = 0; i < k; ++i)
        out << "," << format_double((*result.calibrated)(t, i));
    }
    out << "," << format_double(result.residual_norms(t)) << "\n";
  }
  write_text(path, out.str());
}

void write_diagnostics(const std::string& path,
                       const DiagnosticsReport& report) {
  std::ostringstream out;
  out << "snr_eff=" << format_double(report.snr_eff) << "\n"
      << "sigma_min=" << format_double(report.sigma_min) << "\n"
      << "mean_residual=" << format_double(report.mean_residual) << "\n"
      << "delta_approx=" << format_double(report.delta_approx) << "\n"
      << "bound_violations=" << report.bound_violations << "\n"
      << "bound_violation_fraction="
      << format_double(report.bound_violation_fraction) << "\n"
      << "ks_statistic=" << format_double(report.ks_statistic) << "\n"
      << "ks_p_value=" << format_double(report.ks_p_value) << "\n"
      << "verdict=" << to_string(report.verdict) << "\n";
  write_text(path, out.str());
}

std::string diagnostics_csv_header() {
  return "snr_eff,sigma_min,mean_residual,delta_approx,bound_violations,"
         "bound_violation_fraction,ks_statistic,ks_p_value,verdict";
}

std::string diagnostics_csv_row(const DiagnosticsReport& report) {
  std::ostringstream out;
  out << format_double(report.snr_eff) << ","
      << format_double(report.sigma_min) << ","
      << format_double(report.mean_residual) << ","
      << format_double(report.delta_approx) << ","
      << report.bound_violations << ","
      << format_double(report.bound_violation_fraction) << ","
      << format_double(report.ks_statistic) << ","
      << format_double(report.ks_p_value) << "," << to_string(report.verdict);
  return out.str();
}

std::string scorecard_csv_header(const std::vector<std::string>& config_keys) {
  std::ostringstream out;
  for (const auto& key : config_keys) out << key << ",";
  out << "mcc,weight_corr,mae_raw,mae_cal,w_traj_corr,"
      << diagnostics_csv_header();
  return out.str();
}

std::string scorecard_csv_row(const std::vector<std::string>& config_values,
                              const ScoreCard& card,
                              const DiagnosticsReport& report) {
  std::ostringstream out;
  for (const auto& value : config_values) out << value << ",";
  out << format_double(card.mcc) << "," << format_double(card.weight_corr)
      << "," << format_double(card.mae_raw) << ","
      << (card.mae_cal.has_value() ? format_double(*card.mae_cal) : "")
      << "," << format_double(card.w_traj_corr) << ","
      << diagnostics_csv_row(report);
  return out.str();
}

}  // namespace mechmix::io
