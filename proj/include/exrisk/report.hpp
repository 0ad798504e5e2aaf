#pragma once

#include <chrono>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "exrisk/config.hpp"
#include "exrisk/errors.hpp"
#include "exrisk/experiment.hpp"
#include "exrisk/text.hpp"

namespace exrisk {

inline constexpr const char* kVersion = "0.1.0";

inline constexpr const char* kTrialsFile = "trials.csv";
inline constexpr const char* kSummaryFile = "summary.csv";
inline constexpr const char* kRatioPlotFile = "ratio_vs_n.csv";
inline constexpr const char* kCoveragePlotFile = "coverage_vs_n.csv";
inline constexpr const char* kSupnormPlotFile = "supnorm_rate.csv";
inline constexpr const char* kConfigEchoFile = "config_echo.cfg";
inline constexpr const char* kManifestFile = "manifest.txt";

// Files written by a run. The manifest itself carries wall-clock timing, so
// only the files it lists are byte-stable across reruns.
struct RunManifest {
  std::string version;
  std::uint64_t seed = 0;
  double wall_seconds = 0.0;
  std::vector<std::string> files;
};

namespace detail_report {

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline std::string trials_csv(const ExperimentResult& result) {
  std::string out = "n,D,r,trial,true_excess,empirical_excess,ratio,sup_dist,chi,degenerate\n";
  for (std::size_t c = 0; c < result.records.size(); ++c) {
    const ExperimentCell cell = result.config.grid[c];
    for (std::size_t t = 0; t < result.records[c].size(); ++t) {
      const RiskRecord& r = result.records[c][t];
      const double ratio = r.empirical_excess > 0.0 ? r.true_excess / r.empirical_excess : kNaN;
      out += std::to_string(cell.n) + ',' + std::to_string(cell.dim) + ',' +
             std::to_string(result.config.degree) + ',' + std::to_string(t) + ',' +
             format_g17(r.true_excess) + ',' + format_g17(r.empirical_excess) + ',' +
             format_g17(ratio) + ',' + format_g17(r.sup_dist) + ',' + format_g17(r.chi) + ',' +
             (r.degenerate ? '1' : '0') + '\n';
    }
  }
  return out;
}

inline std::string summary_csv(const ExperimentResult& result) {
  std::string out =
      "n,D,r,trials,degenerate,k1m_sq,target,bias,mean_true,mean_empirical,mean_ratio,"
      "median_ratio,mean_chi_sq,q_sup,cov_true_50,cov_true_30,cov_true_20,cov_true_10,"
      "cov_emp_50,cov_emp_30,cov_emp_20,cov_emp_10\n";
  for (const CellSummary& s : result.cells) {
    out += std::to_string(s.n) + ',' + std::to_string(s.dim) + ',' + std::to_string(s.degree) +
           ',' + std::to_string(s.trials) + ',' + std::to_string(s.degenerate_count) + ',' +
           format_g17(s.k1m_sq) + ',' + format_g17(s.target) + ',' + format_g17(s.bias) + ',' +
           format_g17(s.mean_true) + ',' + format_g17(s.mean_emp) + ',' +
           format_g17(s.mean_ratio) + ',' + format_g17(s.median_ratio) + ',' +
           format_g17(s.mean_chi_sq) + ',' + format_g17(s.q_sup);
    for (double v : s.cov_true) out += ',' + format_g17(v);
    for (double v : s.cov_emp) out += ',' + format_g17(v);
    out += '\n';
  }
  return out;
}

inline std::string ratio_plot_csv(const ExperimentResult& result) {
  std::string out = "n,D,r,median_ratio,mean_ratio\n";
  for (const CellSummary& s : result.cells) {
    out += std::to_string(s.n) + ',' + std::to_string(s.dim) + ',' + std::to_string(s.degree) +
           ',' + format_g17(s.median_ratio) + ',' + format_g17(s.mean_ratio) + '\n';
  }
  return out;
}

inline std::string coverage_plot_csv(const ExperimentResult& result) {
  std::string out = "n,D,r,e,coverage_true,coverage_empirical\n";
  for (const CellSummary& s : result.cells) {
    for (std::size_t e = 0; e < kCoverageLadder.size(); ++e) {
      out += std::to_string(s.n) + ',' + std::to_string(s.dim) + ',' +
             std::to_string(s.degree) + ',' + format_g17(kCoverageLadder[e]) + ',' +
             format_g17(s.cov_true[e]) + ',' + format_g17(s.cov_emp[e]) + '\n';
    }
  }
  return out;
}

inline std::string supnorm_plot_csv(const ExperimentResult& result) {
  std::string out = "n,D,r,rate_sqrt_dlnn_over_n,q_sup\n";
  for (const CellSummary& s : result.cells) {
    const double n = static_cast<double>(s.n);
    const double abscissa = std::sqrt(static_cast<double>(s.dim) * std::log(n) / n);
    out += std::to_string(s.n) + ',' + std::to_string(s.dim) + ',' + std::to_string(s.degree) +
           ',' + format_g17(abscissa) + ',' + format_g17(s.q_sup) + '\n';
  }
  return out;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace detail_report

// Writes all result files plus the manifest into dir; numbers are decimal
// with 17 significant digits and parse back to the identical binary value.
inline RunManifest emit_outputs(const ExperimentResult& result, const std::string& dir,
                                double wall_seconds = 0.0) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const auto path = [&](const char* name) { return (fs::path(dir) / name).string(); };

  RunManifest manifest;
  manifest.version = kVersion;
  manifest.seed = result.config.seed;
  manifest.wall_seconds = wall_seconds;

  const auto emit = [&](const char* name, const std::string& content) {
    detail_report::write_file(path(name), content);
    manifest.files.push_back(path(name));
  };
  emit(kConfigEchoFile, serialize_config(result.config));
  emit(kTrialsFile, detail_report::trials_csv(result));
  emit(kSummaryFile, detail_report::summary_csv(result));
  emit(kRatioPlotFile, detail_report::ratio_plot_csv(result));
  emit(kCoveragePlotFile, detail_report::coverage_plot_csv(result));
  emit(kSupnormPlotFile, detail_report::supnorm_plot_csv(result));

  std::string m;
  m += std::string("version = ") + kVersion + "\n";
  m += "seed = " + std::to_string(manifest.seed) + "\n";
  m += "wall_seconds = " + format_g17(wall_seconds) + "\n";
  if (result.rate_rho) m += "supnorm_rate_rho = " + format_g17(*result.rate_rho) + "\n";
  if (result.rate_kappa) m += "supnorm_rate_kappa = " + format_g17(*result.rate_kappa) + "\n";
  // Sensitivity of the degeneracy cut: how many trials sit between the
  // conservative 1/2 and the applied perturbation threshold.
  for (std::size_t c = 0; c < result.records.size(); ++c) {
    if (result.records[c].empty()) continue;
    std::size_t above_half = 0, above_limit = 0;
    for (const RiskRecord& r : result.records[c]) {
      above_half += r.gram_perturbation > 0.5;
      above_limit += r.gram_perturbation > kGramPerturbationLimit;
    }
    const double total = static_cast<double>(result.records[c].size());
    m += "gram_perturbation_sensitivity n=" + std::to_string(result.config.grid[c].n) +
         " D=" + std::to_string(result.config.grid[c].dim) +
         " frac_above_half=" + format_g17(static_cast<double>(above_half) / total) +
         " frac_above_limit=" + format_g17(static_cast<double>(above_limit) / total) + "\n";
  }
  for (const std::string& f : manifest.files) m += "file = " + f + "\n";
  detail_report::write_file(path(kManifestFile), m);
  return manifest;
}

// Reads per-trial records back from trials.csv, in file order.
inline std::vector<std::vector<RiskRecord>> read_trial_records(const std::string& trials_path,
                                                               const ExperimentConfig& config) {
  std::ifstream in(trials_path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + trials_path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty trials file: " + trials_path);

  // Cell constants (bias per cell) are not stored per trial; recomputed by
  // the caller. Here only the sampled columns are read back.
  std::vector<std::vector<RiskRecord>> records(config.grid.size());
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = detail_report::split_csv_line(line);
    if (fields.size() != 10) {
      throw std::runtime_error(trials_path + ": bad row with " + std::to_string(fields.size()) +
                               " fields");
    }
    std::uint64_t n = 0, dim = 0;
    if (!parse_u64(fields[0], n) || !parse_u64(fields[1], dim)) {
      throw std::runtime_error(trials_path + ": bad cell columns");
    }
    RiskRecord rec;
    double ratio_ignored = 0.0;
    if (!parse_double(fields[4], rec.true_excess) ||
        !parse_double(fields[5], rec.empirical_excess) ||
        !parse_double(fields[6], ratio_ignored) || !parse_double(fields[7], rec.sup_dist) ||
        !parse_double(fields[8], rec.chi)) {
      throw std::runtime_error(trials_path + ": bad numeric columns");
    }
    rec.degenerate = fields[9] == "1";
    std::size_t cell_index = config.grid.size();
    for (std::size_t c = 0; c < config.grid.size(); ++c) {
      if (config.grid[c].n == n && config.grid[c].dim == dim &&
          records[c].size() < config.trials) {
        cell_index = c;
        break;
      }
    }
    if (cell_index == config.grid.size()) {
      throw std::runtime_error(trials_path + ": row " + std::to_string(row) +
                               " does not match any grid cell");
    }
    records[cell_index].push_back(rec);
    ++row;
  }
  return records;
}

// Recomputes summary and plot files from the stored per-trial records and the
// config echo; reproduces the files written by the original run byte for
// byte (cell constants are deterministic quadratures, records round-trip
// through 17-digit decimals).
inline void regenerate_summaries(const std::string& dir) {
  namespace fs = std::filesystem;
  const auto path = [&](const char* name) { return (fs::path(dir) / name).string(); };
  const ExperimentConfig config = parse_config(path(kConfigEchoFile));

  ExperimentResult result;
  result.config = config;
  result.records = read_trial_records(path(kTrialsFile), config);
  for (std::size_t c = 0; c < config.grid.size(); ++c) {
    const ExperimentCell cell = config.grid[c];
    const CellConstants constants = make_cell_constants(config, cell);
    for (RiskRecord& rec : result.records[c]) rec.bias = constants.bias;
    result.cells.push_back(summarize_cell(cell.n, cell.dim, config.degree, constants.k1m_sq,
                                          constants.target, constants.bias, config.alpha,
                                          result.records[c]));
  }
  detail_report::write_file(path(kSummaryFile), detail_report::summary_csv(result));
  detail_report::write_file(path(kRatioPlotFile), detail_report::ratio_plot_csv(result));
  detail_report::write_file(path(kCoveragePlotFile), detail_report::coverage_plot_csv(result));
  detail_report::write_file(path(kSupnormPlotFile), detail_report::supnorm_plot_csv(result));
}

}  // namespace exrisk
