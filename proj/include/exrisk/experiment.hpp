#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "exrisk/errors.hpp"
#include "exrisk/estimator.hpp"
#include "exrisk/parallel.hpp"
#include "exrisk/partition.hpp"
#include "exrisk/problem.hpp"
#include "exrisk/risk.hpp"
#include "exrisk/rng.hpp"

namespace exrisk {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Relative half-widths of the coverage ladder around the first-order level.
inline constexpr std::array<double, 4> kCoverageLadder{0.5, 0.3, 0.2, 0.1};

// Dimension regimes of the two main results: the sharp first-order bounds
// need A_minus (ln n)^2 <= D <= A_plus n / (ln n)^2, the small-model upper
// bound only needs the upper half.
enum class Regime { kMid, kSmall };

struct ExperimentCell {
  std::size_t n = 0;
  std::size_t dim = 0;

  bool operator==(const ExperimentCell&) const = default;
};

struct ExperimentConfig {
  RegressionProblem problem;
  int degree = 0;
  bool equal_width = true;
  std::vector<double> partition_breakpoints;  // used when equal_width is false
  std::vector<ExperimentCell> grid;
  std::size_t trials = 100;
  double alpha = 0.01;  // quantile level 1 - alpha in rate fits and summaries
  std::uint64_t seed = 1;
  Regime regime = Regime::kMid;
  double a_minus = 0.1;
  double a_plus = 3.0;
  int threads = 0;  // 0 = all hardware threads
};

namespace detail {

inline double log_sq(double n) {
  const double l = std::log(n);
  return l * l;
}

}  // namespace detail

// Eager validation of grid and regime guards; throws ConfigError listing
// every offending (n, D).
inline void validate_experiment_config(const ExperimentConfig& config) {
  std::vector<std::string> problems;
  if (config.grid.empty()) problems.push_back("grid must contain at least one (n, D) pair");
  if (config.trials == 0) problems.push_back("trials must be positive");
  if (config.degree < 0 || config.degree > kMaxDegree) {
    problems.push_back("degree must be between 0 and 4");
  }
  if (!(config.alpha > 0.0 && config.alpha < 0.5)) {
    problems.push_back("alpha must lie in (0, 0.5)");
  }
  if (!(config.a_minus > 0.0) || !(config.a_plus > 0.0)) {
    problems.push_back("regime constants a_minus, a_plus must be positive");
  }
  const std::size_t funcs = static_cast<std::size_t>(std::max(config.degree, 0)) + 1;
  for (const ExperimentCell& cell : config.grid) {
    const std::string tag = "(n=" + std::to_string(cell.n) + ", D=" + std::to_string(cell.dim) + ")";
    if (cell.n == 0 || cell.dim == 0) {
      problems.push_back(tag + ": n and D must be positive");
      continue;
    }
    if (cell.dim % funcs != 0) {
      problems.push_back(tag + ": D must be a multiple of degree+1");
    }
    if (!config.equal_width) {
      const std::size_t cells = config.partition_breakpoints.empty()
                                    ? 0
                                    : config.partition_breakpoints.size() - 1;
      if (cell.dim != funcs * cells) {
        problems.push_back(tag + ": D must equal (degree+1) x cells of the explicit partition");
      }
    }
    const double n = static_cast<double>(cell.n);
    const double dim = static_cast<double>(cell.dim);
    const double lsq = detail::log_sq(n);
    const double upper = lsq > 0.0 ? config.a_plus * n / lsq
                                   : std::numeric_limits<double>::infinity();
    if (dim > upper) {
      problems.push_back(tag + ": dimension regime guard D <= A_plus * n / (ln n)^2 fails (bound " +
                         std::to_string(upper) + ")");
    }
    if (config.regime == Regime::kMid) {
      const double lower = config.a_minus * lsq;
      if (dim < lower) {
        problems.push_back(tag +
                           ": dimension regime guard A_minus * (ln n)^2 <= D fails (bound " +
                           std::to_string(lower) + ")");
      }
    }
  }
  if (!problems.empty()) {
    std::string msg = "invalid experiment config: ";
    for (std::size_t i = 0; i < problems.size(); ++i) {
      if (i) msg += "; ";
      msg += problems[i];
    }
    throw ConfigError(msg);
  }
}

// Empirical quantile with linear interpolation of order statistics
// (type-7 convention): h = (N-1)p, interpolate between floor(h) and ceil(h).
inline double quantile_type7(std::vector<double> values, double p) {
  if (values.empty()) return kNaN;
  std::sort(values.begin(), values.end());
  p = std::clamp(p, 0.0, 1.0);
  const double h = static_cast<double>(values.size() - 1) * p;
  const std::size_t lo = static_cast<std::size_t>(h);
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = h - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

// Deterministic per-(n, D) aggregate over trials.
struct CellSummary {
  std::size_t n = 0;
  std::size_t dim = 0;
  int degree = 0;
  std::size_t trials = 0;
  std::size_t degenerate_count = 0;
  double k1m_sq = kNaN;
  double target = kNaN;  // first-order level (D / 4n) K_{1,M}^2
  double bias = kNaN;
  double mean_true = kNaN;
  double mean_emp = kNaN;
  double mean_chi_sq = kNaN;
  double mean_ratio = kNaN;    // true / empirical, where defined
  double median_ratio = kNaN;
  std::array<double, 4> cov_true{kNaN, kNaN, kNaN, kNaN};
  std::array<double, 4> cov_emp{kNaN, kNaN, kNaN, kNaN};
  double q_sup = kNaN;       // (1-alpha)-quantile of sup distance
  double q_dev_true = kNaN;  // (1-alpha)-quantile of |true/target - 1|
  double iqr_true = kNaN;    // interquartile range of true/target
  double iqr_emp = kNaN;
};

// Summaries are a pure, order-fixed function of the records, shared by the
// simulation path and by summary regeneration from stored records.
inline CellSummary summarize_cell(std::size_t n, std::size_t dim, int degree, double k1m_sq,
                                  double target, double bias, double alpha,
                                  const std::vector<RiskRecord>& records) {
  CellSummary s;
  s.n = n;
  s.dim = dim;
  s.degree = degree;
  s.trials = records.size();
  s.k1m_sq = k1m_sq;
  s.target = target;
  s.bias = bias;

  std::vector<double> trues, emps, sups, chis, ratios;
  for (const RiskRecord& r : records) {
    if (r.degenerate) {
      ++s.degenerate_count;
      continue;
    }
    trues.push_back(r.true_excess);
    emps.push_back(r.empirical_excess);
    sups.push_back(r.sup_dist);
    chis.push_back(r.chi * r.chi);
    if (r.empirical_excess > 0.0 && std::isfinite(r.true_excess / r.empirical_excess)) {
      ratios.push_back(r.true_excess / r.empirical_excess);
    }
  }
  if (trues.empty()) return s;

  const auto mean = [](const std::vector<double>& v) {
    double acc = 0.0;
    for (double x : v) acc += x;
    return acc / static_cast<double>(v.size());
  };
  s.mean_true = mean(trues);
  s.mean_emp = mean(emps);
  s.mean_chi_sq = mean(chis);
  if (!ratios.empty()) {
    s.mean_ratio = mean(ratios);
    s.median_ratio = quantile_type7(ratios, 0.5);
  }
  s.q_sup = quantile_type7(sups, 1.0 - alpha);

  if (target > 0.0) {
    std::vector<double> dev(trues.size());
    std::vector<double> rel_true(trues.size()), rel_emp(emps.size());
    for (std::size_t i = 0; i < trues.size(); ++i) {
      rel_true[i] = trues[i] / target;
      rel_emp[i] = emps[i] / target;
      dev[i] = std::abs(rel_true[i] - 1.0);
    }
    for (std::size_t e = 0; e < kCoverageLadder.size(); ++e) {
      std::size_t in_true = 0, in_emp = 0;
      for (std::size_t i = 0; i < rel_true.size(); ++i) {
        in_true += std::abs(rel_true[i] - 1.0) <= kCoverageLadder[e];
        in_emp += std::abs(rel_emp[i] - 1.0) <= kCoverageLadder[e];
      }
      s.cov_true[e] = static_cast<double>(in_true) / static_cast<double>(rel_true.size());
      s.cov_emp[e] = static_cast<double>(in_emp) / static_cast<double>(rel_emp.size());
    }
    s.q_dev_true = quantile_type7(dev, 1.0 - alpha);
    s.iqr_true = quantile_type7(rel_true, 0.75) - quantile_type7(rel_true, 0.25);
    s.iqr_emp = quantile_type7(rel_emp, 0.75) - quantile_type7(rel_emp, 0.25);
  }
  return s;
}

// Deterministic per-cell setup: model, projection and exact complexity terms.
struct CellConstants {
  ExperimentCell cell;
  OrthonormalBasis basis;
  std::vector<double> projection;
  double k1m_sq = 0.0;
  double target = 0.0;
  double bias = 0.0;
};

inline CellConstants make_cell_constants(const ExperimentConfig& config,
                                         const ExperimentCell& cell) {
  const std::size_t funcs = static_cast<std::size_t>(config.degree) + 1;
  Partition partition = config.equal_width
                            ? Partition::equal_width(cell.dim / funcs)
                            : Partition(config.partition_breakpoints);
  CellConstants out{cell,
                    config.degree == 0 ? build_histogram_basis(partition, config.problem)
                                       : build_poly_basis(partition, config.problem, config.degree),
                    {}, 0.0, 0.0, 0.0};
  out.projection = project_target(config.problem, out.basis);
  const ComplexityReport complexity =
      complexity_k1m(config.problem, out.basis, cell.n, out.projection);
  out.k1m_sq = complexity.k1m_sq;
  out.target = complexity.ideal_first_order;
  out.bias = bias_term(config.problem, out.basis, out.projection);
  return out;
}

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<std::vector<RiskRecord>> records;  // [grid cell][trial]
  std::vector<CellSummary> cells;
  std::optional<double> rate_rho;    // fitted sup-norm rate exponent, when the
  std::optional<double> rate_kappa;  // grid supports the regression
};

// Ordinary least squares of y on x; returns {slope, intercept}.
inline std::pair<double, double> ols_fit(const std::vector<double>& x,
                                         const std::vector<double>& y) {
  const std::size_t n = x.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  const double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

namespace detail {

inline std::size_t count_distinct(std::vector<double> v, double tol = 1e-12) {
  std::sort(v.begin(), v.end());
  std::size_t distinct = v.empty() ? 0 : 1;
  for (std::size_t i = 1; i < v.size(); ++i) distinct += (v[i] - v[i - 1]) > tol;
  return distinct;
}

}  // namespace detail

// Runs the full (n, D) grid. Trial t of cell (n, D) draws its dataset from
// the seed mix_seed(seed, n, D, t), so cells and trials are independent and
// individually reproducible; reruns of the same config are bit-identical.
// Trials run in parallel into preassigned slots and every aggregate is a
// fixed-order reduction over trial indices, so thread count does not affect
// results.
inline ExperimentResult run_experiment(const ExperimentConfig& config) {
  validate_experiment_config(config);
  ExperimentResult result;
  result.config = config;
  result.records.resize(config.grid.size());
  result.cells.resize(config.grid.size());

  for (std::size_t c = 0; c < config.grid.size(); ++c) {
    const ExperimentCell cell = config.grid[c];
    const CellConstants constants = make_cell_constants(config, cell);
    std::vector<RiskRecord>& records = result.records[c];
    records.resize(config.trials);
    parallel_for(config.trials, config.threads, [&](std::size_t t) {
      const Dataset data = sample_dataset(
          config.problem, cell.n, mix_seed(config.seed, cell.n, cell.dim, t));
      const FitResult fit = fit_least_squares(data, constants.basis, constants.projection);
      RiskRecord rec;
      rec.true_excess = true_excess_risk(fit);
      rec.empirical_excess = empirical_excess_risk(data, fit, constants.basis);
      rec.bias = constants.bias;
      rec.sup_dist = sup_norm_distance(fit, constants.basis);
      rec.chi = chi_diagnostic(data, constants.basis, constants.projection);
      rec.gram_perturbation = fit.cond_estimate;
      rec.degenerate = fit.degenerate;
      records[t] = rec;
    });
    result.cells[c] =
        summarize_cell(cell.n, cell.dim, config.degree, constants.k1m_sq, constants.target,
                       constants.bias, config.alpha, records);
  }

  // Sup-norm rate exponent, when the grid spans enough sample sizes.
  std::vector<double> xs, ys, ns;
  for (const CellSummary& s : result.cells) {
    if (!(s.q_sup > 0.0) || !std::isfinite(s.q_sup)) continue;
    const double n = static_cast<double>(s.n);
    ns.push_back(n);
    xs.push_back(0.5 * std::log(static_cast<double>(s.dim) * std::log(n) / n));
    ys.push_back(std::log(s.q_sup));
  }
  if (detail::count_distinct(ns) >= 4 && detail::count_distinct(xs) >= 3) {
    const auto [rho, kappa] = ols_fit(xs, ys);
    result.rate_rho = rho;
    result.rate_kappa = kappa;
  }
  return result;
}

// First-order concentration summary: coverage ladders, ratio location and the
// scaling of deviation quantiles against the theoretical rate shape.
struct FirstOrderCell {
  std::size_t n = 0;
  std::size_t dim = 0;
  double target = kNaN;
  std::size_t used_trials = 0;
  std::array<double, 4> cov_true{kNaN, kNaN, kNaN, kNaN};
  std::array<double, 4> cov_emp{kNaN, kNaN, kNaN, kNaN};
  double mean_ratio = kNaN;
  double median_ratio = kNaN;
};

struct BoundsReport {
  std::vector<FirstOrderCell> cells;
  double deviation_slope = kNaN;      // log q_dev against log max{(ln n/D)^(1/4), (D ln n/n)^(1/4)}
  double deviation_intercept = kNaN;
};

inline BoundsReport check_first_order(const ExperimentResult& result) {
  BoundsReport report;
  std::vector<double> xs, ys;
  for (const CellSummary& s : result.cells) {
    const std::size_t used = s.trials - s.degenerate_count;
    if (used < 100) {
      throw InsufficientDataError(
          "first-order check: fewer than 100 non-degenerate trials at (n=" +
          std::to_string(s.n) + ", D=" + std::to_string(s.dim) + ")");
    }
    FirstOrderCell cell;
    cell.n = s.n;
    cell.dim = s.dim;
    cell.target = s.target;
    cell.used_trials = used;
    cell.cov_true = s.cov_true;
    cell.cov_emp = s.cov_emp;
    cell.mean_ratio = s.mean_ratio;
    cell.median_ratio = s.median_ratio;
    report.cells.push_back(cell);

    if (s.q_dev_true > 0.0 && std::isfinite(s.q_dev_true)) {
      const double n = static_cast<double>(s.n);
      const double dim = static_cast<double>(s.dim);
      const double rate =
          std::max(std::pow(std::log(n) / dim, 0.25), std::pow(dim * std::log(n) / n, 0.25));
      xs.push_back(std::log(rate));
      ys.push_back(std::log(s.q_dev_true));
    }
  }
  if (detail::count_distinct(xs) >= 2) {
    const auto [slope, intercept] = ols_fit(xs, ys);
    report.deviation_slope = slope;
    report.deviation_intercept = intercept;
  }
  return report;
}

// Log-log fit of the sup-norm distance quantile against sqrt(D ln n / n).
struct RatePoint {
  std::size_t n = 0;
  std::size_t dim = 0;
  double abscissa = kNaN;  // sqrt(D ln n / n)
  double quantile = kNaN;
};

struct RateReport {
  double rho = kNaN;
  double kappa = kNaN;
  std::vector<RatePoint> points;
};

inline RateReport check_sup_norm_rate(const ExperimentResult& result) {
  RateReport report;
  std::vector<double> xs, ys, ns;
  for (const CellSummary& s : result.cells) {
    if (!(s.q_sup > 0.0) || !std::isfinite(s.q_sup)) continue;
    const double n = static_cast<double>(s.n);
    const double abscissa = std::sqrt(static_cast<double>(s.dim) * std::log(n) / n);
    report.points.push_back({s.n, s.dim, abscissa, s.q_sup});
    ns.push_back(n);
    xs.push_back(std::log(abscissa));
    ys.push_back(std::log(s.q_sup));
  }
  if (detail::count_distinct(ns) < 4) {
    throw InsufficientDataError("sup-norm rate: grid must span at least 4 sample sizes");
  }
  if (detail::count_distinct(xs) < 3) {
    throw InsufficientDataError("sup-norm rate: degenerate regression, fewer than 3 distinct abscissae");
  }
  const auto [rho, kappa] = ols_fit(xs, ys);
  report.rho = rho;
  report.kappa = kappa;
  return report;
}

// Small-model check: worst rescaled excess risks per cell and their trend in
// n. Boundedness shows as a log-log slope near zero.
struct SmallModelCell {
  std::size_t n = 0;
  std::size_t dim = 0;
  double max_true_scaled = kNaN;  // max over trials of n * true / (D v ln n)
  double max_emp_scaled = kNaN;
};

struct DimensionTrend {
  std::size_t dim = 0;
  double slope_true = kNaN;  // slope of log(max) against log n
  double slope_emp = kNaN;
};

struct SmallModelsReport {
  std::vector<SmallModelCell> cells;
  std::vector<DimensionTrend> trends;
};

inline SmallModelsReport check_small_models(const ExperimentResult& result) {
  SmallModelsReport report;
  for (std::size_t c = 0; c < result.cells.size(); ++c) {
    const CellSummary& s = result.cells[c];
    const double n = static_cast<double>(s.n);
    const double scale = n / std::max(static_cast<double>(s.dim), std::log(n));
    double max_true = kNaN, max_emp = kNaN;
    for (const RiskRecord& r : result.records[c]) {
      if (r.degenerate) continue;
      const double t = r.true_excess * scale;
      const double e = r.empirical_excess * scale;
      if (std::isnan(max_true) || t > max_true) max_true = t;
      if (std::isnan(max_emp) || e > max_emp) max_emp = e;
    }
    report.cells.push_back({s.n, s.dim, max_true, max_emp});
  }

  std::map<std::size_t, std::vector<std::size_t>> by_dim;
  for (std::size_t i = 0; i < report.cells.size(); ++i) {
    by_dim[report.cells[i].dim].push_back(i);
  }
  for (const auto& [dim, idx] : by_dim) {
    std::vector<double> xs, ys_true, ys_emp, ns;
    for (std::size_t i : idx) {
      const SmallModelCell& cell = report.cells[i];
      if (!(cell.max_true_scaled > 0.0) || !(cell.max_emp_scaled > 0.0)) continue;
      ns.push_back(static_cast<double>(cell.n));
      xs.push_back(std::log(static_cast<double>(cell.n)));
      ys_true.push_back(std::log(cell.max_true_scaled));
      ys_emp.push_back(std::log(cell.max_emp_scaled));
    }
    if (detail::count_distinct(ns) < 3) continue;
    DimensionTrend trend;
    trend.dim = dim;
    trend.slope_true = ols_fit(xs, ys_true).first;
    trend.slope_emp = ols_fit(xs, ys_emp).first;
    report.trends.push_back(trend);
  }
  return report;
}

}  // namespace exrisk
