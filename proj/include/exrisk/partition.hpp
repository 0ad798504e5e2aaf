#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "exrisk/errors.hpp"
#include "exrisk/problem.hpp"
#include "exrisk/quadrature.hpp"

namespace exrisk {

// Interval partition of [0, 1): cells [t_k, t_{k+1}) with the last cell
// closed at 1, so membership at breakpoints is deterministic.
class Partition {
 public:
  explicit Partition(std::vector<double> breakpoints) : breakpoints_(std::move(breakpoints)) {
    detail::check_unit_breakpoints(breakpoints_, "partition");
  }

  static Partition equal_width(std::size_t cells) {
    if (cells == 0) throw ConfigError("partition: need at least one cell");
    std::vector<double> t(cells + 1);
    for (std::size_t k = 0; k <= cells; ++k) {
      t[k] = static_cast<double>(k) / static_cast<double>(cells);
    }
    t.front() = 0.0;
    t.back() = 1.0;
    return Partition(std::move(t));
  }

  std::size_t cell_count() const { return breakpoints_.size() - 1; }
  double lower(std::size_t k) const { return breakpoints_[k]; }
  double upper(std::size_t k) const { return breakpoints_[k + 1]; }
  double length(std::size_t k) const { return breakpoints_[k + 1] - breakpoints_[k]; }
  std::size_t locate(double x) const { return detail::locate_interval(breakpoints_, x); }
  const std::vector<double>& breakpoints() const { return breakpoints_; }

  bool operator==(const Partition& other) const = default;

 private:
  std::vector<double> breakpoints_;
};

// Regularity constants of a partition under the design law and under
// Lebesgue measure. The lower constants control the localized-basis bound;
// the upper constant bounds the unit envelope from below.
struct RegularityReport {
  double lower_const_p = 0.0;    // sqrt(|P| * min_I P^X(I))
  double lower_const_leb = 0.0;  // sqrt(|P| * min_I Leb(I))
  double upper_const_p = 0.0;    // |P| * max_I P^X(I)
  std::vector<double> cell_masses;
};

// Per-cell design mass by quadrature of f, exact for the supported density
// families.
inline std::vector<double> cell_masses(const Partition& partition, const RegressionProblem& problem) {
  const DesignDensity& f = problem.design_density();
  std::vector<double> masses(partition.cell_count());
  for (std::size_t k = 0; k < masses.size(); ++k) {
    const auto pts =
        merge_breakpoints(partition.lower(k), partition.upper(k), {f.breakpoints()});
    masses[k] = gl_integrate_composite([&](double x) { return f(x); }, pts, 4);
  }
  return masses;
}

inline RegularityReport regularity_report(const Partition& partition,
                                          const RegressionProblem& problem) {
  RegularityReport report;
  report.cell_masses = cell_masses(partition, problem);
  const double m = static_cast<double>(partition.cell_count());
  double min_mass = report.cell_masses[0], max_mass = report.cell_masses[0];
  double min_len = partition.length(0);
  for (std::size_t k = 0; k < partition.cell_count(); ++k) {
    min_mass = std::min(min_mass, report.cell_masses[k]);
    max_mass = std::max(max_mass, report.cell_masses[k]);
    min_len = std::min(min_len, partition.length(k));
  }
  report.lower_const_p = std::sqrt(m * min_mass);
  report.lower_const_leb = std::sqrt(m * min_len);
  report.upper_const_p = m * max_mass;
  return report;
}

}  // namespace exrisk
