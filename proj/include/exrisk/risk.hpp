#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "exrisk/basis.hpp"
#include "exrisk/estimator.hpp"
#include "exrisk/problem.hpp"
#include "exrisk/quadrature.hpp"

namespace exrisk {

// Quadrature order for risk-level integrals; exact for every product of the
// supported families (target, sigma^2, envelope squared, density).
inline constexpr int kRiskQuadratureOrder = 12;

// Per-trial risk numbers. gram_perturbation is an in-memory diagnostic (the
// max row sum of the empirical Gram perturbation) used to report how
// sensitive the degeneracy cut is to its threshold; it is not serialized.
struct RiskRecord {
  double true_excess = 0.0;       // P(K s_n - K s_M) = ||s_n - s_M||_2^2
  double empirical_excess = 0.0;  // P_n(K s_M - K s_n)
  double bias = 0.0;              // P(K s_M - K s*) = ||s_M - s*||_2^2
  double sup_dist = 0.0;          // ||s_n - s_M||_inf
  double chi = 0.0;               // basis-wise empirical fluctuation norm
  double gram_perturbation = 0.0;
  bool degenerate = false;
};

// Linear and quadratic parts of the contrast increment at z = (x, y):
// psi_1(z) (s_n - s_M)(x) and ((s_n - s_M)(x))^2 with psi_1(z) = -2 (y - s_M(x)).
// Their sum reproduces (K s_n)(z) - (K s_M)(z) exactly.
inline std::pair<double, double> contrast_parts(const OrthonormalBasis& basis,
                                                const FitResult& fit, double x, double y) {
  const double s_m = eval_in_basis(basis, fit.coeff_projection, x);
  const double s_n = eval_in_basis(basis, fit.coeff_estimator, x);
  const double diff = s_n - s_m;
  return {-2.0 * (y - s_m) * diff, diff * diff};
}

// By orthonormality and the Pythagoras identity at the projection, the true
// excess risk is the squared coefficient gap. Computed exactly from the known
// law rather than by fresh simulation.
inline double true_excess_risk(const FitResult& fit) {
  double sum = 0.0;
  for (std::size_t k = 0; k < fit.coeff_estimator.size(); ++k) {
    const double d = fit.coeff_estimator[k] - fit.coeff_projection[k];
    sum += d * d;
  }
  return sum;
}

// (1/n) sum_i [(y_i - s_M(x_i))^2 - (y_i - s_n(x_i))^2]; nonnegative for
// non-degenerate fits since s_n minimizes the empirical risk.
inline double empirical_excess_risk(const Dataset& data, const FitResult& fit,
                                    const OrthonormalBasis& basis) {
  const std::size_t n = data.size();
  if (n == 0) return 0.0;
  const std::size_t p = basis.funcs_per_cell();
  double phi[8];
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t cell = basis.eval_cell(data.x[i], std::span<double>(phi, p));
    double s_m = 0.0, s_n = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
      s_m += fit.coeff_projection[cell * p + j] * phi[j];
      s_n += fit.coeff_estimator[cell * p + j] * phi[j];
    }
    const double rm = data.y[i] - s_m;
    const double rn = data.y[i] - s_n;
    acc += rm * rm - rn * rn;
  }
  return acc / static_cast<double>(n);
}

// ||s_M - s*||_2^2 by quadrature.
inline double bias_term(const RegressionProblem& problem, const OrthonormalBasis& basis,
                        const std::vector<double>& projection) {
  const DesignDensity& f = problem.design_density();
  const auto pts = merge_breakpoints(0.0, 1.0,
                                     {basis.partition().breakpoints(),
                                      problem.target().breakpoints(), f.breakpoints()});
  return gl_integrate_composite(
      [&](double x) {
        const double d = eval_in_basis(basis, projection, x) - problem.target()(x);
        return d * d * f(x);
      },
      pts, kRiskQuadratureOrder);
}

// Normalized complexity of the model under the problem's law. Both the raw
// model complexity (D/4) K^2 and the per-sample first-order level
// (D/4n) K^2 are exposed; everything downstream consumes the latter.
struct ComplexityReport {
  double k1m_sq = 0.0;                   // K_{1,M}^2
  std::vector<double> per_basis_terms;   // Var(psi_1 phi_k), k = 1..D
  std::optional<double> closed_form_histogram;  // degree 0, homoscedastic noise
  double model_complexity = 0.0;         // (D / 4) K_{1,M}^2
  double ideal_first_order = 0.0;        // (D / 4n) K_{1,M}^2
};

// K_{1,M}^2 = 4 E[(sigma^2 + (s_M - s*)^2) Psi_M^2], evaluated by exact
// quadrature; the per-basis variances use the same conditional second moment,
// which is valid because every psi_1 phi_k is exactly centered. For
// histograms under homoscedastic noise the closed form
// 4 (sigma^2 + (1/|P|) sum_I Var[s* | X in I]) is evaluated independently
// from cell-conditional moments.
inline ComplexityReport complexity_k1m(const RegressionProblem& problem,
                                       const OrthonormalBasis& basis, std::size_t n,
                                       const std::vector<double>& projection) {
  const DesignDensity& f = problem.design_density();
  const NoiseLevel& sigma = problem.noise_level();
  const PiecewisePolynomial& target = problem.target();
  const double dim = static_cast<double>(basis.dimension());
  const std::size_t p = basis.funcs_per_cell();

  const auto contrast_weight = [&](double x) {
    const double s = sigma(x);
    const double d = eval_in_basis(basis, projection, x) - target(x);
    return s * s + d * d;
  };

  ComplexityReport report;
  report.per_basis_terms.assign(basis.dimension(), 0.0);
  for (std::size_t cell = 0; cell < basis.cell_count(); ++cell) {
    const auto pts = merge_breakpoints(
        basis.partition().lower(cell), basis.partition().upper(cell),
        {f.breakpoints(), target.breakpoints(), sigma.breakpoints()});
    for (std::size_t j = 0; j < p; ++j) {
      report.per_basis_terms[cell * p + j] = 4.0 * gl_integrate_composite(
          [&](double x) {
            const double v = basis.eval_local(cell, j, basis.to_local(cell, x));
            return contrast_weight(x) * v * v * f(x);
          },
          pts, kRiskQuadratureOrder);
    }
  }
  double mean = 0.0;
  for (double t : report.per_basis_terms) mean += t;
  report.k1m_sq = mean / dim;

  if (basis.degree() == 0 && sigma.is_constant()) {
    const double s0 = sigma(0.0);
    double variance_sum = 0.0;
    for (std::size_t cell = 0; cell < basis.cell_count(); ++cell) {
      const auto pts = merge_breakpoints(basis.partition().lower(cell),
                                         basis.partition().upper(cell),
                                         {f.breakpoints(), target.breakpoints()});
      const double mass = basis.masses()[cell];
      const double m1 =
          gl_integrate_composite([&](double x) { return target(x) * f(x); }, pts,
                                 kRiskQuadratureOrder) / mass;
      const double m2 =
          gl_integrate_composite([&](double x) { return target(x) * target(x) * f(x); }, pts,
                                 kRiskQuadratureOrder) / mass;
      variance_sum += m2 - m1 * m1;
    }
    report.closed_form_histogram =
        4.0 * (s0 * s0 + variance_sum / static_cast<double>(basis.cell_count()));
  }

  report.model_complexity = 0.25 * dim * report.k1m_sq;
  report.ideal_first_order = report.model_complexity / static_cast<double>(n);
  return report;
}

// chi = sqrt(sum_k [(P_n - P)(psi_1 phi_k)]^2). Every psi_1 phi_k has exact
// mean zero, so only the empirical average is accumulated.
inline double chi_diagnostic(const Dataset& data, const OrthonormalBasis& basis,
                             const std::vector<double>& projection) {
  const std::size_t n = data.size();
  if (n == 0) return 0.0;
  const std::size_t p = basis.funcs_per_cell();
  std::vector<double> sums(basis.dimension(), 0.0);
  double phi[8];
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t cell = basis.eval_cell(data.x[i], std::span<double>(phi, p));
    double s_m = 0.0;
    for (std::size_t j = 0; j < p; ++j) s_m += projection[cell * p + j] * phi[j];
    const double w = -2.0 * (data.y[i] - s_m);
    for (std::size_t j = 0; j < p; ++j) sums[cell * p + j] += w * phi[j];
  }
  double sq = 0.0;
  for (double s : sums) {
    const double avg = s / static_cast<double>(n);
    sq += avg * avg;
  }
  return std::sqrt(sq);
}

}  // namespace exrisk
