#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "exrisk/basis.hpp"
#include "exrisk/linalg.hpp"
#include "exrisk/problem.hpp"
#include "exrisk/quadrature.hpp"

namespace exrisk {

// When the max absolute row sum of the empirical Gram perturbation exceeds
// this, the trial is flagged degenerate. The solve itself stays well posed
// somewhat past the 1/2 that makes the Neumann argument work, so 0.9 keeps
// more trials; sensitivity to the threshold is part of the reported output.
inline constexpr double kGramPerturbationLimit = 0.9;

// Least-squares fit in basis coordinates, next to the projection it is
// compared against.
struct FitResult {
  std::vector<double> coeff_projection;  // coordinates of s_M
  std::vector<double> coeff_estimator;   // coordinates of s_n
  bool degenerate = false;
  std::vector<std::size_t> degenerate_cells;  // empty or unsolvable cells
  double cond_estimate = 0.0;  // max abs row sum of (empirical Gram - identity)
};

// Coordinates of the L2(P^X) projection of the target: beta_k = int s* phi_k f,
// by quadrature that is exact for the supported families.
inline std::vector<double> project_target(const RegressionProblem& problem,
                                          const OrthonormalBasis& basis) {
  const DesignDensity& f = problem.design_density();
  const PiecewisePolynomial& target = problem.target();
  const std::size_t p = basis.funcs_per_cell();
  std::vector<double> beta(basis.dimension());
  for (std::size_t cell = 0; cell < basis.cell_count(); ++cell) {
    const auto pts = merge_breakpoints(basis.partition().lower(cell),
                                       basis.partition().upper(cell),
                                       {f.breakpoints(), target.breakpoints()});
    for (std::size_t j = 0; j < p; ++j) {
      beta[cell * p + j] = gl_integrate_composite(
          [&](double x) {
            return target(x) * basis.eval_local(cell, j, basis.to_local(cell, x)) * f(x);
          },
          pts, basis.degree() + 6);
    }
  }
  return beta;
}

// s(x) for a coefficient vector in basis coordinates.
inline double eval_in_basis(const OrthonormalBasis& basis, std::span<const double> coeffs,
                            double x) {
  const std::size_t p = basis.funcs_per_cell();
  const std::size_t cell = basis.partition().locate(x);
  const double u = basis.to_local(cell, x);
  double s = 0.0;
  for (std::size_t j = 0; j < p; ++j) s += coeffs[cell * p + j] * basis.eval_local(cell, j, u);
  return s;
}

// Solves the empirical normal equations cell by cell; disjoint supports make
// the system block diagonal with (r+1) x (r+1) blocks. Cells with no sample
// points (or a singular block) are flagged and their coefficients imputed
// from the projection so the risks stay finite; such trials are reported as
// degenerate, not aborted. For degree 0 the solve reduces to per-cell sample
// means.
inline FitResult fit_least_squares(const Dataset& data, const OrthonormalBasis& basis,
                                   const std::vector<double>& projection) {
  const std::size_t n = data.size();
  if (n == 0) throw std::invalid_argument("fit_least_squares: dataset is empty");
  const std::size_t p = basis.funcs_per_cell();
  const std::size_t m = basis.cell_count();

  std::vector<double> gram(m * p * p, 0.0);
  std::vector<double> rhs(m * p, 0.0);
  std::vector<std::size_t> counts(m, 0);
  double phi[8];
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t cell = basis.eval_cell(data.x[i], std::span<double>(phi, p));
    ++counts[cell];
    double* g = gram.data() + cell * p * p;
    double* b = rhs.data() + cell * p;
    for (std::size_t j = 0; j < p; ++j) {
      for (std::size_t k = j; k < p; ++k) g[j * p + k] += phi[j] * phi[k];
      b[j] += data.y[i] * phi[j];
    }
  }

  FitResult fit;
  fit.coeff_projection = projection;
  fit.coeff_estimator = projection;  // imputation default for bad cells

  // Row sums of the empirical Gram perturbation (P_n - P)(phi_j phi_k); the
  // exact Gram is the identity, and cross-cell entries vanish.
  const double inv_n = 1.0 / static_cast<double>(n);
  double cond = 0.0;
  for (std::size_t cell = 0; cell < m; ++cell) {
    const double* g = gram.data() + cell * p * p;
    for (std::size_t j = 0; j < p; ++j) {
      double row = 0.0;
      for (std::size_t k = 0; k < p; ++k) {
        const double entry = (k >= j ? g[j * p + k] : g[k * p + j]) * inv_n;
        row += std::abs(entry - (j == k ? 1.0 : 0.0));
      }
      cond = std::max(cond, row);
    }
  }
  fit.cond_estimate = cond;

  std::vector<double> block(p * p), sol(p);
  for (std::size_t cell = 0; cell < m; ++cell) {
    if (counts[cell] == 0) {
      fit.degenerate_cells.push_back(cell);
      continue;
    }
    const double* g = gram.data() + cell * p * p;
    for (std::size_t j = 0; j < p; ++j) {
      for (std::size_t k = 0; k < p; ++k) {
        block[j * p + k] = (k >= j ? g[j * p + k] : g[k * p + j]);
      }
    }
    if (!detail::cholesky(block, p)) {
      fit.degenerate_cells.push_back(cell);
      continue;
    }
    for (std::size_t j = 0; j < p; ++j) sol[j] = rhs[cell * p + j];
    detail::cholesky_solve(block, p, sol);
    for (std::size_t j = 0; j < p; ++j) fit.coeff_estimator[cell * p + j] = sol[j];
  }

  fit.degenerate = !fit.degenerate_cells.empty() || cond > kGramPerturbationLimit;
  return fit;
}

// ||s_n - s_M||_inf, exact: per cell the difference is a polynomial of degree
// <= 4 in the scaled variable, maximized through the closed-form critical
// points of its derivative.
inline double sup_norm_distance(const FitResult& fit, const OrthonormalBasis& basis) {
  const std::size_t p = basis.funcs_per_cell();
  double best = 0.0;
  std::vector<double> diff(p);
  for (std::size_t cell = 0; cell < basis.cell_count(); ++cell) {
    std::fill(diff.begin(), diff.end(), 0.0);
    for (std::size_t j = 0; j < p; ++j) {
      const double delta =
          fit.coeff_estimator[cell * p + j] - fit.coeff_projection[cell * p + j];
      const auto cj = basis.coeffs(cell, j);
      for (std::size_t c = 0; c < p; ++c) diff[c] += delta * cj[c];
    }
    best = std::max(best, poly_abs_max_on(diff, 0.0, 1.0));
  }
  return best;
}

}  // namespace exrisk
