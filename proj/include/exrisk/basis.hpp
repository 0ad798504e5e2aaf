#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "exrisk/errors.hpp"
#include "exrisk/linalg.hpp"
#include "exrisk/partition.hpp"
#include "exrisk/polynomial.hpp"
#include "exrisk/problem.hpp"
#include "exrisk/quadrature.hpp"

namespace exrisk {

// Certified bound on the Gram residual of every constructed basis.
inline constexpr double kOrthTolerance = 1e-8;
// Below this design mass a cell cannot support an orthonormal function at
// working precision.
inline constexpr double kMinCellMass = 1e-12;

// Orthonormal basis of a partition model in L2 of the design law. Functions
// come in cell blocks: phi_{I,j} is a polynomial of degree j on its cell and
// zero elsewhere, stored as coefficients in the scaled cell variable
// u = (x - a) / (b - a). Flat index k = cell * (degree+1) + j. Immutable
// after construction.
class OrthonormalBasis {
 public:
  const Partition& partition() const { return partition_; }
  int degree() const { return degree_; }
  std::size_t cell_count() const { return partition_.cell_count(); }
  std::size_t funcs_per_cell() const { return static_cast<std::size_t>(degree_) + 1; }
  std::size_t dimension() const { return cell_count() * funcs_per_cell(); }

  // Coefficients of phi_{cell,j} in u, ascending powers.
  std::span<const double> coeffs(std::size_t cell, std::size_t j) const {
    const std::size_t p = funcs_per_cell();
    return std::span<const double>(coeffs_.data() + (cell * p + j) * p, p);
  }

  double to_local(std::size_t cell, double x) const {
    return (x - partition_.lower(cell)) / partition_.length(cell);
  }

  double eval_local(std::size_t cell, std::size_t j, double u) const {
    return poly_eval(coeffs(cell, j), u);
  }

  // phi_k(x) for the flat index k; zero off the owning cell.
  double eval(std::size_t k, double x) const {
    const std::size_t p = funcs_per_cell();
    const std::size_t cell = partition_.locate(x);
    if (cell != k / p) return 0.0;
    return eval_local(cell, k % p, to_local(cell, x));
  }

  // Evaluates the funcs_per_cell() functions living on x's cell into out and
  // returns the cell index. All other basis functions vanish at x.
  std::size_t eval_cell(double x, std::span<double> out) const {
    const std::size_t cell = partition_.locate(x);
    const double u = to_local(cell, x);
    for (std::size_t j = 0; j < funcs_per_cell(); ++j) out[j] = eval_local(cell, j, u);
    return cell;
  }

  // Measured localization constant: the best r with
  // ||sum beta_k phi_k||_inf <= r sqrt(D) |beta|_inf over all beta.
  double localization_const() const { return localization_const_; }
  const std::vector<double>& sup_norms() const { return sup_norms_; }
  const std::vector<double>& masses() const { return masses_; }

  // Copy with one function rescaled; breaks orthonormality on purpose, for
  // residual diagnostics.
  OrthonormalBasis scaled(std::size_t k, double factor) const {
    OrthonormalBasis b(*this);
    const std::size_t p = funcs_per_cell();
    for (std::size_t c = 0; c < p; ++c) b.coeffs_[k * p + c] *= factor;
    b.finalize_metadata();
    return b;
  }

  // Rebuilds a basis from raw cell-major coefficients (e.g. after an
  // in-cell-block rotation). Orthonormality is the caller's responsibility;
  // gram_residual() certifies it.
  static OrthonormalBasis from_coefficients(Partition partition, int degree,
                                            std::vector<double> flat_coeffs,
                                            const RegressionProblem& problem) {
    OrthonormalBasis b;
    b.partition_ = std::move(partition);
    b.degree_ = degree;
    b.coeffs_ = std::move(flat_coeffs);
    const std::size_t p = b.funcs_per_cell();
    if (b.coeffs_.size() != b.cell_count() * p * p) {
      throw ConfigError("basis: coefficient block size mismatch");
    }
    b.masses_ = cell_masses(b.partition_, problem);
    b.finalize_metadata();
    return b;
  }

 private:
  friend OrthonormalBasis build_histogram_basis(const Partition&, const RegressionProblem&);
  friend OrthonormalBasis build_poly_basis(const Partition&, const RegressionProblem&, int);

  OrthonormalBasis() = default;

  void finalize_metadata() {
    const std::size_t p = funcs_per_cell();
    const std::size_t m = cell_count();
    sup_norms_.assign(m * p, 0.0);
    double amplitude = 0.0;  // max_x sum_j |phi_{I(x),j}(x)|
    std::vector<double> combo(p);
    for (std::size_t cell = 0; cell < m; ++cell) {
      for (std::size_t j = 0; j < p; ++j) {
        sup_norms_[cell * p + j] = poly_abs_max_on(coeffs(cell, j), 0.0, 1.0);
      }
      // Disjoint supports make the localization bound per cell the exact
      // maximum of sum_j s_j phi_j over sign patterns s.
      for (std::size_t bits = 0; bits < (std::size_t{1} << p); ++bits) {
        std::fill(combo.begin(), combo.end(), 0.0);
        for (std::size_t j = 0; j < p; ++j) {
          const double sign = (bits >> j) & 1 ? -1.0 : 1.0;
          const auto cj = coeffs(cell, j);
          for (std::size_t c = 0; c < p; ++c) combo[c] += sign * cj[c];
        }
        amplitude = std::max(amplitude, poly_max_on(combo, 0.0, 1.0));
      }
    }
    localization_const_ = amplitude / std::sqrt(static_cast<double>(dimension()));
  }

  Partition partition_ = Partition::equal_width(1);
  int degree_ = 0;
  std::vector<double> coeffs_;
  std::vector<double> sup_norms_;
  std::vector<double> masses_;
  double localization_const_ = 0.0;
};

// Max |<phi_j, phi_k> - delta_jk| over all pairs, by quadrature against the
// design density. Cross-cell products vanish identically (disjoint supports),
// so only in-cell pairs contribute.
inline double gram_residual(const OrthonormalBasis& basis, const RegressionProblem& problem) {
  const DesignDensity& f = problem.design_density();
  const std::size_t p = basis.funcs_per_cell();
  const int order = basis.degree() + 6;
  double residual = 0.0;
  for (std::size_t cell = 0; cell < basis.cell_count(); ++cell) {
    const double a = basis.partition().lower(cell);
    const double b = basis.partition().upper(cell);
    const auto pts = merge_breakpoints(a, b, {f.breakpoints()});
    for (std::size_t j = 0; j < p; ++j) {
      for (std::size_t k = j; k < p; ++k) {
        const double ip = gl_integrate_composite(
            [&](double x) {
              const double u = basis.to_local(cell, x);
              return basis.eval_local(cell, j, u) * basis.eval_local(cell, k, u) * f(x);
            },
            pts, order);
        residual = std::max(residual, std::abs(ip - (j == k ? 1.0 : 0.0)));
      }
    }
  }
  return residual;
}

// Histogram basis: the indicator of each cell scaled by the inverse root of
// its design mass.
inline OrthonormalBasis build_histogram_basis(const Partition& partition,
                                              const RegressionProblem& problem) {
  OrthonormalBasis basis;
  basis.partition_ = partition;
  basis.degree_ = 0;
  basis.masses_ = cell_masses(partition, problem);
  basis.coeffs_.resize(partition.cell_count());
  for (std::size_t cell = 0; cell < partition.cell_count(); ++cell) {
    if (!(basis.masses_[cell] > kMinCellMass)) {
      throw DegeneratePartitionError("histogram basis: cell " + std::to_string(cell) +
                                     " carries no design mass");
    }
    basis.coeffs_[cell] = 1.0 / std::sqrt(basis.masses_[cell]);
  }
  basis.finalize_metadata();
  return basis;
}

// Piecewise-polynomial basis of maximal degree r: per cell, the scaled
// monomials 1, u, ..., u^r are orthonormalized against the weighted inner
// product int_I g h f via Cholesky of their Gram matrix, then the Gram of the
// result is re-measured and corrected once. Signs are fixed by a positive
// leading coefficient. Degrees above 4 push the monomial Gram conditioning
// past the certificate at double precision and are rejected.
inline OrthonormalBasis build_poly_basis(const Partition& partition,
                                         const RegressionProblem& problem, int degree) {
  if (degree < 0 || degree > kMaxDegree) {
    throw ConfigError("poly basis: degree must be between 0 and 4");
  }
  const DesignDensity& f = problem.design_density();
  const std::size_t p = static_cast<std::size_t>(degree) + 1;
  const std::size_t m = partition.cell_count();

  OrthonormalBasis basis;
  basis.partition_ = partition;
  basis.degree_ = degree;
  basis.masses_ = cell_masses(partition, problem);
  basis.coeffs_.assign(m * p * p, 0.0);

  std::vector<double> gram(p * p), lower_inv(p * p), coeff(p * p), next(p * p);
  for (std::size_t cell = 0; cell < m; ++cell) {
    if (!(basis.masses_[cell] > kMinCellMass)) {
      throw ConditioningError("poly basis: cell " + std::to_string(cell) +
                              " is too thin to orthonormalize against the design law");
    }
    const double a = partition.lower(cell);
    const double len = partition.length(cell);
    const auto pts = merge_breakpoints(a, partition.upper(cell), {f.breakpoints()});

    // Gram of the scaled monomials. The scaling keeps conditioning
    // independent of the cell length.
    for (std::size_t j = 0; j < p; ++j) {
      for (std::size_t k = j; k < p; ++k) {
        const double ip = gl_integrate_composite(
            [&](double x) {
              const double u = (x - a) / len;
              double pw = 1.0;
              for (std::size_t e = 0; e < j + k; ++e) pw *= u;
              return pw * f(x);
            },
            pts, degree + 4);
        gram[j * p + k] = gram[k * p + j] = ip;
      }
    }
    if (!detail::cholesky(gram, p)) {
      throw ConditioningError("poly basis: monomial Gram matrix is numerically singular on cell " +
                              std::to_string(cell));
    }
    detail::lower_invert(gram, p, lower_inv);
    std::copy(lower_inv.begin(), lower_inv.end(), coeff.begin());

    // One correction pass: re-measure the Gram of the candidate functions and
    // absorb its Cholesky factor. This removes the conditioning loss of the
    // monomial Gram from the final residual.
    for (std::size_t j = 0; j < p; ++j) {
      for (std::size_t k = j; k < p; ++k) {
        const double ip = gl_integrate_composite(
            [&](double x) {
              const double u = (x - a) / len;
              return poly_eval(std::span<const double>(coeff.data() + j * p, p), u) *
                     poly_eval(std::span<const double>(coeff.data() + k * p, p), u) * f(x);
            },
            pts, degree + 6);
        gram[j * p + k] = gram[k * p + j] = ip;
      }
    }
    if (!detail::cholesky(gram, p)) {
      throw ConditioningError("poly basis: correction Gram matrix is numerically singular on cell " +
                              std::to_string(cell));
    }
    detail::lower_invert(gram, p, lower_inv);
    for (std::size_t j = 0; j < p; ++j) {
      for (std::size_t c = 0; c < p; ++c) {
        double s = 0.0;
        for (std::size_t k = 0; k <= j; ++k) s += lower_inv[j * p + k] * coeff[k * p + c];
        next[j * p + c] = s;
      }
    }
    std::copy(next.begin(), next.end(), basis.coeffs_.begin() + static_cast<std::ptrdiff_t>(cell * p * p));
  }

  basis.finalize_metadata();
  const double residual = gram_residual(basis, problem);
  if (!(residual < kOrthTolerance)) {
    throw ConditioningError("poly basis: orthonormality certificate failed (residual " +
                            std::to_string(residual) + ")");
  }
  return basis;
}

// Unit envelope Psi_M(x): the pointwise norm of evaluation over the model's
// unit ball, sqrt((1/D) sum_k phi_k(x)^2).
inline double unit_envelope(const OrthonormalBasis& basis, double x) {
  const std::size_t cell = basis.partition().locate(x);
  const double u = basis.to_local(cell, x);
  double sumsq = 0.0;
  for (std::size_t j = 0; j < basis.funcs_per_cell(); ++j) {
    const double v = basis.eval_local(cell, j, u);
    sumsq += v * v;
  }
  return std::sqrt(sumsq / static_cast<double>(basis.dimension()));
}

}  // namespace exrisk
