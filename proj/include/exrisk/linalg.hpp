#pragma once

#include <cmath>
#include <cstddef>
#include <span>

namespace exrisk::detail {

// In-place Cholesky of a dense symmetric positive definite matrix, row-major.
// Only the lower triangle of the result is meaningful. Returns false when a
// pivot falls below rel_tol times the largest diagonal entry.
inline bool cholesky(std::span<double> a, std::size_t n, double rel_tol = 1e-13) {
  double max_diag = 0.0;
  for (std::size_t i = 0; i < n; ++i) max_diag = std::max(max_diag, a[i * n + i]);
  const double floor = rel_tol * max_diag;
  for (std::size_t j = 0; j < n; ++j) {
    double d = a[j * n + j];
    for (std::size_t k = 0; k < j; ++k) d -= a[j * n + k] * a[j * n + k];
    if (!(d > floor) || !std::isfinite(d)) return false;
    const double ljj = std::sqrt(d);
    a[j * n + j] = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a[i * n + j];
      for (std::size_t k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
      a[i * n + j] = s / ljj;
    }
  }
  return true;
}

// Solves L L^T x = b in place, with L the Cholesky factor above.
inline void cholesky_solve(std::span<const double> l, std::size_t n, std::span<double> b) {
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= l[i * n + k] * b[k];
    b[i] = s / l[i * n + i];
  }
  for (std::size_t ii = n; ii-- > 0;) {
    double s = b[ii];
    for (std::size_t k = ii + 1; k < n; ++k) s -= l[k * n + ii] * b[k];
    b[ii] = s / l[ii * n + ii];
  }
}

// inv <- L^{-1} (lower triangular), row-major, from the Cholesky factor.
inline void lower_invert(std::span<const double> l, std::size_t n, std::span<double> inv) {
  for (std::size_t i = 0; i < n * n; ++i) inv[i] = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    inv[j * n + j] = 1.0 / l[j * n + j];
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = 0.0;
      for (std::size_t k = j; k < i; ++k) s += l[i * n + k] * inv[k * n + j];
      inv[i * n + j] = -s / l[i * n + i];
    }
  }
}

}  // namespace exrisk::detail
