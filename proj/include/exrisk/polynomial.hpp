#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

namespace exrisk {

// Dense polynomials with coefficients in ascending powers:
// c[0] + c[1] x + c[2] x^2 + ...

inline double poly_eval(std::span<const double> c, double x) {
  double v = 0.0;
  for (std::size_t i = c.size(); i-- > 0;) v = v * x + c[i];
  return v;
}

inline std::vector<double> poly_derivative(std::span<const double> c) {
  if (c.size() <= 1) return {};
  std::vector<double> d(c.size() - 1);
  for (std::size_t i = 1; i < c.size(); ++i) d[i - 1] = c[i] * static_cast<double>(i);
  return d;
}

inline std::vector<double> poly_antiderivative(std::span<const double> c) {
  std::vector<double> a(c.size() + 1, 0.0);
  for (std::size_t i = 0; i < c.size(); ++i) a[i + 1] = c[i] / static_cast<double>(i + 1);
  return a;
}

namespace detail {

inline std::size_t effective_degree(std::span<const double> c) {
  double scale = 0.0;
  for (double v : c) scale = std::max(scale, std::abs(v));
  std::size_t deg = 0;
  if (scale == 0.0) return deg;
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (std::abs(c[i]) > 1e-14 * scale) deg = i;
  }
  return deg;
}

inline void newton_polish(std::span<const double> c, double& x) {
  const std::vector<double> d = poly_derivative(c);
  for (int it = 0; it < 2; ++it) {
    const double fp = poly_eval(d, x);
    if (fp == 0.0) return;
    x -= poly_eval(c, x) / fp;
  }
}

}  // namespace detail

// Real roots of a polynomial of degree <= 3 inside [lo, hi], in closed form
// (quadratic formula / Cardano-trigonometric cubic), Newton-polished. Roots
// within a small pad of the interval are clamped onto it; throws for
// effective degree above 3.
inline std::vector<double> poly_real_roots(std::span<const double> coeffs, double lo, double hi) {
  const std::size_t deg = detail::effective_degree(coeffs);
  if (deg > 3) throw std::invalid_argument("poly_real_roots: degree above 3 is unsupported");

  std::vector<double> candidates;
  if (deg == 1) {
    candidates.push_back(-coeffs[0] / coeffs[1]);
  } else if (deg == 2) {
    const double a = coeffs[2], b = coeffs[1], c = coeffs[0];
    const double disc = b * b - 4.0 * a * c;
    if (disc >= 0.0) {
      const double s = std::sqrt(disc);
      const double q = -0.5 * (b + (b >= 0.0 ? s : -s));
      candidates.push_back(q / a);
      if (q != 0.0) candidates.push_back(c / q);
      else candidates.push_back(-q / a);
    }
  } else if (deg == 3) {
    const double a = coeffs[3], b = coeffs[2], c = coeffs[1], d = coeffs[0];
    // Depressed cubic t^3 + p t + q after x = t - b/(3a).
    const double shift = -b / (3.0 * a);
    const double p = (3.0 * a * c - b * b) / (3.0 * a * a);
    const double q = (2.0 * b * b * b - 9.0 * a * b * c + 27.0 * a * a * d) / (27.0 * a * a * a);
    const double disc = 0.25 * q * q + p * p * p / 27.0;
    const double scale = std::max({std::abs(p), std::cbrt(std::abs(q)), 1e-300});
    if (disc > 1e-28 * scale * scale * scale) {
      const double s = std::sqrt(disc);
      const double t = std::cbrt(-0.5 * q + s) + std::cbrt(-0.5 * q - s);
      candidates.push_back(t + shift);
    } else if (disc < -1e-28 * scale * scale * scale) {
      // Three distinct real roots, trigonometric form.
      const double m = 2.0 * std::sqrt(-p / 3.0);
      const double arg = std::clamp(3.0 * q / (p * m), -1.0, 1.0);
      const double theta = std::acos(arg) / 3.0;
      for (int k = 0; k < 3; ++k) {
        candidates.push_back(m * std::cos(theta - 2.0 * std::numbers::pi * k / 3.0) + shift);
      }
    } else {
      // Repeated roots.
      if (std::abs(p) < 1e-14 * scale) {
        candidates.push_back(shift);  // triple root
      } else {
        candidates.push_back(3.0 * q / p + shift);
        candidates.push_back(-1.5 * q / p + shift);
      }
    }
  }

  const double pad = 1e-9 * (std::abs(hi - lo) + 1.0);
  std::vector<double> roots;
  for (double r : candidates) {
    if (!std::isfinite(r)) continue;
    detail::newton_polish(coeffs, r);
    if (r < lo - pad || r > hi + pad) continue;
    r = std::clamp(r, lo, hi);
    bool dup = false;
    for (double seen : roots) dup = dup || std::abs(seen - r) <= pad;
    if (!dup) roots.push_back(r);
  }
  std::sort(roots.begin(), roots.end());
  return roots;
}

// max_{x in [lo,hi]} p(x) for degree(p) <= 4 via endpoints and the closed-form
// critical points of p'.
inline double poly_max_on(std::span<const double> c, double lo, double hi) {
  double best = std::max(poly_eval(c, lo), poly_eval(c, hi));
  for (double r : poly_real_roots(poly_derivative(c), lo, hi)) {
    best = std::max(best, poly_eval(c, r));
  }
  return best;
}

// max_{x in [lo,hi]} |p(x)| for degree(p) <= 4.
inline double poly_abs_max_on(std::span<const double> c, double lo, double hi) {
  double best = std::max(std::abs(poly_eval(c, lo)), std::abs(poly_eval(c, hi)));
  for (double r : poly_real_roots(poly_derivative(c), lo, hi)) {
    best = std::max(best, std::abs(poly_eval(c, r)));
  }
  return best;
}

}  // namespace exrisk
