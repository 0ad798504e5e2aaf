#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

namespace exrisk {

// Gauss-Legendre nodes and weights on [-1, 1].
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

inline constexpr int kMaxQuadratureOrder = 24;

namespace detail {

inline QuadratureRule make_gauss_legendre(int n) {
  QuadratureRule rule;
  rule.nodes.assign(n, 0.0);
  rule.weights.assign(n, 0.0);
  const int m = (n + 1) / 2;
  for (int i = 1; i <= m; ++i) {
    // Newton iteration on the Legendre recurrence, seeded by the Chebyshev
    // approximation of the i-th root.
    double z = std::cos(std::numbers::pi * (i - 0.25) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p1 = 1.0, p2 = 0.0;
      for (int j = 1; j <= n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
      }
      pp = n * (z * p1 - p2) / (z * z - 1.0);
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) <= 1e-15) break;
    }
    rule.nodes[i - 1] = -z;
    rule.nodes[n - i] = z;
    rule.weights[i - 1] = 2.0 / ((1.0 - z * z) * pp * pp);
    rule.weights[n - i] = rule.weights[i - 1];
  }
  return rule;
}

}  // namespace detail

// Rule of the given order, exact for polynomials of degree <= 2*order - 1.
inline const QuadratureRule& gauss_legendre(int order) {
  static const std::array<QuadratureRule, kMaxQuadratureOrder + 1> table = [] {
    std::array<QuadratureRule, kMaxQuadratureOrder + 1> t;
    for (int n = 1; n <= kMaxQuadratureOrder; ++n) t[n] = detail::make_gauss_legendre(n);
    return t;
  }();
  if (order < 1 || order > kMaxQuadratureOrder) {
    throw std::invalid_argument("gauss_legendre: order out of range");
  }
  return table[static_cast<std::size_t>(order)];
}

template <class F>
double gl_integrate(F&& f, double a, double b, int order) {
  const QuadratureRule& rule = gauss_legendre(order);
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  double sum = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    sum += rule.weights[i] * f(mid + half * rule.nodes[i]);
  }
  return sum * half;
}

// Composite rule over consecutive pairs of sorted breakpoints.
template <class F>
double gl_integrate_composite(F&& f, std::span<const double> breakpoints, int order) {
  double sum = 0.0;
  for (std::size_t k = 0; k + 1 < breakpoints.size(); ++k) {
    sum += gl_integrate(f, breakpoints[k], breakpoints[k + 1], order);
  }
  return sum;
}

// Sorted union of breakpoint sequences restricted to [lo, hi]; lo and hi are
// always present and near-duplicates collapse. A piecewise-polynomial
// integrand is a plain polynomial on every returned subinterval.
inline std::vector<double> merge_breakpoints(
    double lo, double hi, std::initializer_list<std::span<const double>> sequences) {
  std::vector<double> pts{lo, hi};
  for (const auto& seq : sequences) {
    for (double t : seq) {
      if (t > lo && t < hi) pts.push_back(t);
    }
  }
  std::sort(pts.begin(), pts.end());
  std::vector<double> out;
  for (double t : pts) {
    if (out.empty() || t - out.back() > 1e-15) out.push_back(t);
  }
  if (out.size() < 2) out = {lo, hi};
  return out;
}

}  // namespace exrisk
