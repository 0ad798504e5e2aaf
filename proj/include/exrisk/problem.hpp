#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "exrisk/errors.hpp"
#include "exrisk/polynomial.hpp"
#include "exrisk/quadrature.hpp"
#include "exrisk/rng.hpp"

namespace exrisk {

// Highest polynomial degree supported anywhere (targets, models). Extrema of
// such functions have closed-form critical points, which the sup-norm
// computations rely on.
inline constexpr int kMaxDegree = 4;

namespace detail {

// Index of the half-open interval [t_k, t_{k+1}) containing x; the last
// interval is closed at the right endpoint.
inline std::size_t locate_interval(std::span<const double> breakpoints, double x) {
  const auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), x);
  const std::size_t idx = static_cast<std::size_t>(it - breakpoints.begin());
  if (idx == 0) return 0;
  return std::min(idx - 1, breakpoints.size() - 2);
}

inline void check_unit_breakpoints(const std::vector<double>& t, const char* what) {
  if (t.size() < 2 || t.front() != 0.0 || t.back() != 1.0) {
    throw ConfigError(std::string(what) + ": breakpoints must start at 0 and end at 1");
  }
  for (std::size_t i = 0; i + 1 < t.size(); ++i) {
    if (!(t[i] < t[i + 1])) {
      throw ConfigError(std::string(what) + ": breakpoints must be strictly increasing");
    }
  }
}

}  // namespace detail

// Piecewise polynomial on [0, 1): one coefficient list per piece, in global
// x. Pieces are half-open, the last one closed at 1.
class PiecewisePolynomial {
 public:
  PiecewisePolynomial() : breakpoints_{0.0, 1.0}, pieces_{{0.0}} {}

  PiecewisePolynomial(std::vector<double> breakpoints, std::vector<std::vector<double>> pieces)
      : breakpoints_(std::move(breakpoints)), pieces_(std::move(pieces)) {
    detail::check_unit_breakpoints(breakpoints_, "piecewise polynomial");
    if (pieces_.size() + 1 != breakpoints_.size()) {
      throw ConfigError("piecewise polynomial: need one coefficient list per piece");
    }
    for (auto& c : pieces_) {
      if (c.empty()) c = {0.0};
      if (c.size() > static_cast<std::size_t>(kMaxDegree) + 1) {
        throw ConfigError("piecewise polynomial: degree above 4 is unsupported");
      }
    }
  }

  static PiecewisePolynomial constant(double c) {
    return PiecewisePolynomial({0.0, 1.0}, {{c}});
  }

  static PiecewisePolynomial single(std::vector<double> coeffs) {
    return PiecewisePolynomial({0.0, 1.0}, {std::move(coeffs)});
  }

  double operator()(double x) const {
    const std::size_t k = detail::locate_interval(breakpoints_, x);
    return poly_eval(pieces_[k], x);
  }

  double sup_norm() const {
    double best = 0.0;
    for (std::size_t k = 0; k < pieces_.size(); ++k) {
      best = std::max(best, poly_abs_max_on(pieces_[k], breakpoints_[k], breakpoints_[k + 1]));
    }
    return best;
  }

  int max_degree() const {
    std::size_t d = 0;
    for (const auto& c : pieces_) d = std::max(d, detail::effective_degree(c));
    return static_cast<int>(d);
  }

  const std::vector<double>& breakpoints() const { return breakpoints_; }
  std::size_t piece_count() const { return pieces_.size(); }
  std::span<const double> piece(std::size_t k) const { return pieces_[k]; }

 private:
  std::vector<double> breakpoints_;
  std::vector<std::vector<double>> pieces_;
};

enum class FunctionFamily { kConstant, kUniform, kPiecewiseConstant, kPolynomial };

inline std::string family_name(FunctionFamily f) {
  switch (f) {
    case FunctionFamily::kConstant: return "constant";
    case FunctionFamily::kUniform: return "uniform";
    case FunctionFamily::kPiecewiseConstant: return "piecewise_constant";
    case FunctionFamily::kPolynomial: return "polynomial";
  }
  return "?";
}

// Design density f on [0, 1]: uniform, piecewise constant or polynomial of
// degree <= 2. Always normalized to integrate to 1 and bounded away from
// zero; sampling is by exact inverse CDF.
class DesignDensity {
 public:
  static DesignDensity uniform() {
    DesignDensity d;
    d.family_ = FunctionFamily::kUniform;
    d.breakpoints_ = {0.0, 1.0};
    d.values_ = {1.0};
    d.cdf_at_breaks_ = {0.0, 1.0};
    d.min_ = d.max_ = 1.0;
    return d;
  }

  static DesignDensity piecewise_constant(std::vector<double> breakpoints,
                                          std::vector<double> weights) {
    detail::check_unit_breakpoints(breakpoints, "design density");
    if (weights.size() + 1 != breakpoints.size()) {
      throw ConfigError("design density: need one weight per piece");
    }
    double total = 0.0;
    for (std::size_t k = 0; k < weights.size(); ++k) {
      if (!(weights[k] > 0.0)) {
        throw ConfigError("design density: must stay positive on [0,1] (c_min > 0)");
      }
      total += weights[k] * (breakpoints[k + 1] - breakpoints[k]);
    }
    DesignDensity d;
    d.family_ = FunctionFamily::kPiecewiseConstant;
    d.breakpoints_ = std::move(breakpoints);
    d.values_ = std::move(weights);
    for (double& w : d.values_) w /= total;
    d.cdf_at_breaks_.assign(d.breakpoints_.size(), 0.0);
    for (std::size_t k = 0; k < d.values_.size(); ++k) {
      d.cdf_at_breaks_[k + 1] =
          d.cdf_at_breaks_[k] + d.values_[k] * (d.breakpoints_[k + 1] - d.breakpoints_[k]);
    }
    d.cdf_at_breaks_.back() = 1.0;
    d.min_ = *std::min_element(d.values_.begin(), d.values_.end());
    d.max_ = *std::max_element(d.values_.begin(), d.values_.end());
    return d;
  }

  static DesignDensity polynomial(std::vector<double> coeffs) {
    if (coeffs.empty() || coeffs.size() > 3) {
      throw ConfigError("design density: polynomial family supports degree <= 2");
    }
    coeffs.resize(3, 0.0);
    const double integral = coeffs[0] + coeffs[1] / 2.0 + coeffs[2] / 3.0;
    if (!(integral > 0.0)) {
      throw ConfigError("design density: polynomial must have positive mass");
    }
    for (double& c : coeffs) c /= integral;
    DesignDensity d;
    d.family_ = FunctionFamily::kPolynomial;
    d.breakpoints_ = {0.0, 1.0};
    d.values_ = std::move(coeffs);
    d.min_ = -poly_max_on(negated(d.values_), 0.0, 1.0);
    d.max_ = poly_max_on(d.values_, 0.0, 1.0);
    if (!(d.min_ > 0.0)) {
      throw ConfigError("design density: must stay positive on [0,1] (c_min > 0)");
    }
    d.cdf_at_breaks_ = {0.0, 1.0};
    return d;
  }

  double operator()(double x) const {
    switch (family_) {
      case FunctionFamily::kUniform: return 1.0;
      case FunctionFamily::kPiecewiseConstant:
        return values_[detail::locate_interval(breakpoints_, x)];
      default: return poly_eval(values_, x);
    }
  }

  double cdf(double x) const {
    x = std::clamp(x, 0.0, 1.0);
    switch (family_) {
      case FunctionFamily::kUniform: return x;
      case FunctionFamily::kPiecewiseConstant: {
        const std::size_t k = detail::locate_interval(breakpoints_, x);
        return cdf_at_breaks_[k] + values_[k] * (x - breakpoints_[k]);
      }
      default:
        return x * (values_[0] + x * (values_[1] / 2.0 + x * values_[2] / 3.0));
    }
  }

  // Inverse CDF, exact per family: identity, piecewise-linear inversion, or
  // the closed-form cubic root (Newton-polished). Maps [0,1) into [0,1).
  double quantile(double u) const {
    double x = 0.0;
    switch (family_) {
      case FunctionFamily::kUniform:
        x = u;
        break;
      case FunctionFamily::kPiecewiseConstant: {
        const std::size_t k = detail::locate_interval(cdf_at_breaks_, u);
        x = breakpoints_[k] + (u - cdf_at_breaks_[k]) / values_[k];
        break;
      }
      default: {
        const std::vector<double> cubic{-u, values_[0], values_[1] / 2.0, values_[2] / 3.0};
        const auto roots = poly_real_roots(cubic, 0.0, 1.0);
        x = roots.empty() ? u : roots.front();
        for (double r : roots) {
          if (std::abs(cdf(r) - u) < std::abs(cdf(x) - u)) x = r;
        }
        for (int it = 0; it < 2; ++it) {
          const double fx = (*this)(x);
          if (fx > 0.0) x -= (cdf(x) - u) / fx;
          x = std::clamp(x, 0.0, 1.0);
        }
        break;
      }
    }
    x = std::clamp(x, 0.0, 1.0);
    if (x >= 1.0) x = std::nextafter(1.0, 0.0);
    return x;
  }

  double min_value() const { return min_; }
  double max_value() const { return max_; }
  FunctionFamily family() const { return family_; }
  const std::vector<double>& breakpoints() const { return breakpoints_; }
  const std::vector<double>& values() const { return values_; }
  int degree() const { return family_ == FunctionFamily::kPolynomial ? 2 : 0; }

 private:
  static std::vector<double> negated(const std::vector<double>& c) {
    std::vector<double> n(c);
    for (double& v : n) v = -v;
    return n;
  }

  FunctionFamily family_ = FunctionFamily::kUniform;
  std::vector<double> breakpoints_;
  std::vector<double> values_;       // piece weights or polynomial coefficients
  std::vector<double> cdf_at_breaks_;
  double min_ = 1.0;
  double max_ = 1.0;
};

// Noise level sigma >= 0 on [0, 1]: constant, piecewise constant or
// polynomial of degree <= 2. Exact min/max per family.
class NoiseLevel {
 public:
  static NoiseLevel constant(double sigma) {
    if (!(sigma >= 0.0)) throw ConfigError("noise level: sigma must be nonnegative");
    NoiseLevel s;
    s.family_ = FunctionFamily::kConstant;
    s.breakpoints_ = {0.0, 1.0};
    s.values_ = {sigma};
    s.min_ = s.max_ = sigma;
    return s;
  }

  static NoiseLevel piecewise_constant(std::vector<double> breakpoints,
                                       std::vector<double> values) {
    detail::check_unit_breakpoints(breakpoints, "noise level");
    if (values.size() + 1 != breakpoints.size()) {
      throw ConfigError("noise level: need one value per piece");
    }
    for (double v : values) {
      if (!(v >= 0.0)) throw ConfigError("noise level: sigma must be nonnegative");
    }
    NoiseLevel s;
    s.family_ = FunctionFamily::kPiecewiseConstant;
    s.breakpoints_ = std::move(breakpoints);
    s.values_ = std::move(values);
    s.min_ = *std::min_element(s.values_.begin(), s.values_.end());
    s.max_ = *std::max_element(s.values_.begin(), s.values_.end());
    return s;
  }

  static NoiseLevel polynomial(std::vector<double> coeffs) {
    if (coeffs.empty() || coeffs.size() > 3) {
      throw ConfigError("noise level: polynomial family supports degree <= 2");
    }
    coeffs.resize(3, 0.0);
    NoiseLevel s;
    s.family_ = FunctionFamily::kPolynomial;
    s.breakpoints_ = {0.0, 1.0};
    s.values_ = std::move(coeffs);
    std::vector<double> neg(s.values_);
    for (double& v : neg) v = -v;
    s.min_ = -poly_max_on(neg, 0.0, 1.0);
    s.max_ = poly_max_on(s.values_, 0.0, 1.0);
    if (!(s.min_ >= 0.0)) throw ConfigError("noise level: sigma must be nonnegative on [0,1]");
    return s;
  }

  double operator()(double x) const {
    switch (family_) {
      case FunctionFamily::kConstant: return values_[0];
      case FunctionFamily::kPiecewiseConstant:
        return values_[detail::locate_interval(breakpoints_, x)];
      default: return poly_eval(values_, x);
    }
  }

  double min_value() const { return min_; }
  double max_value() const { return max_; }
  bool is_constant() const { return family_ == FunctionFamily::kConstant || min_ == max_; }
  FunctionFamily family() const { return family_; }
  const std::vector<double>& breakpoints() const { return breakpoints_; }
  const std::vector<double>& values() const { return values_; }

 private:
  FunctionFamily family_ = FunctionFamily::kConstant;
  std::vector<double> breakpoints_;
  std::vector<double> values_;
  double min_ = 0.0;
  double max_ = 0.0;
};

// Distribution of the multiplicative noise epsilon: mean 0, variance 1 and
// bounded support, so the response envelope |Y| <= A can hold exactly.
enum class NoiseShape { kRademacher, kUniform };

inline double noise_support_radius(NoiseShape shape) {
  return shape == NoiseShape::kRademacher ? 1.0 : std::numbers::sqrt3;
}

inline double draw_noise(NoiseShape shape, Rng& rng) {
  const double u = rng.uniform01();
  if (shape == NoiseShape::kRademacher) return u < 0.5 ? -1.0 : 1.0;
  return (2.0 * u - 1.0) * std::numbers::sqrt3;
}

inline std::string noise_shape_name(NoiseShape s) {
  return s == NoiseShape::kRademacher ? "rademacher" : "uniform";
}

// Ground truth of a regression experiment: Y = s*(X) + sigma(X) eps with X
// drawn from the design density. Everything downstream (projections, risks,
// complexities) integrates against these exact descriptions. Values are
// immutable after construction and safe to share across threads.
class RegressionProblem {
 public:
  RegressionProblem()
      : RegressionProblem(PiecewisePolynomial(), NoiseLevel::constant(1.0),
                          DesignDensity::uniform(), NoiseShape::kRademacher, 1.0) {}

  RegressionProblem(PiecewisePolynomial target, NoiseLevel noise_level, DesignDensity density,
                    NoiseShape noise_shape, double bound_a)
      : target_(std::move(target)),
        noise_level_(std::move(noise_level)),
        density_(std::move(density)),
        noise_shape_(noise_shape),
        bound_a_(bound_a),
        target_sup_(target_.sup_norm()) {
    if (!(bound_a_ > 0.0)) throw ConfigError("problem: bound_a must be positive");
    const double envelope =
        target_sup_ + noise_level_.max_value() * noise_support_radius(noise_shape_);
    if (envelope > bound_a_ * (1.0 + 1e-12) + 1e-12) {
      throw ConfigError("problem: |Y| can exceed bound_a (need sup|s*| + sigma_max * "
                        "support radius <= bound_a, got " +
                        std::to_string(envelope) + " > " + std::to_string(bound_a_) + ")");
    }
  }

  const PiecewisePolynomial& target() const { return target_; }
  const NoiseLevel& noise_level() const { return noise_level_; }
  const DesignDensity& design_density() const { return density_; }
  NoiseShape noise_shape() const { return noise_shape_; }
  double bound_a() const { return bound_a_; }
  double target_sup_norm() const { return target_sup_; }
  double noise_floor() const { return noise_level_.min_value(); }
  double noise_ceiling() const { return noise_level_.max_value(); }

 private:
  PiecewisePolynomial target_;
  NoiseLevel noise_level_;
  DesignDensity density_;
  NoiseShape noise_shape_;
  double bound_a_;
  double target_sup_;
};

// An i.i.d. sample, in draw order.
struct Dataset {
  std::vector<double> x;
  std::vector<double> y;
  std::uint64_t seed = 0;

  std::size_t size() const { return x.size(); }
};

// Pure function of (problem, n, seed): identical inputs give bit-identical
// datasets. Two uniform draws per observation, in a fixed order.
inline Dataset sample_dataset(const RegressionProblem& problem, std::size_t n,
                              std::uint64_t seed) {
  Dataset data;
  data.seed = seed;
  data.x.resize(n);
  data.y.resize(n);
  Rng rng(seed);
  const auto& density = problem.design_density();
  const auto& target = problem.target();
  const auto& sigma = problem.noise_level();
  for (std::size_t i = 0; i < n; ++i) {
    const double xi = density.quantile(rng.uniform01());
    const double eps = draw_noise(problem.noise_shape(), rng);
    data.x[i] = xi;
    data.y[i] = target(xi) + sigma(xi) * eps;
  }
  return data;
}

}  // namespace exrisk
