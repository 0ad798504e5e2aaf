#include "exrisk/polynomial.hpp"

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "exrisk/rng.hpp"
#include "test_util.hpp"

namespace {

using exrisk::poly_abs_max_on;
using exrisk::poly_derivative;
using exrisk::poly_eval;
using exrisk::poly_max_on;
using exrisk::poly_real_roots;

TEST(Polynomial, EvalAndDerivative) {
  const std::vector<double> c{1.0, -2.0, 3.0};  // 1 - 2x + 3x^2
  EXPECT_DOUBLE_EQ(poly_eval(c, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(poly_eval(c, 2.0), 9.0);
  const auto d = poly_derivative(c);
  ASSERT_EQ(d.size(), 2u);
  EXPECT_DOUBLE_EQ(poly_eval(d, 2.0), 10.0);
}

TEST(Polynomial, KnownCubicRoots) {
  // (x - 0.2)(x - 0.5)(x - 0.9) = x^3 - 1.6 x^2 + 0.73 x - 0.09
  const std::vector<double> c{-0.09, 0.73, -1.6, 1.0};
  const auto roots = poly_real_roots(c, 0.0, 1.0);
  ASSERT_EQ(roots.size(), 3u);
  EXPECT_NEAR(roots[0], 0.2, 1e-10);
  EXPECT_NEAR(roots[1], 0.5, 1e-10);
  EXPECT_NEAR(roots[2], 0.9, 1e-10);
}

TEST(Polynomial, QuadraticWithoutRealRoots) {
  const std::vector<double> c{1.0, 0.0, 1.0};  // 1 + x^2
  EXPECT_TRUE(poly_real_roots(c, -10.0, 10.0).empty());
}

TEST(Polynomial, RepeatedRoot) {
  // (x - 0.5)^2 (x + 1) = x^3 - 0.75 x + 0.25
  const std::vector<double> c{0.25, -0.75, 0.0, 1.0};
  const auto roots = poly_real_roots(c, 0.0, 1.0);
  ASSERT_FALSE(roots.empty());
  EXPECT_NEAR(roots.back(), 0.5, 1e-7);
}

TEST(Polynomial, RandomCubicsRootsSatisfyEquation) {
  exrisk::Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> c(4);
    for (double& v : c) v = testutil::uniform_in(rng, -2.0, 2.0);
    double scale = 0.0;
    for (double v : c) scale = std::max(scale, std::abs(v));
    if (scale < 1e-3) continue;
    const auto roots = poly_real_roots(c, -1.0, 2.0);
    for (double r : roots) {
      EXPECT_LT(std::abs(poly_eval(c, r)), 1e-7 * (scale + 1.0)) << "trial " << trial;
    }
  }
}

TEST(Polynomial, AbsMaxMatchesDenseGrid) {
  exrisk::Rng rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> c(5);
    for (double& v : c) v = testutil::uniform_in(rng, -3.0, 3.0);
    const double exact = poly_abs_max_on(c, 0.0, 1.0);
    const double grid = testutil::dense_abs_max([&](double x) { return poly_eval(c, x); }, 0.0, 1.0);
    EXPECT_GE(exact + 1e-9, grid);
    EXPECT_LE(exact, grid + 1e-5);
  }
}

TEST(Polynomial, SignedMax) {
  const std::vector<double> c{0.0, -1.0};  // -x on [0,1]: max 0 at x=0
  EXPECT_DOUBLE_EQ(poly_max_on(c, 0.0, 1.0), 0.0);
  EXPECT_DOUBLE_EQ(poly_abs_max_on(c, 0.0, 1.0), 1.0);
}

TEST(Polynomial, DegreeAboveThreeThrows) {
  const std::vector<double> c{1.0, 0.0, 0.0, 0.0, 1.0};
  EXPECT_THROW(poly_real_roots(c, 0.0, 1.0), std::invalid_argument);
}

TEST(Polynomial, Antiderivative) {
  const std::vector<double> c{2.0, 6.0};
  const auto a = exrisk::poly_antiderivative(c);
  EXPECT_DOUBLE_EQ(poly_eval(a, 1.0) - poly_eval(a, 0.0), 5.0);
}

}  // namespace
