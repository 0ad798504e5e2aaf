#include "exrisk/basis.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "exrisk/errors.hpp"
#include "exrisk/partition.hpp"
#include "exrisk/quadrature.hpp"
#include "test_util.hpp"

namespace {

using exrisk::build_histogram_basis;
using exrisk::build_poly_basis;
using exrisk::ConditioningError;
using exrisk::DegeneratePartitionError;
using exrisk::DesignDensity;
using exrisk::gram_residual;
using exrisk::kOrthTolerance;
using exrisk::OrthonormalBasis;
using exrisk::Partition;
using exrisk::PiecewisePolynomial;
using exrisk::regularity_report;
using exrisk::unit_envelope;
using testutil::make_problem;

TEST(Partition, LocateHalfOpenCells) {
  const Partition part({0.0, 0.25, 0.5, 1.0});
  EXPECT_EQ(part.locate(0.0), 0u);
  EXPECT_EQ(part.locate(0.25), 1u);  // breakpoints belong to the right cell
  EXPECT_EQ(part.locate(0.4999), 1u);
  EXPECT_EQ(part.locate(0.5), 2u);
  EXPECT_EQ(part.locate(1.0), 2u);   // last cell closed at 1
}

TEST(Regularity, UniformEqualCells) {
  const auto problem = make_problem();
  const auto report = regularity_report(Partition::equal_width(8), problem);
  EXPECT_NEAR(report.lower_const_p, 1.0, 1e-12);
  EXPECT_NEAR(report.upper_const_p, 1.0, 1e-12);
  EXPECT_NEAR(report.lower_const_leb, 1.0, 1e-12);
}

TEST(Regularity, UnevenCellsUniformDensity) {
  const auto problem = make_problem();
  const auto report = regularity_report(Partition({0.0, 0.5, 0.75, 1.0}), problem);
  EXPECT_NEAR(report.lower_const_p, std::sqrt(0.75), 1e-12);
  EXPECT_NEAR(report.upper_const_p, 1.5, 1e-12);
}

TEST(Regularity, PiecewiseDensityMasses) {
  const auto problem = make_problem(PiecewisePolynomial(), exrisk::NoiseLevel::constant(1.0),
                                    DesignDensity::piecewise_constant({0.0, 0.5, 1.0}, {1.5, 0.5}));
  const auto report = regularity_report(Partition({0.0, 0.5, 1.0}), problem);
  ASSERT_EQ(report.cell_masses.size(), 2u);
  EXPECT_NEAR(report.cell_masses[0], 0.75, 1e-14);
  EXPECT_NEAR(report.cell_masses[1], 0.25, 1e-14);
  EXPECT_NEAR(report.lower_const_p, std::sqrt(0.5), 1e-12);
  double total = 0.0;
  for (double m : report.cell_masses) total += m;
  EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(HistogramBasis, UniformEqualCells) {
  const auto problem = make_problem();
  const auto basis = build_histogram_basis(Partition::equal_width(4), problem);
  EXPECT_EQ(basis.dimension(), 4u);
  // Each function is mass^{-1/2} = 2 on its cell, 0 elsewhere.
  EXPECT_NEAR(basis.eval(1, 0.3), 2.0, 1e-12);
  EXPECT_DOUBLE_EQ(basis.eval(1, 0.6), 0.0);
  EXPECT_LT(gram_residual(basis, problem), 1e-12);
}

TEST(HistogramBasis, SingleCellIsConstantOne) {
  const auto problem = make_problem();
  const auto basis = build_histogram_basis(Partition::equal_width(1), problem);
  EXPECT_NEAR(basis.eval(0, 0.7), 1.0, 1e-14);
}

TEST(HistogramBasis, NonUniformDensityValuesFromMassOracle) {
  // Weights (2, 0.5) on halves normalize to density (1.6, 0.4): cell masses
  // (0.8, 0.2), so the functions take values 1/sqrt(0.8) and 1/sqrt(0.2).
  const auto problem = make_problem(PiecewisePolynomial(), exrisk::NoiseLevel::constant(1.0),
                                    DesignDensity::piecewise_constant({0.0, 0.5, 1.0}, {2.0, 0.5}));
  const auto masses = exrisk::cell_masses(Partition({0.0, 0.5, 1.0}), problem);
  ASSERT_EQ(masses.size(), 2u);
  EXPECT_NEAR(masses[0], 0.8, 1e-14);
  EXPECT_NEAR(masses[1], 0.2, 1e-14);
  const auto basis = build_histogram_basis(Partition({0.0, 0.5, 1.0}), problem);
  EXPECT_NEAR(basis.eval(0, 0.2), std::sqrt(1.25), 1e-12);
  EXPECT_NEAR(basis.eval(1, 0.7), std::sqrt(5.0), 1e-12);
  EXPECT_LT(gram_residual(basis, problem), kOrthTolerance);
}

TEST(PolyBasis, DegreeZeroMatchesHistogram) {
  exrisk::Rng rng(3);
  const auto setup = testutil::random_basis_setup(rng, 0);
  const auto hist = build_histogram_basis(setup.partition, setup.problem);
  const auto poly = build_poly_basis(setup.partition, setup.problem, 0);
  for (std::size_t cell = 0; cell < hist.cell_count(); ++cell) {
    EXPECT_NEAR(hist.coeffs(cell, 0)[0], poly.coeffs(cell, 0)[0], kOrthTolerance);
  }
}

TEST(PolyBasis, ShiftedLegendreOnUnitCell) {
  const auto problem = make_problem();
  const auto basis = build_poly_basis(Partition::equal_width(1), problem, 2);
  // Uniform weight on one cell: phi_0 = 1, phi_1 = sqrt(3)(2x-1),
  // phi_2 = sqrt(5)(6x^2-6x+1); positive leading coefficients.
  for (int g = 0; g <= 20; ++g) {
    const double x = g / 20.0;
    EXPECT_NEAR(basis.eval(0, x), 1.0, 1e-12);
    EXPECT_NEAR(basis.eval(1, x), std::numbers::sqrt3 * (2.0 * x - 1.0), 1e-12);
    EXPECT_NEAR(basis.eval(2, x), std::sqrt(5.0) * (6.0 * x * x - 6.0 * x + 1.0), 1e-11);
  }
  // Quadrature oracle for the first orthonormality relations.
  const auto ip = [&](int j, int k) {
    return exrisk::gl_integrate([&](double x) { return basis.eval(j, x) * basis.eval(k, x); },
                                0.0, 1.0, 8);
  };
  EXPECT_NEAR(ip(0, 1), 0.0, 1e-14);
  EXPECT_NEAR(ip(1, 1), 1.0, 1e-14);
  EXPECT_NEAR(ip(1, 2), 0.0, 1e-14);
  EXPECT_NEAR(ip(2, 2), 1.0, 1e-13);
}

TEST(PolyBasis, OrthonormalAcrossRandomConfigs) {
  exrisk::Rng rng(17);
  for (int trial = 0; trial < 12; ++trial) {
    const int degree = trial % 5;
    const auto setup = testutil::random_basis_setup(rng, degree);
    const auto basis = testutil::build_basis(setup);
    EXPECT_LT(gram_residual(basis, setup.problem), kOrthTolerance) << "trial " << trial;
  }
}

TEST(PolyBasis, DisjointSupports) {
  const auto problem = make_problem();
  const auto basis = build_poly_basis(Partition::equal_width(3), problem, 2);
  for (int g = 0; g <= 50; ++g) {
    const double x = g / 50.0;
    for (std::size_t j = 0; j < basis.dimension(); ++j) {
      for (std::size_t k = 0; k < basis.dimension(); ++k) {
        if (j / 3 != k / 3) {
          EXPECT_EQ(basis.eval(j, x) * basis.eval(k, x), 0.0);
        }
      }
    }
  }
}

TEST(PolyBasis, LocalizationBoundHolds) {
  exrisk::Rng rng(23);
  for (int trial = 0; trial < 6; ++trial) {
    const auto setup = testutil::random_basis_setup(rng, trial % 5);
    const auto basis = testutil::build_basis(setup);
    const double bound_scale =
        basis.localization_const() * std::sqrt(static_cast<double>(basis.dimension()));
    for (int rep = 0; rep < 100; ++rep) {
      std::vector<double> beta(basis.dimension());
      double binf = 0.0;
      for (double& b : beta) {
        b = testutil::uniform_in(rng, -1.0, 1.0);
        binf = std::max(binf, std::abs(b));
      }
      const double sup = testutil::dense_abs_max(
          [&](double x) {
            double s = 0.0;
            for (std::size_t k = 0; k < beta.size(); ++k) s += beta[k] * basis.eval(k, x);
            return s;
          },
          0.0, 1.0, 2001);
      EXPECT_LE(sup, bound_scale * binf * (1.0 + 1e-10));
    }
  }
}

TEST(HistogramBasis, LocalizationEqualsInverseLowerRegularity) {
  exrisk::Rng rng(29);
  const auto setup = testutil::random_basis_setup(rng, 0);
  const auto basis = build_histogram_basis(setup.partition, setup.problem);
  const auto report = regularity_report(setup.partition, setup.problem);
  EXPECT_NEAR(basis.localization_const(), 1.0 / report.lower_const_p, 1e-10);
}

TEST(GramResidual, DetectsScaledFunction) {
  const auto problem = make_problem();
  const auto basis = build_poly_basis(Partition::equal_width(2), problem, 1);
  const auto broken = basis.scaled(2, 1.01);
  EXPECT_GE(gram_residual(broken, problem), 1.01 * 1.01 - 1.0 - kOrthTolerance);
}

TEST(UnitEnvelope, UniformHistogramIsOne) {
  const auto problem = make_problem();
  const auto basis = build_histogram_basis(Partition::equal_width(8), problem);
  for (int g = 0; g < 40; ++g) {
    EXPECT_NEAR(unit_envelope(basis, (g + 0.5) / 40.0), 1.0, 1e-12);
  }
}

TEST(UnitEnvelope, SquareIntegratesToOne) {
  exrisk::Rng rng(31);
  for (int trial = 0; trial < 5; ++trial) {
    const auto setup = testutil::random_basis_setup(rng, trial % 5);
    const auto basis = testutil::build_basis(setup);
    const DesignDensity& f = setup.problem.design_density();
    const auto pts = exrisk::merge_breakpoints(
        0.0, 1.0, {std::span<const double>(setup.partition.breakpoints()),
                   std::span<const double>(f.breakpoints())});
    const double total = exrisk::gl_integrate_composite(
        [&](double x) {
          const double e = unit_envelope(basis, x);
          return e * e * f(x);
        },
        pts, 12);
    EXPECT_NEAR(total, 1.0, kOrthTolerance);
  }
}

TEST(UnitEnvelope, HistogramIdentityPointwise) {
  // For histograms, Psi^2(x) = 1 / (|P| P^X(I(x))).
  exrisk::Rng rng(37);
  const auto setup = testutil::random_basis_setup(rng, 0);
  const auto basis = build_histogram_basis(setup.partition, setup.problem);
  const auto report = regularity_report(setup.partition, setup.problem);
  const double m = static_cast<double>(setup.partition.cell_count());
  for (int g = 0; g < 101; ++g) {
    const double x = g / 100.0;
    const double psi_sq = std::pow(unit_envelope(basis, x), 2);
    const double expected = 1.0 / (m * report.cell_masses[setup.partition.locate(x)]);
    EXPECT_NEAR(psi_sq, expected, 1e-10 * expected);
  }
  // Upper-regular partition: min Psi^2 >= 1 / upper_const_p.
  double min_psi_sq = 1e300;
  for (int g = 0; g < 101; ++g) {
    min_psi_sq = std::min(min_psi_sq, std::pow(unit_envelope(basis, g / 100.0), 2));
  }
  EXPECT_GE(min_psi_sq * report.upper_const_p, 1.0 - 1e-10);
}

TEST(PolyBasis, SupNormBoundStableAcrossPartitions) {
  // max_j ||phi_{I,j}||_inf <= Lhat / sqrt(Leb(I)) with Lhat measured once
  // per (degree, density) and reused on other partitions.
  const auto problem = make_problem(PiecewisePolynomial(), exrisk::NoiseLevel::constant(1.0),
                                    DesignDensity::polynomial({1.3, -0.6, 0.0}));
  const int degree = 3;
  const auto measure = [&](const Partition& part) {
    const auto basis = build_poly_basis(part, problem, degree);
    double lhat = 0.0;
    for (std::size_t cell = 0; cell < part.cell_count(); ++cell) {
      for (std::size_t j = 0; j <= static_cast<std::size_t>(degree); ++j) {
        lhat = std::max(lhat, basis.sup_norms()[cell * (degree + 1) + j] *
                                  std::sqrt(part.length(cell)));
      }
    }
    return lhat;
  };
  const double reference = measure(Partition::equal_width(4));
  EXPECT_LE(measure(Partition::equal_width(16)), reference * 1.05);
  EXPECT_LE(measure(Partition({0.0, 0.1, 0.35, 0.8, 1.0})), reference * 1.05);
}

TEST(Basis, FromCoefficientsRotationKeepsOrthonormality) {
  const auto problem = make_problem();
  const auto basis = build_poly_basis(Partition::equal_width(3), problem, 1);
  const double theta = 0.83;
  std::vector<double> rotated(basis.dimension() * basis.funcs_per_cell());
  for (std::size_t cell = 0; cell < basis.cell_count(); ++cell) {
    const auto c0 = basis.coeffs(cell, 0);
    const auto c1 = basis.coeffs(cell, 1);
    for (std::size_t c = 0; c < 2; ++c) {
      rotated[(cell * 2 + 0) * 2 + c] = std::cos(theta) * c0[c] + std::sin(theta) * c1[c];
      rotated[(cell * 2 + 1) * 2 + c] = -std::sin(theta) * c0[c] + std::cos(theta) * c1[c];
    }
  }
  const auto turned = OrthonormalBasis::from_coefficients(Partition::equal_width(3), 1,
                                                          std::move(rotated), problem);
  EXPECT_LT(gram_residual(turned, problem), kOrthTolerance);
}

TEST(Basis, ErrorPaths) {
  const auto problem = make_problem();
  // A cell of length 5e-13 under the uniform density carries mass below the
  // representable floor.
  const Partition thin({0.0, 5e-13, 1.0});
  EXPECT_THROW(build_histogram_basis(thin, problem), DegeneratePartitionError);
  EXPECT_THROW(build_poly_basis(thin, problem, 2), ConditioningError);
  EXPECT_THROW(build_poly_basis(Partition::equal_width(2), problem, 5), exrisk::ConfigError);
  EXPECT_THROW(build_poly_basis(Partition::equal_width(2), problem, -1), exrisk::ConfigError);
}

}  // namespace
