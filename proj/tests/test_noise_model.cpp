#include <gtest/gtest.h>

#include <random>

#include "dualgi/noise_model.hpp"
#include "dualgi/photon_sim.hpp"
#include "test_support.hpp"

using namespace dualgi;

TEST(PoissonStatistics, Examples) {
  EXPECT_TRUE(poisson_statistics(TransmittanceMap::constant(2, 1, 1.0), 1.0).s.isIdentity(0.0));

  Vector v(2);
  v << 0.5, 0.0;
  const Matrix s = poisson_statistics(TransmittanceMap(2, 1, v), 2.0).s;
  EXPECT_EQ(s(0, 0), 1.0);
  EXPECT_EQ(s(1, 1), 0.0);
  EXPECT_EQ(s(0, 1), 0.0);

  EXPECT_TRUE(poisson_statistics(TransmittanceMap::constant(6, 6, 1.0), 1.0).s.isIdentity(0.0));
  EXPECT_THROW(poisson_statistics(TransmittanceMap::constant(1, 1, 1.0), -1.0), InvalidArgument);
}

TEST(NoisePhotonCovariance, Examples) {
  EXPECT_TRUE(noise_photon_covariance(0.0, DetectorGeometry::for_object(6, 6, 3)).sigma_eps.isZero(0.0));
  const Matrix s3 = noise_photon_covariance(0.1, DetectorGeometry::for_object(6, 6, 3)).sigma_eps;
  EXPECT_TRUE(s3.isApprox(0.9 * Matrix::Identity(4, 4), 1e-15));
  const Matrix s1 = noise_photon_covariance(0.1, DetectorGeometry::for_object(2, 2, 1)).sigma_eps;
  EXPECT_TRUE(s1.isApprox(0.1 * Matrix::Identity(4, 4), 1e-15));
  // Operator form agrees with the geometric form for binning operators.
  EXPECT_TRUE(noise_photon_covariance(0.1, build_binning_operator(6, 6, 3)).sigma_eps.isApprox(s3, 1e-15));
  EXPECT_THROW(noise_photon_covariance(-0.1, DetectorGeometry::for_object(2, 2, 1)), InvalidArgument);
}

TEST(CovarianceUnitEfficiency, ScalarCases) {
  const Matrix a0 = Matrix::Identity(1, 1);
  const PhotonStatistics s{Matrix::Identity(1, 1)};
  Matrix expected(2, 2);
  expected << 1, 1, 1, 1;
  EXPECT_EQ(covariance_unit_efficiency(a0, s, {Matrix::Zero(1, 1)}).sigma_nu, expected);
  expected(0, 0) = 1.5;
  EXPECT_EQ(covariance_unit_efficiency(a0, s, {Matrix::Constant(1, 1, 0.5)}).sigma_nu, expected);
}

TEST(CovarianceUnitEfficiency, DimensionMismatch) {
  const Matrix a0 = build_binning_operator(4, 4, 2);
  EXPECT_THROW(covariance_unit_efficiency(a0, {Matrix::Identity(4, 4)}, {Matrix::Zero(4, 4)}), DimensionMismatch);
  EXPECT_THROW(covariance_unit_efficiency(a0, {Matrix::Identity(16, 16)}, {Matrix::Zero(3, 3)}), DimensionMismatch);
}

TEST(CovarianceDegraded, ScalarHandSubstitution) {
  // η0 = η1 = 0.5, f = 1, n = 1, n_eps = 0:
  // 0.25·[[1, .5], [.5, .25]] + [[.25, .125], [.125, .1875]]
  const auto f = TransmittanceMap::constant(1, 1, 1.0);
  const auto cov = covariance_degraded(Matrix::Identity(1, 1), f, {1.0, 0.5, 0.5, 0.0});
  Matrix expected(2, 2);
  expected << 0.5, 0.25, 0.25, 0.25;
  EXPECT_TRUE(cov.sigma_nu.isApprox(expected, 1e-15));
}

TEST(CovarianceDegraded, ReducesToUnitEfficiencyAtEtaOne) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 25; ++trial) {
    const int b = 1 + trial % 3;
    const auto f = testutil::random_object(rng, 2 * b, 3 * b);
    const Matrix a0 = build_binning_operator(2 * b, 3 * b, b);
    const AcquisitionParams p{0.5 + trial, 1.0, 1.0, 0.05 * trial};
    const auto noise = noise_photon_covariance(p.n_eps, DetectorGeometry::for_object(2 * b, 3 * b, b));
    const Matrix degraded = covariance_degraded(a0, f, p, noise).sigma_nu;
    const Matrix unit = covariance_unit_efficiency(a0, poisson_statistics(f, p.n), noise).sigma_nu;
    EXPECT_LE((degraded - unit).cwiseAbs().maxCoeff(), 1e-12 * unit.cwiseAbs().maxCoeff());
  }
}

TEST(CovarianceDegraded, ContinuousInEfficiencies) {
  const auto f = TransmittanceMap::constant(4, 4, 0.6);
  const Matrix a0 = build_binning_operator(4, 4, 2);
  const Matrix at_one = covariance_degraded(a0, f, {2.0, 1.0, 1.0, 0.3}).sigma_nu;
  double previous = std::numeric_limits<double>::infinity();
  for (double h : {1e-2, 1e-4, 1e-6, 1e-8}) {
    const Matrix near = covariance_degraded(a0, f, {2.0, 1.0 - h, 1.0 - h, 0.3}).sigma_nu;
    const double gap = (near - at_one).cwiseAbs().maxCoeff();
    EXPECT_LT(gap, previous);
    EXPECT_LT(gap, 20.0 * h);
    previous = gap;
  }
}

TEST(CovarianceDegraded, SymmetricAndPositiveSemidefinite) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 60; ++trial) {
    const int b = 1 + trial % 3;
    const int w = b * (1 + trial % 4);
    const int h = b * (1 + (trial / 4) % 3);
    const auto f = testutil::random_object(rng, w, h);
    const Matrix a0 = build_binning_operator(w, h, b);
    const AcquisitionParams p{5.0 * unit(rng), unit(rng), unit(rng), unit(rng)};
    const Matrix s = covariance_degraded(a0, f, p).sigma_nu;
    EXPECT_EQ(asymmetry(s), 0.0);
    const auto [lo, hi] = eigen_range(s);
    EXPECT_GE(lo, -1e-10 * std::max(hi, 1e-300));

    const Matrix u = covariance_unit_efficiency(a0, poisson_statistics(f, p.n),
                                                noise_photon_covariance(p.n_eps, a0)).sigma_nu;
    EXPECT_EQ(asymmetry(u), 0.0);
    const auto [ulo, uhi] = eigen_range(u);
    EXPECT_GE(ulo, -1e-10 * std::max(uhi, 1e-300));
  }
}

TEST(CovarianceDegraded, OffDiagonalBlocksAreTransposes) {
  std::mt19937_64 rng(23);
  const auto f = testutil::random_object(rng, 6, 6);
  const auto cov = covariance_degraded(build_binning_operator(6, 6, 3), f, {1.0, 0.4, 0.4, 0.1});
  const auto m = cov.detector_pixels();
  EXPECT_EQ(cov.sigma_nu.topRightCorner(m, m), cov.sigma_nu.bottomLeftCorner(m, m).transpose());
}

// Monte Carlo oracle: the simulator's empirical covariance must match the
// analytic model within 3 standard errors (5% of entries may exceed).

TEST(CovarianceMonteCarlo, TwoPixelUnitEfficiency) {
  const auto f = TransmittanceMap::constant(2, 1, 1.0);
  const auto geom = DetectorGeometry::for_object(2, 1, 1);
  const SimulationConfig cfg{f, geom, {1.0, 1.0, 1.0, 0.0}, 100000, 2024};
  const auto m = empirical_moments(simulate_acquisition(cfg));
  const Matrix analytic = covariance_unit_efficiency(build_binning_operator(geom), poisson_statistics(f, 1.0),
                                                     noise_photon_covariance(0.0, geom)).sigma_nu;
  EXPECT_LE(testutil::fraction_beyond(m, analytic), 0.05);
}

TEST(CovarianceMonteCarlo, ScalarHalfEfficiency) {
  const auto f = TransmittanceMap::constant(1, 1, 1.0);
  const auto geom = DetectorGeometry::for_object(1, 1, 1);
  const SimulationConfig cfg{f, geom, {1.0, 0.5, 0.5, 0.0}, 100000, 99};
  const auto m = empirical_moments(simulate_acquisition(cfg));
  Matrix hand(2, 2);
  hand << 0.5, 0.25, 0.25, 0.25;
  for (Eigen::Index i = 0; i < 2; ++i)
    for (Eigen::Index j = 0; j < 2; ++j)
      EXPECT_LE(std::abs(m.covariance(i, j) - hand(i, j)), 3.0 * m.covariance_stderr(i, j)) << i << "," << j;
}

TEST(CovarianceMonteCarlo, SlitExperimentParameters) {
  std::mt19937_64 rng(8);
  const auto f = testutil::random_object(rng, 6, 6, 0.05, 1.0);
  const auto geom = DetectorGeometry::for_object(6, 6, 3);
  const AcquisitionParams p{1.0, 0.4, 0.4, 0.1};
  const SimulationConfig cfg{f, geom, p, 100000, 31337};
  const auto m = empirical_moments(simulate_acquisition(cfg));
  const Matrix analytic = covariance_degraded(build_binning_operator(geom), f, p).sigma_nu;
  EXPECT_LE(testutil::fraction_beyond(m, analytic), 0.05);
}
