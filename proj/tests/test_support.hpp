#pragma once

#include <random>

#include "dualgi/imaging_model.hpp"
#include "dualgi/photon_sim.hpp"
#include "dualgi/linalg.hpp"

namespace dualgi::testutil {

inline Matrix random_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> nd;
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = nd(rng);
  return m;
}

/// Random symmetric PSD matrix of the given rank.
inline Matrix random_psd(std::mt19937_64& rng, Eigen::Index n, Eigen::Index rank) {
  const Matrix g = random_matrix(rng, n, rank);
  return g * g.transpose();
}

inline TransmittanceMap random_object(std::mt19937_64& rng, int width, int height, double lo = 0.0,
                                      double hi = 1.0) {
  std::uniform_real_distribution<double> ud(lo, hi);
  Vector v(static_cast<Eigen::Index>(width) * height);
  for (auto& x : v) x = ud(rng);
  return {width, height, v};
}

inline double rel_diff(double a, double b) {
  const double s = std::max(std::abs(a), std::abs(b));
  return s == 0.0 ? 0.0 : std::abs(a - b) / s;
}

/// Fraction of covariance entries whose Monte Carlo estimate is further than
/// k standard errors from the analytic value.
inline double fraction_beyond(const EmpiricalMoments& m, const Matrix& analytic, double k = 3.0) {
  long beyond = 0;
  for (Eigen::Index i = 0; i < analytic.rows(); ++i)
    for (Eigen::Index j = 0; j < analytic.cols(); ++j)
      if (std::abs(m.covariance(i, j) - analytic(i, j)) > k * m.covariance_stderr(i, j)) ++beyond;
  return static_cast<double>(beyond) / static_cast<double>(analytic.size());
}

}  // namespace dualgi::testutil
