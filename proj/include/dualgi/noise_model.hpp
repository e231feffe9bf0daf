#pragma once

#include "dualgi/error.hpp"
#include "dualgi/imaging_model.hpp"
#include "dualgi/linalg.hpp"

namespace dualgi {

/// Covariance S(f) of photon emission counts over object pixels.
struct PhotonStatistics {
  Matrix s;
};

/// Covariance of noise-photon counts on the object-arm detector (m × m).
struct NoisePhotonCovariance {
  Matrix sigma_eps;
};

/// Full covariance of the stacked measurement (ξ0; ξ1), 2m × 2m.
struct CovarianceModel {
  Matrix sigma_nu;

  [[nodiscard]] Eigen::Index detector_pixels() const noexcept { return sigma_nu.rows() / 2; }
  [[nodiscard]] Matrix object_block() const {
    const auto m = detector_pixels();
    return sigma_nu.topLeftCorner(m, m);
  }
  [[nodiscard]] Matrix ghost_block() const {
    const auto m = detector_pixels();
    return sigma_nu.bottomRightCorner(m, m);
  }
  [[nodiscard]] Matrix cross_block() const {
    const auto m = detector_pixels();
    return sigma_nu.topRightCorner(m, m);
  }
};

/// Poisson photon counts: S = n diag(f).
inline PhotonStatistics poisson_statistics(const TransmittanceMap& f, double n) {
  if (!(n >= 0.0)) throw InvalidArgument("poisson_statistics: n must be >= 0");
  return {Matrix((n * f.values()).asDiagonal())};
}

/// Uniform Poisson background, independent across detector pixels:
/// sigma_eps = n_eps · bin_factor² · I.
inline NoisePhotonCovariance noise_photon_covariance(double n_eps, const DetectorGeometry& geom) {
  if (!(n_eps >= 0.0)) throw InvalidArgument("noise_photon_covariance: n_eps must be >= 0");
  const double per_pixel = n_eps * geom.bin_factor * geom.bin_factor;
  const auto m = geom.detector_pixels();
  return {per_pixel * Matrix::Identity(m, m)};
}

/// Same background model for an arbitrary A0: variance n_eps per covered object pixel.
inline NoisePhotonCovariance noise_photon_covariance(double n_eps, const Matrix& a0) {
  if (!(n_eps >= 0.0)) throw InvalidArgument("noise_photon_covariance: n_eps must be >= 0");
  return {Matrix(noise_photon_exposure(a0, n_eps).asDiagonal())};
}

/// Unit-efficiency covariance: [[G + Σε, G], [G, G]] with G = A0 S A0ᵀ.
inline CovarianceModel covariance_unit_efficiency(const Matrix& a0, const PhotonStatistics& stats,
                                                  const NoisePhotonCovariance& noise) {
  detail::require_dims(stats.s.rows() == a0.cols() && stats.s.cols() == a0.cols(),
                       "covariance_unit_efficiency: S does not match A0 columns");
  const Eigen::Index m = a0.rows();
  detail::require_dims(noise.sigma_eps.rows() == m && noise.sigma_eps.cols() == m,
                       "covariance_unit_efficiency: sigma_eps does not match A0 rows");
  const Matrix g = a0 * stats.s * a0.transpose();
  Matrix sigma(2 * m, 2 * m);
  sigma.topLeftCorner(m, m) = g + noise.sigma_eps;
  sigma.topRightCorner(m, m) = g;
  sigma.bottomLeftCorner(m, m) = g;
  sigma.bottomRightCorner(m, m) = g;
  return {symmetrize(sigma)};
}

/// Covariance with detector efficiencies η0, η1:
///
///   η0² [[1, η1], [η1, η1²]] ⊗ G + η0² [[Σε, 0], [0, 0]]
///     + [[η0(1−η0), η0(1−η0)η1], [η0(1−η0)η1, η0η1(1−η0η1)]] ⊗ D
///
/// with G = A0 S(f) A0ᵀ, S(f) = n diag(f) and D = diag(A0 n f).
inline CovarianceModel covariance_degraded(const Matrix& a0, const TransmittanceMap& f,
                                           const AcquisitionParams& params, const NoisePhotonCovariance& noise) {
  params.validate();
  detail::require_dims(a0.cols() == f.size(), "covariance_degraded: A0 columns do not match object size");
  const Eigen::Index m = a0.rows();
  detail::require_dims(noise.sigma_eps.rows() == m && noise.sigma_eps.cols() == m,
                       "covariance_degraded: sigma_eps does not match A0 rows");

  const double e0 = params.eta0;
  const double e1 = params.eta1;
  const Matrix g = a0 * poisson_statistics(f, params.n).s * a0.transpose();
  const Vector d = params.n * (a0 * f.values());
  const double loss = e0 * (1.0 - e0);

  Matrix sigma(2 * m, 2 * m);
  sigma.topLeftCorner(m, m) = e0 * e0 * (g + noise.sigma_eps);
  sigma.topRightCorner(m, m) = e0 * e0 * e1 * g;
  sigma.bottomLeftCorner(m, m) = e0 * e0 * e1 * g;
  sigma.bottomRightCorner(m, m) = e0 * e0 * e1 * e1 * g;
  sigma.topLeftCorner(m, m).diagonal() += loss * d;
  sigma.topRightCorner(m, m).diagonal() += loss * e1 * d;
  sigma.bottomLeftCorner(m, m).diagonal() += loss * e1 * d;
  sigma.bottomRightCorner(m, m).diagonal() += e0 * e1 * (1.0 - e0 * e1) * d;
  return {symmetrize(sigma)};
}

/// Degraded covariance with the default background model for A0.
inline CovarianceModel covariance_degraded(const Matrix& a0, const TransmittanceMap& f,
                                           const AcquisitionParams& params) {
  return covariance_degraded(a0, f, params, noise_photon_covariance(params.n_eps, a0));
}

}  // namespace dualgi
