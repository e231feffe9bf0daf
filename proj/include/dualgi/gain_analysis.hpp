#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <cmath>
#include <limits>
#include <thread>
#include <vector>

#include "dualgi/error.hpp"
#include "dualgi/imaging_model.hpp"
#include "dualgi/linalg.hpp"
#include "dualgi/noise_model.hpp"

namespace dualgi {

// The closed forms below work with the efficiency-free operators A0 and
// (A0; η1 A0) and restore the n and η prefactors outside the trace, so they
// share no algebra with LinearReducer beyond pseudo_inverse.

namespace detail {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

// tr U K⁻ Uᵀ, or +inf when U(I − K⁻K) ≠ 0.
inline double trace_of_inverse_information(const Matrix& information, const Matrix& u) {
  const Matrix k = symmetrize(information);
  const Matrix k_pinv = pseudo_inverse(k);
  const Eigen::Index n = k.rows();
  if ((u * (Matrix::Identity(n, n) - k_pinv * k)).norm() > 1e-8 * u.norm()) return kInfinity;
  return (u * k_pinv * u.transpose()).trace();
}

}  // namespace detail

/// MSE of reducing the ghost image ξ1 alone:
///   (n² η0 η1)⁻¹ tr U (A0ᵀ (η0η1 A0 S A0ᵀ + (1 − η0η1) D)⁻ A0)⁻ Uᵀ
/// with S = n diag(f) and D = diag(A0 n f).
inline double mse_ghost_only(const Matrix& a0, const TransmittanceMap& f, const AcquisitionParams& params,
                             const Matrix& u) {
  params.validate();
  detail::require_dims(a0.cols() == f.size() && u.cols() == f.size(), "mse_ghost_only: dimension mismatch");
  const double coincidence = params.eta0 * params.eta1;
  if (coincidence == 0.0 || params.n == 0.0) return detail::kInfinity;

  const Vector signal = params.n * f.values();
  const Matrix g = a0 * signal.asDiagonal() * a0.transpose();
  Matrix mixed = coincidence * g;
  mixed.diagonal() += (1.0 - coincidence) * (a0 * signal);
  const Matrix information = a0.transpose() * pseudo_inverse(symmetrize(mixed)) * a0;
  return detail::trace_of_inverse_information(information, u) / (params.n * params.n * coincidence);
}

/// MSE of reducing both images:
///   (n η0)⁻² tr U ((A0ᵀ η1A0ᵀ) Σν⁻ (A0; η1A0))⁻ Uᵀ
inline double mse_combined(const Matrix& a0, const TransmittanceMap& f, const AcquisitionParams& params,
                           const NoisePhotonCovariance& noise, const Matrix& u) {
  params.validate();
  detail::require_dims(a0.cols() == f.size() && u.cols() == f.size(), "mse_combined: dimension mismatch");
  if (params.eta0 == 0.0 || params.n == 0.0) return detail::kInfinity;

  const Matrix sigma = covariance_degraded(a0, f, params, noise).sigma_nu;
  const Eigen::Index m = a0.rows();
  Matrix arms(2 * m, a0.cols());
  arms.topRows(m) = a0;
  arms.bottomRows(m) = params.eta1 * a0;
  const Matrix information = arms.transpose() * pseudo_inverse(sigma) * arms;
  const double scale = params.n * params.eta0;
  return detail::trace_of_inverse_information(information, u) / (scale * scale);
}

inline double mse_combined(const Matrix& a0, const TransmittanceMap& f, const AcquisitionParams& params,
                           const Matrix& u) {
  return mse_combined(a0, f, params, noise_photon_covariance(params.n_eps, a0), u);
}

/// Reduction in MSE gained by also registering the object-arm image.
inline double mse_gain(const Matrix& a0, const TransmittanceMap& f, const AcquisitionParams& params,
                       const NoisePhotonCovariance& noise, const Matrix& u) {
  const double ghost = mse_ghost_only(a0, f, params, u);
  const double combined = mse_combined(a0, f, params, noise, u);
  if (!std::isfinite(ghost) || !std::isfinite(combined))
    throw InfeasibleProblem("mse_gain: reduction MSE is infinite, gain undefined");
  return ghost - combined;
}

inline double mse_gain(const Matrix& a0, const TransmittanceMap& f, const AcquisitionParams& params,
                       const Matrix& u) {
  return mse_gain(a0, f, params, noise_photon_covariance(params.n_eps, a0), u);
}

/// Relative photon-budget gain Δn/n at η0 = η1 = eta.
///
/// Finds n′ ≤ n_ref for which the combined scheme, with noise photons scaled
/// to noise_ratio · n′, matches the ghost-only MSE at n_ref; returns
/// (n_ref − n′) / n_ref. n′ is located by bisection to relative tolerance 1e-6.
inline double photon_number_gain(const Matrix& a0, const TransmittanceMap& f, double eta, double noise_ratio,
                                 const Matrix& u, double n_ref = 1.0) {
  if (!(eta > 0.0 && eta <= 1.0)) throw InvalidArgument("photon_number_gain: eta must lie in (0, 1]");
  if (!(noise_ratio >= 0.0)) throw InvalidArgument("photon_number_gain: noise_ratio must be >= 0");
  if (!(n_ref > 0.0)) throw InvalidArgument("photon_number_gain: n_ref must be > 0");

  auto params_at = [&](double n) { return AcquisitionParams{n, eta, eta, noise_ratio * n}; };
  auto combined_at = [&](double n) { return mse_combined(a0, f, params_at(n), u); };

  const double target = mse_ghost_only(a0, f, params_at(n_ref), u);
  if (!std::isfinite(target)) throw InfeasibleProblem("photon_number_gain: ghost-only MSE is infinite");

  double hi = n_ref;
  const double at_ref = combined_at(hi);
  // equal MSEs up to rounding: no photons to save
  if (std::abs(at_ref - target) <= 1e-9 * target) return 0.0;
  if (at_ref > target) throw BisectionFailure("photon_number_gain: combined MSE exceeds ghost-only MSE at n_ref");
  double lo = 0.5 * hi;
  int halvings = 0;
  while (combined_at(lo) < target) {
    hi = lo;
    lo *= 0.5;
    if (++halvings > 200) throw BisectionFailure("photon_number_gain: could not bracket n'");
  }
  while (hi - lo > 1e-6 * hi) {
    const double mid = 0.5 * (lo + hi);
    if (combined_at(mid) < target) hi = mid;
    else lo = mid;
  }
  const double n_prime = 0.5 * (lo + hi);
  return std::clamp((n_ref - n_prime) / n_ref, 0.0, 1.0);
}

struct GainPoint {
  double eta = 0.0;
  double noise_ratio = 0.0;
  double mse_ghost_only = 0.0;
  double mse_combined = 0.0;
  double mse_gain = 0.0;
  double photon_gain = 0.0;
};

/// photon_number_gain over eta_grid × noise_ratio_grid, sorted by (eta, noise_ratio).
/// MSE columns are evaluated at n_ref with n_eps = noise_ratio · n_ref.
inline std::vector<GainPoint> gain_surface(const Matrix& a0, const TransmittanceMap& f,
                                           const std::vector<double>& eta_grid,
                                           const std::vector<double>& noise_ratio_grid, const Matrix& u,
                                           double n_ref = 1.0, unsigned threads = 0) {
  if (eta_grid.empty() || noise_ratio_grid.empty()) throw InvalidArgument("gain_surface: empty grid");
  std::vector<GainPoint> points;
  for (double eta : eta_grid)
    for (double ratio : noise_ratio_grid) points.push_back({eta, ratio});
  std::sort(points.begin(), points.end(), [](const GainPoint& a, const GainPoint& b) {
    return a.eta != b.eta ? a.eta < b.eta : a.noise_ratio < b.noise_ratio;
  });

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  auto work = [&] {
    for (std::size_t i = next++; i < points.size() && !failed; i = next++) {
      auto& p = points[i];
      try {
        const AcquisitionParams params{n_ref, p.eta, p.eta, p.noise_ratio * n_ref};
        p.mse_ghost_only = mse_ghost_only(a0, f, params, u);
        p.mse_combined = mse_combined(a0, f, params, u);
        p.mse_gain = p.mse_ghost_only - p.mse_combined;
        p.photon_gain = photon_number_gain(a0, f, p.eta, p.noise_ratio, u, n_ref);
      } catch (...) {
        if (!failed.exchange(true)) failure = std::current_exception();
      }
    }
  };
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  if (threads == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work);
  }
  if (failure) std::rethrow_exception(failure);
  return points;
}

/// Evenly spaced grid start, start + step, ... up to stop (inclusive within step/1000).
inline std::vector<double> linear_grid(double start, double stop, double step) {
  if (!(step > 0.0) || stop < start) throw InvalidArgument("linear_grid: invalid range");
  std::vector<double> out;
  const auto count = static_cast<long>(std::floor((stop - start) / step + 1e-3));
  for (long i = 0; i <= count; ++i) out.push_back(start + static_cast<double>(i) * step);
  return out;
}

}  // namespace dualgi
