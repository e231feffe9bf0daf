#pragma once

#include <boost/math/distributions/normal.hpp>

#include <cmath>
#include <limits>
#include <optional>

#include "dualgi/box_qp.hpp"
#include "dualgi/error.hpp"
#include "dualgi/haar.hpp"
#include "dualgi/imaging_model.hpp"
#include "dualgi/linalg.hpp"
#include "dualgi/noise_model.hpp"

namespace dualgi {

/// Measurement ξ = A f + ν with noise covariance Σν, and the ideal operator U.
struct ReductionProblem {
  Matrix a;
  Matrix sigma_nu;
  Matrix u;

  void validate() const {
    detail::require_dims(a.cols() == u.cols(), "ReductionProblem: cols(A) != cols(U)");
    detail::require_dims(sigma_nu.rows() == a.rows() && sigma_nu.cols() == a.rows(),
                         "ReductionProblem: Sigma_nu does not match rows(A)");
  }
};

/// Reduction of the stacked (ξ0; ξ1) measurement with U = I.
inline ReductionProblem combined_problem(const Matrix& a0, const TransmittanceMap& f, const AcquisitionParams& params) {
  return {stacked_forward_operator(a0, params), covariance_degraded(a0, f, params).sigma_nu,
          Matrix::Identity(a0.cols(), a0.cols())};
}

/// Reduction of the ghost image ξ1 alone with U = I.
inline ReductionProblem ghost_only_problem(const Matrix& a0, const TransmittanceMap& f,
                                           const AcquisitionParams& params) {
  return {ghost_forward_operator(a0, params), covariance_degraded(a0, f, params).ghost_block(),
          Matrix::Identity(a0.cols(), a0.cols())};
}

struct ReductionResult {
  Vector estimate;
  Matrix estimate_cov;
  double mse = 0.0;  // +inf when U(I − A⁻A) ≠ 0
};

/// Precomputed minimax linear reduction R* = U (AᵀΣ⁻A)⁻ AᵀΣ⁻ for one problem.
/// Every inverse is a pseudo-inverse.
class LinearReducer {
public:
  explicit LinearReducer(const ReductionProblem& problem, double rtol = kDefaultPinvRtol) {
    problem.validate();
    const Matrix sigma_pinv = pseudo_inverse(problem.sigma_nu, rtol);
    const Matrix whitened = sigma_pinv * problem.a;
    const Matrix fisher = symmetrize(problem.a.transpose() * whitened);
    const Matrix fisher_pinv = pseudo_inverse(fisher, rtol);

    const Eigen::Index n = problem.a.cols();
    const Matrix residual = problem.u * (Matrix::Identity(n, n) - fisher_pinv * fisher);
    const double u_norm = problem.u.norm();
    feasible_ = residual.norm() <= 1e-8 * u_norm;

    operator_ = problem.u * fisher_pinv * whitened.transpose();
    estimate_cov_ = symmetrize(problem.u * fisher_pinv * problem.u.transpose());
    mse_ = feasible_ ? estimate_cov_.trace() : std::numeric_limits<double>::infinity();
  }

  [[nodiscard]] bool feasible() const noexcept { return feasible_; }
  [[nodiscard]] double mse() const noexcept { return mse_; }
  [[nodiscard]] const Matrix& reduction_operator() const noexcept { return operator_; }
  [[nodiscard]] const Matrix& estimate_cov() const noexcept { return estimate_cov_; }

  [[nodiscard]] ReductionResult apply(const Vector& xi) const {
    detail::require_dims(xi.size() == operator_.cols(), "linear_reduction: xi length != rows(A)");
    return {operator_ * xi, estimate_cov_, mse_};
  }

private:
  Matrix operator_;
  Matrix estimate_cov_;
  double mse_ = 0.0;
  bool feasible_ = false;
};

/// True iff ‖U(I − A⁻A)‖ ≤ 1e-8 ‖U‖, i.e. the reduction MSE is finite.
inline bool feasibility(const ReductionProblem& problem) { return LinearReducer(problem).feasible(); }

inline ReductionResult linear_reduction(const ReductionProblem& problem, const Vector& xi) {
  return LinearReducer(problem).apply(xi);
}

/// Mahalanobis projection of u0 onto [0, 1]^dim in the metric estimate_cov⁻.
inline Vector project_box(const Vector& u0, const Matrix& estimate_cov, const BoxQpOptions& options = {}) {
  detail::require_dims(estimate_cov.rows() == u0.size() && estimate_cov.cols() == u0.size(),
                       "project_box: covariance does not match estimate");
  auto res = solve_box_qp(pseudo_inverse(estimate_cov), u0, options);
  return detail::clamp_box(res.x, options.lower, options.upper);
}

/// Two-sided z-test threshold t(τ) = Φ⁻¹((1 + τ) / 2).
inline double significance_threshold(double tau) {
  if (!(tau >= 0.0 && tau < 1.0)) throw InvalidArgument("tau must lie in [0, 1)");
  if (tau == 0.0) return 0.0;
  return boost::math::quantile(boost::math::normal_distribution<double>(), 0.5 * (1.0 + tau));
}

struct DenoiseResult {
  Vector values;
  int zeroed = 0;  // basis components set to zero
};

/// Standard deviation of every basis component of an estimate with covariance
/// estimate_cov: σ_i = sqrt((B Σ Bᵀ)_ii).
inline Vector basis_component_stddev(const SparsityBasis& basis, const Matrix& estimate_cov) {
  detail::require_dims(basis.b.cols() == estimate_cov.rows(), "basis dimension != covariance dimension");
  return (basis.b * estimate_cov * basis.b.transpose()).diagonal().cwiseMax(0.0).cwiseSqrt();
}

/// Zeroes every basis component c = B u with |c_i| ≤ t(τ) σ_i and maps back.
/// τ = 0 returns the input untouched.
inline DenoiseResult sparsity_denoise(const Vector& estimate, const Vector& component_stddev,
                                      const SparsityBasis& basis, double tau) {
  const double t = significance_threshold(tau);
  detail::require_dims(basis.dimension() == estimate.size() && basis.b.cols() == estimate.size(),
                       "sparsity_denoise: basis dimension != estimate dimension");
  detail::require_dims(component_stddev.size() == estimate.size(), "sparsity_denoise: stddev dimension mismatch");
  if (tau == 0.0) return {estimate, 0};

  Vector c = basis.b * estimate;
  int zeroed = 0;
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    if (std::abs(c[i]) <= t * component_stddev[i]) {
      c[i] = 0.0;
      ++zeroed;
    }
  }
  return {basis.b.transpose() * c, zeroed};
}

inline DenoiseResult sparsity_denoise(const ReductionResult& result, const SparsityBasis& basis, double tau) {
  detail::require_dims(result.estimate_cov.rows() == result.estimate.size(),
                       "sparsity_denoise: covariance dimension != estimate dimension");
  significance_threshold(tau);
  if (tau == 0.0) {
    detail::require_dims(basis.dimension() == result.estimate.size(),
                         "sparsity_denoise: basis dimension != estimate dimension");
    return {result.estimate, 0};
  }
  return sparsity_denoise(result.estimate, basis_component_stddev(basis, result.estimate_cov), basis, tau);
}

struct PipelineResult {
  ReductionResult linear;
  Vector denoised;
  Vector estimate;  // final, inside [0, 1]^dim
  int zeroed = 0;
};

/// Linear reduction, then sparsity denoising (if a basis is given and τ > 0),
/// then box projection. Everything that depends only on the problem is
/// computed once, so one estimator serves many measurements and τ values.
class Estimator {
public:
  Estimator(const ReductionProblem& problem, std::optional<SparsityBasis> basis, BoxQpOptions options = {})
      : reducer_(problem), basis_(std::move(basis)), options_(options) {
    metric_ = pseudo_inverse(reducer_.estimate_cov());
    if (basis_) component_sd_ = basis_component_stddev(*basis_, reducer_.estimate_cov());
  }

  [[nodiscard]] const LinearReducer& reducer() const noexcept { return reducer_; }

  [[nodiscard]] PipelineResult run(const Vector& xi, double tau) const {
    significance_threshold(tau);
    PipelineResult out;
    out.linear = reducer_.apply(xi);
    out.denoised = out.linear.estimate;
    if (basis_ && tau > 0.0) {
      auto dn = sparsity_denoise(out.linear.estimate, component_sd_, *basis_, tau);
      out.denoised = std::move(dn.values);
      out.zeroed = dn.zeroed;
    }
    out.estimate = detail::clamp_box(solve_box_qp(metric_, out.denoised, options_).x, options_.lower, options_.upper);
    return out;
  }

private:
  LinearReducer reducer_;
  std::optional<SparsityBasis> basis_;
  BoxQpOptions options_;
  Matrix metric_;
  Vector component_sd_;
};

inline PipelineResult estimate_pipeline(const ReductionProblem& problem, const Vector& xi,
                                        const std::optional<SparsityBasis>& basis, double tau,
                                        const BoxQpOptions& options = {}) {
  return Estimator(problem, basis, options).run(xi, tau);
}

}  // namespace dualgi
