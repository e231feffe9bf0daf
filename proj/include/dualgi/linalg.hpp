#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <limits>
#include <utility>
#include <cmath>
#include <numeric>
#include <vector>

#include "dualgi/error.hpp"

namespace dualgi {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr double kDefaultPinvRtol = 1e-10;

/// (M + Mᵀ) / 2
inline Matrix symmetrize(const Matrix& m) {
  detail::require_dims(m.rows() == m.cols(), "symmetrize: matrix is not square");
  return 0.5 * (m + m.transpose());
}

inline double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

/// Max |M - Mᵀ| relative to max |M|; zero for the zero matrix.
inline double asymmetry(const Matrix& m) {
  const double scale = max_abs(m);
  if (scale == 0.0) return 0.0;
  return (m - m.transpose()).cwiseAbs().maxCoeff() / scale;
}

namespace detail {

// Groups indices of a square matrix into the connected components of its
// nonzero pattern. A symmetric matrix is block diagonal under the permutation
// that lists each component contiguously.
inline std::vector<std::vector<Eigen::Index>> coupled_components(const Matrix& m) {
  const Eigen::Index n = m.rows();
  std::vector<Eigen::Index> parent(static_cast<std::size_t>(n));
  std::iota(parent.begin(), parent.end(), Eigen::Index{0});
  auto find = [&parent](Eigen::Index i) {
    while (parent[static_cast<std::size_t>(i)] != i) {
      auto& p = parent[static_cast<std::size_t>(i)];
      p = parent[static_cast<std::size_t>(p)];
      i = p;
    }
    return i;
  };
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < j; ++i) {
      if (m(i, j) != 0.0 || m(j, i) != 0.0) {
        const auto a = find(i);
        const auto b = find(j);
        if (a != b) parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
      }
    }
  }
  std::vector<std::vector<Eigen::Index>> groups;
  std::vector<Eigen::Index> slot(static_cast<std::size_t>(n), -1);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto r = static_cast<std::size_t>(find(i));
    if (slot[r] < 0) {
      slot[r] = static_cast<Eigen::Index>(groups.size());
      groups.emplace_back();
    }
    groups[static_cast<std::size_t>(slot[r])].push_back(i);
  }
  return groups;
}

struct ComponentEigen {
  std::vector<Eigen::Index> index;
  Vector values;
  Matrix vectors;
};

// Eigendecomposition of a symmetric matrix computed independently on every
// coupled component. Mathematically identical to a full decomposition.
inline std::vector<ComponentEigen> blockwise_eigen(const Matrix& m) {
  std::vector<ComponentEigen> out;
  for (auto& idx : coupled_components(m)) {
    const auto k = static_cast<Eigen::Index>(idx.size());
    ComponentEigen ce;
    if (k == 1) {
      ce.values = Vector::Constant(1, m(idx[0], idx[0]));
      ce.vectors = Matrix::Identity(1, 1);
    } else {
      Matrix sub(k, k);
      for (Eigen::Index a = 0; a < k; ++a)
        for (Eigen::Index b = 0; b < k; ++b) sub(a, b) = 0.5 * (m(idx[a], idx[b]) + m(idx[b], idx[a]));
      Eigen::SelfAdjointEigenSolver<Matrix> es(sub);
      ce.values = es.eigenvalues();
      ce.vectors = es.eigenvectors();
    }
    ce.index = std::move(idx);
    out.push_back(std::move(ce));
  }
  return out;
}

}  // namespace detail

/// Moore–Penrose pseudo-inverse of a symmetric matrix.
///
/// Eigenvalues with magnitude at or below rtol × max|eigenvalue| are treated
/// as zero. Decoupled blocks of the sparsity pattern are decomposed
/// separately, so block-structured covariances stay cheap.
inline Matrix pseudo_inverse(const Matrix& m, double rtol = kDefaultPinvRtol) {
  detail::require_dims(m.rows() == m.cols(), "pseudo_inverse: matrix is not square");
  const Eigen::Index n = m.rows();
  Matrix out = Matrix::Zero(n, n);
  if (n == 0) return out;

  const auto parts = detail::blockwise_eigen(m);
  double largest = 0.0;
  for (const auto& p : parts) largest = std::max(largest, p.values.cwiseAbs().maxCoeff());
  const double cutoff = rtol * largest;

  for (const auto& p : parts) {
    const auto k = static_cast<Eigen::Index>(p.index.size());
    Vector inv = Vector::Zero(k);
    for (Eigen::Index i = 0; i < k; ++i)
      if (std::abs(p.values[i]) > cutoff) inv[i] = 1.0 / p.values[i];
    const Matrix block = p.vectors * inv.asDiagonal() * p.vectors.transpose();
    for (Eigen::Index a = 0; a < k; ++a)
      for (Eigen::Index b = 0; b < k; ++b) out(p.index[a], p.index[b]) = block(a, b);
  }
  return out;
}

/// Smallest and largest eigenvalue of a symmetric matrix.
inline std::pair<double, double> eigen_range(const Matrix& m) {
  detail::require_dims(m.rows() == m.cols(), "eigen_range: matrix is not square");
  if (m.rows() == 0) return {0.0, 0.0};
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& p : detail::blockwise_eigen(m)) {
    lo = std::min(lo, p.values.minCoeff());
    hi = std::max(hi, p.values.maxCoeff());
  }
  return {lo, hi};
}

}  // namespace dualgi
