#pragma once

#include <cmath>
#include <deque>
#include <utility>

#include "dualgi/error.hpp"
#include "dualgi/linalg.hpp"

namespace dualgi {

/// Orthonormal Haar basis of R^n, one basis vector per row, coarse to fine.
///
/// Row 0 is the constant vector. Every further row is the detail vector of a
/// node in the bisection tree of [0, n): +a on the left half, −b on the right
/// half, zero-mean and unit-norm. Halves of odd-length segments differ in size
/// by one, so any n ≥ 1 is supported; for n a power of two this is the usual
/// dyadic Haar basis.
inline Matrix haar_basis_1d(int n) {
  if (n < 1) throw InvalidArgument("haar_basis_1d: n must be >= 1");
  Matrix b = Matrix::Zero(n, n);
  b.row(0).setConstant(1.0 / std::sqrt(static_cast<double>(n)));
  Eigen::Index row = 1;
  std::deque<std::pair<int, int>> segments{{0, n}};
  while (!segments.empty()) {
    const auto [begin, len] = segments.front();
    segments.pop_front();
    if (len < 2) continue;
    const int left = len / 2;
    const int right = len - left;
    const double l = static_cast<double>(left);
    const double r = static_cast<double>(right);
    const double total = static_cast<double>(len);
    b.row(row).segment(begin, left).setConstant(std::sqrt(r / (l * total)));
    b.row(row).segment(begin + left, right).setConstant(-std::sqrt(l / (r * total)));
    ++row;
    segments.emplace_back(begin, left);
    segments.emplace_back(begin + left, right);
  }
  return b;
}

/// Orthogonal sparsifying basis over the estimate space; rows are basis vectors.
struct SparsityBasis {
  Matrix b;

  /// Separable 2-D Haar basis on a row-major width × height grid.
  static SparsityBasis haar(int width, int height) {
    const Matrix bw = haar_basis_1d(width);
    const Matrix bh = haar_basis_1d(height);
    const Eigen::Index n = static_cast<Eigen::Index>(width) * height;
    Matrix b(n, n);
    for (int k = 0; k < height; ++k)
      for (int l = 0; l < width; ++l) {
        const Eigen::Index row = static_cast<Eigen::Index>(k) * width + l;
        for (int r = 0; r < height; ++r)
          b.row(row).segment(static_cast<Eigen::Index>(r) * width, width) = bh(k, r) * bw.row(l);
      }
    return {std::move(b)};
  }

  /// Canonical basis; components are the pixels themselves.
  static SparsityBasis pixel(Eigen::Index n) { return {Matrix::Identity(n, n)}; }

  [[nodiscard]] Eigen::Index dimension() const noexcept { return b.rows(); }

  /// max |B Bᵀ − I|
  [[nodiscard]] double orthogonality_error() const {
    return (b * b.transpose() - Matrix::Identity(b.rows(), b.rows())).cwiseAbs().maxCoeff();
  }
};

}  // namespace dualgi
