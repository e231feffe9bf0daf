#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "dualgi/error.hpp"
#include "dualgi/linalg.hpp"

namespace dualgi {

struct BoxQpOptions {
  int max_iterations = 10000;
  double kkt_tolerance = 1e-8;
  double lower = 0.0;
  double upper = 1.0;
};

struct BoxQpResult {
  Vector x;
  int iterations = 0;
  double kkt_residual = 0.0;
};

namespace detail {

inline Vector clamp_box(const Vector& v, double lo, double hi) { return v.cwiseMax(lo).cwiseMin(hi); }

// ‖x − P(x − g)‖∞, zero exactly at a KKT point of the box problem.
inline double projected_gradient_norm(const Vector& x, const Vector& g, double lo, double hi) {
  if (x.size() == 0) return 0.0;
  return (x - clamp_box(x - g, lo, hi)).cwiseAbs().maxCoeff();
}

// Minimizes q(x) = ½ (x − t)ᵀ H (x − t) exactly along the projected path
// P(x + β d), β ≥ 0, stopping at the first local minimizer. The path is
// piecewise linear; q is quadratic on each piece.
inline void arc_search(const Matrix& h, const Vector& target, Vector& x, const Vector& direction, double lo,
                       double hi) {
  const Eigen::Index n = x.size();
  const double inf = std::numeric_limits<double>::infinity();

  Vector p = direction;
  std::vector<std::pair<double, Eigen::Index>> breaks;
  for (Eigen::Index i = 0; i < n; ++i) {
    double b = inf;
    if (p[i] > 0.0) b = (hi - x[i]) / p[i];
    else if (p[i] < 0.0) b = (lo - x[i]) / p[i];
    if (b <= 0.0) {
      p[i] = 0.0;  // already on the bound it moves towards
      continue;
    }
    if (b < inf) breaks.emplace_back(b, i);
  }
  std::sort(breaks.begin(), breaks.end());

  Vector g = h * (x - target);
  Vector hp = h * p;
  double at = 0.0;
  std::size_t k = 0;
  while (true) {
    const double slope = g.dot(p);
    if (!(slope < 0.0)) return;
    const double curvature = p.dot(hp);
    const double next = k < breaks.size() ? breaks[k].first : inf;
    const double span = next - at;
    if (curvature > 0.0) {
      const double s = -slope / curvature;
      if (s < span) {
        x = clamp_box(x + s * p, lo, hi);
        return;
      }
    }
    if (next == inf) return;  // p ≠ 0 with zero curvature cannot occur without a breakpoint
    x += span * p;
    g += span * hp;
    at = next;
    while (k < breaks.size() && breaks[k].first <= at) {
      const auto i = breaks[k].second;
      x[i] = p[i] > 0.0 ? hi : lo;
      hp -= h.col(i) * p[i];
      p[i] = 0.0;
      ++k;
    }
  }
}

// Conjugate gradient on H_FF z = −g_F over the free variables.
inline Vector free_subspace_direction(const Matrix& h, const Vector& g, const std::vector<Eigen::Index>& free) {
  const auto nf = static_cast<Eigen::Index>(free.size());
  Vector out = Vector::Zero(g.size());
  if (nf == 0) return out;
  Matrix hff(nf, nf);
  Vector rhs(nf);
  for (Eigen::Index a = 0; a < nf; ++a) {
    rhs[a] = -g[free[a]];
    for (Eigen::Index b = 0; b < nf; ++b) hff(a, b) = h(free[a], free[b]);
  }
  Vector z = Vector::Zero(nf);
  Vector r = rhs;
  Vector d = r;
  double rr = r.squaredNorm();
  const double stop = 1e-30 + 1e-24 * rr;
  for (Eigen::Index it = 0; it < nf && rr > stop; ++it) {
    const Vector hd = hff * d;
    const double curv = d.dot(hd);
    if (!(curv > 0.0)) break;
    const double alpha = rr / curv;
    z += alpha * d;
    r -= alpha * hd;
    const double rr_next = r.squaredNorm();
    d = r + (rr_next / rr) * d;
    rr = rr_next;
  }
  for (Eigen::Index a = 0; a < nf; ++a) out[free[a]] = z[a];
  return out;
}

}  // namespace detail

/// Minimizes ½ (x − target)ᵀ H (x − target) over the box [lower, upper]^n for
/// symmetric positive semidefinite H.
///
/// Each iteration takes a projected-gradient step with exact line search
/// along the projected arc, then refines on the face of free variables with
/// conjugate gradients followed by another projected arc search. Converged
/// when ‖x − P(x − ∇q)‖∞ ≤ kkt_tolerance.
inline BoxQpResult solve_box_qp(const Matrix& h, const Vector& target, const BoxQpOptions& options = {}) {
  detail::require_dims(h.rows() == h.cols() && h.rows() == target.size(), "solve_box_qp: dimension mismatch");
  const double lo = options.lower;
  const double hi = options.upper;
  if (!(lo <= hi)) throw InvalidArgument("solve_box_qp: empty box");

  BoxQpResult res;
  res.x = detail::clamp_box(target, lo, hi);
  for (res.iterations = 0;; ++res.iterations) {
    const Vector g = h * (res.x - target);
    res.kkt_residual = detail::projected_gradient_norm(res.x, g, lo, hi);
    if (res.kkt_residual <= options.kkt_tolerance) return res;
    if (res.iterations >= options.max_iterations)
      throw NonConvergence("box projection did not converge: KKT residual " + std::to_string(res.kkt_residual) +
                           " after " + std::to_string(res.iterations) + " iterations");

    detail::arc_search(h, target, res.x, -g, lo, hi);

    std::vector<Eigen::Index> free;
    for (Eigen::Index i = 0; i < res.x.size(); ++i)
      if (res.x[i] > lo && res.x[i] < hi) free.push_back(i);
    const Vector gc = h * (res.x - target);
    const Vector d = detail::free_subspace_direction(h, gc, free);
    if (d.squaredNorm() > 0.0) detail::arc_search(h, target, res.x, d, lo, hi);
  }
}

}  // namespace dualgi
