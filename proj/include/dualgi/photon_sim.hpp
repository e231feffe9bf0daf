#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <random>
#include <thread>
#include <vector>

#include "dualgi/error.hpp"
#include "dualgi/imaging_model.hpp"
#include "dualgi/linalg.hpp"

namespace dualgi {

using Counts = Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1>;

/// One acquisition: object-arm counts ξ0 and coincidence counts ξ1 per detector pixel.
struct MeasurementPair {
  Counts xi0;
  Counts xi1;

  /// Stacked (ξ0; ξ1) as reals.
  [[nodiscard]] Vector stacked() const {
    Vector v(xi0.size() + xi1.size());
    v << xi0.cast<double>(), xi1.cast<double>();
    return v;
  }
};

struct SimulationConfig {
  TransmittanceMap f;
  DetectorGeometry geom;
  AcquisitionParams params;
  long frames = 1;
  std::uint64_t seed = 0;

  void validate() const {
    params.validate();
    if (frames < 1) throw InvalidArgument("frames must be >= 1");
    if (geom.object_width() != f.width() || geom.object_height() != f.height())
      throw DimensionMismatch("detector geometry does not match object dimensions");
  }
};

namespace detail {

// Independent stream per (seed, frame): the engine state depends on nothing else.
inline std::mt19937_64 frame_engine(std::uint64_t seed, std::uint64_t frame_index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(frame_index), static_cast<std::uint32_t>(frame_index >> 32),
                    0x67686f73u};
  return std::mt19937_64(seq);
}

}  // namespace detail

/// Draws one frame. Per object pixel: k ~ Poisson(n f), detections
/// d ~ Binomial(k, η0), coincidences c ~ Binomial(d, η1); both are binned to
/// detector pixels. Noise photons add Poisson(η0² n_eps b²) counts to ξ0.
inline MeasurementPair simulate_frame(const SimulationConfig& config, long frame_index) {
  if (frame_index < 0 || frame_index >= config.frames) throw InvalidArgument("frame_index out of range");
  const auto& geom = config.geom;
  const auto& p = config.params;
  auto rng = detail::frame_engine(config.seed, static_cast<std::uint64_t>(frame_index));

  MeasurementPair out{Counts::Zero(geom.detector_pixels()), Counts::Zero(geom.detector_pixels())};
  const int w = config.f.width();
  for (int r = 0; r < config.f.height(); ++r) {
    for (int c = 0; c < w; ++c) {
      const double mean = p.n * config.f.at(r, c);
      if (mean <= 0.0) continue;
      const std::int64_t pairs = std::poisson_distribution<std::int64_t>(mean)(rng);
      if (pairs == 0) continue;
      const std::int64_t detected = std::binomial_distribution<std::int64_t>(pairs, p.eta0)(rng);
      const std::int64_t coincident =
          detected == 0 ? 0 : std::binomial_distribution<std::int64_t>(detected, p.eta1)(rng);
      assert(coincident <= detected && detected <= pairs);
      const auto d = geom.detector_index(r, c);
      out.xi0[d] += detected;
      out.xi1[d] += coincident;
    }
  }

  const double noise_mean = p.eta0 * p.eta0 * p.n_eps * geom.bin_factor * geom.bin_factor;
  if (noise_mean > 0.0) {
    std::poisson_distribution<std::int64_t> noise(noise_mean);
    for (Eigen::Index d = 0; d < out.xi0.size(); ++d) out.xi0[d] += noise(rng);
  }
  return out;
}

/// All frames of a configuration. Frames are evaluated on worker threads;
/// the result equals sequential evaluation.
inline std::vector<MeasurementPair> simulate_acquisition(const SimulationConfig& config, unsigned threads = 0) {
  config.validate();
  const auto frames = static_cast<std::size_t>(config.frames);
  std::vector<MeasurementPair> out(frames);
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, frames));

  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) out[i] = simulate_frame(config, static_cast<long>(i));
  };
  if (threads <= 1) {
    work(0, frames);
    return out;
  }
  std::vector<std::jthread> pool;
  const std::size_t chunk = (frames + threads - 1) / threads;
  for (std::size_t begin = 0; begin < frames; begin += chunk)
    pool.emplace_back(work, begin, std::min(frames, begin + chunk));
  return out;
}

/// Sum of ξ0 and ξ1 over frames.
inline MeasurementPair accumulate(const std::vector<MeasurementPair>& samples) {
  if (samples.empty()) throw InsufficientSamples("accumulate: no samples");
  MeasurementPair sum{Counts::Zero(samples.front().xi0.size()), Counts::Zero(samples.front().xi1.size())};
  for (const auto& s : samples) {
    sum.xi0 += s.xi0;
    sum.xi1 += s.xi1;
  }
  return sum;
}

/// Sample moments of stacked (ξ0; ξ1).
struct EmpiricalMoments {
  Vector mean;
  Matrix covariance;         // divisor N − 1
  Vector mean_stderr;        // sqrt(var / N)
  Matrix covariance_stderr;  // asymptotic standard error of each covariance entry
  long samples = 0;
};

inline EmpiricalMoments empirical_moments(const std::vector<MeasurementPair>& samples) {
  if (samples.size() < 2) throw InsufficientSamples("empirical_moments needs at least 2 samples");
  const auto n = static_cast<Eigen::Index>(samples.size());
  const Eigen::Index dim = samples.front().xi0.size() + samples.front().xi1.size();

  Matrix x(dim, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto& s = samples[static_cast<std::size_t>(k)];
    detail::require_dims(s.xi0.size() + s.xi1.size() == dim, "empirical_moments: samples differ in size");
    x.col(k) = s.stacked();
  }

  EmpiricalMoments m;
  m.samples = static_cast<long>(n);
  m.mean = x.rowwise().mean();
  x.colwise() -= m.mean;
  const double nd = static_cast<double>(n);
  m.covariance = symmetrize((x * x.transpose()) / (nd - 1.0));
  m.mean_stderr = (m.covariance.diagonal() / nd).cwiseSqrt();

  // se(s_jk)² ≈ (E[(x_j−μ_j)²(x_k−μ_k)²] − σ_jk²) / N
  const Matrix sq = x.array().square().matrix();
  const Matrix fourth = (sq * sq.transpose()) / nd;
  const Matrix biased = (x * x.transpose()) / nd;
  m.covariance_stderr = ((fourth.array() - biased.array().square()).max(0.0) / nd).sqrt().matrix();
  return m;
}

}  // namespace dualgi
