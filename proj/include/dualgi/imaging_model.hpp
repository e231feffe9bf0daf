#pragma once

#include <cstddef>
#include <string>
#include <utility>

#include "dualgi/error.hpp"
#include "dualgi/linalg.hpp"

namespace dualgi {

/// Per-pixel object transmittance f, row-major, every value in [0, 1].
class TransmittanceMap {
public:
  TransmittanceMap() = default;

  TransmittanceMap(int width, int height, Vector values)
      : width_(width), height_(height), values_(std::move(values)) {
    if (width < 0 || height < 0 || static_cast<Eigen::Index>(width) * height != values_.size())
      throw DimensionMismatch("TransmittanceMap: width*height does not match value count");
    for (Eigen::Index i = 0; i < values_.size(); ++i) {
      const double v = values_[i];
      if (!(v >= 0.0 && v <= 1.0))
        throw InvalidArgument("TransmittanceMap: value " + std::to_string(v) + " at index " + std::to_string(i) +
                              " outside [0, 1]");
    }
  }

  static TransmittanceMap constant(int width, int height, double value) {
    return {width, height, Vector::Constant(static_cast<Eigen::Index>(width) * height, value)};
  }

  [[nodiscard]] int width() const noexcept { return width_; }
  [[nodiscard]] int height() const noexcept { return height_; }
  [[nodiscard]] Eigen::Index size() const noexcept { return values_.size(); }
  [[nodiscard]] const Vector& values() const noexcept { return values_; }
  [[nodiscard]] double at(int row, int col) const { return values_[static_cast<Eigen::Index>(row) * width_ + col]; }

private:
  int width_ = 0;
  int height_ = 0;
  Vector values_;
};

/// Detector pixels cover bin_factor × bin_factor blocks of object pixels.
struct DetectorGeometry {
  int bin_factor = 1;
  int detector_width = 0;
  int detector_height = 0;

  static DetectorGeometry for_object(int object_width, int object_height, int bin_factor) {
    if (bin_factor < 1) throw InvalidArgument("bin_factor must be >= 1");
    if (object_width < 1 || object_height < 1) throw InvalidArgument("object dimensions must be positive");
    if (object_width % bin_factor != 0 || object_height % bin_factor != 0)
      throw NonDivisibleGeometry("object " + std::to_string(object_width) + "x" + std::to_string(object_height) +
                                 " is not divisible by bin factor " + std::to_string(bin_factor));
    return {bin_factor, object_width / bin_factor, object_height / bin_factor};
  }

  [[nodiscard]] int object_width() const noexcept { return detector_width * bin_factor; }
  [[nodiscard]] int object_height() const noexcept { return detector_height * bin_factor; }
  [[nodiscard]] Eigen::Index detector_pixels() const noexcept {
    return static_cast<Eigen::Index>(detector_width) * detector_height;
  }
  [[nodiscard]] Eigen::Index object_pixels() const noexcept {
    return static_cast<Eigen::Index>(object_width()) * object_height();
  }
  /// Detector pixel index covering a given object pixel.
  [[nodiscard]] Eigen::Index detector_index(int object_row, int object_col) const noexcept {
    return static_cast<Eigen::Index>(object_row / bin_factor) * detector_width + object_col / bin_factor;
  }
};

/// Illumination and detector parameters of one acquisition.
struct AcquisitionParams {
  double n = 1.0;      // mean illuminating photons per object pixel
  double eta0 = 1.0;   // object-arm quantum efficiency
  double eta1 = 1.0;   // restoring-arm quantum efficiency
  double n_eps = 0.0;  // mean noise photons per object pixel

  void validate() const {
    if (!(n >= 0.0)) throw InvalidArgument("n must be >= 0");
    if (!(n_eps >= 0.0)) throw InvalidArgument("n_eps must be >= 0");
    if (!(eta0 >= 0.0 && eta0 <= 1.0)) throw InvalidArgument("eta0 must lie in [0, 1]");
    if (!(eta1 >= 0.0 && eta1 <= 1.0)) throw InvalidArgument("eta1 must lie in [0, 1]");
  }

  /// Parameters describing the sum of `frames` independent acquisitions.
  [[nodiscard]] AcquisitionParams accumulated(long frames) const {
    return {n * static_cast<double>(frames), eta0, eta1, n_eps * static_cast<double>(frames)};
  }
};

/// A0: detector pixel d sums the block of object pixels it covers.
inline Matrix build_binning_operator(int object_width, int object_height, int bin_factor) {
  const auto geom = DetectorGeometry::for_object(object_width, object_height, bin_factor);
  Matrix a0 = Matrix::Zero(geom.detector_pixels(), geom.object_pixels());
  for (int r = 0; r < object_height; ++r)
    for (int c = 0; c < object_width; ++c)
      a0(geom.detector_index(r, c), static_cast<Eigen::Index>(r) * object_width + c) = 1.0;
  return a0;
}

inline Matrix build_binning_operator(const DetectorGeometry& geom) {
  return build_binning_operator(geom.object_width(), geom.object_height(), geom.bin_factor);
}

/// Stacked operator (n η0 A0; n η0 η1 A0) acting on f.
inline Matrix stacked_forward_operator(const Matrix& a0, const AcquisitionParams& params) {
  params.validate();
  const Eigen::Index m = a0.rows();
  Matrix a(2 * m, a0.cols());
  a.topRows(m) = (params.n * params.eta0) * a0;
  a.bottomRows(m) = (params.n * params.eta0 * params.eta1) * a0;
  return a;
}

/// Operator of the ghost image alone, n η0 η1 A0.
inline Matrix ghost_forward_operator(const Matrix& a0, const AcquisitionParams& params) {
  params.validate();
  return (params.n * params.eta0 * params.eta1) * a0;
}

/// Mean noise-photon count reaching each detector pixel before the detector
/// (n_eps times the number of object pixels the detector pixel covers).
inline Vector noise_photon_exposure(const Matrix& a0, double n_eps) {
  return n_eps * a0.rowwise().sum();
}

struct ForwardMean {
  Vector object_arm;
  Vector ghost_arm;
};

/// Expected counts of both arms. Noise photons reach the object arm only and
/// contribute η0² n_eps per covered object pixel, the convention of the noise
/// covariance model.
inline ForwardMean forward_mean(const Matrix& a0, const TransmittanceMap& f, const AcquisitionParams& params) {
  params.validate();
  detail::require_dims(a0.cols() == f.size(), "forward_mean: A0 columns do not match object size");
  const Vector signal = params.n * (a0 * f.values());
  ForwardMean mean;
  mean.object_arm = params.eta0 * signal + params.eta0 * params.eta0 * noise_photon_exposure(a0, params.n_eps);
  mean.ghost_arm = params.eta0 * params.eta1 * signal;
  return mean;
}

}  // namespace dualgi
