#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "dualgi/error.hpp"
#include "dualgi/gain_analysis.hpp"
#include "dualgi/imaging_model.hpp"
#include "dualgi/photon_sim.hpp"

namespace dualgi::io {

namespace fs = std::filesystem;

namespace detail {

inline std::ofstream open_out(const fs::path& path, bool binary = false) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

// Next header token of a PNM file, skipping whitespace and '#' comments.
inline std::string pnm_token(std::istream& in) {
  std::string tok;
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(ch));
  }
  return tok;
}

}  // namespace detail

/// 8-bit binary PGM (P5); values in [0, 1] map linearly onto 0..255.
inline void write_pgm(const fs::path& path, int width, int height, const Vector& values) {
  if (static_cast<Eigen::Index>(width) * height != values.size())
    throw DimensionMismatch("write_pgm: width*height does not match value count");
  auto out = detail::open_out(path, true);
  out << "P5\n" << width << ' ' << height << "\n255\n";
  std::vector<unsigned char> bytes(static_cast<std::size_t>(values.size()));
  for (Eigen::Index i = 0; i < values.size(); ++i)
    bytes[static_cast<std::size_t>(i)] =
        static_cast<unsigned char>(std::lround(std::clamp(values[i], 0.0, 1.0) * 255.0));
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

inline void write_pgm(const fs::path& path, const TransmittanceMap& f) {
  write_pgm(path, f.width(), f.height(), f.values());
}

inline TransmittanceMap read_pgm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  if (detail::pnm_token(in) != "P5") throw IoError(path.string() + ": not a binary PGM (P5)");
  int width = 0, height = 0, maxval = 0;
  try {
    width = std::stoi(detail::pnm_token(in));
    height = std::stoi(detail::pnm_token(in));
    maxval = std::stoi(detail::pnm_token(in));
  } catch (const std::exception&) {
    throw IoError(path.string() + ": malformed PGM header");
  }
  if (width < 1 || height < 1 || maxval < 1 || maxval > 255)
    throw IoError(path.string() + ": unsupported PGM dimensions or maxval (8-bit only)");
  std::vector<unsigned char> bytes(static_cast<std::size_t>(width) * static_cast<std::size_t>(height));
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (in.gcount() != static_cast<std::streamsize>(bytes.size())) throw IoError(path.string() + ": truncated PGM");
  Vector v(static_cast<Eigen::Index>(bytes.size()));
  for (std::size_t i = 0; i < bytes.size(); ++i)
    v[static_cast<Eigen::Index>(i)] = std::min(1.0, static_cast<double>(bytes[i]) / maxval);
  return {width, height, std::move(v)};
}

/// Count image scaled so that the largest count maps to 255; returns that
/// count and records it in `<path>.scale.txt`. All-zero counts give a black image.
inline std::int64_t write_counts_pgm(const fs::path& path, int width, int height, const Counts& counts) {
  const std::int64_t peak = counts.size() ? std::max<std::int64_t>(0, counts.maxCoeff()) : 0;
  Vector scaled = peak > 0 ? Vector(counts.cast<double>() / static_cast<double>(peak)) : Vector::Zero(counts.size());
  write_pgm(path, width, height, scaled);
  auto side = detail::open_out(fs::path(path.string() + ".scale.txt"));
  side << "max_count=" << peak << "\n";
  side << "# pixel value v corresponds to v/255 * max_count counts\n";
  return peak;
}

/// Raw accumulated counts: detector,row,col,xi0,xi1.
inline void write_counts_csv(const fs::path& path, const DetectorGeometry& geom, const MeasurementPair& counts) {
  auto out = detail::open_out(path);
  out << "detector,row,col,xi0,xi1\n";
  for (int r = 0; r < geom.detector_height; ++r)
    for (int c = 0; c < geom.detector_width; ++c) {
      const Eigen::Index d = static_cast<Eigen::Index>(r) * geom.detector_width + c;
      out << d << ',' << r << ',' << c << ',' << counts.xi0[d] << ',' << counts.xi1[d] << '\n';
    }
}

inline MeasurementPair read_counts_csv(const fs::path& path, const DetectorGeometry& geom) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  if (line.rfind("detector,row,col,xi0,xi1", 0) != 0) throw IoError(path.string() + ": unexpected header");
  MeasurementPair out{Counts::Zero(geom.detector_pixels()), Counts::Zero(geom.detector_pixels())};
  std::vector<bool> seen(static_cast<std::size_t>(geom.detector_pixels()), false);
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    long long d, r, c, x0, x1;
    if (!(ss >> d >> r >> c >> x0 >> x1) || d < 0 || d >= geom.detector_pixels() || x0 < 0 || x1 < 0)
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": malformed counts row");
    out.xi0[d] = x0;
    out.xi1[d] = x1;
    seen[static_cast<std::size_t>(d)] = true;
  }
  if (std::find(seen.begin(), seen.end(), false) != seen.end())
    throw IoError(path.string() + ": missing detector rows");
  return out;
}

/// Estimate on the object grid: row,col,value.
inline void write_estimate_csv(const fs::path& path, int width, int height, const Vector& values) {
  if (static_cast<Eigen::Index>(width) * height != values.size())
    throw DimensionMismatch("write_estimate_csv: width*height does not match value count");
  auto out = detail::open_out(path);
  out << "row,col,value\n" << std::setprecision(17);
  for (int r = 0; r < height; ++r)
    for (int c = 0; c < width; ++c) out << r << ',' << c << ',' << values[static_cast<Eigen::Index>(r) * width + c] << '\n';
}

inline void write_gain_csv(const fs::path& path, const std::vector<GainPoint>& points) {
  auto out = detail::open_out(path);
  out << "eta,noise_ratio,mse_ghost,mse_combined,mse_gain,photon_gain\n" << std::setprecision(12);
  for (const auto& p : points)
    out << p.eta << ',' << p.noise_ratio << ',' << p.mse_ghost_only << ',' << p.mse_combined << ',' << p.mse_gain
        << ',' << p.photon_gain << '\n';
}

}  // namespace dualgi::io
