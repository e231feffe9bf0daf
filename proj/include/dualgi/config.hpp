#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "dualgi/error.hpp"
#include "dualgi/gain_analysis.hpp"
#include "dualgi/imaging_model.hpp"

namespace dualgi {

enum class BasisKind { haar, pixel, none };

inline std::string to_string(BasisKind b) {
  switch (b) {
    case BasisKind::haar: return "haar";
    case BasisKind::pixel: return "pixel";
    case BasisKind::none: return "none";
  }
  return "none";
}

/// Everything a CLI run needs. Defaults reproduce the dual-arm slit experiment:
/// 24×24 slit object, 3× binning, n = 1, η0 = η1 = 0.4, n_eps = 0.1.
struct ExperimentConfig {
  std::string object = "slit";  // "slit" or a PGM path
  std::filesystem::path base_dir = ".";
  int bin_factor = 3;
  AcquisitionParams params{1.0, 0.4, 0.4, 0.1};
  long frames = 1;
  std::uint64_t seed = 42;

  std::vector<double> tau_list{0.0, 0.1, 0.2};
  BasisKind basis = BasisKind::haar;
  std::optional<std::filesystem::path> counts_path;

  std::vector<double> gain_eta = linear_grid(0.05, 1.0, 0.05);
  std::vector<double> gain_noise_ratio = linear_grid(0.0, 1.0, 0.05);
  int gain_object_size = 12;
  int gain_bin_factor = 1;
  double gain_n_ref = 1.0;

  long validate_frames = 100000;
  std::uint64_t validate_seed = 7;

  std::filesystem::path outputs_dir = "out";

  void validate() const {
    params.validate();
    if (bin_factor < 1) throw ConfigError("geometry.bin_factor must be >= 1");
    if (frames < 1) throw ConfigError("acquisition.frames must be >= 1");
    if (tau_list.empty()) throw ConfigError("reconstruction.tau must list at least one value");
    for (double t : tau_list)
      if (!(t >= 0.0 && t < 1.0)) throw ConfigError("reconstruction.tau values must lie in [0, 1)");
    for (double e : gain_eta)
      if (!(e > 0.0 && e <= 1.0)) throw ConfigError("gain.eta values must lie in (0, 1]");
    for (double r : gain_noise_ratio)
      if (!(r >= 0.0)) throw ConfigError("gain.noise_ratio values must be >= 0");
    if (gain_eta.empty() || gain_noise_ratio.empty()) throw ConfigError("gain grids must be non-empty");
    if (gain_object_size < 1 || gain_bin_factor < 1 || gain_object_size % gain_bin_factor != 0)
      throw ConfigError("gain.object_size must be a positive multiple of gain.bin_factor");
    if (!(gain_n_ref > 0.0)) throw ConfigError("gain.n_ref must be > 0");
    if (validate_frames < 2) throw ConfigError("validate.frames must be >= 2");
  }

  [[nodiscard]] std::filesystem::path object_path() const {
    std::filesystem::path p(object);
    return p.is_absolute() ? p : base_dir / p;
  }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double parse_double(std::string_view text, const std::string& key, int line) {
  text = trim(text);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(v))
    throw ConfigError(key + ": expected a number, got '" + std::string(text) + "'", line);
  return v;
}

template <typename Int>
Int parse_int(std::string_view text, const std::string& key, int line) {
  text = trim(text);
  Int v{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw ConfigError(key + ": expected an integer, got '" + std::string(text) + "'", line);
  return v;
}

// "a, b, c" or "start:stop:step"
inline std::vector<double> parse_list(std::string_view text, const std::string& key, int line) {
  text = trim(text);
  if (text.find(':') != std::string_view::npos) {
    std::vector<double> parts;
    std::size_t pos = 0;
    while (true) {
      const auto next = text.find(':', pos);
      parts.push_back(parse_double(text.substr(pos, next - pos), key, line));
      if (next == std::string_view::npos) break;
      pos = next + 1;
    }
    if (parts.size() != 3) throw ConfigError(key + ": range must be start:stop:step", line);
    try {
      return linear_grid(parts[0], parts[1], parts[2]);
    } catch (const Error&) {
      throw ConfigError(key + ": invalid range", line);
    }
  }
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto next = text.find(',', pos);
    out.push_back(parse_double(text.substr(pos, next == std::string_view::npos ? next : next - pos), key, line));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

}  // namespace detail

/// Parses sectioned key = value text. Unknown sections or keys, duplicates and
/// malformed values are rejected with the offending line number.
inline ExperimentConfig parse_config(std::istream& in, const std::filesystem::path& base_dir = ".") {
  using detail::parse_double;
  using detail::parse_int;
  using detail::parse_list;

  ExperimentConfig cfg;
  cfg.base_dir = base_dir;
  std::string section;
  std::set<std::string> seen;
  std::string raw;
  int line = 0;

  while (std::getline(in, raw)) {
    ++line;
    std::string_view text(raw);
    if (const auto hash = text.find('#'); hash != std::string_view::npos) text = text.substr(0, hash);
    text = detail::trim(text);
    if (text.empty()) continue;

    if (text.front() == '[') {
      if (text.back() != ']') throw ConfigError("malformed section header", line);
      section = std::string(detail::trim(text.substr(1, text.size() - 2)));
      static const std::set<std::string> sections{"object", "geometry", "acquisition", "reconstruction",
                                                  "gain",   "validate", "output"};
      if (!sections.contains(section)) throw ConfigError("unknown section [" + section + "]", line);
      continue;
    }
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) throw ConfigError("expected key = value", line);
    if (section.empty()) throw ConfigError("key outside of any section", line);
    const std::string key = section + "." + std::string(detail::trim(text.substr(0, eq)));
    const std::string_view value = detail::trim(text.substr(eq + 1));
    if (!seen.insert(key).second) throw ConfigError("duplicate key " + key, line);

    if (key == "object.source") {
      if (value.empty()) throw ConfigError(key + ": empty value", line);
      cfg.object = std::string(value);
    } else if (key == "geometry.bin_factor") {
      cfg.bin_factor = parse_int<int>(value, key, line);
    } else if (key == "acquisition.n") {
      cfg.params.n = parse_double(value, key, line);
    } else if (key == "acquisition.eta0") {
      cfg.params.eta0 = parse_double(value, key, line);
    } else if (key == "acquisition.eta1") {
      cfg.params.eta1 = parse_double(value, key, line);
    } else if (key == "acquisition.n_eps") {
      cfg.params.n_eps = parse_double(value, key, line);
    } else if (key == "acquisition.frames") {
      cfg.frames = parse_int<long>(value, key, line);
    } else if (key == "acquisition.seed") {
      cfg.seed = parse_int<std::uint64_t>(value, key, line);
    } else if (key == "reconstruction.tau") {
      cfg.tau_list = parse_list(value, key, line);
    } else if (key == "reconstruction.basis") {
      if (value == "haar") cfg.basis = BasisKind::haar;
      else if (value == "pixel") cfg.basis = BasisKind::pixel;
      else if (value == "none") cfg.basis = BasisKind::none;
      else throw ConfigError(key + ": expected haar, pixel or none", line);
    } else if (key == "reconstruction.counts") {
      std::filesystem::path p{std::string(value)};
      cfg.counts_path = p.is_absolute() ? p : base_dir / p;
    } else if (key == "gain.eta") {
      cfg.gain_eta = parse_list(value, key, line);
    } else if (key == "gain.noise_ratio") {
      cfg.gain_noise_ratio = parse_list(value, key, line);
    } else if (key == "gain.object_size") {
      cfg.gain_object_size = parse_int<int>(value, key, line);
    } else if (key == "gain.bin_factor") {
      cfg.gain_bin_factor = parse_int<int>(value, key, line);
    } else if (key == "gain.n_ref") {
      cfg.gain_n_ref = parse_double(value, key, line);
    } else if (key == "validate.frames") {
      cfg.validate_frames = parse_int<long>(value, key, line);
    } else if (key == "validate.seed") {
      cfg.validate_seed = parse_int<std::uint64_t>(value, key, line);
    } else if (key == "output.dir") {
      std::filesystem::path p{std::string(value)};
      cfg.outputs_dir = p.is_absolute() ? p : base_dir / p;
    } else {
      throw ConfigError("unknown key " + key, line);
    }
  }
  try {
    cfg.validate();
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  return parse_config(in, path.has_parent_path() ? path.parent_path() : std::filesystem::path("."));
}

}  // namespace dualgi
