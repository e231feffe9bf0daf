#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "dualgi/config.hpp"
#include "dualgi/gain_analysis.hpp"
#include "dualgi/haar.hpp"
#include "dualgi/imaging_model.hpp"
#include "dualgi/io.hpp"
#include "dualgi/noise_model.hpp"
#include "dualgi/photon_sim.hpp"
#include "dualgi/reduction.hpp"

namespace dualgi {

namespace fs = std::filesystem;

/// Transparent vertical slit of `slit_width` columns, centred, on a uniform
/// background of transmittance `background`.
inline TransmittanceMap make_slit_object(int width = 24, int height = 24, int slit_width = 4,
                                         double background = 0.05) {
  if (slit_width < 0 || slit_width > width) throw InvalidArgument("slit wider than object");
  Vector v = Vector::Constant(static_cast<Eigen::Index>(width) * height, background);
  const int first = (width - slit_width) / 2;
  for (int r = 0; r < height; ++r)
    for (int c = first; c < first + slit_width; ++c) v[static_cast<Eigen::Index>(r) * width + c] = 1.0;
  return {width, height, std::move(v)};
}

inline TransmittanceMap load_object(const ExperimentConfig& cfg) {
  if (cfg.object == "slit") return make_slit_object();
  return io::read_pgm(cfg.object_path());
}

inline SimulationConfig simulation_config(const ExperimentConfig& cfg, TransmittanceMap f) {
  auto geom = DetectorGeometry::for_object(f.width(), f.height(), cfg.bin_factor);
  return {std::move(f), geom, cfg.params, cfg.frames, cfg.seed};
}

struct SimulationOutput {
  SimulationConfig config;
  MeasurementPair accumulated;  // ξ0, ξ1 summed over frames
};

inline SimulationOutput run_simulation(const ExperimentConfig& cfg) {
  cfg.validate();
  auto sim = simulation_config(cfg, load_object(cfg));
  auto frames = simulate_acquisition(sim);
  return {std::move(sim), accumulate(frames)};
}

inline void write_manifest(const fs::path& path, const ExperimentConfig& cfg, const std::string& command,
                           const TransmittanceMap* object = nullptr) {
  auto out = io::detail::open_out(path);
  out << std::setprecision(17);
  out << "command=" << command << "\n";
  out << "object=" << cfg.object << "\n";
  if (object) out << "object_width=" << object->width() << "\nobject_height=" << object->height() << "\n";
  out << "bin_factor=" << cfg.bin_factor << "\n";
  out << "n=" << cfg.params.n << "\neta0=" << cfg.params.eta0 << "\neta1=" << cfg.params.eta1
      << "\nn_eps=" << cfg.params.n_eps << "\n";
  out << "frames=" << cfg.frames << "\nseed=" << cfg.seed << "\n";
  out << "tau=";
  for (std::size_t i = 0; i < cfg.tau_list.size(); ++i) out << (i ? "," : "") << cfg.tau_list[i];
  out << "\nbasis=" << to_string(cfg.basis) << "\n";
  if (cfg.counts_path) out << "counts=" << cfg.counts_path->string() << "\n";
  out << "gain_object_size=" << cfg.gain_object_size << "\ngain_bin_factor=" << cfg.gain_bin_factor
      << "\ngain_n_ref=" << cfg.gain_n_ref << "\n";
  out << "gain_eta_points=" << cfg.gain_eta.size() << "\ngain_noise_ratio_points=" << cfg.gain_noise_ratio.size()
      << "\n";
  out << "validate_frames=" << cfg.validate_frames << "\nvalidate_seed=" << cfg.validate_seed << "\n";
}

/// Writes object.pgm, xi0.pgm, xi1.pgm (auto-scaled, with .scale.txt
/// sidecars), counts.csv and manifest.txt under cfg.outputs_dir.
inline SimulationOutput cmd_simulate(const ExperimentConfig& cfg) {
  auto result = run_simulation(cfg);
  const auto& dir = cfg.outputs_dir;
  const auto& g = result.config.geom;
  io::write_pgm(dir / "object.pgm", result.config.f);
  io::write_counts_pgm(dir / "xi0.pgm", g.detector_width, g.detector_height, result.accumulated.xi0);
  io::write_counts_pgm(dir / "xi1.pgm", g.detector_width, g.detector_height, result.accumulated.xi1);
  io::write_counts_csv(dir / "counts.csv", g, result.accumulated);
  write_manifest(dir / "manifest.txt", cfg, "simulate", &result.config.f);
  return result;
}

inline constexpr const char* kCombinedVariant = "red";
inline constexpr const char* kGhostOnlyVariant = "red-s";

struct EstimateRecord {
  std::string variant;  // "red" (both images) or "red-s" (ghost image only)
  double tau = 0.0;
  Vector estimate;
  double squared_error = 0.0;         // ‖estimate − f‖²
  double bright_squared_error = 0.0;  // restricted to pixels with f ≥ 0.5
  int zeroed = 0;
  double mse_bound = 0.0;  // linear-reduction MSE, +inf when infeasible
};

struct ReconstructionOutput {
  TransmittanceMap truth;
  std::vector<EstimateRecord> estimates;

  [[nodiscard]] const EstimateRecord& find(const std::string& variant, double tau) const {
    for (const auto& e : estimates)
      if (e.variant == variant && e.tau == tau) return e;
    throw InvalidArgument("no estimate for " + variant + " at tau " + std::to_string(tau));
  }
};

inline std::optional<SparsityBasis> make_basis(BasisKind kind, const TransmittanceMap& f) {
  switch (kind) {
    case BasisKind::haar: return SparsityBasis::haar(f.width(), f.height());
    case BasisKind::pixel: return SparsityBasis::pixel(f.size());
    case BasisKind::none: return std::nullopt;
  }
  return std::nullopt;
}

/// Precomputed combined and ghost-only estimators for one object and parameter set.
/// The noise covariance is evaluated at the true object, as in a simulation
/// study where f is known to the experimenter.
struct ReconstructionSetup {
  TransmittanceMap truth;
  DetectorGeometry geom;
  Estimator combined;
  Estimator ghost_only;
};

inline ReconstructionSetup make_reconstruction_setup(const ExperimentConfig& cfg, const TransmittanceMap& truth) {
  const auto geom = DetectorGeometry::for_object(truth.width(), truth.height(), cfg.bin_factor);
  const Matrix a0 = build_binning_operator(geom);
  const auto params = cfg.params.accumulated(cfg.frames);
  const auto basis = make_basis(cfg.basis, truth);
  return {truth, geom, Estimator(combined_problem(a0, truth, params), basis),
          Estimator(ghost_only_problem(a0, truth, params), basis)};
}

inline ReconstructionOutput run_reconstruction(const ReconstructionSetup& setup, const std::vector<double>& taus,
                                               const MeasurementPair& counts) {
  const Vector stacked = counts.stacked();
  const Vector ghost = counts.xi1.cast<double>();
  const Vector& f = setup.truth.values();
  ReconstructionOutput out{setup.truth, {}};
  for (const char* variant : {kCombinedVariant, kGhostOnlyVariant}) {
    const bool both = std::string(variant) == kCombinedVariant;
    const auto& est = both ? setup.combined : setup.ghost_only;
    for (double tau : taus) {
      auto res = est.run(both ? stacked : ghost, tau);
      EstimateRecord rec{variant, tau, res.estimate, 0.0, 0.0, res.zeroed, res.linear.mse};
      const Vector err = res.estimate - f;
      rec.squared_error = err.squaredNorm();
      for (Eigen::Index i = 0; i < f.size(); ++i)
        if (f[i] >= 0.5) rec.bright_squared_error += err[i] * err[i];
      out.estimates.push_back(std::move(rec));
    }
  }
  return out;
}

inline std::string tau_label(double tau) {
  std::ostringstream s;
  s << tau;
  return s.str();
}

/// Reconstructs from cfg.counts_path when set, otherwise from a live
/// simulation. Writes estimate_<variant>_tau<τ>.{pgm,csv}, summary.csv and
/// manifest.txt under cfg.outputs_dir.
inline ReconstructionOutput cmd_reconstruct(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto truth = load_object(cfg);
  const auto setup = make_reconstruction_setup(cfg, truth);
  const MeasurementPair counts =
      cfg.counts_path ? io::read_counts_csv(*cfg.counts_path, setup.geom) : run_simulation(cfg).accumulated;
  auto out = run_reconstruction(setup, cfg.tau_list, counts);

  const auto& dir = cfg.outputs_dir;
  for (const auto& e : out.estimates) {
    const std::string stem = "estimate_" + e.variant + "_tau" + tau_label(e.tau);
    io::write_pgm(dir / (stem + ".pgm"), truth.width(), truth.height(), e.estimate);
    io::write_estimate_csv(dir / (stem + ".csv"), truth.width(), truth.height(), e.estimate);
  }
  auto summary = io::detail::open_out(dir / "summary.csv");
  summary << "variant,tau,squared_error,mean_squared_error,bright_squared_error,zeroed,linear_mse\n"
          << std::setprecision(12);
  for (const auto& e : out.estimates)
    summary << e.variant << ',' << e.tau << ',' << e.squared_error << ','
            << e.squared_error / static_cast<double>(truth.size()) << ',' << e.bright_squared_error << ','
            << e.zeroed << ',' << e.mse_bound << '\n';
  write_manifest(dir / "manifest.txt", cfg, "reconstruct", &truth);
  return out;
}

/// Photon-gain surface over the configured grid on an all-ones object.
inline std::vector<GainPoint> run_gain(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto f = TransmittanceMap::constant(cfg.gain_object_size, cfg.gain_object_size, 1.0);
  const Matrix a0 = build_binning_operator(f.width(), f.height(), cfg.gain_bin_factor);
  const Matrix u = Matrix::Identity(f.size(), f.size());
  return gain_surface(a0, f, cfg.gain_eta, cfg.gain_noise_ratio, u, cfg.gain_n_ref);
}

inline std::vector<GainPoint> cmd_gain(const ExperimentConfig& cfg) {
  auto points = run_gain(cfg);
  io::write_gain_csv(cfg.outputs_dir / "gain.csv", points);
  write_manifest(cfg.outputs_dir / "manifest.txt", cfg, "gain");
  return points;
}

struct CheckResult {
  std::string name;
  double measured = 0.0;
  double expected = 0.0;
  double tolerance = 0.0;
  bool passed = false;
  std::string detail;
};

struct ValidationReport {
  std::vector<CheckResult> checks;

  [[nodiscard]] bool passed() const {
    for (const auto& c : checks)
      if (!c.passed) return false;
    return !checks.empty();
  }

  void print(std::ostream& os) const {
    for (const auto& c : checks) {
      os << (c.passed ? "[PASS] " : "[FAIL] ") << std::left << std::setw(28) << c.name << std::right
         << " measured=" << std::setprecision(8) << c.measured << " expected=" << c.expected
         << " tolerance=" << c.tolerance;
      if (!c.detail.empty()) os << "  (" << c.detail << ")";
      os << "\n";
    }
    os << (passed() ? "all checks passed" : "validation FAILED") << "\n";
  }
};

namespace detail {

inline double relative_difference(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

}  // namespace detail

/// Runs the oracle checks on a small configuration. `perturb_cov` scales the
/// analytic covariance by (1 + perturb_cov) before the Monte Carlo comparison,
/// which must then fail.
inline ValidationReport cmd_validate(const ExperimentConfig& cfg, double perturb_cov = 0.0) {
  cfg.validate();
  ValidationReport report;

  Vector fv(4);
  fv << 0.9, 0.5, 0.2, 0.7;
  const TransmittanceMap f(2, 2, fv);
  const auto geom = DetectorGeometry::for_object(2, 2, 1);
  const AcquisitionParams params{2.0, 0.6, 0.5, 0.3};
  const Matrix a0 = build_binning_operator(geom);
  const SimulationConfig sim{f, geom, params, cfg.validate_frames, cfg.validate_seed};
  const auto moments = empirical_moments(simulate_acquisition(sim));

  {
    const Matrix analytic = (1.0 + perturb_cov) * covariance_degraded(a0, f, params).sigma_nu;
    int beyond = 0;
    double worst = 0.0;
    const auto entries = analytic.size();
    for (Eigen::Index i = 0; i < analytic.rows(); ++i)
      for (Eigen::Index j = 0; j < analytic.cols(); ++j) {
        const double diff = std::abs(moments.covariance(i, j) - analytic(i, j));
        const double se = moments.covariance_stderr(i, j);
        if (diff > 3.0 * se) ++beyond;
        if (se > 0.0) worst = std::max(worst, diff / se);
      }
    const double frac = static_cast<double>(beyond) / static_cast<double>(entries);
    report.checks.push_back({"covariance_monte_carlo", frac, 0.0, 0.05, frac <= 0.05,
                             std::to_string(beyond) + " of " + std::to_string(entries) +
                                 " entries beyond 3 s.e., max z " + std::to_string(worst)});
  }
  {
    const auto mean = forward_mean(a0, f, params);
    Vector expected(2 * a0.rows());
    expected << mean.object_arm, mean.ghost_arm;
    int beyond = 0;
    for (Eigen::Index i = 0; i < expected.size(); ++i)
      if (std::abs(moments.mean[i] - expected[i]) > 3.0 * moments.mean_stderr[i]) ++beyond;
    const double frac = static_cast<double>(beyond) / static_cast<double>(expected.size());
    report.checks.push_back({"mean_monte_carlo", frac, 0.0, 0.05, beyond == 0 || frac <= 0.05,
                             std::to_string(beyond) + " of " + std::to_string(expected.size()) +
                                 " entries beyond 3 s.e."});
  }
  {
    const Matrix u = Matrix::Identity(f.size(), f.size());
    const LinearReducer combined(combined_problem(a0, f, params));
    const LinearReducer ghost(ghost_only_problem(a0, f, params));
    const double rc = detail::relative_difference(mse_combined(a0, f, params, u), combined.mse());
    const double rg = detail::relative_difference(mse_ghost_only(a0, f, params, u), ghost.mse());
    report.checks.push_back({"mse_closed_form_combined", rc, 0.0, 1e-8, rc <= 1e-8, "closed form vs reduction"});
    report.checks.push_back({"mse_closed_form_ghost_only", rg, 0.0, 1e-8, rg <= 1e-8, "closed form vs reduction"});

    const Matrix a = stacked_forward_operator(a0, params);
    const double unbiased = (combined.reduction_operator() * a - u).norm() / u.norm();
    report.checks.push_back({"reduction_unbiased", unbiased, 0.0, 1e-8, unbiased <= 1e-8, "||R*A - U|| / ||U||"});
  }
  {
    const auto obj = TransmittanceMap::constant(4, 4, 1.0);
    const Matrix a = build_binning_operator(4, 4, 1);
    const double g = photon_number_gain(a, obj, 0.4, 0.0, Matrix::Identity(16, 16));
    report.checks.push_back({"photon_gain_anchor", g, 0.6, 1e-3, std::abs(g - 0.6) <= 1e-3, "eta=0.4, n_eps/n=0"});
  }
  return report;
}

}  // namespace dualgi
