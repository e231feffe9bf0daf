#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "dualgi/experiment.hpp"

using namespace dualgi;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("dualgi_exp_" + name);
  fs::remove_all(p);
  return p;
}

// Slit-region squared error: columns where the slit object is transparent.
double slit_error(const TransmittanceMap& truth, const Vector& est) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < est.size(); ++i)
    if (truth.values()[i] >= 0.5) s += (est[i] - truth.values()[i]) * (est[i] - truth.values()[i]);
  return s;
}

// Accumulated ghost image upsampled to the object grid and divided by its peak.
Vector normalized_ghost_image(const Counts& xi1, const DetectorGeometry& g) {
  const int b = g.bin_factor;
  Vector out(static_cast<Eigen::Index>(g.object_width()) * g.object_height());
  const double peak = std::max<double>(1.0, static_cast<double>(xi1.maxCoeff()));
  for (int r = 0; r < g.object_height(); ++r)
    for (int c = 0; c < g.object_width(); ++c)
      out[static_cast<Eigen::Index>(r) * g.object_width() + c] =
          static_cast<double>(xi1[g.detector_index(r / b, c / b)]) / peak;
  return out;
}

}  // namespace

TEST(SlitObject, Geometry) {
  const auto f = make_slit_object();
  EXPECT_EQ(f.width(), 24);
  EXPECT_EQ(f.height(), 24);
  for (int c = 0; c < 24; ++c) EXPECT_DOUBLE_EQ(f.at(7, c), c >= 10 && c <= 13 ? 1.0 : 0.05) << c;
  EXPECT_THROW(make_slit_object(4, 4, 5), InvalidArgument);
}

TEST(Simulate, ByteIdenticalAcrossRuns) {
  ExperimentConfig cfg;
  cfg.frames = 3;
  cfg.outputs_dir = scratch("sim_a");
  cmd_simulate(cfg);
  auto cfg_b = cfg;
  cfg_b.outputs_dir = scratch("sim_b");
  cmd_simulate(cfg_b);
  for (const char* name : {"object.pgm", "xi0.pgm", "xi1.pgm", "xi0.pgm.scale.txt", "counts.csv", "manifest.txt"}) {
    ASSERT_TRUE(fs::exists(cfg.outputs_dir / name)) << name;
    EXPECT_EQ(slurp(cfg.outputs_dir / name), slurp(cfg_b.outputs_dir / name)) << name;
  }
  const std::string manifest = slurp(cfg.outputs_dir / "manifest.txt");
  EXPECT_NE(manifest.find("seed=42\n"), std::string::npos);
  EXPECT_NE(manifest.find("eta0=0.40000000000000002\n"), std::string::npos);
  fs::remove_all(cfg.outputs_dir);
  fs::remove_all(cfg_b.outputs_dir);
}

TEST(Simulate, NoIlluminationGivesBlackImages) {
  ExperimentConfig cfg;
  cfg.params = {0.0, 0.4, 0.4, 0.0};
  cfg.outputs_dir = scratch("sim_dark");
  const auto out = cmd_simulate(cfg);
  EXPECT_EQ(out.accumulated.xi0.sum(), 0);
  EXPECT_EQ(out.accumulated.xi1.sum(), 0);
  EXPECT_EQ(slurp(cfg.outputs_dir / "xi0.pgm.scale.txt").rfind("max_count=0", 0), 0u);
  const auto img = io::read_pgm(cfg.outputs_dir / "xi1.pgm");
  EXPECT_EQ(img.values().maxCoeff(), 0.0);
  fs::remove_all(cfg.outputs_dir);
}

TEST(Simulate, GhostArmIsNoisierPerPixel) {
  // Per-pixel SNR mean/sd over frames: the coincidence arm loses a further η1.
  const auto f = make_slit_object();
  const auto geom = DetectorGeometry::for_object(24, 24, 3);
  const SimulationConfig sim{f, geom, {1.0, 0.4, 0.4, 0.1}, 4000, 42};
  const auto m = empirical_moments(simulate_acquisition(sim));
  const auto d = geom.detector_pixels();
  int worse = 0;
  for (Eigen::Index i = 0; i < d; ++i) {
    const double snr0 = m.mean[i] / std::sqrt(m.covariance(i, i));
    const double snr1 = m.mean[d + i] / std::sqrt(m.covariance(d + i, d + i));
    if (snr1 < snr0) ++worse;
  }
  EXPECT_EQ(worse, d);
}

TEST(Reconstruct, WritesEstimatesAndSummary) {
  ExperimentConfig cfg;
  cfg.outputs_dir = scratch("rec");
  const auto out = cmd_reconstruct(cfg);
  EXPECT_EQ(out.estimates.size(), 6u);
  for (const char* v : {"red", "red-s"})
    for (const char* t : {"0", "0.1", "0.2"}) {
      const std::string stem = std::string("estimate_") + v + "_tau" + t;
      EXPECT_TRUE(fs::exists(cfg.outputs_dir / (stem + ".pgm"))) << stem;
      EXPECT_TRUE(fs::exists(cfg.outputs_dir / (stem + ".csv"))) << stem;
    }
  const std::string summary = slurp(cfg.outputs_dir / "summary.csv");
  EXPECT_EQ(summary.rfind("variant,tau,squared_error", 0), 0u);
  for (const auto& e : out.estimates) {
    EXPECT_GE(e.estimate.minCoeff(), 0.0);
    EXPECT_LE(e.estimate.maxCoeff(), 1.0);
    EXPECT_TRUE(std::isinf(e.mse_bound));  // binning makes pixel-wise recovery infeasible
  }
  fs::remove_all(cfg.outputs_dir);
}

TEST(Reconstruct, ReadsCountsFromSimulateOutput) {
  ExperimentConfig cfg;
  cfg.frames = 5;
  cfg.outputs_dir = scratch("rec_counts");
  cmd_simulate(cfg);
  auto from_file = cfg;
  from_file.counts_path = cfg.outputs_dir / "counts.csv";
  from_file.outputs_dir = cfg.outputs_dir / "a";
  auto live = cfg;
  live.outputs_dir = cfg.outputs_dir / "b";
  const auto a = cmd_reconstruct(from_file);
  const auto b = cmd_reconstruct(live);
  for (std::size_t i = 0; i < a.estimates.size(); ++i)
    EXPECT_EQ(a.estimates[i].estimate, b.estimates[i].estimate);
  fs::remove_all(cfg.outputs_dir);
}

TEST(Reconstruct, SlitExperimentStatistics) {
  ExperimentConfig cfg;
  const auto truth = make_slit_object();
  const auto setup = make_reconstruction_setup(cfg, truth);
  const int seeds = 30;
  double combined = 0.0, ghost = 0.0, raw = 0.0;
  double slit_combined = 0.0, slit_ghost = 0.0;
  for (int s = 0; s < seeds; ++s) {
    auto c = cfg;
    c.seed = 1000 + static_cast<std::uint64_t>(s);
    const auto counts = run_simulation(c).accumulated;
    const auto out = run_reconstruction(setup, {0.0, 0.1, 0.2}, counts);
    combined += out.find(kCombinedVariant, 0.0).squared_error;
    ghost += out.find(kGhostOnlyVariant, 0.0).squared_error;
    slit_combined += slit_error(truth, out.find(kCombinedVariant, 0.1).estimate);
    slit_ghost += slit_error(truth, out.find(kGhostOnlyVariant, 0.1).estimate);
    raw += (normalized_ghost_image(counts.xi1, setup.geom) - truth.values()).squaredNorm();
    for (const char* v : {kCombinedVariant, kGhostOnlyVariant}) {
      EXPECT_LE(out.find(v, 0.0).zeroed, out.find(v, 0.1).zeroed);
      EXPECT_LE(out.find(v, 0.1).zeroed, out.find(v, 0.2).zeroed);
      EXPECT_EQ(out.find(v, 0.0).zeroed, 0);
    }
  }
  RecordProperty("mean_sq_combined", std::to_string(combined / seeds));
  RecordProperty("mean_sq_ghost_only", std::to_string(ghost / seeds));
  RecordProperty("mean_sq_raw", std::to_string(raw / seeds));
  EXPECT_LT(combined, ghost);
  EXPECT_LT(slit_combined, slit_ghost);
  EXPECT_LT(combined, raw);
}

TEST(Gain, SmallGridWritesCsv) {
  ExperimentConfig cfg;
  cfg.gain_eta = {0.4, 1.0};
  cfg.gain_noise_ratio = {0.0, 0.5};
  cfg.gain_object_size = 4;
  cfg.outputs_dir = scratch("gain");
  const auto pts = cmd_gain(cfg);
  ASSERT_EQ(pts.size(), 4u);
  EXPECT_NEAR(pts[0].photon_gain, 0.6, 1e-4);
  EXPECT_LE(pts[1].photon_gain, pts[0].photon_gain);
  EXPECT_NEAR(pts[2].photon_gain, 0.0, 1e-6);
  const std::string csv = slurp(cfg.outputs_dir / "gain.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
  EXPECT_TRUE(fs::exists(cfg.outputs_dir / "manifest.txt"));
  fs::remove_all(cfg.outputs_dir);
}

TEST(Validate, PassesAndDetectsPerturbation) {
  ExperimentConfig cfg;
  cfg.validate_frames = 100000;
  const auto ok = cmd_validate(cfg);
  std::ostringstream text;
  ok.print(text);
  EXPECT_TRUE(ok.passed()) << text.str();
  EXPECT_NE(text.str().find("[PASS] photon_gain_anchor"), std::string::npos);

  const auto bad = cmd_validate(cfg, 0.2);
  EXPECT_FALSE(bad.passed());
  EXPECT_FALSE(bad.checks.front().passed);
}
