// Model presets, source fields, the binary dump formats, the experiment CSV
// row, the instrumentation JSON lines, and config parsing.

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>
#include <string>

#include "json.hpp"
#include "lsweeps/cdd.hpp"
#include "lsweeps/experiment.hpp"
#include "lsweeps/grid.hpp"
#include "lsweeps/io.hpp"
#include "lsweeps/models.hpp"

using namespace lsweeps;
namespace fs = std::filesystem;

namespace {

std::string temp_path(const std::string& name) {
  return (fs::path(::testing::TempDir()) / name).string();
}

std::set<double> value_set(const SlownessModel& m) {
  return {m.m.begin(), m.m.end()};
}

}  // namespace

TEST(Models, ConstantAndTwoLayerValues) {
  const ModelParams params;  // contrast 2 -> m_low = 0.25
  const SlownessModel c = generate_model("constant", params, 101, 101, 0.01);
  EXPECT_EQ(value_set(c), std::set<double>{1.0});
  EXPECT_EQ(c.m0, 1.0);

  const SlownessModel t = generate_model("two_layer", params, 101, 101, 0.01);
  EXPECT_EQ(value_set(t), (std::set<double>{0.25, 1.0}));
  EXPECT_EQ(t.m0, 0.25);
  // Interface at y = 0.7: rows below keep m = 1, rows at or above take 0.25.
  EXPECT_EQ(t.m[static_cast<size_t>(69) * 101 + 50], 1.0);
  EXPECT_EQ(t.m[static_cast<size_t>(70) * 101 + 50], 0.25);
}

TEST(Models, CheckerboardCellsAlignWithNinths) {
  const ModelParams params;
  const SlownessModel m = generate_model("checkerboard", params, 459, 459, 1.0 / 458);
  EXPECT_EQ(value_set(m), (std::set<double>{0.25, 1.0}));
  auto at = [&](int ix, int iy) { return m.m[static_cast<size_t>(iy) * 459 + ix]; };

  EXPECT_EQ(at(0, 0), 1.0);      // corner cell is the fast medium
  EXPECT_EQ(at(50, 0), 1.0);     // last point of cell column 0
  EXPECT_EQ(at(51, 0), 0.25);    // first point of cell column 1
  EXPECT_EQ(at(458, 458), 1.0);  // (8, 8): even parity
  EXPECT_EQ(at(458, 0), 1.0);    // clamp keeps the top index in cell 8

  // Along any row the value flips exactly at multiples of 459/9 = 51.
  for (int ix = 1; ix < 459; ++ix) {
    const bool flip = at(ix, 100) != at(ix - 1, 100);
    EXPECT_EQ(flip, ix % 51 == 0) << "ix=" << ix;
  }
}

TEST(Models, WaveguideKeepsAFastChannel) {
  const ModelParams params;
  const SlownessModel m = generate_model("waveguide", params, 101, 101, 0.01);
  auto at = [&](int ix, int iy) { return m.m[static_cast<size_t>(iy) * 101 + ix]; };
  // Channel |y - 0.5| <= 0.1 keeps m = 1 inside a slow background.
  EXPECT_EQ(at(50, 40), 1.0);
  EXPECT_EQ(at(50, 60), 1.0);
  EXPECT_EQ(at(50, 39), 0.25);
  EXPECT_EQ(at(50, 61), 0.25);
  EXPECT_EQ(m.m0, 0.25);
}

TEST(Models, SmoothRandomIsSeededAndBounded) {
  ModelParams params;
  params.seed = 42;
  const SlownessModel a = generate_model("smooth_random", params, 101, 101, 0.01);
  const SlownessModel b = generate_model("smooth_random", params, 101, 101, 0.01);
  EXPECT_EQ(a.m, b.m);  // bitwise reproducible

  params.seed = 43;
  const SlownessModel c = generate_model("smooth_random", params, 101, 101, 0.01);
  EXPECT_NE(a.m, c.m);

  const auto [lo, hi] = std::minmax_element(a.m.begin(), a.m.end());
  EXPECT_DOUBLE_EQ(*lo, 0.25);  // rescaled onto [1/contrast^2, 1]
  EXPECT_NEAR(*hi, 1.0, 1e-12);
  EXPECT_LE(*hi, 1.0);
  EXPECT_EQ(a.m0, *lo);
  // Blurred: adjacent values within a row are close, the field is not constant.
  double max_step = 0.0;
  for (size_t iy = 0; iy < 101; ++iy) {
    for (size_t ix = 1; ix < 101; ++ix) {
      const size_t k = iy * 101 + ix;
      max_step = std::max(max_step, std::abs(a.m[k] - a.m[k - 1]));
    }
  }
  EXPECT_LT(max_step, 0.1);
  EXPECT_GT(*hi - *lo, 0.1);
}

TEST(Models, RejectsBadArguments) {
  ModelParams params;
  EXPECT_THROW(generate_model("volcano", params, 10, 10, 0.1), std::invalid_argument);
  EXPECT_THROW(generate_model("file", params, 10, 10, 0.1), std::invalid_argument);
  params.contrast = 0.5;
  EXPECT_THROW(generate_model("constant", params, 10, 10, 0.1), std::invalid_argument);
}

TEST(ModelFile, RoundTripsBitwise) {
  ModelParams params;
  params.seed = 7;
  const SlownessModel m = generate_model("smooth_random", params, 33, 21, 0.05);
  const std::string path = temp_path("model.hvm1");
  write_hvm1(path, m);

  const SlownessModel r = read_hvm1(path);
  EXPECT_EQ(r.nx, 33);
  EXPECT_EQ(r.ny, 21);
  EXPECT_EQ(r.h, 0.05);
  EXPECT_EQ(r.m, m.m);
  EXPECT_EQ(r.m0, m.m0);

  ModelParams file_params;
  file_params.file = path;
  const SlownessModel f = generate_model("file", file_params, 0, 0, 0.0);
  EXPECT_EQ(f.m, m.m);
}

TEST(ModelFile, ValidatesContentOnRead) {
  SlownessModel bad;
  bad.nx = 2;
  bad.ny = 2;
  bad.h = 0.5;
  bad.m = {0.5, 0.5, 0.5, 1.5};  // > 1: invalid squared slowness
  const std::string path = temp_path("bad_high.hvm1");
  write_hvm1(path, bad);
  EXPECT_THROW(read_hvm1(path), std::runtime_error);

  bad.m = {0.5, 0.0, 0.5, 0.5};  // zero is invalid too
  write_hvm1(path, bad);
  EXPECT_THROW(read_hvm1(path), std::runtime_error);

  const std::string garbled = temp_path("garbled.hvm1");
  std::ofstream(garbled) << "HVMX\nnx=2\nny=2\nh=0.5\n\n";
  EXPECT_THROW(read_hvm1(garbled), std::runtime_error);

  const std::string unknown = temp_path("unknown_key.hvm1");
  std::ofstream(unknown) << "HVM1\nnx=2\nny=2\nh=0.5\nfoo=bar\n\n";
  EXPECT_THROW(read_hvm1(unknown), std::runtime_error);

  const std::string truncated = temp_path("truncated.hvm1");
  std::ofstream(truncated) << "HVM1\nnx=2\nny=2\nh=0.5\n\nxx";
  EXPECT_THROW(read_hvm1(truncated), std::runtime_error);

  EXPECT_THROW(read_hvm1(temp_path("does_not_exist.hvm1")), std::runtime_error);
}

TEST(WavefieldFile, RoundTripsBitwise) {
  ComplexField f(3, 4);
  for (int iy = 0; iy < 3; ++iy) {
    for (int ix = 0; ix < 4; ++ix) {
      f.at(ix, iy) = cplx(0.1 * ix - 2.0, 0.3 * iy + 1.0e-17);
    }
  }
  const std::string path = temp_path("field.hwf1");
  write_hwf1(path, f, 0.125);
  const WavefieldDump d = read_hwf1(path);
  EXPECT_EQ(d.h, 0.125);
  EXPECT_EQ(d.field.rows, 3);
  EXPECT_EQ(d.field.cols, 4);
  EXPECT_EQ((d.field.data - f.data).norm(), 0.0);

  const std::string wrong = temp_path("wrong_kind.hwf1");
  std::ofstream(wrong) << "HWF1\nnx=1\nny=1\nh=0.5\nkind=float64\n\nxxxxxxxx";
  EXPECT_THROW(read_hwf1(wrong), std::runtime_error);
}

TEST(Sources, GaussianAmplitudeAndUnitMass) {
  // 41 bulk points per side: 0.125 * 40 = 5, so the source centers are grid
  // points and the peak value is exactly the amplitude factor n^2 / pi.
  const Grid2D grid{41, 41, 1.0 / 40, 10};
  const ComplexField f = standard_sources(grid);
  const double amp = 41.0 * 41.0 / std::numbers::pi;
  EXPECT_NEAR(f.at(grid.n_pml + 5, grid.n_pml + 5).real(), amp, 1e-9 * amp);
  EXPECT_EQ(f.at(grid.n_pml + 5, grid.n_pml + 5).imag(), 0.0);

  // Each spike integrates to ~1; four spikes carry total mass ~4.
  double mass = 0.0;
  for (long k = 0; k < f.data.size(); ++k) mass += f.data[k].real();
  mass *= grid.h * grid.h;
  EXPECT_NEAR(mass, 4.0, 0.04);

  const ComplexField p = point_source(grid, 0.5, 0.5);
  const int c = grid.n_pml + 20;
  EXPECT_NEAR(p.at(c, c).real(), amp, 1e-9 * amp);
  // Centered on a grid point: mirror neighbors agree to coordinate roundoff.
  EXPECT_NEAR(std::abs(p.at(c + 1, c) - p.at(c - 1, c)), 0.0, 1e-12 * amp);
}

TEST(Sources, StandardSourcesClearTheSkeletonAtScale) {
  // At the 202-point scale the spikes underflow to exact zeros on the cuts, so
  // the preconditioner can take the plain (unwindowed) path.
  const int n = 202;
  const int n_pml = pml_points(2.0, 10.0, 1.0);
  const Grid2D grid{n, n, 1.0 / (n - 1), n_pml};
  const ComplexField f = standard_sources(grid);
  const CDDLayout lay = build_cdd(grid, 2, 2, 1);
  EXPECT_FALSE(source_needs_windows(f.data, lay));
}

TEST(Csv, HeaderAndRowFormat) {
  EXPECT_STREQ(kCsvHeader, "N,omega_over_2pi,q,p,T_fact,N_it,T_it,T_total");
  EXPECT_EQ(csv_row(40401, 20.1, 2, 1, 1.5, 4, 0.25, 3.0),
            "40401,20.1,2,1,1.5,4,0.25,3");
  EXPECT_EQ(csv_row(163216, 40.2, 4, 4, 0.123456789123, 5, 1e-4, 12.5),
            "163216,40.2,4,4,0.123456789,5,0.0001,12.5");
}

TEST(Jsonl, SixRecordsInTheFixedShape) {
  InstrumentationReport rep;
  instrument(rep, Phase::Setup, 0.5);
  instrument_front(rep, Phase::Factorize, 1.0, std::vector<double>{0.25}, 10, 1000);
  instrument(rep, Phase::Solve, 2.0);

  std::ostringstream os;
  write_instrumentation_jsonl(os, rep);
  std::istringstream is(os.str());
  std::string line;
  std::vector<nlohmann::json> recs;
  while (std::getline(is, line)) recs.push_back(nlohmann::json::parse(line));
  ASSERT_EQ(recs.size(), 6u);

  const std::vector<std::string> phases = {"setup",       "factorize",       "solve",
                                           "setup_model", "factorize_model", "solve_model"};
  for (size_t k = 0; k < recs.size(); ++k) {
    ASSERT_EQ(recs[k].size(), 4u) << recs[k].dump();
    EXPECT_EQ(recs[k]["phase"], phases[k]);
    ASSERT_TRUE(recs[k]["seconds"].is_number());
    ASSERT_TRUE(recs[k]["messages"].is_number_integer());
    ASSERT_TRUE(recs[k]["volume_complex"].is_number_integer());
  }
  EXPECT_DOUBLE_EQ(recs[0]["seconds"].get<double>(), 0.5);
  EXPECT_DOUBLE_EQ(recs[1]["seconds"].get<double>(), 1.0);
  EXPECT_EQ(recs[1]["messages"].get<long>(), 10);
  EXPECT_EQ(recs[1]["volume_complex"].get<long>(), 1000);
  // Modeled factorize time: busiest worker + message and volume costs.
  EXPECT_NEAR(recs[4]["seconds"].get<double>(), 0.25 + 10 * 2e-6 + 1000 * 5e-9, 1e-12);
  EXPECT_DOUBLE_EQ(recs[5]["seconds"].get<double>(), 2.0);
}

TEST(Config, KeysParseAndOverride) {
  ExperimentConfig cfg;
  apply_config_key(cfg, "model", "two_layer");
  apply_config_key(cfg, "q", "4");
  apply_config_key(cfg, "r", "2");
  apply_config_key(cfg, "n", "202");
  apply_config_key(cfg, "ppw", "12.5");
  apply_config_key(cfg, "pml_wavelengths", "3");
  apply_config_key(cfg, "tol", "1e-8");
  apply_config_key(cfg, "restart", "30");
  apply_config_key(cfg, "maxit", "77");
  apply_config_key(cfg, "workers", "4");
  apply_config_key(cfg, "delta", "2");
  apply_config_key(cfg, "out", "artifacts");
  apply_config_key(cfg, "seed", "99");
  apply_config_key(cfg, "contrast", "3");
  EXPECT_EQ(cfg.model, "two_layer");
  EXPECT_EQ(cfg.q, 4);
  EXPECT_EQ(cfg.r, 2);
  EXPECT_EQ(cfg.n, 202);
  EXPECT_EQ(cfg.ppw, 12.5);
  EXPECT_EQ(cfg.pml_wavelengths, 3.0);
  EXPECT_EQ(cfg.tol, 1e-8);
  EXPECT_EQ(cfg.restart, 30);
  EXPECT_EQ(cfg.maxit, 77);
  EXPECT_EQ(cfg.workers, 4);
  EXPECT_EQ(cfg.delta, 2);
  EXPECT_EQ(cfg.out_dir, "artifacts");
  EXPECT_EQ(cfg.seed, 99u);
  EXPECT_EQ(cfg.contrast, 3.0);

  EXPECT_THROW(apply_config_key(cfg, "mystery", "1"), std::invalid_argument);
  EXPECT_THROW(apply_config_key(cfg, "q", "abc"), std::invalid_argument);
}

TEST(Config, FileParsingAndDefaults) {
  const std::string path = temp_path("run.cfg");
  std::ofstream(path) << "# experiment setup\n"
                         "model = checkerboard\n"
                         "q = 9   # rows\n"
                         "\n"
                         "tol=1e-7\n";
  ExperimentConfig cfg;
  load_config_file(path, cfg);
  EXPECT_EQ(cfg.model, "checkerboard");
  EXPECT_EQ(cfg.q, 9);
  EXPECT_EQ(cfg.tol, 1e-7);

  const ExperimentConfig res = resolved_config(cfg);
  EXPECT_EQ(res.r, 9);         // r defaults to q
  EXPECT_EQ(res.n, 51 * 9);    // checkerboard preset: 51 points per subdomain

  ExperimentConfig plain;
  plain.q = 4;
  EXPECT_EQ(resolved_config(plain).n, 101 * 4);
  plain.q = 0;
  EXPECT_THROW(resolved_config(plain), std::invalid_argument);
  plain.q = 2;
  plain.pml_wavelengths = 0.5;
  EXPECT_THROW(resolved_config(plain), std::invalid_argument);

  const std::string bad = temp_path("bad.cfg");
  std::ofstream(bad) << "model constant\n";
  ExperimentConfig cfg2;
  EXPECT_THROW(load_config_file(bad, cfg2), std::invalid_argument);
  EXPECT_THROW(load_config_file(temp_path("missing.cfg"), cfg2), std::runtime_error);
}
