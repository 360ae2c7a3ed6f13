// Command-line front end: experiment presets, the PML and scaling studies, the
// direct-solve oracle check, and model generation.
//
// Exit codes: 0 success, 2 solver did not converge (artifacts still written),
// 1 usage or I/O error.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <utility>

#include "CLI11.hpp"
#include "lsweeps/lsweeps.hpp"

namespace {

using namespace lsweeps;

// All values are collected as strings and pushed through the same key = value
// channel as the config file, so a flag overrides the file entry exactly.
struct FlagSet {
  std::string config;
  std::map<std::string, std::pair<CLI::Option*, std::string>> opts;
};

void add_common_flags(CLI::App& sub, FlagSet& fs) {
  sub.add_option("--config", fs.config, "flat key = value config file");
  auto add = [&](const char* flag, const char* key, const char* help) {
    auto& slot = fs.opts[key];
    slot.first = sub.add_option(flag, slot.second, help);
  };
  add("--model", "model",
      "model kind: constant|two_layer|checkerboard|waveguide|smooth_random|file");
  add("--model-file", "model_file", "HVM1 model path (with --model file)");
  add("--q", "q", "CDD rows (columns default to q)");
  add("--ppw", "ppw", "points per wavelength in the slowest medium");
  add("--pml-wavelengths", "pml_wavelengths", "PML depth in wavelengths (>= 1)");
  add("--tol", "tol", "GMRES relative tolerance");
  add("--restart", "restart", "GMRES restart length");
  add("--workers", "workers", "worker threads (clamped to q)");
  add("--out", "out", "output directory for artifacts");
  add("--seed", "seed", "seed for smooth_random");
  add("--contrast", "contrast", "speed contrast for heterogeneous models");
}

ExperimentConfig build_config(const FlagSet& fs) {
  ExperimentConfig cfg;
  if (!fs.config.empty()) load_config_file(fs.config, cfg);
  for (const auto& [key, slot] : fs.opts) {
    if (slot.first->count() > 0) apply_config_key(cfg, key, slot.second);
  }
  return cfg;
}

void print_run(const ExperimentResult& res) {
  std::printf("model=%s bulk=%dx%d grid=%dx%d q=%d r=%d p=%d omega/2pi=%.6g\n",
              res.config.model.c_str(), res.grid.nx_bulk, res.grid.ny_bulk,
              res.grid.nx(), res.grid.ny(), res.config.q, res.config.r, res.p,
              res.omega / (2.0 * std::numbers::pi));
  std::printf("iterations=%d converged=%s true_residual=%.3e retention=%s\n",
              res.report.iterations, res.report.converged ? "yes" : "no",
              res.report.true_residual_rel, res.retention.c_str());
  std::printf("T_fact=%.3fs T_it=%.3fs T_total=%.3fs | modeled T_it=%.3fs T_total=%.3fs\n",
              res.t_fact, res.t_it, res.t_total, res.t_it_model, res.t_total_model);
}

int cmd_solve(const FlagSet& fs) {
  const ExperimentResult res = run_experiment(build_config(fs));
  print_run(res);
  if (!res.config.out_dir.empty()) {
    std::printf("artifacts written to %s\n", res.config.out_dir.c_str());
  }
  return res.report.converged ? 0 : 2;
}

int cmd_pml_study(const FlagSet& fs) {
  const ExperimentConfig base = build_config(fs);
  std::printf("pml_wavelengths  n_pml  N_it  T_total\n");
  bool all_converged = true;
  for (int wl = 1; wl <= 4; ++wl) {
    ExperimentConfig cfg = base;
    cfg.pml_wavelengths = wl;
    if (!base.out_dir.empty()) {
      cfg.out_dir =
          (std::filesystem::path(base.out_dir) / ("wl" + std::to_string(wl))).string();
    }
    const ExperimentResult res = run_experiment(cfg);
    all_converged = all_converged && res.report.converged;
    std::printf("%15d  %5d  %4d  %8.3f\n", wl, res.grid.n_pml, res.report.iterations,
                res.t_total);
  }
  return all_converged ? 0 : 2;
}

int cmd_scaling_study(const FlagSet& fs) {
  const ExperimentConfig base = build_config(fs);
  std::string table = std::string(kCsvHeader) + ",T_it_model\n";
  std::printf("%s,T_it_model\n", kCsvHeader);
  bool all_converged = true;
  for (int q : {2, 4, 8}) {
    ExperimentConfig cfg = base;
    cfg.q = q;
    cfg.r = 0;   // square decomposition
    cfg.n = 0;   // preset size (101 points per subdomain side)
    cfg.workers = q;
    if (!base.out_dir.empty()) {
      cfg.out_dir =
          (std::filesystem::path(base.out_dir) / ("q" + std::to_string(q))).string();
    }
    const ExperimentResult res = run_experiment(cfg);
    all_converged = all_converged && res.report.converged;
    const std::string row =
        csv_row(res.n_unknowns_bulk, res.omega / (2.0 * std::numbers::pi), res.config.q,
                res.p, res.t_fact, res.report.iterations, res.t_it, res.t_total) +
        "," + detail::format_short(res.t_it_model);
    std::printf("%s\n", row.c_str());
    table += row + "\n";
  }
  if (!base.out_dir.empty()) {
    std::filesystem::create_directories(base.out_dir);
    const auto path = std::filesystem::path(base.out_dir) / "scaling.csv";
    std::ofstream os(path);
    if (!os) throw std::runtime_error(path.string() + ": cannot open for writing");
    os << table;
  }
  return all_converged ? 0 : 2;
}

int cmd_oracle_check(const FlagSet& fs) {
  const OracleRun run = run_with_oracle(build_config(fs));
  print_run(run.result);
  std::printf("relative_error_vs_direct=%.6e\n", run.rel_error);
  return run.result.report.converged ? 0 : 2;
}

int cmd_gen_model(const FlagSet& fs) {
  const ExperimentConfig cfg = resolved_config(build_config(fs));
  if (cfg.out_dir.empty()) throw std::invalid_argument("gen-model requires --out");
  if (cfg.model == "file") {
    throw std::invalid_argument("gen-model requires a generative model kind");
  }
  const ModelParams mp{cfg.contrast, cfg.seed, cfg.ppw, cfg.model_file};
  const SlownessModel m =
      generate_model(cfg.model, mp, cfg.n, cfg.n, 1.0 / (cfg.n - 1));
  std::filesystem::create_directories(cfg.out_dir);
  const std::string path =
      (std::filesystem::path(cfg.out_dir) / "model.hvm1").string();
  write_hvm1(path, m);
  std::printf("wrote %s (%dx%d, h=%.6g, m0=%.6g)\n", path.c_str(), m.nx, m.ny, m.h,
              m.m0);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"L-sweeps preconditioned 2D Helmholtz solver"};
  app.require_subcommand(1);

  FlagSet fs_solve, fs_pml, fs_scaling, fs_oracle, fs_gen;
  CLI::App* solve = app.add_subcommand("solve", "run one experiment");
  add_common_flags(*solve, fs_solve);
  CLI::App* pml = app.add_subcommand("pml-study", "sweep PML depth 1..4 wavelengths");
  add_common_flags(*pml, fs_pml);
  CLI::App* scaling =
      app.add_subcommand("scaling-study", "run q = 2, 4, 8 with p = q workers");
  add_common_flags(*scaling, fs_scaling);
  CLI::App* oracle =
      app.add_subcommand("oracle-check", "compare against a global direct solve");
  add_common_flags(*oracle, fs_oracle);
  CLI::App* gen = app.add_subcommand("gen-model", "write a model file (HVM1)");
  add_common_flags(*gen, fs_gen);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (app.got_subcommand(solve)) return cmd_solve(fs_solve);
    if (app.got_subcommand(pml)) return cmd_pml_study(fs_pml);
    if (app.got_subcommand(scaling)) return cmd_scaling_study(fs_scaling);
    if (app.got_subcommand(oracle)) return cmd_oracle_check(fs_oracle);
    if (app.got_subcommand(gen)) return cmd_gen_model(fs_gen);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
