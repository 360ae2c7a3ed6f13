// Experiment presets: configuration, the end-to-end solver run with per-phase
// instrumentation, on-disk artifacts, and the global direct-solve oracle.

#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "lsweeps/assemble.hpp"
#include "lsweeps/cdd.hpp"
#include "lsweeps/core.hpp"
#include "lsweeps/grid.hpp"
#include "lsweeps/io.hpp"
#include "lsweeps/krylov.hpp"
#include "lsweeps/models.hpp"
#include "lsweeps/runtime.hpp"
#include "lsweeps/sparse_direct.hpp"
#include "lsweeps/sweeps.hpp"

namespace lsweeps {

struct ExperimentConfig {
  std::string model = "constant";  // model kind, or "file" with model_file set
  std::string model_file;
  int q = 2;                    // CDD rows
  int r = 0;                    // CDD columns; 0 means r = q
  int n = 0;                    // bulk points per side; 0 picks the preset size
  double ppw = 10.0;            // points per wavelength in the slowest medium
  double pml_wavelengths = 2.0; // PML depth in slowest-medium wavelengths
  double tol = 1e-6;
  int restart = 50;
  int maxit = 200;
  int workers = 1;
  int delta = 1;
  std::string out_dir;          // artifacts written here when non-empty
  std::uint64_t seed = 1234;
  double contrast = 2.0;
};

// Fills the derived defaults: r = q, and the preset grid size (101 points per
// subdomain side, 51 for the checkerboard so its 9x9 cells match a 9x9 CDD).
inline ExperimentConfig resolved_config(const ExperimentConfig& cfg_in) {
  ExperimentConfig cfg = cfg_in;
  if (cfg.q < 1) throw std::invalid_argument("config: q must be >= 1");
  if (cfg.r == 0) cfg.r = cfg.q;
  if (cfg.r < 1) throw std::invalid_argument("config: r must be >= 1");
  if (!(cfg.pml_wavelengths >= 1.0)) {
    throw std::invalid_argument("config: pml_wavelengths must be >= 1");
  }
  if (cfg.model != "file" && cfg.n == 0) {
    cfg.n = (cfg.model == "checkerboard" ? 51 : 101) * cfg.q;
  }
  return cfg;
}

// ---------------------------------------------------------------------------
// Config file: flat "key = value" lines, '#' comments; CLI flags override by
// being applied after the file.

inline void apply_config_key(ExperimentConfig& cfg, const std::string& key,
                             const std::string& value) {
  try {
    if (key == "model") {
      cfg.model = value;
    } else if (key == "model_file") {
      cfg.model_file = value;
    } else if (key == "q") {
      cfg.q = std::stoi(value);
    } else if (key == "r") {
      cfg.r = std::stoi(value);
    } else if (key == "n") {
      cfg.n = std::stoi(value);
    } else if (key == "ppw") {
      cfg.ppw = std::stod(value);
    } else if (key == "pml_wavelengths") {
      cfg.pml_wavelengths = std::stod(value);
    } else if (key == "tol") {
      cfg.tol = std::stod(value);
    } else if (key == "restart") {
      cfg.restart = std::stoi(value);
    } else if (key == "maxit") {
      cfg.maxit = std::stoi(value);
    } else if (key == "workers") {
      cfg.workers = std::stoi(value);
    } else if (key == "delta") {
      cfg.delta = std::stoi(value);
    } else if (key == "out") {
      cfg.out_dir = value;
    } else if (key == "seed") {
      cfg.seed = std::stoull(value);
    } else if (key == "contrast") {
      cfg.contrast = std::stod(value);
    } else {
      throw std::invalid_argument("config: unknown key: " + key);
    }
  } catch (const std::invalid_argument&) {
    throw;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad value for " + key + ": " + value);
  }
}

inline void load_config_file(const std::string& path, ExperimentConfig& cfg) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error(path + ": cannot open config file");
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument(path + ":" + std::to_string(lineno) +
                                  ": expected key = value");
    }
    apply_config_key(cfg, trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
}

// ---------------------------------------------------------------------------
// Experiment run

struct ExperimentResult {
  ExperimentConfig config;  // resolved
  Grid2D grid;
  PmlSpec pml;
  double omega = 0.0;
  long n_unknowns_bulk = 0;
  int p = 1;  // workers actually used
  std::vector<double> m_ext;
  VectorXc f;  // extended-grid source
  VectorXc x;  // extended-grid solution
  SolveReport report;
  double t_fact = 0.0, t_it = 0.0, t_total = 0.0;
  double t_it_model = 0.0, t_total_model = 0.0;  // modeled parallel makespan
  std::string retention;
};

inline ComplexField bulk_field(const VectorXc& x_ext, const Grid2D& grid) {
  ComplexField f(grid.ny_bulk, grid.nx_bulk);
  for (int by = 0; by < grid.ny_bulk; ++by) {
    for (int bx = 0; bx < grid.nx_bulk; ++bx) {
      f.at(bx, by) = x_ext[grid.index(bx + grid.n_pml, by + grid.n_pml)];
    }
  }
  return f;
}

inline void write_artifacts(const ExperimentResult& res, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  {
    std::ofstream os(fs::path(dir) / "report.csv");
    if (!os) throw std::runtime_error(dir + "/report.csv: cannot open for writing");
    os << kCsvHeader << "\n"
       << csv_row(res.n_unknowns_bulk, res.omega / (2.0 * std::numbers::pi),
                  res.config.q, res.p, res.t_fact, res.report.iterations, res.t_it,
                  res.t_total)
       << "\n";
  }
  write_hwf1((fs::path(dir) / "wavefield.hwf1").string(), bulk_field(res.x, res.grid),
             res.grid.h);
  write_instrumentation_jsonl((fs::path(dir) / "instrumentation.jsonl").string(),
                              res.report.phases);
}

// Builds the model, grid, and source for a resolved config.
inline ComplexField make_source(const ExperimentConfig& cfg, const Grid2D& grid) {
  if (cfg.model == "waveguide") return point_source(grid, 0.05, 0.5);
  if (cfg.model == "checkerboard") return point_source(grid, 0.5, 0.5);
  return standard_sources(grid);
}

inline ExperimentResult run_experiment(const ExperimentConfig& cfg_in) {
  ExperimentResult res;
  res.config = resolved_config(cfg_in);
  const ExperimentConfig& cfg = res.config;

  InstrumentationReport phases;
  WallTimer setup_timer;

  const ModelParams mp{cfg.contrast, cfg.seed, cfg.ppw, cfg.model_file};
  SlownessModel model;
  if (cfg.model == "file") {
    model = generate_model("file", mp, 0, 0, 0.0);
  } else {
    model = generate_model(cfg.model, mp, cfg.n, cfg.n, 1.0 / (cfg.n - 1));
  }
  const int n_pml = pml_points(cfg.pml_wavelengths, cfg.ppw, model.m0);
  res.grid = Grid2D{model.nx, model.ny, model.h, n_pml};
  res.omega = cfg.model == "file" ? 2.0 * std::numbers::pi / (cfg.ppw * model.h)
                                  : omega_for(model.nx, cfg.ppw);
  res.pml = make_pml_spec(res.grid, res.omega);
  res.m_ext = extend_slowness(model, res.grid);
  res.n_unknowns_bulk = static_cast<long>(res.grid.nx_bulk) * res.grid.ny_bulk;
  res.f = make_source(cfg, res.grid).data;
  const SparseMatrixC A = assemble_helmholtz(res.grid, res.m_ext, res.omega, res.pml);
  instrument(phases, Phase::Setup, setup_timer.seconds());

  PreconditionerConfig pc;
  pc.q = cfg.q;
  pc.r = cfg.r;
  pc.delta = cfg.delta;
  pc.workers = cfg.workers;
  Preconditioner M(res.grid, res.m_ext, res.omega, res.pml, pc, &phases);
  res.p = M.assignment().p;

  const BlockedDot dot(M.layout());
  auto apply_A = [&](const VectorXc& v) {
    return apply_global_operator(A, v, M.layout(), &M.pool());
  };
  auto apply_M = [&](const VectorXc& v) { return M.apply_uniform(v); };

  // Lazy window/factorization work that runs inside the GMRES window is
  // instrumented into its own phase; only the remainder counts as solve time.
  const double setup0 = phases.setup.seconds;
  const double fact0 = phases.factorize.seconds;
  const double solve_wall0 = phases.solve.seconds;
  WallTimer solve_timer;
  auto [x, rep] = gmres(apply_A, apply_M, res.f, cfg.tol, cfg.restart, cfg.maxit, dot);
  const double wall = solve_timer.seconds();
  const double rebuilds = (phases.setup.seconds - setup0) + (phases.factorize.seconds - fact0);
  const double tracked = phases.solve.seconds - solve_wall0;
  phases.solve.seconds = solve_wall0 + std::max(0.0, wall - rebuilds);
  phases.solve.seconds_model += std::max(0.0, wall - rebuilds - tracked);

  res.x = std::move(x);
  res.report = std::move(rep);
  res.report.phases = phases;
  res.retention = M.retention_name();

  const int its = std::max(1, res.report.iterations);
  res.t_fact = phases.factorize.seconds;
  res.t_it = phases.solve.seconds / its;
  res.t_total = phases.setup.seconds + phases.factorize.seconds + phases.solve.seconds;
  res.t_it_model = phases.solve.seconds_model / its;
  res.t_total_model = phases.setup.seconds_model + phases.factorize.seconds_model +
                      phases.solve.seconds_model;

  if (!cfg.out_dir.empty()) write_artifacts(res, cfg.out_dir);
  return res;
}

// ---------------------------------------------------------------------------
// Global direct-solve oracle

inline constexpr int kOracleMaxSide = 600;

// Relative L2 distance between the GMRES solution and a global direct solve of
// the same assembled system.
inline double compare_against_oracle(const ExperimentResult& res) {
  if (res.grid.nx_bulk > kOracleMaxSide || res.grid.ny_bulk > kOracleMaxSide) {
    throw std::runtime_error(
        "oracle refused: bulk grid " + std::to_string(res.grid.nx_bulk) + "x" +
        std::to_string(res.grid.ny_bulk) + " exceeds " +
        std::to_string(kOracleMaxSide) + " points per side");
  }
  const SparseMatrixC A = assemble_helmholtz(res.grid, res.m_ext, res.omega, res.pml);
  const auto F = factorize(A);
  const VectorXc x_direct = F->solve(res.f);
  return (res.x - x_direct).norm() / x_direct.norm();
}

struct OracleRun {
  ExperimentResult result;
  double rel_error = 0.0;
};

// Refuses before solving when the problem is too large for a direct solve.
inline OracleRun run_with_oracle(const ExperimentConfig& cfg_in) {
  ExperimentConfig cfg = resolved_config(cfg_in);
  int nx = cfg.n, ny = cfg.n;
  if (cfg.model == "file") {
    const SlownessModel m = read_hvm1(cfg.model_file);
    nx = m.nx;
    ny = m.ny;
  }
  if (nx > kOracleMaxSide || ny > kOracleMaxSide) {
    throw std::runtime_error("oracle refused: bulk grid " + std::to_string(nx) + "x" +
                             std::to_string(ny) + " exceeds " +
                             std::to_string(kOracleMaxSide) + " points per side");
  }
  OracleRun run;
  run.result = run_experiment(cfg);
  run.rel_error = compare_against_oracle(run.result);
  return run;
}

inline double compare_against_oracle(const ExperimentConfig& cfg_in) {
  return run_with_oracle(cfg_in).rel_error;
}

}  // namespace lsweeps
