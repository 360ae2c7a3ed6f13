// Slowness-squared model presets and right-hand-side source fields.
//
// Every model produces m(x) in [m0, 1] on the bulk grid; m is the squared
// slowness 1/c(x)^2, so the background speed is 1 and a contrast of c gives a
// floor of m0 = 1/c^2.  The file kind loads an HVM1 dump instead.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "lsweeps/core.hpp"
#include "lsweeps/grid.hpp"
#include "lsweeps/io.hpp"

namespace lsweeps {

struct ModelParams {
  double contrast = 2.0;     // background speed / slowest speed
  std::uint64_t seed = 1234; // smooth_random realization
  double ppw = 10.0;         // sets the smoothing length of smooth_random
  std::string file;          // HVM1 path for the file kind
};

namespace detail {

// Uniform double in [0, 1) from the top 53 bits; keeps realizations portable
// across standard libraries (std::uniform_real_distribution is not pinned).
inline double uniform01(std::mt19937_64& eng) {
  return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

// Separable truncated-Gaussian blur, normalized per point so the field stays
// inside the hull of its inputs near the boundary.
inline void gaussian_blur(std::vector<double>& a, int nx, int ny, double sigma_pts) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma_pts));
  if (radius < 1) return;
  std::vector<double> w(static_cast<size_t>(radius) + 1);
  for (int k = 0; k <= radius; ++k) {
    w[static_cast<size_t>(k)] = std::exp(-0.5 * (k / sigma_pts) * (k / sigma_pts));
  }
  std::vector<double> tmp(a.size());
  auto pass = [&](const std::vector<double>& src, std::vector<double>& dst, bool along_x) {
    for (int iy = 0; iy < ny; ++iy) {
      for (int ix = 0; ix < nx; ++ix) {
        double num = 0.0, den = 0.0;
        for (int k = -radius; k <= radius; ++k) {
          const int jx = along_x ? ix + k : ix;
          const int jy = along_x ? iy : iy + k;
          if (jx < 0 || jx >= nx || jy < 0 || jy >= ny) continue;
          const double wk = w[static_cast<size_t>(std::abs(k))];
          num += wk * src[static_cast<size_t>(jy) * nx + jx];
          den += wk;
        }
        dst[static_cast<size_t>(iy) * nx + ix] = num / den;
      }
    }
  };
  pass(a, tmp, true);
  pass(tmp, a, false);
}

}  // namespace detail

// Builds the named model on an nx-by-ny bulk grid with spacing h.  Kinds:
//   constant      m = 1 everywhere
//   two_layer     m = 1 below y = 0.7, 1/contrast^2 above
//   checkerboard  9x9 grid-aligned cells alternating between 1 and 1/contrast^2
//   waveguide     slow background with a fast channel |y - 0.5| <= 0.1
//   smooth_random seeded blurred noise rescaled to [1/contrast^2, 1]
//   file          loaded from params.file (HVM1)
inline SlownessModel generate_model(const std::string& kind, const ModelParams& params,
                                    int nx, int ny, double h) {
  if (kind == "file") {
    if (params.file.empty()) throw std::invalid_argument("file model requires a path");
    return read_hvm1(params.file);
  }
  if (!(params.contrast >= 1.0)) {
    throw std::invalid_argument("model contrast must be >= 1");
  }
  const double m_low = 1.0 / (params.contrast * params.contrast);
  SlownessModel model;
  model.nx = nx;
  model.ny = ny;
  model.h = h;
  model.m.assign(static_cast<size_t>(nx) * ny, 1.0);
  auto at = [&](int ix, int iy) -> double& {
    return model.m[static_cast<size_t>(iy) * nx + ix];
  };

  if (kind == "constant") {
    // already 1 everywhere
  } else if (kind == "two_layer") {
    for (int iy = 0; iy < ny; ++iy) {
      if (iy * h < 0.7) continue;
      for (int ix = 0; ix < nx; ++ix) at(ix, iy) = m_low;
    }
  } else if (kind == "checkerboard") {
    // Cell boundaries coincide with a 9x9 block decomposition of the index
    // range, so every subdomain sees either one cell or an aligned junction.
    for (int iy = 0; iy < ny; ++iy) {
      const int cy = std::min(8, static_cast<int>((static_cast<long>(iy) * 9) / ny));
      for (int ix = 0; ix < nx; ++ix) {
        const int cx = std::min(8, static_cast<int>((static_cast<long>(ix) * 9) / nx));
        if ((cx + cy) % 2 == 1) at(ix, iy) = m_low;
      }
    }
  } else if (kind == "waveguide") {
    for (int iy = 0; iy < ny; ++iy) {
      if (std::abs(iy * h - 0.5) <= 0.1) continue;  // fast channel keeps m = 1
      for (int ix = 0; ix < nx; ++ix) at(ix, iy) = m_low;
    }
  } else if (kind == "smooth_random") {
    std::mt19937_64 eng(params.seed);
    for (double& v : model.m) v = detail::uniform01(eng);
    detail::gaussian_blur(model.m, nx, ny, 2.0 * params.ppw);
    const auto [lo_it, hi_it] = std::minmax_element(model.m.begin(), model.m.end());
    const double lo = *lo_it, hi = *hi_it;
    if (hi > lo) {
      // Clamp: the affine rescale may overshoot 1.0 by an ulp.
      for (double& v : model.m) {
        v = std::clamp(m_low + (v - lo) * (1.0 - m_low) / (hi - lo), m_low, 1.0);
      }
    } else {
      for (double& v : model.m) v = 1.0;
    }
  } else {
    throw std::invalid_argument("unknown model kind: " + kind);
  }

  model.m0 = *std::min_element(model.m.begin(), model.m.end());
  return model;
}

inline SlownessModel generate_model(const std::string& kind, const ModelParams& params,
                                    const Grid2D& grid) {
  return generate_model(kind, params, grid.nx_bulk, grid.ny_bulk, grid.h);
}

// ---------------------------------------------------------------------------
// Sources

// Gaussian spike of width ~1/n centered at (x0, y0), normalized so its
// integral is approximately 1; n is the bulk point count per side.
inline ComplexField point_source(const Grid2D& grid, double x0, double y0) {
  ComplexField f(grid.ny(), grid.nx());
  const double n = grid.nx_bulk;
  const double amp = n * n / std::numbers::pi;
  for (int iy = 0; iy < grid.ny(); ++iy) {
    const double dy = grid.y(iy) - y0;
    for (int ix = 0; ix < grid.nx(); ++ix) {
      const double dx = grid.x(ix) - x0;
      f.at(ix, iy) = amp * std::exp(-n * n * (dx * dx + dy * dy));
    }
  }
  return f;
}

// Four Gaussian spikes placed at (0.125, 0.125), (0.125, 0.875),
// (0.875, 0.125), (0.875, 0.875) — far enough inside the unit box that the
// source vanishes (to double precision) on every subdomain skeleton of the
// decompositions used here.
inline ComplexField standard_sources(const Grid2D& grid) {
  ComplexField f(grid.ny(), grid.nx());
  const double n = grid.nx_bulk;
  const double amp = n * n / std::numbers::pi;
  constexpr double pts[4][2] = {
      {0.125, 0.125}, {0.125, 0.875}, {0.875, 0.125}, {0.875, 0.875}};
  for (int iy = 0; iy < grid.ny(); ++iy) {
    for (int ix = 0; ix < grid.nx(); ++ix) {
      double v = 0.0;
      for (const auto& p : pts) {
        const double dx = grid.x(ix) - p[0];
        const double dy = grid.y(iy) - p[1];
        v += std::exp(-n * n * (dx * dx + dy * dy));
      }
      f.at(ix, iy) = amp * v;
    }
  }
  return f;
}

}  // namespace lsweeps
