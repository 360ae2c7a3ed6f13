// Extended-grid geometry, the cubic PML absorption profile, and slowness handling.
//
// The bulk domain is the unit square sampled by nx_bulk x ny_bulk points with
// spacing h (first bulk point at 0, last at (nx_bulk-1)*h).  A collar of n_pml
// extra points per side carries the PML; grid indices always refer to the
// extended grid, with the bulk window starting at index n_pml.

#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "lsweeps/core.hpp"

namespace lsweeps {

// Cubic absorption profile sigma(d) = C/delta_pml * (d/delta_pml)^3, where d is
// the distance to the absorption-free window.  C = ln(omega), fixed per problem.
struct PmlSpec {
  double delta_pml = 0.0;   // physical PML width, = n_pml * h
  double sigma_max = 0.0;   // absorption amplitude at full depth
};

struct Grid2D {
  int nx_bulk = 0;
  int ny_bulk = 0;
  double h = 0.0;
  int n_pml = 0;

  int nx() const { return nx_bulk + 2 * n_pml; }
  int ny() const { return ny_bulk + 2 * n_pml; }
  int size() const { return nx() * ny(); }

  // Physical coordinates; the bulk window spans [0, (n_bulk-1)*h] per axis.
  double x(int ix) const { return (ix - n_pml) * h; }
  double y(int iy) const { return (iy - n_pml) * h; }

  int index(int ix, int iy) const { return iy * nx() + ix; }

  IndexBox full_box() const { return {{0, nx()}, {0, ny()}}; }
  IndexBox bulk_box() const {
    return {{n_pml, n_pml + nx_bulk}, {n_pml, n_pml + ny_bulk}};
  }

  // Absorption-free extent of the global problem (the bulk window edges,
  // computed through x()/y() so comparisons against point coordinates are exact).
  double bulk_x_lo() const { return x(n_pml); }
  double bulk_x_hi() const { return x(n_pml + nx_bulk - 1); }
  double bulk_y_lo() const { return y(n_pml); }
  double bulk_y_hi() const { return y(n_pml + ny_bulk - 1); }
};

// Real squared-slowness field on the bulk grid, scaled so m0 <= m <= 1.
struct SlownessModel {
  int nx = 0;
  int ny = 0;
  double h = 0.0;
  std::vector<double> m;  // row-major (row = y)
  double m0 = 1.0;        // lower bound of m
};

// sigma at (signed) distance d outside the absorption-free window; exactly
// zero for d <= 0.  Assembly computes d from integer grid offsets, so
// congruent subdomains produce bitwise-identical coefficients.
inline double pml_sigma_at_distance(double d, const PmlSpec& spec) {
  if (d <= 0.0 || spec.delta_pml <= 0.0) return 0.0;
  const double t = d / spec.delta_pml;
  return spec.sigma_max * t * t * t;
}

inline cplx pml_alpha_of_sigma(double sigma, double omega) {
  return 1.0 / cplx(1.0, sigma / omega);
}

// sigma vanishes on [extent_lo, extent_hi] and ramps cubically outside it.
inline double pml_sigma(double coord, double extent_lo, double extent_hi,
                        const PmlSpec& spec) {
  const double d = std::max(extent_lo - coord, coord - extent_hi);
  return pml_sigma_at_distance(d, spec);
}

// Complex stretch alpha = 1 / (1 + i*sigma/omega); |alpha| <= 1, = 1 in the bulk.
inline cplx pml_alpha(double coord, double omega, const PmlSpec& spec,
                      double extent_lo, double extent_hi) {
  return pml_alpha_of_sigma(pml_sigma(coord, extent_lo, extent_hi, spec), omega);
}

// The amplitude sigma_max = omega*ln(omega)/(2*pi) = ln(omega)/lambda puts
// w*ln(omega)/4 of absorption into a w-wavelength layer, so the round trip
// through a collar decays like omega^(-w/2): deeper layers absorb more and the
// stretch amplitude sigma/omega grows only logarithmically with frequency.
inline PmlSpec make_pml_spec(const Grid2D& grid, double omega) {
  return PmlSpec{grid.n_pml * grid.h,
                 omega * std::log(omega) / (2.0 * std::numbers::pi)};
}

// PML point count resolving `wavelengths` wavelengths of the slowest medium at
// the given grid resolution (ppw points per wavelength where m = 1).
inline int pml_points(double wavelengths, double ppw, double m0) {
  return static_cast<int>(std::ceil(wavelengths * ppw / std::sqrt(m0)));
}

// Frequency for which the n-point unit-interval grid has ppw points per
// wavelength in the m = 1 medium: omega * h = 2*pi / ppw.
inline double omega_for(int n, double ppw) {
  return 2.0 * std::numbers::pi * (n - 1) / ppw;
}

// Normal extension of the bulk slowness into the PML collar: every collar point
// takes the value of the nearest bulk point (corners take the nearest corner).
inline std::vector<double> extend_slowness(const SlownessModel& bulk,
                                           const Grid2D& grid) {
  if (bulk.nx != grid.nx_bulk || bulk.ny != grid.ny_bulk) {
    throw std::invalid_argument("extend_slowness: model dims do not match grid bulk window");
  }
  std::vector<double> ext(static_cast<size_t>(grid.size()));
  for (int iy = 0; iy < grid.ny(); ++iy) {
    const int by = std::clamp(iy - grid.n_pml, 0, grid.ny_bulk - 1);
    for (int ix = 0; ix < grid.nx(); ++ix) {
      const int bx = std::clamp(ix - grid.n_pml, 0, grid.nx_bulk - 1);
      ext[static_cast<size_t>(grid.index(ix, iy))] =
          bulk.m[static_cast<size_t>(by) * bulk.nx + bx];
    }
  }
  return ext;
}

}  // namespace lsweeps
