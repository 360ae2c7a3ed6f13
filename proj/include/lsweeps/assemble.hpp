// 5-point finite-difference assembly of the PML-stretched Helmholtz operator.
//
// The symmetric stretched form is
//   -d/dx(s1 du/dx) - d/dy(s2 du/dy) - omega^2 m /(alpha1*alpha2) u,
// with s1 = alpha1/alpha2, s2 = alpha2/alpha1 and alpha_k = 1/(1+i*sigma_k/omega).
// s-coefficients are evaluated at half-grid points; the mass factor
// 1/(alpha1*alpha2) = (1+i*sigma1/omega)(1+i*sigma2/omega) at the node.  The
// resulting matrix is complex symmetric (non-Hermitian).  Homogeneous Dirichlet
// conditions are imposed by elimination: neighbors outside the assembly box are
// dropped.
//
// Absorption-free windows are given as inclusive grid-index spans and all PML
// distances are formed from integer offsets, so congruent boxes with congruent
// windows and equal slowness assemble to bitwise-identical matrices.

#pragma once

#include <stdexcept>
#include <vector>

#include "lsweeps/core.hpp"
#include "lsweeps/grid.hpp"

namespace lsweeps {

// Inclusive global-index span [lo, hi] of grid points where sigma = 0 on one
// axis; the cubic ramp starts immediately outside.
struct SigmaWindow {
  int lo = 0;
  int hi = 0;
  bool operator==(const SigmaWindow&) const = default;
};

namespace detail {

// Distance of the node at global index g to the window, in units of h.
inline double node_window_distance(int g, const SigmaWindow& w) {
  if (g < w.lo) return static_cast<double>(w.lo - g);
  if (g > w.hi) return static_cast<double>(g - w.hi);
  return 0.0;
}

// Distance of the half point between nodes g-1 and g (coordinate x(g) - h/2).
inline double half_window_distance(int g, const SigmaWindow& w) {
  if (g <= w.lo) return static_cast<double>(w.lo - g) + 0.5;
  if (g > w.hi) return static_cast<double>(g - w.hi) - 0.5;
  return 0.0;
}

}  // namespace detail

// Assemble the operator over `box` (a sub-box of the extended grid) with the
// given per-axis absorption-free windows.  Slowness values are read from the
// global extended field at the same physical points, so local problems inherit
// the global medium.  Row/column index: (iy - box.y.lo)*box.nx() + (ix - box.x.lo).
inline SparseMatrixC assemble_helmholtz_window(const Grid2D& grid,
                                               const std::vector<double>& m_ext,
                                               double omega, const PmlSpec& spec,
                                               const IndexBox& box,
                                               const SigmaWindow& wx,
                                               const SigmaWindow& wy) {
  if (m_ext.size() != static_cast<size_t>(grid.size())) {
    throw std::invalid_argument("assemble_helmholtz: slowness size mismatch");
  }
  const int bnx = box.nx();
  const int n = box.size();
  const double h = grid.h;
  const double inv_h2 = 1.0 / (h * h);

  // Per-axis stretch values are reused across the perpendicular axis.
  const int nx = box.x.size(), ny = box.y.size();
  std::vector<cplx> ax_node(nx), ax_half(nx + 1);  // ax_half[k] = alpha at x(box.x.lo+k) - h/2
  std::vector<cplx> ay_node(ny), ay_half(ny + 1);
  std::vector<double> sx_node(nx), sy_node(ny);
  for (int k = 0; k < nx; ++k) {
    const int g = box.x.lo + k;
    sx_node[k] = pml_sigma_at_distance(detail::node_window_distance(g, wx) * h, spec);
    ax_node[k] = pml_alpha_of_sigma(sx_node[k], omega);
    ax_half[k] = pml_alpha_of_sigma(
        pml_sigma_at_distance(detail::half_window_distance(g, wx) * h, spec), omega);
  }
  ax_half[nx] = pml_alpha_of_sigma(
      pml_sigma_at_distance(detail::half_window_distance(box.x.lo + nx, wx) * h, spec),
      omega);
  for (int k = 0; k < ny; ++k) {
    const int g = box.y.lo + k;
    sy_node[k] = pml_sigma_at_distance(detail::node_window_distance(g, wy) * h, spec);
    ay_node[k] = pml_alpha_of_sigma(sy_node[k], omega);
    ay_half[k] = pml_alpha_of_sigma(
        pml_sigma_at_distance(detail::half_window_distance(g, wy) * h, spec), omega);
  }
  ay_half[ny] = pml_alpha_of_sigma(
      pml_sigma_at_distance(detail::half_window_distance(box.y.lo + ny, wy) * h, spec),
      omega);

  std::vector<Eigen::Triplet<cplx>> trip;
  trip.reserve(static_cast<size_t>(n) * 5);
  for (int ly = 0; ly < ny; ++ly) {
    for (int lx = 0; lx < nx; ++lx) {
      const int row = ly * bnx + lx;
      const cplx s_w = ax_half[lx] / ay_node[ly];
      const cplx s_e = ax_half[lx + 1] / ay_node[ly];
      const cplx s_s = ay_half[ly] / ax_node[lx];
      const cplx s_n = ay_half[ly + 1] / ax_node[lx];

      const double m = m_ext[static_cast<size_t>(grid.index(box.x.lo + lx, box.y.lo + ly))];
      const cplx mass = omega * omega * m * cplx(1.0, sx_node[lx] / omega) *
                        cplx(1.0, sy_node[ly] / omega);

      trip.emplace_back(row, row, (s_w + s_e + s_s + s_n) * inv_h2 - mass);
      if (lx > 0) trip.emplace_back(row, row - 1, -s_w * inv_h2);
      if (lx < nx - 1) trip.emplace_back(row, row + 1, -s_e * inv_h2);
      if (ly > 0) trip.emplace_back(row, row - bnx, -s_s * inv_h2);
      if (ly < ny - 1) trip.emplace_back(row, row + bnx, -s_n * inv_h2);
    }
  }
  SparseMatrixC A(n, n);
  A.setFromTriplets(trip.begin(), trip.end());
  A.makeCompressed();
  return A;
}

// Global operator: full extended grid, absorption-free exactly on the bulk window.
inline SparseMatrixC assemble_helmholtz(const Grid2D& grid,
                                        const std::vector<double>& m_ext,
                                        double omega, const PmlSpec& spec) {
  const SigmaWindow wx{grid.n_pml, grid.n_pml + grid.nx_bulk - 1};
  const SigmaWindow wy{grid.n_pml, grid.n_pml + grid.ny_bulk - 1};
  return assemble_helmholtz_window(grid, m_ext, omega, spec, grid.full_box(), wx, wy);
}

}  // namespace lsweeps
