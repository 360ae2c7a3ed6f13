// Checkerboard domain decomposition: subdomain geometry, extended local
// problems with their own PML, source restriction, the skeleton trace mask,
// and the four-window partition of unity for sources that hit the skeleton.

#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "lsweeps/assemble.hpp"
#include "lsweeps/core.hpp"
#include "lsweeps/grid.hpp"

namespace lsweeps {

// q x r subdomain geometry over the extended grid.  Subdomain (si, sj) with
// si in [0,q) counting rows bottom-to-top and sj in [0,r) columns left-to-right.
// `rows`/`cols` hold each block's bulk window in extended indices; skeleton
// lines sit between consecutive blocks at half-integer multiples of h, so no
// grid point ever lies on the skeleton.  `rows_owned`/`cols_owned` extend the
// edge blocks across the PML collar so that ownership tiles the whole extended
// grid (used for source restriction and for assembling the global field).
struct CDDLayout {
  Grid2D grid;
  int q = 0;
  int r = 0;
  int delta = 1;
  std::vector<Range> rows, cols;
  std::vector<Range> rows_owned, cols_owned;

  int cell(int si, int sj) const { return si * r + sj; }
  int cells() const { return q * r; }

  IndexBox bulk_win(int si, int sj) const { return {cols[sj], rows[si]}; }
  IndexBox owned_win(int si, int sj) const { return {cols_owned[sj], rows_owned[si]}; }

  bool has_neighbor(int si, int sj, Side s) const {
    switch (s) {
      case Side::B: return si > 0;
      case Side::T: return si < q - 1;
      case Side::L: return sj > 0;
      case Side::R: return sj < r - 1;
    }
    return false;
  }

  // Extended local grid: the bulk window plus 2*delta buffer lines and n_pml
  // PML lines on interior sides, or the global collar on physical-boundary
  // sides.  Clamped to the extended grid if a local PML would run past it.
  IndexBox local_box(int si, int sj) const {
    const int pad = 2 * delta + grid.n_pml;
    Range bx = cols[sj], by = rows[si];
    Range lx{sj == 0 ? 0 : std::max(0, bx.lo - pad),
             sj == r - 1 ? grid.nx() : std::min(grid.nx(), bx.hi + pad)};
    Range ly{si == 0 ? 0 : std::max(0, by.lo - pad),
             si == q - 1 ? grid.ny() : std::min(grid.ny(), by.hi + pad)};
    return {lx, ly};
  }

  // Absorption-free extent of the local problem: the bulk window widened by
  // 2*delta points on interior sides; physical-boundary sides keep the global
  // bulk edge so the local PML coincides with the global one there.
  SigmaWindow window_x(int sj) const {
    return {sj == 0 ? grid.n_pml : cols[sj].lo - 2 * delta,
            sj == r - 1 ? grid.n_pml + grid.nx_bulk - 1 : cols[sj].hi - 1 + 2 * delta};
  }
  SigmaWindow window_y(int si) const {
    return {si == 0 ? grid.n_pml : rows[si].lo - 2 * delta,
            si == q - 1 ? grid.n_pml + grid.ny_bulk - 1 : rows[si].hi - 1 + 2 * delta};
  }
};

namespace detail {

inline std::vector<Range> blocks_from_sizes(int first, const std::vector<int>& sizes,
                                            int owned_lo, int owned_hi,
                                            std::vector<Range>* owned) {
  std::vector<Range> blocks;
  int at = first;
  for (int s : sizes) {
    blocks.push_back({at, at + s});
    at += s;
  }
  if (owned) {
    *owned = blocks;
    owned->front().lo = owned_lo;
    owned->back().hi = owned_hi;
  }
  return blocks;
}

}  // namespace detail

// Layout with explicit per-block sizes (used for the shifted CDDs, whose edge
// blocks are half-width).
inline CDDLayout build_cdd_with_blocks(const Grid2D& grid,
                                       const std::vector<int>& row_sizes,
                                       const std::vector<int>& col_sizes,
                                       int delta) {
  CDDLayout lay;
  lay.grid = grid;
  lay.q = static_cast<int>(row_sizes.size());
  lay.r = static_cast<int>(col_sizes.size());
  lay.delta = delta;
  int sum = 0;
  for (int s : row_sizes) sum += s;
  if (sum != grid.ny_bulk) throw std::invalid_argument("build_cdd: row sizes do not tile the bulk");
  sum = 0;
  for (int s : col_sizes) sum += s;
  if (sum != grid.nx_bulk) throw std::invalid_argument("build_cdd: col sizes do not tile the bulk");
  lay.rows = detail::blocks_from_sizes(grid.n_pml, row_sizes, 0, grid.ny(), &lay.rows_owned);
  lay.cols = detail::blocks_from_sizes(grid.n_pml, col_sizes, 0, grid.nx(), &lay.cols_owned);
  return lay;
}

// Standard CDD with equal blocks; the bulk must divide evenly.
inline CDDLayout build_cdd(const Grid2D& grid, int q, int r, int delta) {
  if (q < 1 || r < 1 || delta < 1) {
    throw std::invalid_argument("build_cdd: q, r, delta must be positive");
  }
  if (grid.ny_bulk % q != 0 || grid.nx_bulk % r != 0) {
    throw std::invalid_argument("build_cdd: bulk dims not divisible into q x r equal blocks");
  }
  return build_cdd_with_blocks(grid, std::vector<int>(q, grid.ny_bulk / q),
                               std::vector<int>(r, grid.nx_bulk / r), delta);
}

// Local subdomain problem: matrix over the extended local box plus the index
// mapping between local rows and extended-grid points.
struct LocalProblem {
  IndexBox box;
  SigmaWindow wx, wy;
  SparseMatrixC A;

  int local_index(int gix, int giy) const { return box.local_index(gix, giy); }
  int global_ix(int li) const { return box.global_ix(li); }
  int global_iy(int li) const { return box.global_iy(li); }
};

inline LocalProblem build_local_problem(const CDDLayout& lay, int si, int sj,
                                        const std::vector<double>& m_ext,
                                        double omega, const PmlSpec& spec) {
  LocalProblem lp;
  lp.box = lay.local_box(si, sj);
  lp.wx = lay.window_x(sj);
  lp.wy = lay.window_y(si);
  lp.A = assemble_helmholtz_window(lay.grid, m_ext, omega, spec, lp.box, lp.wx, lp.wy);
  return lp;
}

// f restricted to the subdomain's owned cell, zero-extended over the rest of
// the local box (the 2*delta buffer and the local PML).
inline VectorXc restrict_source(const VectorXc& f_ext, const CDDLayout& lay,
                                int si, int sj) {
  if (f_ext.size() != lay.grid.size()) {
    throw std::invalid_argument("restrict_source: field size mismatch");
  }
  const IndexBox box = lay.local_box(si, sj);
  const IndexBox own = lay.owned_win(si, sj);
  VectorXc loc = VectorXc::Zero(box.size());
  for (int iy = own.y.lo; iy < own.y.hi; ++iy) {
    for (int ix = own.x.lo; ix < own.x.hi; ++ix) {
      loc[(iy - box.y.lo) * box.nx() + (ix - box.x.lo)] = f_ext[lay.grid.index(ix, iy)];
    }
  }
  return loc;
}

// Marks the union of all trace sets: the delta lines on both sides of every
// interior skeleton segment, spanning the bulk window.
inline std::vector<std::uint8_t> skeleton_trace_mask(const CDDLayout& lay) {
  std::vector<std::uint8_t> mask(static_cast<size_t>(lay.grid.size()), 0);
  const Range bulk_x{lay.cols.front().lo, lay.cols.back().hi};
  const Range bulk_y{lay.rows.front().lo, lay.rows.back().hi};
  for (int sj = 1; sj < lay.r; ++sj) {
    for (int ix = lay.cols[sj].lo - lay.delta; ix < lay.cols[sj].lo + lay.delta; ++ix) {
      for (int iy = bulk_y.lo; iy < bulk_y.hi; ++iy) {
        mask[static_cast<size_t>(lay.grid.index(ix, iy))] = 1;
      }
    }
  }
  for (int si = 1; si < lay.q; ++si) {
    for (int iy = lay.rows[si].lo - lay.delta; iy < lay.rows[si].lo + lay.delta; ++iy) {
      for (int ix = bulk_x.lo; ix < bulk_x.hi; ++ix) {
        mask[static_cast<size_t>(lay.grid.index(ix, iy))] = 1;
      }
    }
  }
  return mask;
}

// True iff f carries anything above machine zero on the skeleton trace sets,
// in which case the preconditioner must window the source.
inline bool source_needs_windows(const VectorXc& f_ext, const CDDLayout& lay) {
  const auto mask = skeleton_trace_mask(lay);
  for (int g = 0; g < lay.grid.size(); ++g) {
    if (mask[static_cast<size_t>(g)] && std::abs(f_ext[g]) > 1e-300) return true;
  }
  return false;
}

// Four window functions and their CDD layouts: original, x-shifted, y-shifted,
// and doubly shifted.  phi[k] vanishes (exactly) on the skeleton band of
// layouts[k]; the four sum to one everywhere.
struct WindowSet {
  std::array<std::vector<double>, 4> phi;
  std::array<CDDLayout, 4> layouts;
  std::array<bool, 4> active{};
};

namespace detail {

inline double smoothstep5(double t) { return t * t * t * (10.0 + t * (-15.0 + 6.0 * t)); }

// Skeleton coordinates (cut positions) of a block list: midway between the
// last point of one block and the first point of the next.
inline std::vector<double> cut_coords(const Grid2D& grid, const std::vector<Range>& blocks,
                                      bool x_axis) {
  std::vector<double> cuts;
  for (size_t k = 1; k < blocks.size(); ++k) {
    const int first = blocks[k].lo;
    cuts.push_back((x_axis ? grid.x(first) : grid.y(first)) - 0.5 * grid.h);
  }
  return cuts;
}

inline double min_dist(double c, const std::vector<double>& cuts) {
  double d = std::numeric_limits<double>::infinity();
  for (double cut : cuts) d = std::min(d, std::abs(c - cut));
  return d;
}

// 1D profile: exactly 0 within band half-width of the original cuts, exactly 1
// within band half-width of the shifted cuts, quintic smoothstep between.
inline std::vector<double> window_profile(const Grid2D& grid, int count,
                                          const std::vector<double>& cuts_orig,
                                          const std::vector<double>& cuts_shift,
                                          double band, bool x_axis) {
  std::vector<double> theta(static_cast<size_t>(count), 1.0);
  if (cuts_orig.empty()) return theta;
  for (int k = 0; k < count; ++k) {
    const double c = x_axis ? grid.x(k) : grid.y(k);
    const double d_o = min_dist(c, cuts_orig);
    const double d_s = min_dist(c, cuts_shift);
    if (d_o <= band) {
      theta[static_cast<size_t>(k)] = 0.0;
    } else if (d_s <= band) {
      theta[static_cast<size_t>(k)] = 1.0;
    } else {
      const double a = d_o - band, b = d_s - band;
      theta[static_cast<size_t>(k)] = smoothstep5(a / (a + b));
    }
  }
  return theta;
}

// Half-block shift of an equal-block partition: blocks [s, W, ..., W, W-s]
// with s = (W+1)/2, clamped at the physical boundary.
inline std::vector<int> shifted_sizes(int blocks, int W) {
  const int s = (W + 1) / 2;
  std::vector<int> sizes;
  sizes.push_back(s);
  for (int k = 0; k < blocks - 1; ++k) sizes.push_back(W);
  sizes.push_back(W - s);
  return sizes;
}

inline void check_band_fits(const CDDLayout& lay) {
  const int need = 4 * (lay.delta + 1);
  for (const Range& b : lay.rows) {
    if (b.size() < need) throw std::invalid_argument("build_windows: subdomain rows too narrow for the window band");
  }
  for (const Range& b : lay.cols) {
    if (b.size() < need) throw std::invalid_argument("build_windows: subdomain cols too narrow for the window band");
  }
}

}  // namespace detail

inline WindowSet build_windows(const CDDLayout& lay, const Grid2D& grid) {
  WindowSet ws;
  const int delta = lay.delta;
  const double band = (delta + 1) * grid.h;

  const bool shift_x = lay.r > 1;
  const bool shift_y = lay.q > 1;
  const CDDLayout lay_x =
      shift_x ? build_cdd_with_blocks(grid, std::vector<int>(lay.rows.size(), lay.rows[0].size()),
                                      detail::shifted_sizes(lay.r, lay.cols[0].size()), delta)
              : lay;
  const CDDLayout lay_y =
      shift_y ? build_cdd_with_blocks(grid, detail::shifted_sizes(lay.q, lay.rows[0].size()),
                                      std::vector<int>(lay.cols.size(), lay.cols[0].size()), delta)
              : lay;
  const CDDLayout lay_xy =
      (shift_x && shift_y)
          ? build_cdd_with_blocks(grid, detail::shifted_sizes(lay.q, lay.rows[0].size()),
                                  detail::shifted_sizes(lay.r, lay.cols[0].size()), delta)
          : (shift_x ? lay_x : lay_y);

  ws.layouts = {lay, lay_x, lay_y, lay_xy};
  for (const CDDLayout& l : ws.layouts) detail::check_band_fits(l);

  const auto cuts_x = detail::cut_coords(grid, lay.cols, true);
  const auto cuts_y = detail::cut_coords(grid, lay.rows, false);
  const auto cuts_xs = detail::cut_coords(grid, lay_x.cols, true);
  const auto cuts_ys = detail::cut_coords(grid, lay_y.rows, false);

  const auto theta_x = detail::window_profile(grid, grid.nx(), cuts_x, cuts_xs, band, true);
  const auto theta_y = detail::window_profile(grid, grid.ny(), cuts_y, cuts_ys, band, false);

  for (auto& p : ws.phi) p.assign(static_cast<size_t>(grid.size()), 0.0);
  for (int iy = 0; iy < grid.ny(); ++iy) {
    const double ty = theta_y[static_cast<size_t>(iy)];
    for (int ix = 0; ix < grid.nx(); ++ix) {
      const double tx = theta_x[static_cast<size_t>(ix)];
      const size_t g = static_cast<size_t>(grid.index(ix, iy));
      ws.phi[0][g] = tx * ty;
      ws.phi[1][g] = (1.0 - tx) * ty;
      ws.phi[2][g] = tx * (1.0 - ty);
      ws.phi[3][g] = (1.0 - tx) * (1.0 - ty);
    }
  }
  ws.active = {true, shift_x, shift_y, shift_x && shift_y};
  return ws;
}

}  // namespace lsweeps
