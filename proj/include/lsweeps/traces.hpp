// Interface traces: the (inner, outer) grid-line value pairs flanking each
// skeleton segment, their L-shaped combination, and the polarized local solve
// driven purely by trace data.
//
// For a pair generated at side S of subdomain (si,sj): `inner` holds the delta
// lines just inside the subdomain (the discrete lambda), `outer` the delta
// lines across the skeleton (the discrete mu).  The consuming neighbor sees
// the same geometry mirrored: inner lines are its ghost lines, outer lines are
// its first interior lines.

#pragma once

#include <optional>
#include <stdexcept>
#include <unordered_map>
#include <utility>
#include <vector>

#include "lsweeps/cdd.hpp"
#include "lsweeps/core.hpp"
#include "lsweeps/sparse_direct.hpp"

namespace lsweeps {

struct TracePair {
  Side side = Side::B;  // side of the generating subdomain
  int delta = 1;
  int len = 0;                           // interface length in points
  std::vector<int> inner_idx, outer_idx;  // global extended-grid indices, ascending
  VectorXc inner, outer;                  // values matching *_idx

  int values_per_layer() const { return delta * len; }
};

// Global indices of the trace lines at side S of (si,sj), flattened line-major
// with ascending index order inside each line and across lines.
//
// The lines run across the block's owned span, not just its bulk span: where a
// block touches the physical boundary the interface continues through the
// absorbing collar, and the wave flux crossing there belongs to no other
// block's transfer path.  Interior ends stop at the bulk edge — flux crossing
// an interface inside a neighboring column's territory is carried by that
// column's own traces via the perpendicular and diagonal sweeps.
inline TracePair trace_lines(const CDDLayout& lay, int si, int sj, Side side) {
  TracePair p;
  p.side = side;
  p.delta = lay.delta;
  const Range bx = lay.cols_owned[sj], by = lay.rows_owned[si];
  const Range iy_bulk = lay.rows[si], ix_bulk = lay.cols[sj];
  const int d = lay.delta;
  auto horiz = [&](std::vector<int>& out, int row_lo) {
    for (int iy = row_lo; iy < row_lo + d; ++iy) {
      for (int ix = bx.lo; ix < bx.hi; ++ix) out.push_back(lay.grid.index(ix, iy));
    }
  };
  auto vert = [&](std::vector<int>& out, int col_lo) {
    for (int ix = col_lo; ix < col_lo + d; ++ix) {
      for (int iy = by.lo; iy < by.hi; ++iy) out.push_back(lay.grid.index(ix, iy));
    }
  };
  switch (side) {
    case Side::T:
      p.len = bx.size();
      horiz(p.inner_idx, iy_bulk.hi - d);
      horiz(p.outer_idx, iy_bulk.hi);
      break;
    case Side::B:
      p.len = bx.size();
      horiz(p.inner_idx, iy_bulk.lo);
      horiz(p.outer_idx, iy_bulk.lo - d);
      break;
    case Side::R:
      p.len = by.size();
      vert(p.inner_idx, ix_bulk.hi - d);
      vert(p.outer_idx, ix_bulk.hi);
      break;
    case Side::L:
      p.len = by.size();
      vert(p.inner_idx, ix_bulk.lo);
      vert(p.outer_idx, ix_bulk.lo - d);
      break;
  }
  p.inner = VectorXc::Zero(p.inner_idx.size());
  p.outer = VectorXc::Zero(p.outer_idx.size());
  return p;
}

// Read the trace values of side S out of a local field on the given box.
inline TracePair extract_side(const VectorXc& u_loc, const IndexBox& box,
                              const CDDLayout& lay, int si, int sj, Side side) {
  TracePair p = trace_lines(lay, si, sj, side);
  const int nx = lay.grid.nx();
  for (size_t k = 0; k < p.inner_idx.size(); ++k) {
    const int g = p.inner_idx[k];
    p.inner[static_cast<long>(k)] = u_loc[box.local_index(g % nx, g / nx)];
  }
  for (size_t k = 0; k < p.outer_idx.size(); ++k) {
    const int g = p.outer_idx[k];
    p.outer[static_cast<long>(k)] = u_loc[box.local_index(g % nx, g / nx)];
  }
  return p;
}

// Traces for every side of (si,sj) that faces another subdomain; physical
// boundary sides are omitted.
inline std::array<std::optional<TracePair>, 4> extract_traces(
    const VectorXc& u_loc, const IndexBox& box, const CDDLayout& lay, int si,
    int sj) {
  std::array<std::optional<TracePair>, 4> out;
  for (Side s : {Side::B, Side::R, Side::T, Side::L}) {
    if (lay.has_neighbor(si, sj, s)) {
      out[static_cast<size_t>(s)] = extract_side(u_loc, box, lay, si, sj, s);
    }
  }
  return out;
}

// q x r board of optional trace pairs; absent entries mean zero.
struct TraceBoard {
  int q = 0, r = 0;
  std::vector<std::optional<TracePair>> entries;

  TraceBoard() = default;
  TraceBoard(int q_, int r_) : q(q_), r(r_), entries(static_cast<size_t>(q_) * r_) {}

  std::optional<TracePair>& at(int si, int sj) {
    return entries[static_cast<size_t>(si) * r + sj];
  }
  const std::optional<TracePair>& at(int si, int sj) const {
    return entries[static_cast<size_t>(si) * r + sj];
  }

  void set(int si, int sj, TracePair p) { at(si, sj) = std::move(p); }

  void accumulate(int si, int sj, const TracePair& p) {
    auto& cell = at(si, sj);
    if (!cell) {
      cell = p;
      return;
    }
    if (cell->inner_idx != p.inner_idx || cell->outer_idx != p.outer_idx) {
      throw std::logic_error("TraceBoard::accumulate: incompatible trace line sets");
    }
    cell->inner += p.inner;
    cell->outer += p.outer;
  }
};

// Two perpendicular trace pairs joined at a subdomain corner, stored as sorted
// (global index, value) lists for the Gamma1 (inner) and Gamma2 (outer) sets.
// On the delta x delta corner overlap of the outer layers, values come from
// the horizontal (B or T) member by convention.
struct LTrace {
  std::vector<std::pair<int, cplx>> inner, outer;
  bool corner_from_horizontal = true;

  bool empty() const { return inner.empty() && outer.empty(); }
  size_t size() const { return inner.size() + outer.size(); }
};

namespace detail {

inline void append_pairs(std::vector<std::pair<int, cplx>>& out,
                         const std::vector<int>& idx, const VectorXc& val) {
  for (size_t k = 0; k < idx.size(); ++k) out.emplace_back(idx[k], val[static_cast<long>(k)]);
}

// Sort by global index; on duplicates keep the first occurrence (insertion
// order encodes the priority).
inline void sort_dedupe(std::vector<std::pair<int, cplx>>& v) {
  std::stable_sort(v.begin(), v.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  v.erase(std::unique(v.begin(), v.end(),
                      [](const auto& a, const auto& b) { return a.first == b.first; }),
          v.end());
}

}  // namespace detail

inline LTrace to_ltrace(const TracePair& p) {
  LTrace t;
  detail::append_pairs(t.inner, p.inner_idx, p.inner);
  detail::append_pairs(t.outer, p.outer_idx, p.outer);
  detail::sort_dedupe(t.inner);
  detail::sort_dedupe(t.outer);
  return t;
}

// Join a horizontal-line member (a pair of side B or T) with a vertical-line
// member (side L or R).  The inner sets are disjoint; the outer sets overlap
// on the corner block, where the horizontal member wins.
inline LTrace combine_L_trace(const TracePair& horizontal, const TracePair& vertical) {
  if (horizontal.side == Side::L || horizontal.side == Side::R ||
      vertical.side == Side::B || vertical.side == Side::T) {
    throw std::invalid_argument("combine_L_trace: expected (B/T, L/R) member pair");
  }
  LTrace t;
  detail::append_pairs(t.inner, horizontal.inner_idx, horizontal.inner);
  detail::append_pairs(t.inner, vertical.inner_idx, vertical.inner);
  detail::append_pairs(t.outer, horizontal.outer_idx, horizontal.outer);
  detail::append_pairs(t.outer, vertical.outer_idx, vertical.outer);
  detail::sort_dedupe(t.inner);
  detail::sort_dedupe(t.outer);
  return t;
}

// Right-hand side of the discrete polarization system: with Gamma1 the ghost
// (inner) rows carrying u_{Gamma1} = lambda and Gamma2 the first-interior
// (outer) rows carrying u_{Gamma2} = mu,
//   g|Gamma1 = +A_{Gamma1,Gamma2} * mu,   g|Gamma2 = -A_{Gamma2,Gamma1} * lambda,
// and zero elsewhere.  Coefficients come from the stored local matrix rows, so
// interfaces running through PML-region coefficients are handled identically.
inline VectorXc polarization_rhs(const SparseMatrixC& A, const IndexBox& box,
                                 const CDDLayout& lay, const LTrace& t) {
  const int nx = lay.grid.nx();
  std::unordered_map<int, cplx> lam, mu;
  lam.reserve(t.inner.size());
  mu.reserve(t.outer.size());
  for (const auto& [g, v] : t.inner) lam.emplace(g, v);
  for (const auto& [g, v] : t.outer) mu.emplace(g, v);

  VectorXc rhs = VectorXc::Zero(box.size());
  auto row_global = [&](int li) {
    return lay.grid.index(box.global_ix(li), box.global_iy(li));
  };
  auto for_each_entry = [&](int li, auto&& fn) {
    for (SparseMatrixC::InnerIterator it(A, li); it; ++it) {
      fn(static_cast<int>(it.col()), it.value());
    }
  };
  for (const auto& [g, lambda] : t.inner) {
    (void)lambda;
    const int li = box.local_index(g % nx, g / nx);
    for_each_entry(li, [&](int lj, cplx a) {
      auto hit = mu.find(row_global(lj));
      if (hit != mu.end()) rhs[li] += a * hit->second;
    });
  }
  for (const auto& [g, muv] : t.outer) {
    (void)muv;
    const int li = box.local_index(g % nx, g / nx);
    for_each_entry(li, [&](int lj, cplx a) {
      auto hit = lam.find(row_global(lj));
      if (hit != lam.end()) rhs[li] -= a * hit->second;
    });
  }
  return rhs;
}

inline VectorXc polarization_rhs(const LocalProblem& lp, const CDDLayout& lay,
                                 const LTrace& t) {
  return polarization_rhs(lp.A, lp.box, lay, t);
}

// Polarized local wavefield: the local solve against the polarization RHS.
// By the annihilation identity it radiates only into the subdomain's side of
// the interface and vanishes on the ghost side.
inline VectorXc compute_pol_sol(const Factorization& F, const SparseMatrixC& A,
                                const IndexBox& box, const CDDLayout& lay,
                                const LTrace& t) {
  if (t.empty()) return VectorXc::Zero(box.size());
  return F.solve(polarization_rhs(A, box, lay, t));
}

inline VectorXc compute_pol_sol(const Factorization& F, const LocalProblem& lp,
                                const CDDLayout& lay, const LTrace& t) {
  return compute_pol_sol(F, lp.A, lp.box, lay, t);
}

}  // namespace lsweeps
