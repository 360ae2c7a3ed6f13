// Trace geometry, L-shaped trace combination, and the discrete annihilation
// identity of the polarized solve.

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "lsweeps/assemble.hpp"
#include "lsweeps/cdd.hpp"
#include "lsweeps/grid.hpp"
#include "lsweeps/sparse_direct.hpp"
#include "lsweeps/traces.hpp"

using namespace lsweeps;

namespace {

struct Problem {
  Grid2D grid;
  double omega;
  PmlSpec spec;
  std::vector<double> m_ext;
  CDDLayout lay;
};

Problem make_setup(int n = 40, int q = 2, int r = 2) {
  Problem s;
  const double ppw = 10.0;
  s.grid = Grid2D{n, n, 1.0 / (n - 1), pml_points(1.0, ppw, 1.0)};
  s.omega = omega_for(n, ppw);
  s.spec = make_pml_spec(s.grid, s.omega);
  s.m_ext.assign(static_cast<size_t>(s.grid.size()), 1.0);
  s.lay = build_cdd(s.grid, q, r, 1);
  return s;
}

}  // namespace

TEST(Traces, LineGeometry) {
  const Problem s = make_setup();
  const int nx = s.grid.nx();

  // Block (0,0) touches the left physical boundary, so its top trace runs
  // from the outer collar edge (column 0) to the interior bulk edge: the
  // interface continues through the absorbing collar and the flux crossing
  // there has no other transfer path.  20 bulk columns + 10 collar columns.
  const TracePair t = trace_lines(s.lay, 0, 0, Side::T);
  EXPECT_EQ(t.len, 30);
  EXPECT_EQ(t.values_per_layer(), 30);
  ASSERT_EQ(t.inner_idx.size(), 30u);
  EXPECT_EQ(t.inner_idx[0], (s.lay.rows[0].hi - 1) * nx + 0);
  EXPECT_EQ(t.inner_idx.back(), (s.lay.rows[0].hi - 1) * nx + s.lay.cols[0].hi - 1);
  for (size_t k = 0; k < t.inner_idx.size(); ++k) {
    EXPECT_EQ(t.outer_idx[k], t.inner_idx[k] + nx);  // outer line one row above
    if (k > 0) { EXPECT_LT(t.inner_idx[k - 1], t.inner_idx[k]); }
  }

  const TracePair b = trace_lines(s.lay, 1, 0, Side::B);
  EXPECT_EQ(b.inner_idx[0], s.lay.rows[1].lo * nx + 0);
  for (size_t k = 0; k < b.inner_idx.size(); ++k) {
    EXPECT_EQ(b.outer_idx[k], b.inner_idx[k] - nx);
  }
  // Producer (0,0).T and consumer (1,0).B describe the same physical lines,
  // with inner/outer swapped.
  EXPECT_EQ(t.inner_idx, b.outer_idx);
  EXPECT_EQ(t.outer_idx, b.inner_idx);

  const TracePair rgt = trace_lines(s.lay, 0, 0, Side::R);
  EXPECT_EQ(rgt.len, 30);
  for (size_t k = 0; k < rgt.inner_idx.size(); ++k) {
    EXPECT_EQ(rgt.outer_idx[k], rgt.inner_idx[k] + 1);  // outer line one col right
  }

  // Interior blocks stop at their bulk edges on both ends: the flux crossing
  // the interface inside a neighboring column is that column's to carry.
  const Problem wide = make_setup(80, 2, 4);
  const TracePair mid = trace_lines(wide.lay, 0, 1, Side::T);
  EXPECT_EQ(mid.len, 20);
  EXPECT_EQ(mid.inner_idx[0],
            (wide.lay.rows[0].hi - 1) * wide.grid.nx() + wide.lay.cols[1].lo);
}

TEST(Traces, ExtractReadsTheLocalField) {
  const Problem s = make_setup();
  const IndexBox box = s.lay.local_box(0, 0);
  VectorXc u_loc(box.size());
  for (int li = 0; li < u_loc.size(); ++li) {
    u_loc[li] = cplx(s.grid.index(box.global_ix(li), box.global_iy(li)), 0.0);
  }
  const auto traces = extract_traces(u_loc, box, s.lay, 0, 0);
  EXPECT_FALSE(traces[static_cast<size_t>(Side::B)].has_value());
  EXPECT_FALSE(traces[static_cast<size_t>(Side::L)].has_value());
  ASSERT_TRUE(traces[static_cast<size_t>(Side::T)].has_value());
  ASSERT_TRUE(traces[static_cast<size_t>(Side::R)].has_value());

  const TracePair& t = *traces[static_cast<size_t>(Side::T)];
  for (size_t k = 0; k < t.inner_idx.size(); ++k) {
    EXPECT_EQ(t.inner[static_cast<long>(k)], cplx(t.inner_idx[k], 0.0));
    EXPECT_EQ(t.outer[static_cast<long>(k)], cplx(t.outer_idx[k], 0.0));
  }
}

TEST(Traces, BoardAccumulates) {
  const Problem s = make_setup();
  TraceBoard board(s.lay.q, s.lay.r);
  EXPECT_FALSE(board.at(0, 0).has_value());

  TracePair t = trace_lines(s.lay, 0, 0, Side::T);
  t.inner.setConstant(cplx(1.0, 0.0));
  t.outer.setConstant(cplx(2.0, 0.0));
  board.accumulate(0, 0, t);  // accumulate into empty behaves like set
  board.accumulate(0, 0, t);
  EXPECT_EQ(board.at(0, 0)->inner[0], cplx(2.0, 0.0));
  EXPECT_EQ(board.at(0, 0)->outer[3], cplx(4.0, 0.0));

  const TracePair other = trace_lines(s.lay, 0, 1, Side::T);
  EXPECT_THROW(board.accumulate(0, 0, other), std::logic_error);
}

TEST(Traces, LCombinationDedupesTheCorner) {
  const Problem s = make_setup();
  // Receiver (1,1) in a bottom-left-to-top-right pass: horizontal member from
  // below ((0,1).T), vertical member from the left ((1,0).R).  Outer layers
  // overlap on the delta x delta corner, where the horizontal values win.
  TracePair h = trace_lines(s.lay, 0, 1, Side::T);
  TracePair v = trace_lines(s.lay, 1, 0, Side::R);
  h.inner.setConstant(cplx(70.0, 0.0));
  h.outer.setConstant(cplx(7.0, 0.0));
  v.inner.setConstant(cplx(90.0, 0.0));
  v.outer.setConstant(cplx(9.0, 0.0));

  const LTrace lt = combine_L_trace(h, v);
  EXPECT_EQ(lt.inner.size(), h.inner_idx.size() + v.inner_idx.size());
  EXPECT_EQ(lt.outer.size(), h.outer_idx.size() + v.outer_idx.size() - 1);

  const int corner = s.grid.index(s.lay.cols[1].lo, s.lay.rows[1].lo);
  bool saw_corner = false;
  int last = -1;
  for (const auto& [g, val] : lt.outer) {
    EXPECT_LT(last, g);  // sorted, unique
    last = g;
    if (g == corner) {
      saw_corner = true;
      EXPECT_EQ(val, cplx(7.0, 0.0));  // horizontal priority
    }
  }
  EXPECT_TRUE(saw_corner);

  EXPECT_THROW(combine_L_trace(v, h), std::invalid_argument);  // sides swapped
}

TEST(Polarization, RhsSupportedOnTraceRowsOnly) {
  const Problem s = make_setup();
  const LocalProblem lp = build_local_problem(s.lay, 1, 0, s.m_ext, s.omega, s.spec);
  TracePair t = trace_lines(s.lay, 1, 0, Side::B);
  for (long k = 0; k < t.inner.size(); ++k) {
    t.inner[k] = cplx(0.3 + 0.01 * k, -0.2);
    t.outer[k] = cplx(-0.1, 0.02 * k);
  }
  const LTrace lt = to_ltrace(t);
  const VectorXc rhs = polarization_rhs(lp, s.lay, lt);
  ASSERT_EQ(rhs.size(), lp.box.size());

  std::vector<bool> allowed(static_cast<size_t>(rhs.size()), false);
  for (const auto& [g, val] : lt.inner) {
    allowed[static_cast<size_t>(lp.local_index(g % s.grid.nx(), g / s.grid.nx()))] = true;
  }
  for (const auto& [g, val] : lt.outer) {
    allowed[static_cast<size_t>(lp.local_index(g % s.grid.nx(), g / s.grid.nx()))] = true;
  }
  double off_support = 0.0, on_support = 0.0;
  for (long i = 0; i < rhs.size(); ++i) {
    (allowed[static_cast<size_t>(i)] ? on_support : off_support) += std::abs(rhs[i]);
  }
  EXPECT_EQ(off_support, 0.0);
  EXPECT_GT(on_support, 0.0);
}

TEST(Polarization, EmptyTraceGivesZeroField) {
  const Problem s = make_setup();
  const LocalProblem lp = build_local_problem(s.lay, 0, 0, s.m_ext, s.omega, s.spec);
  const auto F = factorize(lp.A);
  const VectorXc v = compute_pol_sol(*F, lp, s.lay, LTrace{});
  EXPECT_EQ(v.norm(), 0.0);
  EXPECT_EQ(v.size(), lp.box.size());
}

TEST(Polarization, DiscreteAnnihilationIdentity) {
  // Split the unsplit global problem by a full-width interface between the row
  // blocks.  With lambda/mu read from the exact global solution, the polarized
  // field must vanish on the source side and reproduce the solution on the
  // other side, both to direct-solver accuracy.
  const Problem s = make_setup();
  const SparseMatrixC A = assemble_helmholtz(s.grid, s.m_ext, s.omega, s.spec);
  const auto F = factorize(A);

  VectorXc f = VectorXc::Zero(s.grid.size());
  f[s.grid.index(s.grid.nx() / 2, s.grid.n_pml + 5)] = 1.0;  // below the interface
  const VectorXc u = F->solve(f);

  const int cut = s.lay.rows[1].lo;
  const int d = s.lay.delta;
  LTrace lt;
  for (int iy = cut - d; iy < cut; ++iy) {
    for (int ix = 0; ix < s.grid.nx(); ++ix) {
      const int g = s.grid.index(ix, iy);
      lt.inner.push_back({g, u[g]});
    }
  }
  for (int iy = cut; iy < cut + d; ++iy) {
    for (int ix = 0; ix < s.grid.nx(); ++ix) {
      const int g = s.grid.index(ix, iy);
      lt.outer.push_back({g, u[g]});
    }
  }

  const VectorXc rhs = polarization_rhs(A, s.grid.full_box(), s.lay, lt);
  const VectorXc v = F->solve(rhs);

  double below2 = 0.0, above_err2 = 0.0;
  for (int iy = 0; iy < s.grid.ny(); ++iy) {
    for (int ix = 0; ix < s.grid.nx(); ++ix) {
      const int g = s.grid.index(ix, iy);
      if (iy < cut) {
        below2 += std::norm(v[g]);
      } else {
        above_err2 += std::norm(v[g] - u[g]);
      }
    }
  }
  const double unorm = u.norm();
  EXPECT_LE(std::sqrt(below2) / unorm, 1e-10);
  EXPECT_LE(std::sqrt(above_err2) / unorm, 1e-10);
}
