// The L-sweeps engine: per-subdomain local solves, the eight directional
// sweeps that propagate polarized traces across the checkerboard (four
// cardinal, four corner-to-corner), their composition into the global
// preconditioner application, and the windowed variant for sources that touch
// the skeleton.
//
// Boards are q x r arrays of optional trace pairs indexed by the generating
// cell.  Each board entry has a single writer per sweep, so parallel execution
// over wavefronts is race-free and bitwise deterministic for any worker count.

#pragma once

#include <array>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <memory>
#include <optional>
#include <stdexcept>
#include <unordered_map>
#include <utility>
#include <vector>

#include "lsweeps/cdd.hpp"
#include "lsweeps/core.hpp"
#include "lsweeps/runtime.hpp"
#include "lsweeps/sparse_direct.hpp"
#include "lsweeps/traces.hpp"

namespace lsweeps {

// All trace boards of one preconditioner application.  loc* accumulate the
// side traces of the growing local wavefields (set by the local solves, grown
// by the matching cardinal sweep).  The eight direction boards hold the side
// traces of the cardinal sweep increments and are grown further by the corner
// sweeps that consume them.
struct SweepBoards {
  TraceBoard locB, locR, locT, locL;
  TraceBoard upR, upL, downR, downL;
  TraceBoard rightB, rightT, leftB, leftT;

  SweepBoards() = default;
  SweepBoards(int q, int r) {
    for (TraceBoard* b : {&locB, &locR, &locT, &locL, &upR, &upL, &downR, &downL,
                          &rightB, &rightT, &leftB, &leftT}) {
      *b = TraceBoard(q, r);
    }
  }
};

// ---------------------------------------------------------------------------
// Local solve sets

namespace detail {

inline std::uint64_t fnv1a(const void* data, size_t n, std::uint64_t h) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

inline std::uint64_t matrix_fingerprint(const SparseMatrixC& A) {
  std::uint64_t h = 14695981039346656037ull;
  const long rows = A.rows();
  const long nnz = A.nonZeros();
  h = fnv1a(&rows, sizeof rows, h);
  h = fnv1a(&nnz, sizeof nnz, h);
  h = fnv1a(A.outerIndexPtr(), sizeof(int) * static_cast<size_t>(A.outerSize() + 1), h);
  h = fnv1a(A.innerIndexPtr(), sizeof(int) * static_cast<size_t>(nnz), h);
  h = fnv1a(A.valuePtr(), sizeof(cplx) * static_cast<size_t>(nnz), h);
  return h;
}

inline bool matrices_identical(const SparseMatrixC& a, const SparseMatrixC& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols() || a.nonZeros() != b.nonZeros()) {
    return false;
  }
  const size_t nnz = static_cast<size_t>(a.nonZeros());
  return std::memcmp(a.outerIndexPtr(), b.outerIndexPtr(),
                     sizeof(int) * static_cast<size_t>(a.outerSize() + 1)) == 0 &&
         std::memcmp(a.innerIndexPtr(), b.innerIndexPtr(), sizeof(int) * nnz) == 0 &&
         std::memcmp(a.valuePtr(), b.valuePtr(), sizeof(cplx) * nnz) == 0;
}

}  // namespace detail

// One CDD's worth of local problems and factorizations.  Bitwise-identical
// local matrices (congruent subdomains of translation-invariant media) share
// one factorization, which collapses both memory and factorization time for
// constant and periodic models.
struct LocalSolveSet {
  CDDLayout lay;
  std::vector<IndexBox> boxes;
  std::vector<std::shared_ptr<const SparseMatrixC>> mats;
  std::vector<std::shared_ptr<const Factorization>> facts;
  std::vector<std::uint8_t> skeleton_mask;
  int distinct_matrices = 0;
  long bytes_estimate = 0;  // factor + matrix storage, for the retention policy
};

inline std::unique_ptr<LocalSolveSet> build_local_solve_set(
    const CDDLayout& lay, const std::vector<double>& m_ext, double omega,
    const PmlSpec& spec, WorkerPool& pool, InstrumentationReport* instr = nullptr) {
  auto set = std::make_unique<LocalSolveSet>();
  set->lay = lay;
  const int cells = lay.cells();
  set->boxes.resize(static_cast<size_t>(cells));
  set->mats.resize(static_cast<size_t>(cells));
  set->facts.resize(static_cast<size_t>(cells));

  WorkerAssignment assign{pool.size(), lay.q};
  WallTimer wt_assemble;
  auto cell_owner = [&](int c) { return assign.worker_of_row(c / lay.r); };
  std::vector<double> busy = pool.run_front(cells, cell_owner, [&](int c) {
    LocalProblem lp = build_local_problem(lay, c / lay.r, c % lay.r, m_ext, omega, spec);
    set->boxes[static_cast<size_t>(c)] = lp.box;
    set->mats[static_cast<size_t>(c)] =
        std::make_shared<const SparseMatrixC>(std::move(lp.A));
  });
  if (instr) instrument_front(*instr, Phase::Factorize, wt_assemble.seconds(), busy, 0, 0);

  std::unordered_map<std::uint64_t, std::vector<int>> groups;
  std::vector<int> rep_of(static_cast<size_t>(cells));
  std::vector<int> reps;
  for (int c = 0; c < cells; ++c) {
    auto& cand = groups[detail::matrix_fingerprint(*set->mats[static_cast<size_t>(c)])];
    int found = -1;
    for (int rc : cand) {
      if (detail::matrices_identical(*set->mats[static_cast<size_t>(rc)],
                                     *set->mats[static_cast<size_t>(c)])) {
        found = rc;
        break;
      }
    }
    if (found < 0) {
      cand.push_back(c);
      reps.push_back(c);
      rep_of[static_cast<size_t>(c)] = c;
    } else {
      rep_of[static_cast<size_t>(c)] = found;
      set->mats[static_cast<size_t>(c)] = set->mats[static_cast<size_t>(found)];
    }
  }
  set->distinct_matrices = static_cast<int>(reps.size());

  WallTimer wt_factor;
  auto rep_owner = [&](int k) { return cell_owner(reps[static_cast<size_t>(k)]); };
  busy = pool.run_front(static_cast<int>(reps.size()), rep_owner, [&](int k) {
    const int c = reps[static_cast<size_t>(k)];
    set->facts[static_cast<size_t>(c)] =
        std::shared_ptr<const Factorization>(factorize(*set->mats[static_cast<size_t>(c)]));
  });
  for (int c = 0; c < cells; ++c) {
    set->facts[static_cast<size_t>(c)] = set->facts[static_cast<size_t>(rep_of[static_cast<size_t>(c)])];
  }
  if (instr) instrument_front(*instr, Phase::Factorize, wt_factor.seconds(), busy, 0, 0);

  set->skeleton_mask = skeleton_trace_mask(lay);
  for (int c : reps) {
    const auto& F = *set->facts[static_cast<size_t>(c)];
    const auto& A = *set->mats[static_cast<size_t>(c)];
    set->bytes_estimate += F.factor_nnz() * 20 + static_cast<long>(F.dim()) * 48 +
                           static_cast<long>(A.nonZeros()) * 20;
  }
  return set;
}

// Everything a sweep task needs: the solve set, the thread pool, the message
// hub, the row-to-worker map, and the instrumentation sink.
struct SweepContext {
  LocalSolveSet& solves;
  WorkerPool& pool;
  MessageHub& hub;
  WorkerAssignment assign;
  InstrumentationReport* instr = nullptr;
};

inline SweepContext make_context(LocalSolveSet& solves, WorkerPool& pool,
                                 MessageHub& hub, InstrumentationReport* instr = nullptr) {
  return SweepContext{solves, pool, hub, WorkerAssignment{pool.size(), solves.lay.q},
                      instr};
}

// ---------------------------------------------------------------------------
// Local solves

// Solves every subdomain against its owned slice of f and posts the side
// traces of the local solutions onto the loc* boards (unconditionally, even
// when the local field is zero: absent and zero boards are both handled, but
// posted boards keep message counts independent of the data).
inline void add_loc_sols(const VectorXc& f_ext, SweepContext& ctx, SweepBoards& boards,
                         std::vector<VectorXc>& u_loc) {
  const CDDLayout& lay = ctx.solves.lay;
  u_loc.assign(static_cast<size_t>(lay.cells()), VectorXc());
  WallTimer wt;
  auto owner = [&](int c) { return ctx.assign.worker_of_row(c / lay.r); };
  const auto busy = ctx.pool.run_front(lay.cells(), owner, [&](int c) {
    const int si = c / lay.r, sj = c % lay.r;
    const size_t sc = static_cast<size_t>(c);
    u_loc[sc] = ctx.solves.facts[sc]->solve(restrict_source(f_ext, lay, si, sj));
    const IndexBox& box = ctx.solves.boxes[sc];
    if (lay.has_neighbor(si, sj, Side::B)) {
      boards.locB.set(si, sj, extract_side(u_loc[sc], box, lay, si, sj, Side::B));
    }
    if (lay.has_neighbor(si, sj, Side::R)) {
      boards.locR.set(si, sj, extract_side(u_loc[sc], box, lay, si, sj, Side::R));
    }
    if (lay.has_neighbor(si, sj, Side::T)) {
      boards.locT.set(si, sj, extract_side(u_loc[sc], box, lay, si, sj, Side::T));
    }
    if (lay.has_neighbor(si, sj, Side::L)) {
      boards.locL.set(si, sj, extract_side(u_loc[sc], box, lay, si, sj, Side::L));
    }
  });
  if (ctx.instr) instrument_front(*ctx.instr, Phase::Solve, wt.seconds(), busy, 0, 0);
}

// ---------------------------------------------------------------------------
// Directional sweeps

namespace detail {

struct BoardUpdate {
  TraceBoard SweepBoards::*board = nullptr;
  Side side = Side::B;
  bool accumulate = false;
};

// Dataflow of one sweep direction: which neighbor boards a task consumes
// (vertical source in row si+vert_di, horizontal source in column sj+horiz_dj)
// and which boards it writes from the polarized increment.  The vertically
// consumed board is also the one shipped to the next row's worker.
struct SweepRules {
  TraceBoard SweepBoards::*vert_in = nullptr;
  int vert_di = 0;
  Side vert_side = Side::B;  // side at which the consumer receives it
  TraceBoard SweepBoards::*horiz_in = nullptr;
  int horiz_dj = 0;
  std::array<BoardUpdate, 3> updates{};
  int n_updates = 0;
};

inline SweepRules sweep_rules(SweepDir d) {
  SweepRules r;
  switch (d) {
    case SweepDir::Up:
      r.vert_in = &SweepBoards::locT;
      r.vert_di = -1;
      r.vert_side = Side::B;
      r.updates = {{{&SweepBoards::locT, Side::T, true},
                    {&SweepBoards::upR, Side::R, false},
                    {&SweepBoards::upL, Side::L, false}}};
      r.n_updates = 3;
      break;
    case SweepDir::Down:
      r.vert_in = &SweepBoards::locB;
      r.vert_di = +1;
      r.vert_side = Side::T;
      r.updates = {{{&SweepBoards::locB, Side::B, true},
                    {&SweepBoards::downR, Side::R, false},
                    {&SweepBoards::downL, Side::L, false}}};
      r.n_updates = 3;
      break;
    case SweepDir::Right:
      r.horiz_in = &SweepBoards::locR;
      r.horiz_dj = -1;
      r.updates = {{{&SweepBoards::locR, Side::R, true},
                    {&SweepBoards::rightB, Side::B, false},
                    {&SweepBoards::rightT, Side::T, false}}};
      r.n_updates = 3;
      break;
    case SweepDir::Left:
      r.horiz_in = &SweepBoards::locL;
      r.horiz_dj = +1;
      r.updates = {{{&SweepBoards::locL, Side::L, true},
                    {&SweepBoards::leftB, Side::B, false},
                    {&SweepBoards::leftT, Side::T, false}}};
      r.n_updates = 3;
      break;
    case SweepDir::BL2TR:
      r.vert_in = &SweepBoards::rightT;
      r.vert_di = -1;
      r.vert_side = Side::B;
      r.horiz_in = &SweepBoards::upR;
      r.horiz_dj = -1;
      r.updates = {{{&SweepBoards::rightT, Side::T, true},
                    {&SweepBoards::upR, Side::R, true}}};
      r.n_updates = 2;
      break;
    case SweepDir::TR2BL:
      r.vert_in = &SweepBoards::leftB;
      r.vert_di = +1;
      r.vert_side = Side::T;
      r.horiz_in = &SweepBoards::downL;
      r.horiz_dj = +1;
      r.updates = {{{&SweepBoards::leftB, Side::B, true},
                    {&SweepBoards::downL, Side::L, true}}};
      r.n_updates = 2;
      break;
    case SweepDir::BR2TL:
      r.vert_in = &SweepBoards::leftT;
      r.vert_di = -1;
      r.vert_side = Side::B;
      r.horiz_in = &SweepBoards::upL;
      r.horiz_dj = +1;
      r.updates = {{{&SweepBoards::leftT, Side::T, true},
                    {&SweepBoards::upL, Side::L, true}}};
      r.n_updates = 2;
      break;
    case SweepDir::TL2BR:
      r.vert_in = &SweepBoards::rightB;
      r.vert_di = +1;
      r.vert_side = Side::T;
      r.horiz_in = &SweepBoards::downR;
      r.horiz_dj = -1;
      r.updates = {{{&SweepBoards::rightB, Side::B, true},
                    {&SweepBoards::downR, Side::R, true}}};
      r.n_updates = 2;
      break;
  }
  return r;
}

inline void sweep_task(SweepDir dir, const SweepRules& rules, const SweepTask& t,
                       SweepContext& ctx, SweepBoards& boards,
                       std::vector<VectorXc>& u_loc) {
  const CDDLayout& lay = ctx.solves.lay;
  const int si = t.si, sj = t.sj;
  const size_t c = static_cast<size_t>(lay.cell(si, sj));
  const int me = ctx.assign.worker_of_row(si);

  const TracePair* vert = nullptr;
  std::optional<TracePair> vert_store;  // keeps a message payload alive
  if (rules.vert_in) {
    const int src = si + rules.vert_di;
    if (src >= 0 && src < lay.q) {
      const int sw = ctx.assign.worker_of_row(src);
      if (sw == me) {
        const auto& cell = (boards.*rules.vert_in).at(src, sj);
        if (cell) vert = &*cell;
      } else {
        TraceMessage msg = ctx.hub.channel(sw, me).pop_expect(dir, si, sj, rules.vert_side);
        if (msg.payload) {
          vert_store = std::move(msg.payload);
          vert = &*vert_store;
        }
      }
    }
  }
  const TracePair* horiz = nullptr;
  if (rules.horiz_in) {
    const int src = sj + rules.horiz_dj;
    if (src >= 0 && src < lay.r) {
      const auto& cell = (boards.*rules.horiz_in).at(si, src);
      if (cell) horiz = &*cell;
    }
  }

  if (vert || horiz) {
    const LTrace lt = (vert && horiz) ? combine_L_trace(*vert, *horiz)
                                      : to_ltrace(vert ? *vert : *horiz);
    const IndexBox& box = ctx.solves.boxes[c];
    const VectorXc v = compute_pol_sol(*ctx.solves.facts[c], *ctx.solves.mats[c], box,
                                       lay, lt);
    if (u_loc[c].size() == 0) u_loc[c] = VectorXc::Zero(box.size());
    u_loc[c] += v;
    for (int k = 0; k < rules.n_updates; ++k) {
      const BoardUpdate& up = rules.updates[static_cast<size_t>(k)];
      if (!lay.has_neighbor(si, sj, up.side)) continue;
      TracePair p = extract_side(v, box, lay, si, sj, up.side);
      if (up.accumulate) {
        (boards.*up.board).accumulate(si, sj, p);
      } else {
        (boards.*up.board).set(si, sj, std::move(p));
      }
    }
  }

  // Ship the vertically consumed board onward even when this task computed
  // nothing: the next row still expects exactly one message per cell.
  if (rules.vert_in) {
    if (auto route = task_message(dir, lay.q, lay.r, si, sj)) {
      const int dst = ctx.assign.worker_of_row(route->to.si);
      if (dst != me) {
        TraceMessage msg;
        msg.dir = dir;
        msg.si = route->to.si;
        msg.sj = route->to.sj;
        msg.side = route->to_side;
        msg.payload = (boards.*rules.vert_in).at(si, sj);
        ctx.hub.send(me, dst, std::move(msg));
      }
    }
  }
}

}  // namespace detail

// Executes one sweep front by front: tasks of a front run in parallel on their
// row-owning workers, cross-worker boards travel as tagged FIFO messages, and
// a barrier separates fronts.
inline void run_sweep(const SweepSchedule& sched, SweepContext& ctx, SweepBoards& boards,
                      std::vector<VectorXc>& u_loc) {
  const CDDLayout& lay = ctx.solves.lay;
  if (sched.q != lay.q || sched.r != lay.r) {
    throw std::invalid_argument("run_sweep: schedule does not match the layout");
  }
  if (u_loc.size() != static_cast<size_t>(lay.cells())) {
    u_loc.assign(static_cast<size_t>(lay.cells()), VectorXc());
  }
  const detail::SweepRules rules = detail::sweep_rules(sched.dir);
  for (const auto& front : sched.fronts) {
    WallTimer wt;
    const long m0 = ctx.hub.messages(), v0 = ctx.hub.volume_complex();
    const auto busy = ctx.pool.run_front(
        static_cast<int>(front.size()),
        [&](int k) { return ctx.assign.worker_of_row(front[static_cast<size_t>(k)].si); },
        [&](int k) {
          detail::sweep_task(sched.dir, rules, front[static_cast<size_t>(k)], ctx, boards,
                             u_loc);
        });
    if (ctx.instr) {
      instrument_front(*ctx.instr, Phase::Solve, wt.seconds(), busy,
                       ctx.hub.messages() - m0, ctx.hub.volume_complex() - v0);
    }
  }
}

inline void sweep_up(SweepContext& ctx, SweepBoards& b, std::vector<VectorXc>& u) {
  run_sweep(build_schedule(ctx.solves.lay.q, ctx.solves.lay.r, SweepDir::Up), ctx, b, u);
}
inline void sweep_down(SweepContext& ctx, SweepBoards& b, std::vector<VectorXc>& u) {
  run_sweep(build_schedule(ctx.solves.lay.q, ctx.solves.lay.r, SweepDir::Down), ctx, b, u);
}
inline void sweep_right(SweepContext& ctx, SweepBoards& b, std::vector<VectorXc>& u) {
  run_sweep(build_schedule(ctx.solves.lay.q, ctx.solves.lay.r, SweepDir::Right), ctx, b, u);
}
inline void sweep_left(SweepContext& ctx, SweepBoards& b, std::vector<VectorXc>& u) {
  run_sweep(build_schedule(ctx.solves.lay.q, ctx.solves.lay.r, SweepDir::Left), ctx, b, u);
}
inline void sweep_bl2tr(SweepContext& ctx, SweepBoards& b, std::vector<VectorXc>& u) {
  run_sweep(build_schedule(ctx.solves.lay.q, ctx.solves.lay.r, SweepDir::BL2TR), ctx, b, u);
}
inline void sweep_tr2bl(SweepContext& ctx, SweepBoards& b, std::vector<VectorXc>& u) {
  run_sweep(build_schedule(ctx.solves.lay.q, ctx.solves.lay.r, SweepDir::TR2BL), ctx, b, u);
}
inline void sweep_br2tl(SweepContext& ctx, SweepBoards& b, std::vector<VectorXc>& u) {
  run_sweep(build_schedule(ctx.solves.lay.q, ctx.solves.lay.r, SweepDir::BR2TL), ctx, b, u);
}
inline void sweep_tl2br(SweepContext& ctx, SweepBoards& b, std::vector<VectorXc>& u) {
  run_sweep(build_schedule(ctx.solves.lay.q, ctx.solves.lay.r, SweepDir::TL2BR), ctx, b, u);
}

// ---------------------------------------------------------------------------
// Scenario-3 application

// One full L-sweeps pass for a source that avoids the skeleton trace sets:
// local solves, the four cardinal sweeps, the four corner sweeps, then the
// global field assembled from the owned windows (a partition of the grid).
inline VectorXc compute_scenario3(const VectorXc& f_ext, SweepContext& ctx) {
  const CDDLayout& lay = ctx.solves.lay;
  if (f_ext.size() != lay.grid.size()) {
    throw std::invalid_argument("compute_scenario3: field size mismatch");
  }
  const auto& mask = ctx.solves.skeleton_mask;
  for (int g = 0; g < lay.grid.size(); ++g) {
    if (mask[static_cast<size_t>(g)] && std::abs(f_ext[g]) > 1e-300) {
      throw std::invalid_argument(
          "compute_scenario3: source touches the skeleton trace sets; apply the "
          "windowed preconditioner instead");
    }
  }

  SweepBoards boards(lay.q, lay.r);
  std::vector<VectorXc> u_loc;
  add_loc_sols(f_ext, ctx, boards, u_loc);
  for (SweepDir d : {SweepDir::Up, SweepDir::Down, SweepDir::Right, SweepDir::Left,
                     SweepDir::BL2TR, SweepDir::TR2BL, SweepDir::BR2TL, SweepDir::TL2BR}) {
    run_sweep(build_schedule(lay.q, lay.r, d), ctx, boards, u_loc);
  }
  if (!ctx.hub.all_drained()) {
    throw std::logic_error("compute_scenario3: undelivered trace messages remain");
  }

  VectorXc u = VectorXc::Zero(lay.grid.size());
  for (int si = 0; si < lay.q; ++si) {
    for (int sj = 0; sj < lay.r; ++sj) {
      const size_t c = static_cast<size_t>(lay.cell(si, sj));
      if (u_loc[c].size() == 0) continue;
      const IndexBox& box = ctx.solves.boxes[c];
      const IndexBox own = lay.owned_win(si, sj);
      for (int iy = own.y.lo; iy < own.y.hi; ++iy) {
        for (int ix = own.x.lo; ix < own.x.hi; ++ix) {
          u[lay.grid.index(ix, iy)] = u_loc[c][box.local_index(ix, iy)];
        }
      }
    }
  }
  return u;
}

// ---------------------------------------------------------------------------
// Distributed operator application

// y = A u with rows processed in the layout's row blocks (ascending, each
// block sequential), so results are bitwise identical for every worker count.
inline VectorXc apply_global_operator(const SparseMatrixC& A, const VectorXc& u,
                                      const CDDLayout& lay, WorkerPool* pool = nullptr) {
  if (A.rows() != u.size() || A.rows() != lay.grid.size()) {
    throw std::invalid_argument("apply_global_operator: size mismatch");
  }
  VectorXc y(u.size());
  const int nx = lay.grid.nx();
  const int* outer = A.outerIndexPtr();
  const int* inner = A.innerIndexPtr();
  const cplx* val = A.valuePtr();
  auto row_block = [&](int si) {
    const long lo = static_cast<long>(lay.rows_owned[static_cast<size_t>(si)].lo) * nx;
    const long hi = static_cast<long>(lay.rows_owned[static_cast<size_t>(si)].hi) * nx;
    for (long row = lo; row < hi; ++row) {
      cplx acc = 0.0;
      for (int k = outer[row]; k < outer[row + 1]; ++k) acc += val[k] * u[inner[k]];
      y[row] = acc;
    }
  };
  if (pool && pool->size() > 1) {
    WorkerAssignment assign{pool->size(), lay.q};
    pool->run_front(lay.q, [&](int si) { return assign.worker_of_row(si); }, row_block);
  } else {
    for (int si = 0; si < lay.q; ++si) row_block(si);
  }
  return y;
}

// ---------------------------------------------------------------------------
// Preconditioner

struct PreconditionerConfig {
  int q = 2, r = 2, delta = 1;
  int workers = 1;
  long factor_budget_bytes = 3'500'000'000L;  // LSWEEPS_FACT_BUDGET_MB overrides
};

inline long factor_budget_from_env(long fallback) {
  if (const char* env = std::getenv("LSWEEPS_FACT_BUDGET_MB")) {
    char* end = nullptr;
    const long mb = std::strtol(env, &end, 10);
    if (end != env && mb > 0) return mb * 1'000'000L;
  }
  return fallback;
}

// The L-sweeps preconditioner.  Sources clear of the skeleton take the plain
// scenario-3 path on the base CDD; sources touching it are split by the window
// partition of unity and solved on the four (base + shifted) CDDs.  Shifted
// factorization sets are built lazily and retained, retained-except-shifted,
// or rebuilt per application depending on the measured factorization footprint
// against the memory budget.
class Preconditioner {
 public:
  enum class Retention { All, BaseOnly, None };

  Preconditioner(const Grid2D& grid, std::vector<double> m_ext, double omega,
                 const PmlSpec& spec, const PreconditionerConfig& cfg,
                 InstrumentationReport* instr = nullptr)
      : grid_(grid),
        m_ext_(std::move(m_ext)),
        omega_(omega),
        spec_(spec),
        cfg_(cfg),
        instr_(instr),
        base_(build_cdd(grid, cfg.q, cfg.r, cfg.delta)),
        base_mask_(skeleton_trace_mask(base_)),
        assign_(make_worker_assignment(cfg.q, cfg.workers)),
        pool_(assign_.p),
        hub_(assign_.p) {
    cfg_.factor_budget_bytes = factor_budget_from_env(cfg.factor_budget_bytes);
    sets_[0] = build_local_solve_set(base_, m_ext_, omega_, spec_, pool_, instr_);
    update_retention();
  }

  VectorXc apply(const VectorXc& f) {
    check_size(f);
    if (!needs_windows(f)) return apply_scenario3(f);
    return apply_windowed(f);
  }

  // One fixed linear map regardless of where the input is supported: the
  // windowed decomposition whenever the CDD has interior interfaces.  A Krylov
  // solver needs its preconditioner to be the same operator for every basis
  // vector; the input-dependent dispatch in apply() would hand the first
  // residual (which clears the skeleton) to a different operator than every
  // later Arnoldi vector (which never does), and the recurred residual then
  // silently diverges from the true one.
  VectorXc apply_uniform(const VectorXc& f) {
    check_size(f);
    if (cfg_.q == 1 && cfg_.r == 1) return apply_scenario3(f);
    return apply_windowed(f);
  }

  bool needs_windows(const VectorXc& f) const {
    for (int g = 0; g < grid_.size(); ++g) {
      if (base_mask_[static_cast<size_t>(g)] && std::abs(f[g]) > 1e-300) return true;
    }
    return false;
  }

  const CDDLayout& layout() const { return base_; }
  const WorkerAssignment& assignment() const { return assign_; }
  WorkerPool& pool() { return pool_; }
  MessageHub& hub() { return hub_; }
  Retention retention() const { return retention_; }
  long windowed_applications() const { return windowed_applications_; }
  const WindowSet* windows() const { return windows_.get(); }
  const LocalSolveSet* solve_set(int k) const { return sets_[static_cast<size_t>(k)].get(); }

  const char* retention_name() const {
    switch (retention_) {
      case Retention::All: return "retain-all";
      case Retention::BaseOnly: return "retain-base";
      case Retention::None: return "rebuild-per-application";
    }
    return "?";
  }

 private:
  void check_size(const VectorXc& f) const {
    if (f.size() != grid_.size()) {
      throw std::invalid_argument("Preconditioner::apply: field size mismatch");
    }
  }

  VectorXc apply_scenario3(const VectorXc& f) {
    SweepContext ctx = make_context(ensure_set(0), pool_, hub_, instr_);
    VectorXc u = compute_scenario3(f, ctx);
    evict_after_use(0);
    return u;
  }

  VectorXc apply_windowed(const VectorXc& f) {
    ++windowed_applications_;
    ensure_windows();
    VectorXc u = VectorXc::Zero(grid_.size());
    for (int k = 0; k < 4; ++k) {
      if (!windows_->active[static_cast<size_t>(k)]) continue;
      SweepContext ctx = make_context(ensure_set(k), pool_, hub_, instr_);
      const auto& phi = windows_->phi[static_cast<size_t>(k)];
      VectorXc fk(f.size());
      for (long g = 0; g < f.size(); ++g) fk[g] = f[g] * phi[static_cast<size_t>(g)];
      u += compute_scenario3(fk, ctx);
      evict_after_use(k);
    }
    return u;
  }

  void ensure_windows() {
    if (windows_) return;
    WallTimer wt;
    windows_ = std::make_unique<WindowSet>(build_windows(base_, grid_));
    if (instr_) instrument(*instr_, Phase::Setup, wt.seconds());
  }

  LocalSolveSet& ensure_set(int k) {
    auto& slot = sets_[static_cast<size_t>(k)];
    if (!slot) {
      const CDDLayout& lay = (k == 0) ? base_ : windows_->layouts[static_cast<size_t>(k)];
      slot = build_local_solve_set(lay, m_ext_, omega_, spec_, pool_, instr_);
      update_retention();
    }
    return *slot;
  }

  // Number of solve sets an application of the windowed path touches.
  int active_sets() const {
    const bool sx = cfg_.r > 1, sy = cfg_.q > 1;
    return 1 + (sx ? 1 : 0) + (sy ? 1 : 0) + ((sx && sy) ? 1 : 0);
  }

  void update_retention() {
    long built = 0, largest = 0;
    int built_count = 0;
    for (const auto& s : sets_) {
      if (!s) continue;
      built += s->bytes_estimate;
      largest = std::max(largest, s->bytes_estimate);
      ++built_count;
    }
    const long projected = built + largest * (active_sets() - built_count);
    const long base_bytes = sets_[0] ? sets_[0]->bytes_estimate : largest;
    if (projected <= cfg_.factor_budget_bytes) {
      retention_ = Retention::All;
    } else if (base_bytes + largest <= cfg_.factor_budget_bytes) {
      retention_ = Retention::BaseOnly;
    } else {
      retention_ = Retention::None;
    }
  }

  void evict_after_use(int k) {
    if (retention_ == Retention::All) return;
    if (retention_ == Retention::BaseOnly && k == 0) return;
    if (active_sets() == 1) return;  // single-CDD problems keep their only set
    sets_[static_cast<size_t>(k)].reset();
  }

  Grid2D grid_;
  std::vector<double> m_ext_;
  double omega_;
  PmlSpec spec_;
  PreconditionerConfig cfg_;
  InstrumentationReport* instr_;
  CDDLayout base_;
  std::vector<std::uint8_t> base_mask_;
  WorkerAssignment assign_;
  WorkerPool pool_;
  MessageHub hub_;
  std::array<std::unique_ptr<LocalSolveSet>, 4> sets_;
  std::unique_ptr<WindowSet> windows_;
  Retention retention_ = Retention::All;
  long windowed_applications_ = 0;
};

inline VectorXc apply_preconditioner(const VectorXc& f, Preconditioner& M) {
  return M.apply(f);
}

}  // namespace lsweeps
