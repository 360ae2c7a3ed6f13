// Left-preconditioned restarted GMRES with a deterministic inner product.
//
// The stopping test uses the preconditioned relative residual |g_{k+1}|/beta0
// maintained by the Givens rotations, with beta0 = ||M^{-1} b|| fixed at entry;
// the true (unpreconditioned) relative residual is computed once at the end
// for reporting only.  Inner products are evaluated block-by-block in a fixed
// order, so results are bitwise reproducible for any worker count.

#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "lsweeps/cdd.hpp"
#include "lsweeps/core.hpp"
#include "lsweeps/runtime.hpp"

namespace lsweeps {

// Conjugate-linear in the first argument: dot(u, v) = sum conj(u_i) v_i,
// accumulated per owned row block in ascending block order.
class BlockedDot {
 public:
  BlockedDot() = default;

  explicit BlockedDot(const CDDLayout& lay) {
    const int nx = lay.grid.nx();
    for (const Range& rows : lay.rows_owned) {
      blocks_.push_back({rows.lo * nx, rows.hi * nx});
    }
  }

  cplx operator()(const VectorXc& u, const VectorXc& v) const {
    if (blocks_.empty()) return u.dot(v);
    cplx acc = 0.0;
    for (const Range& b : blocks_) {
      acc += u.segment(b.lo, b.size()).dot(v.segment(b.lo, b.size()));
    }
    return acc;
  }

 private:
  std::vector<Range> blocks_;  // contiguous index spans, ascending
};

inline cplx dot(const VectorXc& u, const VectorXc& v, const BlockedDot& d) {
  return d(u, v);
}

struct SolveReport {
  int iterations = 0;
  bool converged = false;
  std::vector<double> residual_history;  // preconditioned relative residual, one per iteration
  double true_residual_rel = 0.0;        // ||b - A x|| / ||b||, informational
  InstrumentationReport phases;
};

inline void instrument(SolveReport& rep, Phase p, double seconds) {
  instrument(rep.phases, p, seconds);
}

template <typename ApplyA, typename ApplyM, typename Dot>
std::pair<VectorXc, SolveReport> gmres(ApplyA&& apply_A, ApplyM&& apply_M,
                                       const VectorXc& b, double tol, int restart,
                                       int maxit, Dot&& dot_fn) {
  if (restart < 1 || maxit < 0 || tol < 0.0) {
    throw std::invalid_argument("gmres: bad tol/restart/maxit");
  }
  SolveReport rep;
  const long n = b.size();
  VectorXc x = VectorXc::Zero(n);
  auto nrm = [&](const VectorXc& v) { return std::sqrt(std::abs(dot_fn(v, v).real())); };

  const double bnorm = nrm(b);
  if (bnorm == 0.0) {
    rep.converged = true;
    return {std::move(x), rep};
  }
  VectorXc r = apply_M(b);
  const double beta0 = nrm(r);
  if (beta0 == 0.0) {
    rep.converged = true;
    return {std::move(x), rep};
  }

  double beta = beta0;
  bool converged = false;
  bool exhausted = false;  // Krylov space exhausted (lucky breakdown)
  int total_it = 0;

  while (!converged && !exhausted && total_it < maxit) {
    std::vector<VectorXc> V;
    V.reserve(static_cast<size_t>(restart) + 1);
    V.push_back(r / beta);
    Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(restart + 1, restart);
    std::vector<cplx> cs(static_cast<size_t>(restart)), sn(static_cast<size_t>(restart));
    VectorXc g = VectorXc::Zero(restart + 1);
    g[0] = beta;
    int k = 0;

    for (int j = 0; j < restart && total_it < maxit; ++j) {
      VectorXc w = apply_M(apply_A(V[static_cast<size_t>(j)]));
      // Modified Gram-Schmidt, single pass.
      for (int i = 0; i <= j; ++i) {
        H(i, j) = dot_fn(V[static_cast<size_t>(i)], w);
        w -= H(i, j) * V[static_cast<size_t>(i)];
      }
      const double hlast = nrm(w);
      H(j + 1, j) = hlast;

      for (int i = 0; i < j; ++i) {
        const cplx hi = H(i, j), hi1 = H(i + 1, j);
        H(i, j) = std::conj(cs[static_cast<size_t>(i)]) * hi +
                  std::conj(sn[static_cast<size_t>(i)]) * hi1;
        H(i + 1, j) = -sn[static_cast<size_t>(i)] * hi + cs[static_cast<size_t>(i)] * hi1;
      }
      const cplx a = H(j, j);
      const double rr = std::sqrt(std::norm(a) + hlast * hlast);
      if (rr == 0.0) {
        cs[static_cast<size_t>(j)] = 1.0;
        sn[static_cast<size_t>(j)] = 0.0;
      } else {
        cs[static_cast<size_t>(j)] = a / rr;
        sn[static_cast<size_t>(j)] = hlast / rr;
      }
      H(j, j) = rr;
      H(j + 1, j) = 0.0;
      const cplx gj = g[j];
      g[j] = std::conj(cs[static_cast<size_t>(j)]) * gj;
      g[j + 1] = -sn[static_cast<size_t>(j)] * gj;

      ++total_it;
      k = j + 1;
      const double rel = std::abs(g[j + 1]) / beta0;
      rep.residual_history.push_back(rel);
      if (rel <= tol) converged = true;
      if (hlast == 0.0) exhausted = true;
      if (converged || exhausted) break;
      V.push_back(w / hlast);
    }

    VectorXc y(k);
    for (int i = k - 1; i >= 0; --i) {
      cplx s = g[i];
      for (int j = i + 1; j < k; ++j) s -= H(i, j) * y[j];
      y[i] = s / H(i, i);
    }
    for (int i = 0; i < k; ++i) x += y[i] * V[static_cast<size_t>(i)];

    if (!converged && !exhausted && total_it < maxit) {
      r = apply_M(b - apply_A(x));
      beta = nrm(r);
      // Restart-time safeguard; not an iteration, so not appended to the history.
      if (beta / beta0 <= tol) converged = true;
    }
  }

  rep.iterations = static_cast<int>(rep.residual_history.size());
  rep.converged = converged;
  const VectorXc resid = b - apply_A(x);
  rep.true_residual_rel = nrm(resid) / bnorm;
  return {std::move(x), rep};
}

template <typename ApplyA, typename ApplyM>
std::pair<VectorXc, SolveReport> gmres(ApplyA&& apply_A, ApplyM&& apply_M,
                                       const VectorXc& b, double tol, int restart,
                                       int maxit) {
  return gmres(std::forward<ApplyA>(apply_A), std::forward<ApplyM>(apply_M), b, tol,
               restart, maxit, [](const VectorXc& u, const VectorXc& v) { return u.dot(v); });
}

}  // namespace lsweeps
