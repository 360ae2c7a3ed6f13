// Scalar aliases and small index/field containers shared across the solver.
#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <complex>
#include <vector>

namespace lsweeps {

using cplx = std::complex<double>;
using VectorXc = Eigen::VectorXcd;

// Complex sparse matrix in compressed-row layout (row = discretization point).
using SparseMatrixC = Eigen::SparseMatrix<cplx, Eigen::RowMajor, int>;

// Subdomain side, named from the subdomain's point of view.
enum class Side { B = 0, R = 1, T = 2, L = 3 };

inline Side opposite(Side s) {
  switch (s) {
    case Side::B: return Side::T;
    case Side::R: return Side::L;
    case Side::T: return Side::B;
    case Side::L: return Side::R;
  }
  return Side::B;
}

inline const char* side_name(Side s) {
  switch (s) {
    case Side::B: return "B";
    case Side::R: return "R";
    case Side::T: return "T";
    case Side::L: return "L";
  }
  return "?";
}

// Half-open index interval [lo, hi).
struct Range {
  int lo = 0;
  int hi = 0;

  int size() const { return hi - lo; }
  bool contains(int k) const { return k >= lo && k < hi; }
  bool operator==(const Range&) const = default;
};

// Axis-aligned index box [x.lo, x.hi) x [y.lo, y.hi) on a structured grid.
struct IndexBox {
  Range x, y;

  int nx() const { return x.size(); }
  int ny() const { return y.size(); }
  int size() const { return nx() * ny(); }
  bool contains(int ix, int iy) const { return x.contains(ix) && y.contains(iy); }
  bool operator==(const IndexBox&) const = default;

  // Row-major mapping between box-local row indices and global grid indices.
  int local_index(int gix, int giy) const { return (giy - y.lo) * nx() + (gix - x.lo); }
  int global_ix(int li) const { return x.lo + li % nx(); }
  int global_iy(int li) const { return y.lo + li / nx(); }
};

// Row-major complex grid function; row index = y, column index = x.
struct ComplexField {
  int rows = 0;
  int cols = 0;
  VectorXc data;

  ComplexField() = default;
  ComplexField(int rows_, int cols_)
      : rows(rows_), cols(cols_), data(VectorXc::Zero(static_cast<long>(rows_) * cols_)) {}
  ComplexField(int rows_, int cols_, VectorXc values)
      : rows(rows_), cols(cols_), data(std::move(values)) {}

  cplx& at(int ix, int iy) { return data[static_cast<long>(iy) * cols + ix]; }
  cplx at(int ix, int iy) const { return data[static_cast<long>(iy) * cols + ix]; }
};

}  // namespace lsweeps
