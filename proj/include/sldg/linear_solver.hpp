#pragma once

// Solvers for the periodic LDG Laplacian. The matrix is symmetric positive
// semidefinite with the global constant as its only null vector, so every
// solver here works in the mean-zero subspace.

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <unsupported/Eigen/FFT>

#include <cmath>
#include <complex>
#include <span>
#include <utility>
#include <vector>

#include "sldg/errors.hpp"

namespace sldg {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;
using Vector = Eigen::VectorXd;

enum class SolverKind { fourier, direct, cg };

/// Null vector layout: one constant mode per block of `block` unknowns.
/// Removes the component along the (normalized) null vector.
inline void deflate(Vector& v, int block) {
  const Eigen::Index n = v.size() / block;
  double s = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) s += v[j * block];
  s /= static_cast<double>(n);
  for (Eigen::Index j = 0; j < n; ++j) v[j * block] -= s;
}

/// Sparse LDL^T of A + a e_0 e_0^T. For a right-hand side orthogonal to the
/// null vector this returns the solution with x_0 = 0, which deflation then
/// shifts to the mean-zero representative.
class GroundedDirectSolver {
public:
  GroundedDirectSolver(const SparseMatrix& a, int block) : block_(block) {
    SparseMatrix g = a;
    g.coeffRef(0, 0) += a.coeff(0, 0);
    ldlt_.compute(g);
    if (ldlt_.info() != Eigen::Success) throw SolverError("sparse LDLT factorization failed", {});
  }

  Vector solve(const Vector& rhs) const {
    Vector b = rhs;
    deflate(b, block_);
    Vector x = ldlt_.solve(b);
    deflate(x, block_);
    return x;
  }

private:
  int block_;
  Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt_;
};

/// Exact solve for operators that commute with periodic cell shifts on an
/// nx x ny mesh (cell index iy * nx + ix, `block` unknowns per cell). The
/// operator is block-diagonalised by the 2D DFT: each wavenumber gets a
/// block x block Hermitian symbol, inverted once at construction. The zero
/// wavenumber is solved with the constant mode grounded to zero.
class CirculantSolver {
public:
  using Complex = std::complex<double>;

  CirculantSolver(const SparseMatrix& a, int nx, int ny, int block) : nx_(nx), ny_(ny), block_(block) {
    const int nm = block;
    const double two_pi = 2.0 * std::acos(-1.0);
    // Couplings of cell 0 to every other cell: offset -> nm x nm block.
    std::vector<Eigen::MatrixXd> stencil;
    std::vector<int> offset;
    std::vector<int> slot(static_cast<std::size_t>(nx) * ny, -1);
    for (int col = 0; col < a.outerSize(); ++col)
      for (SparseMatrix::InnerIterator it(a, col); it; ++it) {
        if (it.row() >= nm) continue;
        const int cell = col / nm;
        if (slot[cell] < 0) {
          slot[cell] = static_cast<int>(stencil.size());
          stencil.push_back(Eigen::MatrixXd::Zero(nm, nm));
          offset.push_back(cell);
        }
        stencil[slot[cell]](it.row(), col % nm) += it.value();
      }

    inv_.assign(static_cast<std::size_t>(nx) * ny * nm * nm, Complex(0.0));
    for (int q = 0; q < ny; ++q)
      for (int p = 0; p < nx; ++p) {
        Eigen::MatrixXcd s = Eigen::MatrixXcd::Zero(nm, nm);
        for (std::size_t k = 0; k < stencil.size(); ++k) {
          const int ox = offset[k] % nx, oy = offset[k] / nx;
          const double th = two_pi * (static_cast<double>(p) * ox / nx + static_cast<double>(q) * oy / ny);
          s += Complex(std::cos(th), std::sin(th)) * stencil[k].cast<Complex>();
        }
        Eigen::Map<Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> out(
            inv_.data() + (static_cast<std::size_t>(q) * nx + p) * nm * nm, nm, nm);
        if (p == 0 && q == 0) {
          if (nm > 1) out.bottomRightCorner(nm - 1, nm - 1) = s.bottomRightCorner(nm - 1, nm - 1).inverse();
        } else {
          out = s.inverse();
        }
      }
  }

  Vector solve(const Vector& rhs) const {
    const int nm = block_;
    const std::size_t ncell = static_cast<std::size_t>(nx_) * ny_;
    std::vector<Complex> hat(ncell * nm);
    std::vector<Complex> plane(ncell);
    for (int m = 0; m < nm; ++m) {
      for (std::size_t c = 0; c < ncell; ++c) plane[c] = rhs[static_cast<Eigen::Index>(c * nm + m)];
      transform(plane, false);
      for (std::size_t c = 0; c < ncell; ++c) hat[c * nm + m] = plane[c];
    }
    std::vector<Complex> tmp(nm);
    for (std::size_t c = 0; c < ncell; ++c) {
      const Complex* inv = inv_.data() + c * nm * nm;
      for (int r = 0; r < nm; ++r) {
        Complex acc(0.0);
        for (int k = 0; k < nm; ++k) acc += inv[r * nm + k] * hat[c * nm + k];
        tmp[r] = acc;
      }
      for (int r = 0; r < nm; ++r) hat[c * nm + r] = tmp[r];
    }
    Vector x(rhs.size());
    for (int m = 0; m < nm; ++m) {
      for (std::size_t c = 0; c < ncell; ++c) plane[c] = hat[c * nm + m];
      transform(plane, true);
      for (std::size_t c = 0; c < ncell; ++c) x[static_cast<Eigen::Index>(c * nm + m)] = plane[c].real();
    }
    deflate(x, block_);
    return x;
  }

private:
  // In-place 2D DFT of an ny x nx row-major plane (inverse includes 1/N).
  void transform(std::vector<Complex>& plane, bool inverse) const {
    std::vector<Complex> in, out;
    in.resize(nx_);
    for (int iy = 0; iy < ny_; ++iy) {
      std::copy_n(plane.begin() + static_cast<std::ptrdiff_t>(iy) * nx_, nx_, in.begin());
      inverse ? fft_.inv(out, in) : fft_.fwd(out, in);
      std::copy_n(out.begin(), nx_, plane.begin() + static_cast<std::ptrdiff_t>(iy) * nx_);
    }
    in.resize(ny_);
    for (int ix = 0; ix < nx_; ++ix) {
      for (int iy = 0; iy < ny_; ++iy) in[iy] = plane[static_cast<std::size_t>(iy) * nx_ + ix];
      inverse ? fft_.inv(out, in) : fft_.fwd(out, in);
      for (int iy = 0; iy < ny_; ++iy) plane[static_cast<std::size_t>(iy) * nx_ + ix] = out[iy];
    }
  }

  int nx_, ny_, block_;
  std::vector<Complex> inv_;
  mutable Eigen::FFT<double> fft_;
};

/// Preconditioned conjugate gradient with block-Jacobi preconditioning and
/// deflation of the constant null vector.
class DeflatedCgSolver {
public:
  DeflatedCgSolver(SparseMatrix a, int block, double rtol = 1e-11, int max_iter = 0)
      : a_(std::move(a)), block_(block), rtol_(rtol), max_iter_(max_iter > 0 ? max_iter : static_cast<int>(a_.rows())) {
    const Eigen::Index nb = a_.rows() / block;
    inv_blocks_.resize(nb);
    for (Eigen::Index j = 0; j < nb; ++j) {
      Eigen::MatrixXd blk = Eigen::MatrixXd(a_.block(j * block, j * block, block, block));
      inv_blocks_[j] = blk.ldlt().solve(Eigen::MatrixXd::Identity(block, block));
    }
  }

  Vector solve(const Vector& rhs) const {
    std::vector<double> history;
    Vector b = rhs;
    deflate(b, block_);
    Vector x = Vector::Zero(b.size());
    const double bnorm = b.norm();
    if (bnorm == 0.0) {
      last_iterations_ = 0;
      return x;
    }
    Vector r = b;
    Vector z = precondition(r);
    Vector p = z;
    double rz = r.dot(z);
    for (int it = 0; it < max_iter_; ++it) {
      const Vector ap = a_ * p;
      const double alpha = rz / p.dot(ap);
      x += alpha * p;
      r -= alpha * ap;
      const double rel = r.norm() / bnorm;
      history.push_back(rel);
      if (rel <= rtol_) {
        last_iterations_ = it + 1;
        deflate(x, block_);
        return x;
      }
      z = precondition(r);
      const double rz_new = r.dot(z);
      p = z + (rz_new / rz) * p;
      rz = rz_new;
    }
    throw SolverError("conjugate gradient did not converge", std::move(history));
  }

  int last_iterations() const { return last_iterations_; }

private:
  Vector precondition(const Vector& r) const {
    Vector z(r.size());
    for (std::size_t j = 0; j < inv_blocks_.size(); ++j)
      z.segment(static_cast<Eigen::Index>(j) * block_, block_).noalias() =
          inv_blocks_[j] * r.segment(static_cast<Eigen::Index>(j) * block_, block_);
    deflate(z, block_);
    return z;
  }

  SparseMatrix a_;
  int block_;
  double rtol_;
  int max_iter_;
  std::vector<Eigen::MatrixXd> inv_blocks_;
  mutable int last_iterations_ = 0;
};

}  // namespace sldg
