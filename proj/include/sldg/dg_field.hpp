#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <ostream>
#include <span>
#include <vector>

#include "sldg/basis.hpp"
#include "sldg/grid.hpp"
#include "sldg/quadrature.hpp"

namespace sldg {

using ScalarFunction = std::function<double(double, double)>;

/// Piecewise polynomial field: one modal coefficient vector per cell.
class DGField {
public:
  DGField(const Mesh& mesh, int degree)
      : mesh_(mesh), basis_(degree), coeffs_(static_cast<std::size_t>(mesh.num_cells()) * basis_.size(), 0.0) {}

  const Mesh& mesh() const { return mesh_; }
  const Basis& basis() const { return basis_; }
  int degree() const { return basis_.degree(); }
  int modes() const { return basis_.size(); }

  std::span<double> cell(int j) { return {coeffs_.data() + static_cast<std::size_t>(j) * modes(), static_cast<std::size_t>(modes())}; }
  std::span<const double> cell(int j) const {
    return {coeffs_.data() + static_cast<std::size_t>(j) * modes(), static_cast<std::size_t>(modes())};
  }
  std::span<const double> cell(CellId c) const { return cell(mesh_.index(c)); }

  std::vector<double>& coefficients() { return coeffs_; }
  const std::vector<double>& coefficients() const { return coeffs_; }

  double average(int j) const { return coeffs_[static_cast<std::size_t>(j) * modes()]; }

  /// Value of the polynomial of `c` at p; p is not required to lie in the
  /// cell, the polynomial is simply extended.
  double evaluate(CellId c, Point p) const {
    const Point r = mesh_.to_local(UnwrappedCell{c.ix, c.iy}, p);
    return basis_.value(cell(c), r.x, r.y);
  }

  /// Value at an arbitrary (unwrapped) point using the owning cell.
  double evaluate(Point p) const {
    const UnwrappedCell u = mesh_.unwrapped_cell(p);
    const Point r = mesh_.to_local(u, p);
    return basis_.value(cell(mesh_.wrap(u)), r.x, r.y);
  }

  /// Physical gradient at p using the owning cell's polynomial.
  std::array<double, 2> gradient(Point p) const {
    const UnwrappedCell u = mesh_.unwrapped_cell(p);
    const Point r = mesh_.to_local(u, p);
    auto g = basis_.gradient(cell(mesh_.wrap(u)), r.x, r.y);
    return {g[0] / mesh_.dx(), g[1] / mesh_.dy()};
  }

private:
  Mesh mesh_;
  Basis basis_;
  std::vector<double> coeffs_;
};

/// Points per direction for cell quadrature; exact for degree 2k+2 products.
inline int default_quadrature_points(int degree) { return degree + 2; }

/// L2 projection of f onto V_h^k.
inline DGField project(const Mesh& mesh, int degree, const ScalarFunction& f, int quad_points = 0) {
  DGField out(mesh, degree);
  const CellRule q = tensor_rule(quad_points > 0 ? quad_points : default_quadrature_points(degree));
  const Basis& b = out.basis();
  const int nm = b.size();
  std::vector<double> phi(static_cast<std::size_t>(q.size()) * nm);
  for (int k = 0; k < q.size(); ++k) b.eval(q.xi[k], q.eta[k], phi.data() + static_cast<std::size_t>(k) * nm);
  for (int j = 0; j < mesh.num_cells(); ++j) {
    const Point c = mesh.cell_center(mesh.cell(j));
    auto cj = out.cell(j);
    for (int k = 0; k < q.size(); ++k) {
      const double v = f(c.x + q.xi[k] * mesh.dx(), c.y + q.eta[k] * mesh.dy());
      for (int m = 0; m < nm; ++m) cj[m] += q.w[k] * v * phi[static_cast<std::size_t>(k) * nm + m];
    }
  }
  return out;
}

/// Re-express a field in a basis of another degree (zero padding upward,
/// L2 truncation downward; the hierarchical ordering makes both exact).
inline DGField change_degree(const DGField& in, int degree) {
  DGField out(in.mesh(), degree);
  const int n = std::min(in.modes(), out.modes());
  for (int j = 0; j < in.mesh().num_cells(); ++j) {
    auto src = in.cell(j);
    auto dst = out.cell(j);
    std::copy_n(src.begin(), n, dst.begin());
  }
  return out;
}

/// Total integral over the domain (exact for the piecewise polynomial).
inline double integrate(const DGField& f) {
  double s = 0.0;
  for (int j = 0; j < f.mesh().num_cells(); ++j) s += f.average(j);
  return s * f.mesh().cell_area();
}

/// Integral of f^2 over the domain (Parseval in the orthonormal basis).
inline double integrate_square(const DGField& f) {
  double s = 0.0;
  for (double c : f.coefficients()) s += c * c;
  return s * f.mesh().cell_area();
}

struct ErrorNorms {
  double l1 = 0.0;
  double l2 = 0.0;
  double linf = 0.0;
};

/// Error norms against an exact function, normalized by the domain area
/// (L1 = mean |e|, L2 = sqrt(mean e^2)); Linf is the max over quadrature
/// points.
inline ErrorNorms error_norms(const DGField& f, const ScalarFunction& exact, int quad_points = 0) {
  const Mesh& mesh = f.mesh();
  const CellRule q = tensor_rule(quad_points > 0 ? quad_points : default_quadrature_points(f.degree()));
  const Basis& b = f.basis();
  const int nm = b.size();
  std::vector<double> phi(static_cast<std::size_t>(q.size()) * nm);
  for (int k = 0; k < q.size(); ++k) b.eval(q.xi[k], q.eta[k], phi.data() + static_cast<std::size_t>(k) * nm);
  ErrorNorms e;
  for (int j = 0; j < mesh.num_cells(); ++j) {
    const Point c = mesh.cell_center(mesh.cell(j));
    auto cj = f.cell(j);
    for (int k = 0; k < q.size(); ++k) {
      double v = 0.0;
      for (int m = 0; m < nm; ++m) v += cj[m] * phi[static_cast<std::size_t>(k) * nm + m];
      const double d = std::abs(v - exact(c.x + q.xi[k] * mesh.dx(), c.y + q.eta[k] * mesh.dy()));
      e.l1 += q.w[k] * d;
      e.l2 += q.w[k] * d * d;
      e.linf = std::max(e.linf, d);
    }
  }
  const double n = mesh.num_cells();
  e.l1 /= n;
  e.l2 = std::sqrt(e.l2 / n);
  return e;
}

/// Extremes of the field over the cell quadrature points.
inline std::pair<double, double> field_range(const DGField& f, int quad_points = 0) {
  const CellRule q = tensor_rule(quad_points > 0 ? quad_points : default_quadrature_points(f.degree()));
  double lo = INFINITY, hi = -INFINITY;
  for (int j = 0; j < f.mesh().num_cells(); ++j)
    for (int k = 0; k < q.size(); ++k) {
      const double v = f.basis().value(f.cell(j), q.xi[k], q.eta[k]);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  return {lo, hi};
}

/// Long-format snapshot: metadata header then "x y value" per cell center.
inline void write_snapshot(std::ostream& os, const DGField& f, double time) {
  const Mesh& m = f.mesh();
  os.precision(17);
  os << "# nx " << m.nx() << " ny " << m.ny() << " degree " << f.degree() << " time " << time << "\n";
  os << "# x y value\n";
  for (int iy = 0; iy < m.ny(); ++iy)
    for (int ix = 0; ix < m.nx(); ++ix) {
      const CellId c{ix, iy};
      const Point p = m.cell_center(c);
      os << p.x << ' ' << p.y << ' ' << f.basis().value(f.cell(c), 0.0, 0.0) << "\n";
    }
}

/// Gridded snapshot: one row per y-line of cell-center values.
inline void write_gridded(std::ostream& os, const DGField& f) {
  const Mesh& m = f.mesh();
  os.precision(17);
  for (int iy = 0; iy < m.ny(); ++iy) {
    for (int ix = 0; ix < m.nx(); ++ix) {
      if (ix) os << ' ';
      os << f.basis().value(f.cell(CellId{ix, iy}), 0.0, 0.0);
    }
    os << "\n";
  }
}

}  // namespace sldg
