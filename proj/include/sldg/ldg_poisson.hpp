#pragma once

// Local DG discretization of the periodic Poisson problem
//
//     -Lap(Phi) = s * f,      s = +1 (guiding center), s = -1 (Euler),
//
// written as q = grad(Phi), -div(q) = s f with alternating fluxes: the
// potential trace is taken from the left/bottom cell and the flux trace from
// the right/top cell. Eliminating q gives A = Gx^T Gx + Gy^T Gy, where G is
// the discrete gradient (mass matrices are area * I and cancel). Both models
// share E = -grad(Phi) and the characteristic velocity (E2, -E1); for Euler
// this is u = (-Phi_y, Phi_x).

#include <array>
#include <memory>
#include <optional>
#include <vector>

#include "sldg/dg_field.hpp"
#include "sldg/linear_solver.hpp"

namespace sldg {

enum class Model { euler, vlasov };

/// Sign s in -Lap(Phi) = s * rhs.
inline double poisson_sign(Model m) { return m == Model::vlasov ? 1.0 : -1.0; }

/// E = (E1, E2) as two DG fields of the same degree.
struct VectorField {
  DGField e1;
  DGField e2;

  VectorField(const Mesh& mesh, int degree) : e1(mesh, degree), e2(mesh, degree) {}
  VectorField(DGField a, DGField b) : e1(std::move(a)), e2(std::move(b)) {}

  int degree() const { return e1.degree(); }
  const Mesh& mesh() const { return e1.mesh(); }

  /// Characteristic velocity (dx/dt, dy/dt) = (E2, -E1) at p.
  Point velocity(Point p) const { return {e2.evaluate(p), -e1.evaluate(p)}; }
};

/// A point of the grid skeleton where the DG field is multivalued.
struct SkeletonNode {
  enum class Kind { vertex, bottom_mid, left_mid, center };
  Kind kind = Kind::vertex;
  int ix = 0;  // vertex (ix,iy), or the cell whose bottom/left edge midpoint or center it is
  int iy = 0;

  Point position(const Mesh& m) const {
    switch (kind) {
      case Kind::vertex: return m.vertex(ix, iy);
      case Kind::bottom_mid: return {m.grid_x(ix) + 0.5 * m.dx(), m.grid_y(iy)};
      case Kind::left_mid: return {m.grid_x(ix), m.grid_y(iy) + 0.5 * m.dy()};
      case Kind::center: return {m.grid_x(ix) + 0.5 * m.dx(), m.grid_y(iy) + 0.5 * m.dy()};
    }
    return {};
  }
};

namespace detail {

template <class F>
void for_each_adjacent(const Mesh& m, const SkeletonNode& n, F&& f) {
  switch (n.kind) {
    case SkeletonNode::Kind::vertex:
      for (int dy = -1; dy <= 0; ++dy)
        for (int dx = -1; dx <= 0; ++dx) f(UnwrappedCell{n.ix + dx, n.iy + dy}, 0.25);
      break;
    case SkeletonNode::Kind::bottom_mid:
      f(UnwrappedCell{n.ix, n.iy - 1}, 0.5);
      f(UnwrappedCell{n.ix, n.iy}, 0.5);
      break;
    case SkeletonNode::Kind::left_mid:
      f(UnwrappedCell{n.ix - 1, n.iy}, 0.5);
      f(UnwrappedCell{n.ix, n.iy}, 0.5);
      break;
    case SkeletonNode::Kind::center:
      f(UnwrappedCell{n.ix, n.iy}, 1.0);
      break;
  }
  (void)m;
}

}  // namespace detail

/// Mean of the one-sided limits of f at a skeleton node (four at a vertex,
/// two at an edge midpoint).
inline double node_average(const DGField& f, const SkeletonNode& n) {
  const Mesh& m = f.mesh();
  const Point p = n.position(m);
  double s = 0.0;
  detail::for_each_adjacent(m, n, [&](UnwrappedCell c, double w) {
    const Point r = m.to_local(c, p);
    s += w * f.basis().value(f.cell(m.wrap(c)), r.x, r.y);
  });
  return s;
}

/// Mean of the one-sided limits of grad(f) at a skeleton node.
inline std::array<double, 2> node_average_gradient(const DGField& f, const SkeletonNode& n) {
  const Mesh& m = f.mesh();
  const Point p = n.position(m);
  std::array<double, 2> g{0.0, 0.0};
  detail::for_each_adjacent(m, n, [&](UnwrappedCell c, double w) {
    const Point r = m.to_local(c, p);
    const auto gr = f.basis().gradient(f.cell(m.wrap(c)), r.x, r.y);
    g[0] += w * gr[0] / m.dx();
    g[1] += w * gr[1] / m.dy();
  });
  return g;
}

/// Averaged (E1, E2) at every mesh vertex, vertex (ix,iy) stored at iy*nx+ix.
struct VertexVelocity {
  std::vector<double> e1;
  std::vector<double> e2;
};

inline VertexVelocity vertex_average(const VectorField& e) {
  const Mesh& m = e.mesh();
  VertexVelocity v;
  v.e1.resize(m.num_cells());
  v.e2.resize(m.num_cells());
  for (int iy = 0; iy < m.ny(); ++iy)
    for (int ix = 0; ix < m.nx(); ++ix) {
      const SkeletonNode n{SkeletonNode::Kind::vertex, ix, iy};
      v.e1[iy * m.nx() + ix] = node_average(e.e1, n);
      v.e2[iy * m.nx() + ix] = node_average(e.e2, n);
    }
  return v;
}

class LdgOperator {
public:
  LdgOperator(const Mesh& mesh, int degree, Model model, SolverKind solver = SolverKind::fourier)
      : mesh_(mesh), basis_(degree), model_(model) {
    assemble_gradients();
    a_ = SparseMatrix(gx_.transpose() * gx_) + SparseMatrix(gy_.transpose() * gy_);
    a_.makeCompressed();
    if (solver == SolverKind::fourier)
      fourier_ = std::make_unique<CirculantSolver>(a_, mesh_.nx(), mesh_.ny(), basis_.size());
    else if (solver == SolverKind::direct)
      direct_ = std::make_unique<GroundedDirectSolver>(a_, basis_.size());
    else
      cg_ = std::make_unique<DeflatedCgSolver>(a_, basis_.size());
  }

  const Mesh& mesh() const { return mesh_; }
  int degree() const { return basis_.degree(); }
  Model model() const { return model_; }

  /// Discrete -Lap (Schur form); symmetric positive semidefinite.
  const SparseMatrix& matrix() const { return a_; }
  const SparseMatrix& gradient_x() const { return gx_; }
  const SparseMatrix& gradient_y() const { return gy_; }

  /// Phi with zero mean solving the model's Poisson equation for `rhs`
  /// (omega or rho, any degree; re-expressed in the LDG degree). The mean
  /// of rhs is removed first.
  DGField solve_potential(const DGField& rhs) const {
    const DGField r = change_degree(rhs, degree());
    Vector b = Eigen::Map<const Vector>(r.coefficients().data(), static_cast<Eigen::Index>(r.coefficients().size()));
    b *= poisson_sign(model_);
    return to_field(solve(b));
  }

  /// E = -grad(Phi) through the LDG auxiliary variable q = G Phi.
  VectorField compute_velocity(const DGField& phi) const {
    const Vector p = Eigen::Map<const Vector>(phi.coefficients().data(), static_cast<Eigen::Index>(phi.coefficients().size()));
    return {to_field(-(gx_ * p)), to_field(-(gy_ * p))};
  }

  /// Potential and field in one call.
  VectorField electric_field(const DGField& rho) const { return compute_velocity(solve_potential(rho)); }

  /// dE/dt from Lap(Phi_t) = s * div((E2, -E1) rho); products are
  /// L2-projected into the LDG space and the divergence uses the same
  /// fluxes as the Schur form (-div ~ G^T).
  VectorField solve_field_time_derivative(const DGField& rho, const VectorField& e) const {
    const int nm = basis_.size();
    const CellRule q = tensor_rule(degree() + 2);
    std::vector<double> phi(static_cast<std::size_t>(q.size()) * nm);
    for (int k = 0; k < q.size(); ++k) basis_.eval(q.xi[k], q.eta[k], phi.data() + static_cast<std::size_t>(k) * nm);
    Vector fx = Vector::Zero(static_cast<Eigen::Index>(mesh_.num_cells()) * nm);
    Vector fy = fx;
    for (int j = 0; j < mesh_.num_cells(); ++j) {
      auto cr = rho.cell(j);
      auto c1 = e.e1.cell(j);
      auto c2 = e.e2.cell(j);
      for (int k = 0; k < q.size(); ++k) {
        const double r = rho.basis().value(cr, q.xi[k], q.eta[k]);
        const double v1 = e.e1.basis().value(c1, q.xi[k], q.eta[k]);
        const double v2 = e.e2.basis().value(c2, q.xi[k], q.eta[k]);
        for (int m = 0; m < nm; ++m) {
          const double wphi = q.w[k] * phi[static_cast<std::size_t>(k) * nm + m];
          fx[j * nm + m] += wphi * v2 * r;
          fy[j * nm + m] -= wphi * v1 * r;
        }
      }
    }
    Vector b = gx_.transpose() * fx + gy_.transpose() * fy;
    b *= poisson_sign(model_);
    const DGField phi_t = to_field(solve(b));
    return compute_velocity(phi_t);
  }

  /// Raw solve of A x = b in the mean-zero subspace.
  Vector solve(const Vector& b) const {
    if (fourier_) return fourier_->solve(b);
    return direct_ ? direct_->solve(b) : cg_->solve(b);
  }

  int last_cg_iterations() const { return cg_ ? cg_->last_iterations() : 0; }

private:
  DGField to_field(const Vector& v) const {
    DGField f(mesh_, degree());
    Eigen::Map<Vector>(f.coefficients().data(), v.size()) = v;
    return f;
  }

  // Builds G_x and G_y: (G_x Phi)|_K = B_own Phi_K + B_left Phi_{left(K)}.
  void assemble_gradients() {
    const int nm = basis_.size();
    const int n = degree() + 2;
    const CellRule vol = tensor_rule(n);
    const GaussRule face = gauss_legendre(n);

    // Reference matrices, row = test mode i, column = trial mode m.
    std::vector<double> own_x(nm * nm, 0.0), left_x(nm * nm, 0.0), own_y(nm * nm, 0.0), low_y(nm * nm, 0.0);
    double phi[kMaxModes], gxi[kMaxModes], geta[kMaxModes];
    for (int k = 0; k < vol.size(); ++k) {
      basis_.eval(vol.xi[k], vol.eta[k], phi);
      basis_.eval_grad(vol.xi[k], vol.eta[k], gxi, geta);
      for (int i = 0; i < nm; ++i)
        for (int m = 0; m < nm; ++m) {
          own_x[i * nm + m] -= vol.w[k] * phi[m] * gxi[i];
          own_y[i * nm + m] -= vol.w[k] * phi[m] * geta[i];
        }
    }
    double pr[kMaxModes], pl[kMaxModes];
    for (int k = 0; k < face.size(); ++k) {
      const double t = face.nodes[k], w = face.weights[k];
      // x faces: right face uses own trace, left face the left neighbour's right trace.
      basis_.eval(0.5, t, pr);
      basis_.eval(-0.5, t, pl);
      for (int i = 0; i < nm; ++i)
        for (int m = 0; m < nm; ++m) {
          own_x[i * nm + m] += w * pr[m] * pr[i];
          left_x[i * nm + m] -= w * pr[m] * pl[i];
        }
      basis_.eval(t, 0.5, pr);
      basis_.eval(t, -0.5, pl);
      for (int i = 0; i < nm; ++i)
        for (int m = 0; m < nm; ++m) {
          own_y[i * nm + m] += w * pr[m] * pr[i];
          low_y[i * nm + m] -= w * pr[m] * pl[i];
        }
    }

    const int ncell = mesh_.num_cells();
    const Eigen::Index ndof = static_cast<Eigen::Index>(ncell) * nm;
    std::vector<Eigen::Triplet<double>> tx, ty;
    tx.reserve(static_cast<std::size_t>(2 * ncell * nm * nm));
    ty.reserve(tx.capacity());
    auto push = [&](std::vector<Eigen::Triplet<double>>& t, int row_cell, int col_cell, const std::vector<double>& blk, double scale) {
      for (int i = 0; i < nm; ++i)
        for (int m = 0; m < nm; ++m) {
          const double v = blk[i * nm + m];
          if (v != 0.0) t.emplace_back(row_cell * nm + i, col_cell * nm + m, v * scale);
        }
    };
    for (int j = 0; j < ncell; ++j) {
      const CellId c = mesh_.cell(j);
      push(tx, j, j, own_x, 1.0 / mesh_.dx());
      push(tx, j, mesh_.index(mesh_.wrap_cell(c.ix - 1, c.iy)), left_x, 1.0 / mesh_.dx());
      push(ty, j, j, own_y, 1.0 / mesh_.dy());
      push(ty, j, mesh_.index(mesh_.wrap_cell(c.ix, c.iy - 1)), low_y, 1.0 / mesh_.dy());
    }
    gx_.resize(ndof, ndof);
    gy_.resize(ndof, ndof);
    gx_.setFromTriplets(tx.begin(), tx.end());
    gy_.setFromTriplets(ty.begin(), ty.end());
  }

  Mesh mesh_;
  Basis basis_;
  Model model_;
  SparseMatrix gx_, gy_, a_;
  std::unique_ptr<CirculantSolver> fourier_;
  std::unique_ptr<GroundedDirectSolver> direct_;
  std::unique_ptr<DeflatedCgSolver> cg_;
};

}  // namespace sldg
