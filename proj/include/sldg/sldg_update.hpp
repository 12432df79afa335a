#pragma once

// Conservative semi-Lagrangian remap
//
//     int_{A_j} rho^{n+1} Psi = int_{A_j*} rho^n psi*,
//
// where psi* is the least-squares polynomial on the upstream cell matching
// Psi at the traced nodes. The right-hand side is split over the grid
// cells covered by A_j* and turned into line integrals of
// Q(x, y) = int_{x_l}^{x} rho psi* dx' (x_l: owner's left edge), so only
// non-horizontal segments contribute.

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <chrono>
#include <exception>
#include <memory>
#include <optional>
#include <vector>

#include "sldg/ldg_poisson.hpp"
#include "sldg/upstream_geometry.hpp"

namespace sldg {

/// Monomials xi^a eta^b with a + b <= k in the basis' total-degree order.
inline void monomials(int k, double xi, double eta, double* out) {
  double xp[kMaxDegree + 1], ep[kMaxDegree + 1];
  xp[0] = ep[0] = 1.0;
  for (int d = 1; d <= k; ++d) {
    xp[d] = xp[d - 1] * xi;
    ep[d] = ep[d - 1] * eta;
  }
  int i = 0;
  for (int d = 0; d <= k; ++d)
    for (int b = 0; b <= d; ++b) out[i++] = xp[d - b] * ep[b];
}

/// psi*_m(x, y) = sum_a coeff(a, m) * monomial_a((x - center) / h).
struct TestFunctionRecon {
  int degree = 0;
  Point center{};
  double hx = 1.0;
  double hy = 1.0;
  Eigen::MatrixXd coeff;     // monomials x basis functions
  double residual = 0.0;     // largest least-squares residual norm over basis functions

  /// All test functions at p.
  void evaluate(Point p, double* out) const {
    double mono[kMaxModes];
    monomials(degree, (p.x - center.x) / hx, (p.y - center.y) / hy, mono);
    for (Eigen::Index m = 0; m < coeff.cols(); ++m) {
      double s = 0.0;
      for (Eigen::Index a = 0; a < coeff.rows(); ++a) s += coeff(a, m) * mono[a];
      out[m] = s;
    }
  }
};

/// Least-squares fit of every basis function of `basis` through the
/// upstream nodes: 4 vertices for P1; vertices, side midpoints and the
/// center for P2.
/// The constant basis function is reproduced exactly.
inline TestFunctionRecon reconstruct_test_function(const UpstreamCell& uc, const Mesh& m, const Basis& basis) {
  const int k = basis.degree();
  const int nm = basis.size();
  TestFunctionRecon r;
  r.degree = k;
  r.hx = m.dx();
  r.hy = m.dy();
  r.center = 0.25 * (uc.vertex[0] + uc.vertex[1] + uc.vertex[2] + uc.vertex[3]);
  r.coeff = Eigen::MatrixXd::Zero(nm, nm);
  r.coeff(0, 0) = 1.0;  // the constant basis function is 1
  if (k == 0) return r;

  // Eulerian node positions in the reference cell, matching uc's layout.
  static constexpr double kVert[4][2] = {{-0.5, -0.5}, {0.5, -0.5}, {0.5, 0.5}, {-0.5, 0.5}};
  static constexpr double kMid[4][2] = {{0.0, -0.5}, {0.5, 0.0}, {0.0, 0.5}, {-0.5, 0.0}};
  const bool mids = k >= 2;
  if (mids && !uc.has_midpoints) throw std::invalid_argument("P2 reconstruction needs traced edge midpoints");
  if (k > 2) throw std::invalid_argument("test-function reconstruction supports degree <= 2");
  const int nq = mids ? 9 : 4;

  Eigen::MatrixXd v(nq, nm), psi(nq, nm);
  double buf[kMaxModes];
  for (int q = 0; q < nq; ++q) {
    static constexpr double kCenter[2] = {0.0, 0.0};
    const Point up = q < 4 ? uc.vertex[q] : q < 8 ? uc.midpoint[q - 4] : uc.center;
    const double* ref = q < 4 ? kVert[q] : q < 8 ? kMid[q - 4] : kCenter;
    monomials(k, (up.x - r.center.x) / r.hx, (up.y - r.center.y) / r.hy, buf);
    for (int a = 0; a < nm; ++a) v(q, a) = buf[a];
    basis.eval(ref[0], ref[1], buf);
    for (int i = 0; i < nm; ++i) psi(q, i) = buf[i];
  }

  // Normal equations with column scaling.
  Eigen::VectorXd scale(nm);
  for (int a = 0; a < nm; ++a) {
    const double n = v.col(a).norm();
    if (!(n > 1e-8)) throw DegenerateUpstreamCell(uc.cell, "collapsed least-squares nodes");
    scale[a] = 1.0 / n;
  }
  const Eigen::MatrixXd vs = v * scale.asDiagonal();
  Eigen::LLT<Eigen::MatrixXd> llt(vs.transpose() * vs);
  if (llt.info() != Eigen::Success || llt.rcond() < 1e-13)
    throw DegenerateUpstreamCell(uc.cell, "rank-deficient least-squares nodes");
  r.coeff = scale.asDiagonal() * llt.solve(vs.transpose() * psi);
  r.residual = (v * r.coeff - psi).colwise().norm().maxCoeff();
  r.coeff.col(0).setZero();
  r.coeff(0, 0) = 1.0;
  return r;
}

/// Line integrals of Q psi* over every non-horizontal segment, for all test
/// functions at once: out[m] = sum_seg int Q_m dy.
inline void remap_rhs(const SegmentSet& segs, const DGField& rho, const TestFunctionRecon& recon, double* out) {
  const Mesh& m = rho.mesh();
  const Basis& basis = rho.basis();
  const int k = basis.degree();
  const int nm = basis.size();
  const GaussRule& inner = cached_gauss_legendre(k + 1);
  const GaussRule& straight = inner;
  const GaussRule& curved = cached_gauss_legendre(2 * k + 2);
  for (int i = 0; i < nm; ++i) out[i] = 0.0;

  double phi[kMaxModes], psi[kMaxModes];
  auto add = [&](const Segment& s) {
    if (s.horizontal()) return;
    const double xl = m.grid_x(s.owner.ix);
    if (s.kind == Segment::Kind::inner && s.curve.p0.x == xl) return;  // Q vanishes on the owner's left edge
    const auto c = rho.cell(m.wrap(s.owner));
    const Point ctr = m.cell_center(s.owner);
    const GaussRule& g = s.curve.curved() ? curved : straight;
    const double len = s.s1 - s.s0;
    for (std::size_t a = 0; a < g.nodes.size(); ++a) {
      const double sp = s.s0 + len * (g.nodes[a] + 0.5);
      const Point p = s.curve.at(sp);
      const double wy = g.weights[a] * len * s.curve.derivative(sp).y;
      const double lx = p.x - xl;
      if (wy == 0.0 || lx == 0.0) continue;
      const double eta = (p.y - ctr.y) / m.dy();
      for (std::size_t b = 0; b < inner.nodes.size(); ++b) {
        const double x = xl + lx * (inner.nodes[b] + 0.5);
        basis.eval((x - ctr.x) / m.dx(), eta, phi);
        double r = 0.0;
        for (int i = 0; i < nm; ++i) r += c[i] * phi[i];
        recon.evaluate({x, p.y}, psi);
        const double w = wy * lx * inner.weights[b] * r;
        for (int i = 0; i < nm; ++i) out[i] += w * psi[i];
      }
    }
  };
  for (const Segment& s : segs.outer) add(s);
  for (const Segment& s : segs.inner) add(s);
}

/// Upstream cells of one stage and their largest relative area deviation.
struct StageGeometry {
  std::vector<UpstreamCell> cells;
  double theta = 0.0;
};

namespace detail {

// Runs f(j) for every cell, in parallel when available; the first
// exception (lowest cell index) is rethrown after the loop.
template <class F>
void for_each_cell(int n, F&& f) {
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
  bool failed = false;
#pragma omp parallel for schedule(dynamic, 16) reduction(|| : failed)
  for (int j = 0; j < n; ++j) {
    try {
      f(j);
    } catch (...) {
      errors[j] = std::current_exception();
      failed = true;
    }
  }
  if (failed)
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
}

}  // namespace detail

inline StageGeometry build_stage_geometry(const Mesh& m, const TracePointSet& t, CellShape shape) {
  StageGeometry g;
  g.cells.resize(m.num_cells());
  detail::for_each_cell(m.num_cells(), [&](int j) { g.cells[j] = build_upstream(m, j, t, shape); });
  g.theta = area_deviation(g.cells, m);
  return g;
}

/// rho^{n+1} from rho^n over the given upstream cells.
inline DGField remap(const DGField& rho, const StageGeometry& g) {
  const Mesh& m = rho.mesh();
  DGField out(m, rho.degree());
  detail::for_each_cell(m.num_cells(), [&](int j) {
    thread_local SegmentSet segs;
    clip(g.cells[j], m, segs);
    const TestFunctionRecon recon = reconstruct_test_function(g.cells[j], m, rho.basis());
    double rhs[kMaxModes];
    remap_rhs(segs, rho, recon, rhs);
    auto c = out.cell(j);
    for (int i = 0; i < out.modes(); ++i) c[i] = rhs[i] / m.cell_area();
  });
  return out;
}

/// Source of the transporting field for a density: the LDG Poisson solve,
/// or a prescribed field for verification.
class FieldProvider {
public:
  virtual ~FieldProvider() = default;
  virtual VectorField field(const DGField& rho) const = 0;
  virtual VectorField field_time_derivative(const DGField& rho, const VectorField& e) const = 0;
};

class LdgFieldProvider : public FieldProvider {
public:
  explicit LdgFieldProvider(std::shared_ptr<const LdgOperator> op) : op_(std::move(op)) {}
  LdgFieldProvider(const Mesh& mesh, int degree, Model model, SolverKind solver = SolverKind::fourier)
      : op_(std::make_shared<LdgOperator>(mesh, degree, model, solver)) {}

  VectorField field(const DGField& rho) const override { return op_->electric_field(rho); }
  VectorField field_time_derivative(const DGField& rho, const VectorField& e) const override {
    return op_->solve_field_time_derivative(rho, e);
  }
  const LdgOperator& op() const { return *op_; }

private:
  std::shared_ptr<const LdgOperator> op_;
};

/// Frozen uniform velocity (u, v), i.e. E = (-v, u).
class UniformFieldProvider : public FieldProvider {
public:
  UniformFieldProvider(const Mesh& mesh, double u, double v) : e_(mesh, 0) {
    for (int j = 0; j < mesh.num_cells(); ++j) {
      e_.e1.cell(j)[0] = -v;
      e_.e2.cell(j)[0] = u;
    }
  }
  VectorField field(const DGField&) const override { return e_; }
  VectorField field_time_derivative(const DGField&, const VectorField&) const override {
    return VectorField(e_.mesh(), 0);
  }

private:
  VectorField e_;
};

struct SchemeConfig {
  int degree = 2;
  CellShape shape = CellShape::quadratic;
  int time_order = 3;
};

/// Wall-clock split between field solves and remaps.
struct Timings {
  double field_seconds = 0.0;
  double remap_seconds = 0.0;
  long field_solves = 0;
};

/// One time step's predictor-corrector cascade. Fields of rho^n are
/// computed once and reused when the step is retraced with another dt.
class StepContext {
public:
  StepContext(const Mesh& mesh, SchemeConfig cfg, const FieldProvider& fields, const DGField& rho_n,
              Timings* timings = nullptr)
      : mesh_(mesh), cfg_(cfg), fields_(fields), rho_n_(rho_n), timings_(timings), e_n_(timed_field(rho_n)) {
    if (cfg.time_order < 1 || cfg.time_order > 3) throw std::invalid_argument("time order must be 1, 2 or 3");
    if (cfg.degree < 1 || cfg.degree > 2) throw std::invalid_argument("solution degree must be 1 or 2");
  }

  const VectorField& field_n() const { return e_n_; }
  const DGField& rho_n() const { return rho_n_; }
  bool midpoints() const { return cfg_.shape == CellShape::quadratic || cfg_.degree >= 2; }

  /// Traces stage tau (1-based) with step dt. Stage tau > 1 needs the
  /// previous stage's solution and must follow stage tau-1 with the same dt.
  StageGeometry trace_stage(int tau, double dt, const DGField* previous = nullptr) {
    if (tau > 1 && (!previous || last_tau_ != tau - 1 || last_dt_ != dt))
      throw std::logic_error("stages must be traced in order with a fixed dt");
    const DGFieldSampler en(e_n_, tau == 3 ? &et_n() : nullptr);
    TracePointSet t;
    if (tau == 1) {
      t = trace_order1(mesh_, midpoints(), en, dt);
    } else if (tau == 2) {
      const VectorField e1 = timed_field(*previous);
      t = trace_order2(mesh_, DGFieldSampler(e1), en, last_trace_, dt);
    } else {
      const VectorField e2 = timed_field(*previous);
      const VectorField et2 = timed_derivative(*previous, e2);
      t = trace_order3(mesh_, DGFieldSampler(e2, &et2), en, last_trace_, dt);
    }
    last_trace_ = std::move(t);
    last_tau_ = tau;
    last_dt_ = dt;
    return build_stage_geometry(mesh_, last_trace_, cfg_.shape);
  }

  DGField remap_stage(const StageGeometry& g) const {
    const auto t0 = std::chrono::steady_clock::now();
    DGField out = remap(rho_n_, g);
    if (timings_) timings_->remap_seconds += seconds_since(t0);
    return out;
  }

  /// Upstream traces of the most recent stage.
  const TracePointSet& last_trace() const { return last_trace_; }

private:
  static double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }

  VectorField timed_field(const DGField& rho) const {
    const auto t0 = std::chrono::steady_clock::now();
    VectorField e = fields_.field(rho);
    if (timings_) {
      timings_->field_seconds += seconds_since(t0);
      ++timings_->field_solves;
    }
    return e;
  }

  VectorField timed_derivative(const DGField& rho, const VectorField& e) const {
    const auto t0 = std::chrono::steady_clock::now();
    VectorField et = fields_.field_time_derivative(rho, e);
    if (timings_) {
      timings_->field_seconds += seconds_since(t0);
      ++timings_->field_solves;
    }
    return et;
  }

  const VectorField& et_n() {
    if (!et_n_) et_n_.emplace(timed_derivative(rho_n_, e_n_));
    return *et_n_;
  }

  const Mesh& mesh_;
  SchemeConfig cfg_;
  const FieldProvider& fields_;
  const DGField& rho_n_;
  Timings* timings_;
  VectorField e_n_;
  std::optional<VectorField> et_n_;
  TracePointSet last_trace_;
  int last_tau_ = 0;
  double last_dt_ = 0.0;
};

struct StepResult {
  DGField rho;
  double theta = 0.0;  // largest area deviation over the stages
};

/// Full predictor-corrector step with a fixed dt; every stage remaps rho^n.
inline StepResult full_step(const DGField& rho_n, const FieldProvider& fields, SchemeConfig cfg, double dt,
                            Timings* timings = nullptr) {
  StepContext ctx(rho_n.mesh(), cfg, fields, rho_n, timings);
  std::optional<DGField> prev;
  double theta = 0.0;
  for (int tau = 1; tau <= cfg.time_order; ++tau) {
    const StageGeometry g = ctx.trace_stage(tau, dt, prev ? &*prev : nullptr);
    theta = std::max(theta, g.theta);
    prev.emplace(ctx.remap_stage(g));
  }
  return {std::move(*prev), theta};
}

}  // namespace sldg
