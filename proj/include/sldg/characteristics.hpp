#pragma once

// Backward characteristic tracing of grid-skeleton nodes,
//
//     dx/dt = E2(x, y, t),   dy/dt = -E1(x, y, t),
//
// from t^{n+1} to t^n with the predictor-corrector construction:
// order 1 is an Euler step with E^n, order 2 a trapezoid between the
// predicted E^{n+1} at the node and E^n at the order-1 foot, order 3 a
// Taylor step whose dt^2 term blends material derivatives at both ends.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "sldg/ldg_poisson.hpp"

namespace sldg {

struct TimeStep {
  double dt = 0.0;
  double cfl = 0.0;
  double a = 0.0;  // max |E2| (x speed)
  double b = 0.0;  // max |E1| (y speed)
};

/// Largest |E1| and |E2| over cell quadrature points.
inline std::array<double, 2> max_speeds(const VectorField& e, int quad_points = 0) {
  const Mesh& m = e.mesh();
  const CellRule q = tensor_rule(quad_points > 0 ? quad_points : default_quadrature_points(e.degree()));
  double a = 0.0, b = 0.0;
  for (int j = 0; j < m.num_cells(); ++j)
    for (int k = 0; k < q.size(); ++k) {
      a = std::max(a, std::abs(e.e2.basis().value(e.e2.cell(j), q.xi[k], q.eta[k])));
      b = std::max(b, std::abs(e.e1.basis().value(e.e1.cell(j), q.xi[k], q.eta[k])));
    }
  return {a, b};
}

/// dt = cfl / (a/dx + b/dy).
inline TimeStep compute_dt(const VectorField& e, double cfl) {
  if (!(cfl > 0.0)) throw std::invalid_argument("cfl must be positive");
  const auto [a, b] = max_speeds(e);
  if (a == 0.0 && b == 0.0) throw std::invalid_argument("stationary field; supply dt explicitly");
  const Mesh& m = e.mesh();
  return {cfl / (a / m.dx() + b / m.dy()), cfl, a, b};
}

/// Upstream images of the skeleton nodes, in unwrapped coordinates
/// relative to the node's position inside the domain. Node (ix, iy) of each
/// kind is stored at iy * nx + ix; edge midpoints and cell centers are
/// present only when traced.
struct TracePointSet {
  int nx = 0;
  int ny = 0;
  std::vector<Point> vertex;
  std::vector<Point> bottom;  // midpoint of the bottom edge of cell (ix, iy)
  std::vector<Point> left;    // midpoint of the left edge of cell (ix, iy)
  std::vector<Point> center;  // center of cell (ix, iy)

  bool has_midpoints() const { return !bottom.empty(); }

  const Point& at(const SkeletonNode& n) const {
    const std::size_t i = static_cast<std::size_t>(n.iy) * nx + n.ix;
    switch (n.kind) {
      case SkeletonNode::Kind::bottom_mid: return bottom[i];
      case SkeletonNode::Kind::left_mid: return left[i];
      case SkeletonNode::Kind::center: return center[i];
      default: return vertex[i];
    }
  }
};

/// Builds a trace set by applying f(node, eulerian_position) to every node.
template <class F>
TracePointSet map_nodes(const Mesh& m, bool midpoints, F&& f) {
  TracePointSet t;
  t.nx = m.nx();
  t.ny = m.ny();
  const std::size_t n = static_cast<std::size_t>(m.num_cells());
  t.vertex.resize(n);
  if (midpoints) {
    t.bottom.resize(n);
    t.left.resize(n);
    t.center.resize(n);
  }
  using K = SkeletonNode::Kind;
#pragma omp parallel for schedule(static)
  for (int iy = 0; iy < m.ny(); ++iy)
    for (int ix = 0; ix < m.nx(); ++ix) {
      const std::size_t i = static_cast<std::size_t>(iy) * m.nx() + ix;
      const SkeletonNode v{K::vertex, ix, iy};
      t.vertex[i] = f(v, v.position(m));
      if (midpoints) {
        const SkeletonNode b{K::bottom_mid, ix, iy}, l{K::left_mid, ix, iy}, c{K::center, ix, iy};
        t.bottom[i] = f(b, b.position(m));
        t.left[i] = f(l, l.position(m));
        t.center[i] = f(c, c.position(m));
      }
    }
  return t;
}

/// Identity trace (zero velocity).
inline TracePointSet identity_trace(const Mesh& m, bool midpoints) {
  return map_nodes(m, midpoints, [](const SkeletonNode&, Point p) { return p; });
}

/// Field values seen by the tracer: (E1, E2) and their material
/// derivatives, at skeleton nodes (single-valued by averaging) and at
/// arbitrary points.
struct FieldSample {
  double e1 = 0.0;
  double e2 = 0.0;
};

/// Sampler over DG fields. Off-grid points use the owning cell's
/// polynomial; skeleton nodes average the one-sided limits. The optional
/// time derivative enables material derivatives
///   dE_s/dt = dE_s/dt|_x + E2 dE_s/dx - E1 dE_s/dy.
class DGFieldSampler {
public:
  explicit DGFieldSampler(const VectorField& e, const VectorField* et = nullptr) : e_(e), et_(et) {}

  FieldSample at_node(const SkeletonNode& n) const { return {node_average(e_.e1, n), node_average(e_.e2, n)}; }
  FieldSample at(Point p) const { return {e_.e1.evaluate(p), e_.e2.evaluate(p)}; }

  FieldSample material_at_node(const SkeletonNode& n) const {
    require_time_derivative();
    const double e1 = node_average(e_.e1, n), e2 = node_average(e_.e2, n);
    const auto g1 = node_average_gradient(e_.e1, n), g2 = node_average_gradient(e_.e2, n);
    return {node_average(et_->e1, n) + g1[0] * e2 - g1[1] * e1, node_average(et_->e2, n) + g2[0] * e2 - g2[1] * e1};
  }

  FieldSample material_at(Point p) const {
    require_time_derivative();
    const double e1 = e_.e1.evaluate(p), e2 = e_.e2.evaluate(p);
    const auto g1 = e_.e1.gradient(p), g2 = e_.e2.gradient(p);
    return {et_->e1.evaluate(p) + g1[0] * e2 - g1[1] * e1, et_->e2.evaluate(p) + g2[0] * e2 - g2[1] * e1};
  }

private:
  void require_time_derivative() const {
    if (!et_) throw std::logic_error("material derivative needs dE/dt");
  }

  const VectorField& e_;
  const VectorField* et_;
};

/// x* = x - E2 dt, y* = y + E1 dt with E at t^n.
template <class Sampler>
TracePointSet trace_order1(const Mesh& m, bool midpoints, const Sampler& en, double dt) {
  return map_nodes(m, midpoints, [&](const SkeletonNode& n, Point p) {
    const FieldSample s = en.at_node(n);
    return Point{p.x - s.e2 * dt, p.y + s.e1 * dt};
  });
}

/// Trapezoid between the predicted E^{n+1} at the node and E^n at the
/// order-1 foot.
template <class SamplerPred, class SamplerN>
TracePointSet trace_order2(const Mesh& m, const SamplerPred& pred, const SamplerN& en, const TracePointSet& trace1,
                           double dt) {
  return map_nodes(m, trace1.has_midpoints(), [&](const SkeletonNode& n, Point p) {
    const FieldSample a = pred.at_node(n);
    const FieldSample b = en.at(trace1.at(n));
    return Point{p.x - 0.5 * (a.e2 + b.e2) * dt, p.y + 0.5 * (a.e1 + b.e1) * dt};
  });
}

/// Taylor step with E^{n+1,(2)} at the node and the dt^2/2 term weighted
/// 2/3 at t^{n+1} (node) and 1/3 at t^n (order-2 foot).
template <class SamplerPred, class SamplerN>
TracePointSet trace_order3(const Mesh& m, const SamplerPred& pred, const SamplerN& en, const TracePointSet& trace2,
                           double dt) {
  const double h = 0.5 * dt * dt;
  return map_nodes(m, trace2.has_midpoints(), [&](const SkeletonNode& n, Point p) {
    const FieldSample e = pred.at_node(n);
    const FieldSample d1 = pred.material_at_node(n);
    const FieldSample d0 = en.material_at(trace2.at(n));
    const double x = p.x - e.e2 * dt + h * (2.0 / 3.0 * d1.e2 + 1.0 / 3.0 * d0.e2);
    const double y = p.y + e.e1 * dt - h * (2.0 / 3.0 * d1.e1 + 1.0 / 3.0 * d0.e1);
    return Point{x, y};
  });
}

}  // namespace sldg
