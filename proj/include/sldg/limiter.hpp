#pragma once

// Troubled-cell detection by the TVB-modified minmod of edge deviations,
// and a simple WENO limiter that replaces a troubled cell's polynomial by
// a nonlinear convex combination of its own and its four edge neighbors'
// polynomials, each shifted to the cell's average.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "sldg/dg_field.hpp"

namespace sldg {

struct LimiterConfig {
  bool enabled = false;
  double tvb_m = 0.01;
  double gamma_center = 0.996;  // linear weight of the cell's own polynomial
  double epsilon = 1e-6;        // smoothness-indicator regularization

  void validate() const {
    if (!(tvb_m >= 0.0)) throw std::invalid_argument("TVB constant must be non-negative");
    if (!(gamma_center > 0.0 && gamma_center < 1.0)) throw std::invalid_argument("central weight must be in (0,1)");
    if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  }
  double gamma_neighbor() const { return 0.25 * (1.0 - gamma_center); }
};

/// minmod(a1, a2, a3), returning a1 unchanged when |a1| <= bound.
inline double tvb_minmod(double a1, double a2, double a3, double bound) {
  if (std::abs(a1) <= bound) return a1;
  if (a1 > 0 && a2 > 0 && a3 > 0) return std::min({a1, a2, a3});
  if (a1 < 0 && a2 < 0 && a3 < 0) return std::max({a1, a2, a3});
  return 0.0;
}

/// Cells where the modified minmod alters any edge deviation, in x or y.
inline std::vector<int> detect_troubled(const DGField& rho, const LimiterConfig& cfg) {
  const Mesh& m = rho.mesh();
  const Basis& b = rho.basis();
  const double bound = cfg.tvb_m * m.dx() * m.dx();
  std::vector<int> out;
  for (int j = 0; j < m.num_cells(); ++j) {
    const CellId c = m.cell(j);
    const auto p = rho.cell(j);
    const double avg = rho.average(j);
    const double dxp = rho.average(m.index(m.wrap_cell(c.ix + 1, c.iy))) - avg;
    const double dxm = avg - rho.average(m.index(m.wrap_cell(c.ix - 1, c.iy)));
    const double dyp = rho.average(m.index(m.wrap_cell(c.ix, c.iy + 1))) - avg;
    const double dym = avg - rho.average(m.index(m.wrap_cell(c.ix, c.iy - 1)));
    const double dev[4] = {b.value(p, 0.5, 0.0) - avg, avg - b.value(p, -0.5, 0.0), b.value(p, 0.0, 0.5) - avg,
                           avg - b.value(p, 0.0, -0.5)};
    const double lim[4] = {tvb_minmod(dev[0], dxp, dxm, bound), tvb_minmod(dev[1], dxp, dxm, bound),
                           tvb_minmod(dev[2], dyp, dym, bound), tvb_minmod(dev[3], dyp, dym, bound)};
    bool changed = false;
    for (int k = 0; k < 4; ++k) changed = changed || lim[k] != dev[k];
    if (changed) out.push_back(j);
  }
  return out;
}

namespace detail {

// Coefficients in the reference monomials xi^a eta^b of each basis mode
// (column i), via exact interpolation at tensor Gauss points.
inline Eigen::MatrixXd modal_to_monomial(const Basis& b) {
  const int k = b.degree(), nm = b.size();
  const CellRule q = tensor_rule(k + 1);
  Eigen::MatrixXd v(q.size(), nm), phi(q.size(), nm);
  double buf[kMaxModes];
  for (int r = 0; r < q.size(); ++r) {
    int a = 0;
    for (int d = 0; d <= k; ++d)
      for (int e = 0; e <= d; ++e) v(r, a++) = std::pow(q.xi[r], d - e) * std::pow(q.eta[r], e);
    b.eval(q.xi[r], q.eta[r], buf);
    for (int i = 0; i < nm; ++i) phi(r, i) = buf[i];
  }
  return v.colPivHouseholderQr().solve(phi);
}

// sum over 1 <= |alpha| <= k of |K|^{|alpha|-1} int_K (D^alpha p)^2.
inline double smoothness(const Eigen::VectorXd& mono, int k, double hx, double hy) {
  const double area = hx * hy;
  const CellRule q = tensor_rule(k + 1);
  double beta = 0.0;
  for (int ord = 1; ord <= k; ++ord)
    for (int ay = 0; ay <= ord; ++ay) {
      const int ax = ord - ay;
      double s = 0.0;
      for (int r = 0; r < q.size(); ++r) {
        double v = 0.0;
        int a = 0;
        for (int d = 0; d <= k; ++d)
          for (int e = 0; e <= d; ++e, ++a) {
            const int px = d - e, py = e;
            if (px < ax || py < ay) continue;
            double f = 1.0;
            for (int t = 0; t < ax; ++t) f *= px - t;
            for (int t = 0; t < ay; ++t) f *= py - t;
            v += mono[a] * f * std::pow(q.xi[r], px - ax) * std::pow(q.eta[r], py - ay);
          }
        s += q.w[r] * v * v;
      }
      // Physical derivatives scale by hx^-ax hy^-ay; the cell integral by area.
      beta += std::pow(area, ord - 1) * area * s / (std::pow(hx, 2 * ax) * std::pow(hy, 2 * ay));
    }
  return beta;
}

}  // namespace detail

/// Limits the listed cells; every other cell is copied unchanged and every
/// cell average is preserved exactly.
inline DGField apply_limiter(const DGField& rho, const std::vector<int>& troubled, const LimiterConfig& cfg) {
  DGField out = rho;
  if (troubled.empty() || rho.degree() == 0) return out;
  const Mesh& m = rho.mesh();
  const Basis& b = rho.basis();
  const int nm = b.size(), k = b.degree();
  const Eigen::MatrixXd to_mono = detail::modal_to_monomial(b);
  const CellRule q = tensor_rule(k + 1);
  std::vector<double> phi(static_cast<std::size_t>(q.size()) * nm);
  for (int r = 0; r < q.size(); ++r) b.eval(q.xi[r], q.eta[r], phi.data() + static_cast<std::size_t>(r) * nm);
  static constexpr int kOff[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};

  for (int j : troubled) {
    const CellId c = m.cell(j);
    const double avg = rho.average(j);
    Eigen::MatrixXd cand(nm, 5);  // modal coefficients of the candidates in cell j
    for (int i = 0; i < nm; ++i) cand(i, 0) = rho.cell(j)[i];
    for (int l = 0; l < 4; ++l) {
      const auto pn = rho.cell(m.wrap_cell(c.ix + kOff[l][0], c.iy + kOff[l][1]));
      cand.col(l + 1).setZero();
      for (int r = 0; r < q.size(); ++r) {
        const double v = b.value(pn, q.xi[r] - kOff[l][0], q.eta[r] - kOff[l][1]);
        for (int i = 0; i < nm; ++i) cand(i, l + 1) += q.w[r] * v * phi[static_cast<std::size_t>(r) * nm + i];
      }
      cand(0, l + 1) = avg;  // mean correction
    }
    double w[5], sum = 0.0;
    for (int l = 0; l < 5; ++l) {
      const Eigen::VectorXd mono = to_mono * cand.col(l);
      const double beta = detail::smoothness(mono, k, m.dx(), m.dy());
      const double gamma = l == 0 ? cfg.gamma_center : cfg.gamma_neighbor();
      w[l] = gamma / ((cfg.epsilon + beta) * (cfg.epsilon + beta));
      sum += w[l];
    }
    auto dst = out.cell(j);
    for (int i = 1; i < nm; ++i) {
      double s = 0.0;
      for (int l = 0; l < 5; ++l) s += w[l] / sum * cand(i, l);
      dst[i] = s;
    }
    dst[0] = avg;
  }
  return out;
}

}  // namespace sldg
