#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace sldg {

/// Gauss–Legendre rule on the reference interval [-1/2, 1/2]; weights sum to 1.
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  int size() const { return static_cast<int>(nodes.size()); }
};

/// n-point rule, exact for polynomials of degree 2n-1.
inline GaussRule gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: need at least one point");
  GaussRule r;
  r.nodes.resize(n);
  r.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    // Newton on P_n starting from the Chebyshev-like guess.
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int m = 2; m <= n; ++m) {
        const double p2 = ((2.0 * m - 1.0) * x * p1 - (m - 1.0) * p0) / m;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    double p0 = 1.0, p1 = x;
    for (int m = 2; m <= n; ++m) {
      const double p2 = ((2.0 * m - 1.0) * x * p1 - (m - 1.0) * p0) / m;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    // Ascending order, mapped from [-1,1] to [-1/2,1/2].
    r.nodes[n - 1 - i] = 0.5 * x;
    r.weights[n - 1 - i] = 1.0 / ((1.0 - x * x) * dp * dp);
  }
  return r;
}

/// Cached rule for hot loops; rules up to 16 points are built once.
inline const GaussRule& cached_gauss_legendre(int n) {
  static const std::vector<GaussRule> rules = [] {
    std::vector<GaussRule> r;
    for (int i = 1; i <= 16; ++i) r.push_back(gauss_legendre(i));
    return r;
  }();
  if (n < 1 || n > 16) throw std::invalid_argument("cached_gauss_legendre: 1..16 points");
  return rules[n - 1];
}

/// Tensor-product rule on the reference cell [-1/2,1/2]^2.
struct CellRule {
  std::vector<double> xi, eta, w;

  int size() const { return static_cast<int>(w.size()); }
};

inline CellRule tensor_rule(int n) {
  const GaussRule g = gauss_legendre(n);
  CellRule r;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      r.xi.push_back(g.nodes[i]);
      r.eta.push_back(g.nodes[j]);
      r.w.push_back(g.weights[i] * g.weights[j]);
    }
  return r;
}

}  // namespace sldg
