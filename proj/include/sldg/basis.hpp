#pragma once

// Total-degree modal basis P^k on the reference cell [-1/2,1/2]^2, built from
// tensor products of Legendre polynomials scaled to be orthonormal on
// [-1/2,1/2]. Since the reference cell has unit area, the mass matrix of a
// physical cell is area * I and the cell average is the constant coefficient.

#include <array>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

namespace sldg {

inline constexpr int kMaxDegree = 3;
inline constexpr int kMaxModes = (kMaxDegree + 1) * (kMaxDegree + 2) / 2;

/// Orthonormal Legendre L_0..L_n on [-1/2,1/2] and their derivatives.
inline void legendre_1d(int n, double xi, double* val, double* der = nullptr) {
  static const std::array<double, kMaxDegree + 1> norm = [] {
    std::array<double, kMaxDegree + 1> a{};
    for (int m = 0; m <= kMaxDegree; ++m) a[m] = std::sqrt(2.0 * m + 1.0);
    return a;
  }();
  const double t = 2.0 * xi;
  double p0 = 1.0, p1 = t;
  double d0 = 0.0, d1 = 1.0;
  for (int m = 0; m <= n; ++m) {
    double p, d;
    if (m == 0) {
      p = 1.0, d = 0.0;
    } else if (m == 1) {
      p = t, d = 1.0;
    } else {
      p = ((2.0 * m - 1.0) * t * p1 - (m - 1.0) * p0) / m;
      d = d0 + (2.0 * m - 1.0) * p1;  // P'_m = P'_{m-2} + (2m-1) P_{m-1}
      p0 = p1, p1 = p;
      d0 = d1, d1 = d;
    }
    const double s = norm[m];
    val[m] = s * p;
    if (der) der[m] = 2.0 * s * d;
  }
}

class Basis {
public:
  explicit Basis(int degree) : degree_(degree) {
    if (degree < 0 || degree > kMaxDegree)
      throw std::invalid_argument("basis degree must be in [0," + std::to_string(kMaxDegree) + "]");
    for (int total = 0; total <= degree; ++total)
      for (int b = 0; b <= total; ++b) modes_.push_back({total - b, b});
  }

  int degree() const { return degree_; }
  int size() const { return static_cast<int>(modes_.size()); }
  static int size_for(int degree) { return (degree + 1) * (degree + 2) / 2; }

  /// (x-degree, y-degree) of mode i.
  std::array<int, 2> mode(int i) const { return modes_[i]; }

  void eval(double xi, double eta, double* out) const {
    double lx[kMaxDegree + 1], ly[kMaxDegree + 1];
    legendre_1d(degree_, xi, lx);
    legendre_1d(degree_, eta, ly);
    for (int i = 0; i < size(); ++i) out[i] = lx[modes_[i][0]] * ly[modes_[i][1]];
  }

  /// Reference-coordinate gradients of every mode.
  void eval_grad(double xi, double eta, double* dxi, double* deta) const {
    double lx[kMaxDegree + 1], ly[kMaxDegree + 1], dlx[kMaxDegree + 1], dly[kMaxDegree + 1];
    legendre_1d(degree_, xi, lx, dlx);
    legendre_1d(degree_, eta, ly, dly);
    for (int i = 0; i < size(); ++i) {
      dxi[i] = dlx[modes_[i][0]] * ly[modes_[i][1]];
      deta[i] = lx[modes_[i][0]] * dly[modes_[i][1]];
    }
  }

  double value(std::span<const double> coeffs, double xi, double eta) const {
    double phi[kMaxModes];
    eval(xi, eta, phi);
    double s = 0.0;
    for (int i = 0; i < size(); ++i) s += coeffs[i] * phi[i];
    return s;
  }

  /// Reference-coordinate gradient of a polynomial given by its coefficients.
  std::array<double, 2> gradient(std::span<const double> coeffs, double xi, double eta) const {
    double gx[kMaxModes], gy[kMaxModes];
    eval_grad(xi, eta, gx, gy);
    std::array<double, 2> g{0.0, 0.0};
    for (int i = 0; i < size(); ++i) {
      g[0] += coeffs[i] * gx[i];
      g[1] += coeffs[i] * gy[i];
    }
    return g;
  }

private:
  int degree_;
  std::vector<std::array<int, 2>> modes_;
};

}  // namespace sldg
