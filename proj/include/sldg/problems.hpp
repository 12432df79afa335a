#pragma once

// Benchmark problems: a stationary Euler solution with known error, the
// guiding-center Kelvin-Helmholtz instability, a vortex patch, and a
// double shear layer.

#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>

#include "sldg/grid.hpp"
#include "sldg/ldg_poisson.hpp"

namespace sldg {

using ExactSolution = std::function<double(double, double, double)>;

struct ProblemSpec {
  std::string name;
  Model model = Model::euler;
  Domain domain;
  ScalarFunction initial;
  std::optional<ExactSolution> exact;
  double t_final = 1.0;
};

/// omega = -2 sin x sin y on [0,2pi]^2; stationary.
inline ProblemSpec accuracy_test() {
  constexpr double pi = std::numbers::pi;
  ProblemSpec p;
  p.name = "accuracy";
  p.model = Model::euler;
  p.domain = {0.0, 2 * pi, 0.0, 2 * pi};
  p.initial = [](double x, double y) { return -2.0 * std::sin(x) * std::sin(y); };
  p.exact = [](double x, double y, double) { return -2.0 * std::sin(x) * std::sin(y); };
  p.t_final = 1.0;
  return p;
}

/// rho = sin y + 0.015 cos(k x), k = 0.5, on [0,4pi] x [0,2pi].
inline ProblemSpec kelvin_helmholtz(double k = 0.5) {
  constexpr double pi = std::numbers::pi;
  ProblemSpec p;
  p.name = "kh";
  p.model = Model::vlasov;
  p.domain = {0.0, 4 * pi, 0.0, 2 * pi};
  p.initial = [k](double x, double y) { return std::sin(y) + 0.015 * std::cos(k * x); };
  p.t_final = 40.0;
  return p;
}

/// omega = -1 on [pi/2,3pi/2] x [pi/4,3pi/4], +1 on [pi/2,3pi/2] x
/// [5pi/4,7pi/4], 0 elsewhere.
inline ProblemSpec vortex_patch() {
  constexpr double pi = std::numbers::pi;
  ProblemSpec p;
  p.name = "vortex";
  p.model = Model::euler;
  p.domain = {0.0, 2 * pi, 0.0, 2 * pi};
  p.initial = [](double x, double y) {
    if (x < pi / 2 || x > 3 * pi / 2) return 0.0;
    if (y >= pi / 4 && y <= 3 * pi / 4) return -1.0;
    if (y >= 5 * pi / 4 && y <= 7 * pi / 4) return 1.0;
    return 0.0;
  };
  p.t_final = 10.0;
  return p;
}

/// Double shear layer with perturbation delta and layer thickness.
inline ProblemSpec shear_flow(double delta = 0.05, double thickness = std::numbers::pi / 15) {
  constexpr double pi = std::numbers::pi;
  ProblemSpec p;
  p.name = "shear";
  p.model = Model::euler;
  p.domain = {0.0, 2 * pi, 0.0, 2 * pi};
  p.initial = [delta, thickness](double x, double y) {
    auto sech2 = [](double s) {
      const double c = std::cosh(s);
      return 1.0 / (c * c);
    };
    if (y <= pi) return delta * std::cos(x) - sech2((y - pi / 2) / thickness) / thickness;
    return delta * std::cos(x) + sech2((3 * pi / 2 - y) / thickness) / thickness;
  };
  p.t_final = 8.0;
  return p;
}

inline ProblemSpec problem_by_name(const std::string& name) {
  if (name == "accuracy") return accuracy_test();
  if (name == "kh") return kelvin_helmholtz();
  if (name == "vortex") return vortex_patch();
  if (name == "shear") return shear_flow();
  throw std::invalid_argument("unknown problem '" + name + "' (accuracy, kh, vortex, shear)");
}

}  // namespace sldg
