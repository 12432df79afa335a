#pragma once

// Conserved quantities and controller state over a run: mass, energy
// int |E|^2 (|u|^2 for Euler), enstrophy int rho^2, area deviation, CFL.

#include <cmath>
#include <iomanip>
#include <ostream>
#include <vector>

#include "sldg/ldg_poisson.hpp"

namespace sldg {

struct DiagnosticsRecord {
  double time = 0.0;
  double mass = 0.0;
  double energy = 0.0;
  double enstrophy = 0.0;
  double theta = 0.0;
  double cfl = 0.0;
};

inline DiagnosticsRecord record(const DGField& rho, const VectorField& e, double theta, double cfl, double t) {
  return {t, integrate(rho), integrate_square(e.e1) + integrate_square(e.e2), integrate_square(rho), theta, cfl};
}

/// |q - q0| / |q0|, or the absolute deviation when q0 vanishes.
inline double relative_deviation(double q, double q0) {
  const double d = std::abs(q - q0);
  return q0 != 0.0 ? d / std::abs(q0) : d;
}

/// Mass deviation relative to a reference scale (e.g. int |rho0|), since
/// the total mass of the benchmark data is often zero.
inline double relative_mass_deviation(const std::vector<DiagnosticsRecord>& h, double scale) {
  double worst = 0.0;
  for (const auto& r : h) worst = std::max(worst, std::abs(r.mass - h.front().mass) / scale);
  return worst;
}

inline void write_csv_header(std::ostream& os) { os << "time,mass,energy,enstrophy,theta,cfl\n"; }

inline void write_csv_row(std::ostream& os, const DiagnosticsRecord& r) {
  const auto old = os.precision(17);
  os << r.time << ',' << r.mass << ',' << r.energy << ',' << r.enstrophy << ',' << r.theta << ',' << r.cfl << '\n';
  os.precision(old);
}

inline void write_csv(std::ostream& os, const std::vector<DiagnosticsRecord>& h) {
  write_csv_header(os);
  for (const auto& r : h) write_csv_row(os, r);
}

}  // namespace sldg
