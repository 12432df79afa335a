#pragma once

// Adaptive CFL control driven by the upstream-area deviation theta:
// theta > delta_M shrinks the CFL number by 2/3 and retraces; theta below
// delta_m grows it by 3/2 (capped) unless the step already shrank. Every
// stage of a step shares one dt, so a changed dt restarts the step from
// its first stage.

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "sldg/errors.hpp"
#include "sldg/sldg_update.hpp"

namespace sldg {

struct AdaptiveConfig {
  bool enabled = false;
  double cfl_max = 3.0;
  double delta_m = 0.003;
  double delta_M = 0.01;

  void validate() const {
    if (!(cfl_max > 0.0)) throw std::invalid_argument("cfl_max must be positive");
    if (!(delta_m > 0.0 && delta_m < delta_M)) throw std::invalid_argument("need 0 < delta_m < delta_M");
  }
};

struct ControllerState {
  double cfl = 1.0;
  bool irefine = false;
};

enum class Decision { accept, shrink, grow };

inline const char* to_string(Decision d) {
  switch (d) {
    case Decision::shrink: return "shrink";
    case Decision::grow: return "grow";
    default: return "accept";
  }
}

/// Applies the threshold rule to theta, updating the state's cfl/irefine.
inline Decision decide(double theta, ControllerState& s, const AdaptiveConfig& cfg) {
  if (std::isnan(theta) || theta < 0.0) throw std::invalid_argument("theta must be non-negative");
  if (theta > cfg.delta_M) {
    s.cfl *= 2.0 / 3.0;
    s.irefine = true;
    if (s.cfl < 1e-4 * cfg.cfl_max)
      throw RunawayDistortion("CFL fell below 1e-4 * cfl_max; upstream cells stay distorted");
    return Decision::shrink;
  }
  if (theta < cfg.delta_m && !s.irefine && s.cfl != cfg.cfl_max) {
    s.cfl = std::min(1.5 * s.cfl, cfg.cfl_max);
    return Decision::grow;
  }
  return Decision::accept;
}

/// One controller evaluation within a step.
struct ControlEvent {
  int stage = 0;
  double theta = 0.0;  // +inf when the stage's geometry failed
  Decision decision = Decision::accept;
  double cfl = 0.0;  // after the decision
};

struct ControlledStep {
  DGField rho;
  double dt = 0.0;
  double cfl = 0.0;    // CFL number the accepted step used
  double theta = 0.0;  // largest theta over the accepted stages
  std::vector<ControlEvent> events;
};

/// dt for `cfl` from E^n, never beyond `dt_limit` (remaining time).
inline double controlled_dt(const VectorField& e_n, double cfl, double dt_limit) {
  const auto [a, b] = max_speeds(e_n);
  if (a == 0.0 && b == 0.0) return dt_limit;
  const Mesh& m = e_n.mesh();
  return std::min(cfl / (a / m.dx() + b / m.dy()), dt_limit);
}

/// Advances rho^n by one step at the controller's CFL number. With control
/// disabled the CFL is fixed and geometry failures propagate; with control
/// enabled a geometry failure counts as theta = inf (shrink). irefine is
/// cleared at the start of the step and at most one grow is attempted.
inline ControlledStep run_step_with_control(const DGField& rho_n, const FieldProvider& fields, SchemeConfig cfg,
                                            ControllerState& state, const AdaptiveConfig& acfg, double dt_limit,
                                            Timings* timings = nullptr) {
  if (!(dt_limit > 0.0)) throw std::invalid_argument("dt limit must be positive");
  StepContext ctx(rho_n.mesh(), cfg, fields, rho_n, timings);
  state.irefine = false;
  bool grew = false;
  ControlledStep out{DGField(rho_n.mesh(), rho_n.degree()), 0.0, 0.0, 0.0, {}};
  double dt = controlled_dt(ctx.field_n(), state.cfl, dt_limit);

  for (;;) {
    std::optional<DGField> prev;
    double theta_max = 0.0;
    bool restart = false;
    for (int tau = 1; tau <= cfg.time_order && !restart; ++tau) {
      double theta = std::numeric_limits<double>::infinity();
      std::optional<StageGeometry> g;
      try {
        g.emplace(ctx.trace_stage(tau, dt, prev ? &*prev : nullptr));
        theta = g->theta;
      } catch (const DegenerateUpstreamCell&) {
        if (!acfg.enabled) throw;
      } catch (const ClipFailure&) {
        if (!acfg.enabled) throw;
      }
      Decision d = Decision::accept;
      if (acfg.enabled) {
        const ControllerState before = state;
        d = decide(theta, state, acfg);
        if (d == Decision::grow && grew) {
          state = before;  // one grow per step
          d = Decision::accept;
        }
        out.events.push_back({tau, theta, d, state.cfl});
      }
      if (d == Decision::accept) {
        theta_max = std::max(theta_max, theta);
        prev.emplace(ctx.remap_stage(*g));
        continue;
      }
      grew = grew || d == Decision::grow;
      const double next = controlled_dt(ctx.field_n(), state.cfl, dt_limit);
      if (next == dt && d == Decision::grow) {  // capped by dt_limit: nothing to gain
        theta_max = std::max(theta_max, theta);
        prev.emplace(ctx.remap_stage(*g));
        continue;
      }
      dt = d == Decision::shrink ? std::min(next, dt * (2.0 / 3.0)) : next;
      restart = true;
    }
    if (restart) continue;
    out.rho = std::move(*prev);
    out.dt = dt;
    out.cfl = state.cfl;
    out.theta = theta_max;
    return out;
  }
}

}  // namespace sldg
