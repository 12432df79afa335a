#pragma once

// Time loop: fields and step size from rho^n, the predictor-corrector step
// under the adaptive controller, the optional limiter, diagnostics, and
// snapshots. The final step (and any step reaching a snapshot time) is
// clipped to land exactly on it.

#include <chrono>
#include <cstdio>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "sldg/adaptive_control.hpp"
#include "sldg/diagnostics.hpp"
#include "sldg/limiter.hpp"
#include "sldg/problems.hpp"

namespace sldg {

struct RunConfig {
  std::string problem = "accuracy";
  int nx = 20;
  int ny = 0;  // 0: same as nx
  int degree = 2;
  bool qc = true;
  int ldg_degree = 3;
  int time_order = 3;
  double cfl = 1.0;
  AdaptiveConfig adaptive;
  LimiterConfig limiter;
  std::optional<double> t_final;  // default: the problem's
  double snap_every = 0.0;        // 0: final snapshot only
  int diag_every = 1;             // steps between diagnostics records
  int threads = 0;                // 0: runtime default
  SolverKind solver = SolverKind::fourier;

  int mesh_ny() const { return ny > 0 ? ny : nx; }

  void validate() const {
    if (nx < 2 || mesh_ny() < 2) throw std::invalid_argument("mesh needs at least 2 cells per direction");
    if (degree < 1 || degree > 2) throw std::invalid_argument("degree must be 1 or 2");
    if (ldg_degree < 1 || ldg_degree > 3) throw std::invalid_argument("ldg degree must be 1, 2 or 3");
    if (time_order < 1 || time_order > 3) throw std::invalid_argument("time order must be 1, 2 or 3");
    if (!(cfl > 0.0)) throw std::invalid_argument("cfl must be positive");
    if (t_final && !(*t_final > 0.0)) throw std::invalid_argument("final time must be positive");
    if (snap_every < 0.0) throw std::invalid_argument("snapshot interval must be non-negative");
    if (diag_every < 1) throw std::invalid_argument("diagnostics interval must be >= 1");
    if (adaptive.enabled) {
      adaptive.validate();
      if (cfl > adaptive.cfl_max) throw std::invalid_argument("initial cfl exceeds cfl_max");
    }
    if (limiter.enabled) limiter.validate();
  }

  SchemeConfig scheme() const {
    SchemeConfig s;
    s.degree = degree;
    s.shape = qc ? CellShape::quadratic : CellShape::straight;
    s.time_order = time_order;
    return s;
  }
};

struct RunResult {
  DGField rho;
  double time = 0.0;
  int steps = 0;
  std::vector<DiagnosticsRecord> history;
  std::vector<ControlEvent> control_events;
  std::optional<ErrorNorms> errors;  // against the exact solution, when known
  double mass_scale = 1.0;           // int |rho_0|, for relative mass deviation
  double max_theta = 0.0;            // over accepted steps
  Timings timings;
  double wall_seconds = 0.0;
};

/// Optional hooks: after every accepted step, and when a snapshot is due.
struct RunObserver {
  std::function<void(const RunResult&, const ControlledStep&)> on_step;
  std::function<void(const DGField&, double)> on_snapshot;
  std::function<void(const std::string&)> log;
};

inline double integrate_abs(const DGField& f) {
  const CellRule q = tensor_rule(default_quadrature_points(f.degree()));
  double s = 0.0;
  for (int j = 0; j < f.mesh().num_cells(); ++j)
    for (int k = 0; k < q.size(); ++k) s += q.w[k] * std::abs(f.basis().value(f.cell(j), q.xi[k], q.eta[k]));
  return s * f.mesh().cell_area();
}

inline RunResult run_simulation(const RunConfig& cfg, const RunObserver& obs = {}) {
  cfg.validate();
#ifdef _OPENMP
  if (cfg.threads > 0) omp_set_num_threads(cfg.threads);
#endif
  const auto wall0 = std::chrono::steady_clock::now();
  const ProblemSpec prob = problem_by_name(cfg.problem);
  const double t_final = cfg.t_final.value_or(prob.t_final);
  const Mesh mesh(prob.domain, cfg.nx, cfg.mesh_ny());
  const LdgFieldProvider fields(mesh, cfg.ldg_degree, prob.model, cfg.solver);
  auto say = [&](const std::string& s) {
    if (obs.log) obs.log(s);
  };

  RunResult r{project(mesh, cfg.degree, prob.initial), 0.0, 0, {}, {}, {}, 1.0, 0.0, {}, 0.0};
  r.mass_scale = integrate_abs(r.rho);
  if (!(r.mass_scale > 0.0)) r.mass_scale = 1.0;
  ControllerState state{cfg.cfl, false};
  AdaptiveConfig acfg = cfg.adaptive;
  if (!acfg.enabled) acfg.cfl_max = cfg.cfl;
  r.history.push_back(record(r.rho, fields.field(r.rho), 0.0, state.cfl, 0.0));

  double next_snap = cfg.snap_every > 0.0 ? cfg.snap_every : t_final;
  while (r.time < t_final) {
    const double target = std::min(next_snap, t_final);
    const ControlledStep s =
        run_step_with_control(r.rho, fields, cfg.scheme(), state, acfg, target - r.time, &r.timings);
    const double t_start = r.time;
    r.rho = s.rho;
    if (cfg.limiter.enabled) r.rho = apply_limiter(r.rho, detect_troubled(r.rho, cfg.limiter), cfg.limiter);
    r.time = s.dt == target - r.time ? target : r.time + s.dt;
    ++r.steps;
    r.max_theta = std::max(r.max_theta, s.theta);
    r.control_events.insert(r.control_events.end(), s.events.begin(), s.events.end());
    for (const ControlEvent& e : s.events)
      if (e.decision != Decision::accept) {
        std::ostringstream os;
        os << "step " << r.steps << " t=" << t_start << " stage " << e.stage << " theta=" << e.theta << " " << to_string(e.decision)
           << " -> cfl " << e.cfl;
        say(os.str());
      }
    if (r.steps % cfg.diag_every == 0 || r.time == t_final)
      r.history.push_back(record(r.rho, fields.field(r.rho), s.theta, s.cfl, r.time));
    if (obs.on_step) obs.on_step(r, s);
    if (r.time == next_snap || r.time == t_final) {
      if (obs.on_snapshot) obs.on_snapshot(r.rho, r.time);
      if (r.time == next_snap && cfg.snap_every > 0.0)
        next_snap = std::min(t_final, cfg.snap_every * (std::floor(r.time / cfg.snap_every + 0.5) + 1.0));
    }
  }
  if (prob.exact) {
    const ExactSolution ex = *prob.exact;
    const double t = r.time;
    r.errors = error_norms(r.rho, [&](double x, double y) { return ex(x, y, t); });
  }
  r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();
  return r;
}

/// One row of a convergence table; orders are empty for the first row.
struct ConvergenceRow {
  double parameter = 0.0;  // mesh size n (spatial) or CFL number (temporal)
  ErrorNorms errors;
  std::optional<double> order_l1, order_l2, order_linf;
  double seconds = 0.0;
};

/// Orders log(e_prev / e) / log(ratio) with ratio = p / p_prev (spatial,
/// n increasing) or p_prev / p inverted by `temporal` (CFL increasing).
inline void fill_orders(std::vector<ConvergenceRow>& rows, bool temporal) {
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double ratio = temporal ? rows[i - 1].parameter / rows[i].parameter : rows[i].parameter / rows[i - 1].parameter;
    if (std::abs(std::log(ratio)) < 1e-14) continue;  // identical meshes: undefined
    auto ord = [&](double a, double b) { return std::log(a / b) / std::log(ratio); };
    rows[i].order_l1 = ord(rows[i - 1].errors.l1, rows[i].errors.l1);
    rows[i].order_l2 = ord(rows[i - 1].errors.l2, rows[i].errors.l2);
    rows[i].order_linf = ord(rows[i - 1].errors.linf, rows[i].errors.linf);
  }
}

/// Runs the template on each mesh size (spatial) or CFL number (temporal).
inline std::vector<ConvergenceRow> convergence_suite(RunConfig base, const std::vector<double>& params, bool temporal,
                                                     const RunObserver& obs = {}) {
  std::vector<ConvergenceRow> rows;
  for (double p : params) {
    RunConfig c = base;
    if (temporal) {
      c.cfl = p;
      c.adaptive.enabled = false;
    } else {
      c.nx = static_cast<int>(p);
      c.ny = base.ny > 0 ? static_cast<int>(p * base.ny / base.nx) : 0;
    }
    const RunResult r = run_simulation(c, obs);
    if (!r.errors) throw std::invalid_argument("convergence suite needs a problem with an exact solution");
    rows.push_back({p, *r.errors, {}, {}, {}, r.wall_seconds});
  }
  fill_orders(rows, temporal);
  return rows;
}

inline void write_convergence_csv(std::ostream& os, const std::vector<ConvergenceRow>& rows, bool temporal) {
  os << (temporal ? "cfl" : "mesh") << ",l1,order_l1,l2,order_l2,linf,order_linf,seconds\n";
  auto ord = [](const std::optional<double>& v) {
    char b[32] = "";
    if (v) std::snprintf(b, sizeof b, "%.2f", *v);
    return std::string(b);
  };
  for (const auto& r : rows) {
    char b[160];
    std::snprintf(b, sizeof b, "%g,%.6e,%s,%.6e,%s,%.6e,%s,%.3f\n", r.parameter, r.errors.l1, ord(r.order_l1).c_str(),
                  r.errors.l2, ord(r.order_l2).c_str(), r.errors.linf, ord(r.order_linf).c_str(), r.seconds);
    os << b;
  }
}

/// Writes via a temporary file and rename, so readers never see a partial file.
inline void write_atomically(const std::filesystem::path& path, const std::function<void(std::ostream&)>& body) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp);
    if (!os) throw std::runtime_error("cannot write " + tmp.string());
    body(os);
    if (!os) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace sldg
