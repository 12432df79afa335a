// Benchmark driver: `run` executes one time loop and writes diagnostics,
// snapshots, errors and a log; `convergence` runs a spatial (mesh list) or
// temporal (CFL list) study of the accuracy problem.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "sldg/sldg.hpp"

namespace {

namespace fs = std::filesystem;
using namespace sldg;

std::string time_tag(double t) {
  char b[32];
  std::snprintf(b, sizeof b, "%.6g", t);
  return b;
}

class Log {
 public:
  void operator()(const std::string& s) {
    std::cerr << s << "\n";
    lines_ << s << "\n";
  }
  void flush(const fs::path& dir) const {
    write_atomically(dir / "run.log", [&](std::ostream& os) { os << lines_.str(); });
  }

 private:
  std::ostringstream lines_;
};

std::string describe(const RunConfig& c) {
  std::ostringstream os;
  os << "problem=" << c.problem << " mesh=" << c.nx << "x" << c.mesh_ny() << " P" << c.degree
     << (c.qc ? " QC" : " straight") << " LDG P" << c.ldg_degree << " time" << c.time_order << " cfl=" << c.cfl;
  if (c.adaptive.enabled)
    os << " adaptive(cfl_max=" << c.adaptive.cfl_max << " delta_m=" << c.adaptive.delta_m
       << " delta_M=" << c.adaptive.delta_M << ")";
  if (c.limiter.enabled) os << " limiter=weno(M=" << c.limiter.tvb_m << ")";
  return os.str();
}

int do_run(const RunConfig& cfg, const fs::path& out) {
  Log log;
  log(describe(cfg));
  RunObserver obs;
  obs.log = [&](const std::string& s) { log(s); };
  obs.on_snapshot = [&](const DGField& rho, double t) {
    write_atomically(out / ("snapshot_" + time_tag(t) + ".txt"), [&](std::ostream& os) { write_snapshot(os, rho, t); });
  };
  try {
    const RunResult r = run_simulation(cfg, obs);
    write_atomically(out / "diag.csv", [&](std::ostream& os) { write_csv(os, r.history); });
    if (r.errors)
      write_atomically(out / "errors.csv", [&](std::ostream& os) {
        write_convergence_csv(os, {{static_cast<double>(cfg.nx), *r.errors, {}, {}, {}, r.wall_seconds}}, false);
      });
    const DiagnosticsRecord& first = r.history.front();
    const DiagnosticsRecord& last = r.history.back();
    std::ostringstream os;
    os.precision(6);
    os << "done: t=" << r.time << " steps=" << r.steps << " wall=" << r.wall_seconds << "s"
       << " field=" << r.timings.field_seconds << "s remap=" << r.timings.remap_seconds << "s"
       << "\n  mass deviation " << relative_mass_deviation(r.history, r.mass_scale) << ", energy deviation "
       << relative_deviation(last.energy, first.energy) << ", enstrophy deviation "
       << relative_deviation(last.enstrophy, first.enstrophy) << ", max theta " << r.max_theta;
    if (r.errors) os << "\n  errors L1 " << r.errors->l1 << " L2 " << r.errors->l2 << " Linf " << r.errors->linf;
    log(os.str());
    log.flush(out);
    return 0;
  } catch (const std::exception& e) {
    log(std::string("abort: ") + e.what());
    log.flush(out);
    return 2;
  }
}

int do_convergence(const RunConfig& cfg, const fs::path& out, const std::vector<int>& meshes,
                   const std::vector<double>& cfls) {
  Log log;
  log(describe(cfg));
  const bool temporal = !cfls.empty();
  std::vector<double> params(meshes.begin(), meshes.end());
  if (temporal) params = cfls;
  RunObserver obs;
  obs.log = [&](const std::string& s) { log(s); };
  try {
    const std::vector<ConvergenceRow> rows = convergence_suite(cfg, params, temporal, obs);
    std::ostringstream table;
    write_convergence_csv(table, rows, temporal);
    write_atomically(out / "errors.csv", [&](std::ostream& os) { os << table.str(); });
    std::cout << table.str();
    log.flush(out);
    return 0;
  } catch (const std::exception& e) {
    log(std::string("abort: ") + e.what());
    log.flush(out);
    return 2;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semi-Lagrangian DG solver for 2D incompressible Euler and guiding-center Vlasov"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key=value file; command-line flags override it");
  app.allow_config_extras(false);

  RunConfig cfg;
  std::string out = "out";
  std::string limiter = "none", solver = "fourier";
  double t_final = 0.0;

  app.add_option("--problem", cfg.problem, "Benchmark")
      ->check(CLI::IsMember({"accuracy", "kh", "vortex", "shear"}))
      ->capture_default_str();
  app.add_option("--nx", cfg.nx, "Cells in x")->check(CLI::Range(2, 100000))->capture_default_str();
  app.add_option("--ny", cfg.ny, "Cells in y (default: nx)")->check(CLI::Range(2, 100000));
  app.add_option("--degree", cfg.degree, "SLDG polynomial degree k")->check(CLI::Range(1, 2))->capture_default_str();
  app.add_flag("--qc,!--no-qc", cfg.qc, "Quadratic-curved upstream cells")->capture_default_str();
  app.add_option("--ldg-degree", cfg.ldg_degree, "LDG Poisson degree k_p")->check(CLI::Range(1, 3))->capture_default_str();
  app.add_option("--time-order", cfg.time_order, "Characteristics tracing order")
      ->check(CLI::Range(1, 3))
      ->capture_default_str();
  app.add_option("--cfl", cfg.cfl, "CFL number (initial value under --adaptive)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_flag("--adaptive", cfg.adaptive.enabled, "Adaptive time-step control");
  app.add_option("--cfl-max", cfg.adaptive.cfl_max, "CFL cap for adaptive control")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--delta-m", cfg.adaptive.delta_m, "Growth threshold on area deviation")->capture_default_str();
  app.add_option("--delta-M", cfg.adaptive.delta_M, "Shrink threshold on area deviation")->capture_default_str();
  app.add_option("--limiter", limiter, "Limiter")->check(CLI::IsMember({"none", "weno"}))->capture_default_str();
  app.add_option("--tvb-m", cfg.limiter.tvb_m, "TVB constant M of the troubled-cell detector")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  app.add_option("--tfinal", t_final, "Final time (default: the problem's)")->check(CLI::PositiveNumber);
  app.add_option("--out", out, "Output directory")->capture_default_str();
  app.add_option("--snap-every", cfg.snap_every, "Snapshot interval in time (0: final only)")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  app.add_option("--diag-every", cfg.diag_every, "Steps between diagnostics records")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--threads", cfg.threads, "OpenMP threads (0: runtime default)")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  app.add_option("--solver", solver, "Poisson linear solver")
      ->check(CLI::IsMember({"fourier", "direct", "cg"}))
      ->capture_default_str();

  CLI::App* run = app.add_subcommand("run", "Run one simulation");
  run->fallthrough();
  CLI::App* conv = app.add_subcommand("convergence", "Spatial or temporal convergence table");
  conv->fallthrough();
  std::vector<int> meshes{20, 40, 80};
  std::vector<double> cfls;
  conv->add_option("--meshes", meshes, "Mesh sizes (spatial study)")->delimiter(',')->capture_default_str();
  conv->add_option("--cfls", cfls, "CFL numbers at fixed mesh (temporal study)")->delimiter(',');

  CLI11_PARSE(app, argc, argv);

  if (t_final > 0.0) cfg.t_final = t_final;
  cfg.limiter.enabled = limiter == "weno";
  const std::map<std::string, SolverKind> kinds{
      {"fourier", SolverKind::fourier}, {"direct", SolverKind::direct}, {"cg", SolverKind::cg}};
  cfg.solver = kinds.at(solver);
  try {
    cfg.validate();
    fs::create_directories(out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  if (*run) return do_run(cfg, out);
  return do_convergence(cfg, out, meshes, cfls);
}
