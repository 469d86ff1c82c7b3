#include "commands.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include "bte/cross_sections.hpp"
#include "bte/csv_io.hpp"
#include "bte/dose.hpp"
#include "bte/error.hpp"
#include "bte/geometry.hpp"
#include "bte/mc.hpp"
#include "bte/parallel.hpp"
#include "bte/planning.hpp"
#include "bte/regularity.hpp"
#include "bte/scenario.hpp"
#include "bte/sources.hpp"
#include "bte/timedep.hpp"
#include "bte/transport.hpp"

namespace bte::cli {

namespace {

constexpr const char* kVersion = "0.1.0";

struct Run {
  std::string command;
  Scenario sc;
  std::string config_text;
  std::string config_path;
  std::filesystem::path out;
  std::vector<std::string> outputs;
  std::vector<std::pair<std::string, std::string>> extra;

  std::string file(const std::string& name) {
    outputs.push_back(name);
    return (out / name).string();
  }
};

int exit_code(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::ParseError:
    case ErrorKind::InvalidArgument:
    case ErrorKind::WrongConfiguration:
    case ErrorKind::BadExponent:
      return 2;
    default:
      return 1;
  }
}

void write_manifest(const Run& r, const std::string& status, double seconds) {
  std::vector<std::pair<std::string, std::string>> kv = {
      {"command", r.command},
      {"status", status},
      {"config", r.config_path},
      {"config_hash", hex64(fnv1a(r.config_text))},
      {"version", kVersion},
      {"compiler", __VERSION__},
      {"threads", std::to_string(thread_count())},
      {"seed", std::to_string(r.sc.run.seed)},
      {"tol", format_double(r.sc.solve.tol)},
      {"max_iter", std::to_string(r.sc.solve.max_iter)},
      {"wall_time_s", format_double(seconds)},
  };
  for (const auto& e : r.extra) kv.push_back(e);
  std::string outs;
  for (const std::string& o : r.outputs) outs += (outs.empty() ? "" : " ") + o;
  kv.push_back({"outputs", outs});
  write_key_values((r.out / "manifest.txt").string(), kv);
}

int guarded(const char* name, const Flags& f, bool need_config, const std::function<int(Run&)>& body) {
  auto t0 = std::chrono::steady_clock::now();
  Run r;
  r.command = name;
  try {
    if (!f.config.empty()) {
      std::ifstream in(f.config);
      if (!in) throw Error(ErrorKind::ParseError, f.config + ":0:0: cannot open file");
      std::stringstream ss;
      ss << in.rdbuf();
      r.config_text = ss.str();
      r.config_path = f.config;
      r.sc = parse_scenario(r.config_text, f.config);
    } else if (need_config) {
      throw Error(ErrorKind::InvalidArgument, "a scenario file is required");
    }
    if (f.threads) set_thread_count(*f.threads);
    else if (r.sc.run.threads > 0) set_thread_count(r.sc.run.threads);
    if (f.tol) r.sc.solve.tol = *f.tol;
    if (f.max_iter) r.sc.solve.max_iter = *f.max_iter;
    if (f.seed) r.sc.run.seed = *f.seed;
    if (f.particles) r.sc.run.particles = *f.particles;
    r.out = f.out ? *f.out : r.sc.run.out;
    std::filesystem::create_directories(r.out);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  int rc;
  std::string status;
  try {
    rc = body(r);
    status = rc == 0 ? "ok" : "failed";
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    rc = exit_code(e);
    status = std::string("error ") + to_string(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    rc = 1;
    status = "error";
  }
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  try {
    write_manifest(r, status, secs);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    if (rc == 0) rc = 1;
  }
  return rc;
}

void require_sources(const Scenario& sc) {
  if (sc.sources.empty()) throw Error(ErrorKind::ZeroSource, "the scenario defines no [source.*] section");
}

void write_iteration_log(const std::string& path, const IterationReport& rep) {
  std::ofstream out(path);
  out << "# iterations " << rep.iterations << " residual " << format_double(rep.residual) << " contraction "
      << format_double(rep.contraction) << (rep.contraction_guaranteed ? "" : " (not guaranteed)") << "\n";
  for (std::size_t k = 0; k < rep.updates.size(); ++k) out << k + 1 << " " << format_double(rep.updates[k]) << "\n";
}

// Max error against f (1 - exp(-S t)) / S when the scenario admits the closed form.
bool closed_form_error(const Scenario& sc, const PhaseField& psi, const PhaseGrid& grid, double& err) {
  if (sc.xs.has_kernel() || !sc.xs.uniform_totals() || !sc.sources.boundary.empty() || sc.sources.volume.empty())
    return false;
  std::array<double, kSpecies> f{};
  for (const VolumeSource& v : sc.sources.volume) {
    if (v.kind != VolumeSource::Kind::Constant || v.e_lo >= 0 || v.e_hi >= 0) return false;
    f[v.species] += v.amplitude;
  }
  err = 0;
  for (int j = 0; j < kSpecies; ++j) {
    double s = sc.xs.background.sigma_total(j);
    for (int i = 0; i < grid.nodes(); ++i)
      for (int q = 0; q < grid.dirs(); ++q) {
        double t = escape_time(grid.domain, grid.spatial.point(i), grid.angular.nodes[q]);
        double exact = s > 0 ? f[j] * (1 - std::exp(-s * t)) / s : f[j] * t;
        for (int m = 0; m < grid.energies(); ++m) err = std::max(err, std::abs(psi(j, i, q, m) - exact));
      }
  }
  return true;
}

Solution stationary(Run& r, const PhaseGrid& grid) {
  require_sources(r.sc);
  PhaseField f = discretize_volume(r.sc.sources.volume, grid);
  BoundaryField g = discretize_boundary(r.sc.sources.boundary, grid);
  Solution s = solve_coupled(r.sc.xs, f, g, grid, r.sc.solve);
  write_iteration_log(r.file("iterations.log"), s.report);
  std::cout << "source iteration: " << s.report.iterations << " iterations, residual "
            << format_double(s.report.residual) << "\n";
  return s;
}

PlanningCase planning_case(Run& r, const PhaseGrid& grid) {
  PlanningCase pc;
  pc.grid = &grid;
  pc.xs = r.sc.xs;
  pc.rx = r.sc.plan.rx;
  pc.species = r.sc.plan.species;
  pc.regions = r.sc.plan.labels_csv.empty() ? label_regions(r.sc.plan.labels, grid)
                                            : read_labels_csv(r.sc.plan.labels_csv, grid);
  write_labels_csv(r.file("labels.csv"), pc.regions, grid);
  return pc;
}

PlanOptions plan_options(const Scenario& sc) {
  PlanOptions o;
  o.solve = sc.solve;
  o.theta = sc.plan.theta;
  o.fixed_point_tol = sc.plan.fixed_point_tol;
  o.max_fixed_point = sc.plan.max_fixed_point;
  o.max_pg_iter = sc.plan.max_pg_iter;
  o.multistart = sc.plan.multistart;
  o.seed = sc.run.seed;
  return o;
}

std::vector<std::pair<std::string, std::string>> objective_kv(const OptimalityResult& res) {
  const ObjectiveReport& J = res.objective;
  return {{"J_T", format_double(J.J_T)},
          {"J_C", format_double(J.J_C)},
          {"J_N", format_double(J.J_N)},
          {"J_DV", format_double(J.J_DV)},
          {"J_ad", format_double(J.J_ad)},
          {"J_sc", format_double(J.J_sc)},
          {"J_reg", format_double(J.J_reg)},
          {"total", format_double(J.total)},
          {"iterations", std::to_string(res.iterations)},
          {"status", res.status},
          {"kkt_residual", format_double(res.kkt_residual)},
          {"complementarity_residual", format_double(res.complementarity_residual)},
          {"sign_residual", format_double(res.sign_residual)}};
}

void write_plan_outputs(Run& r, const PlanningCase& pc, const PhaseGrid& grid, const OptimalityResult& res) {
  ControlSpace space(pc);
  write_control_csv(r.file("control.csv"), res.control, space, grid);
  write_dose_csv(r.file("dose.csv"), res.dose, grid, true);
  write_key_values(r.file("objective.txt"), objective_kv(res));
}

}  // namespace

int cmd_validate_xs(const Flags& f) {
  return guarded("validate-xs", f, true, [](Run& r) {
    PhaseGrid grid = build_grid(r.sc);
    SubCriticalityReport rep = validate(r.sc.xs, grid);
    write_key_values(r.file("report.txt"), {{"c_row", format_double(rep.c_row)},
                                            {"c_col", format_double(rep.c_col)},
                                            {"C_row", format_double(rep.C_row)},
                                            {"C_col", format_double(rep.C_col)},
                                            {"satisfied", rep.satisfied ? "true" : "false"}});
    std::cout << "c_row = " << format_double(rep.c_row) << "\nc_col = " << format_double(rep.c_col)
              << "\nC_row = " << format_double(rep.C_row) << "\nC_col = " << format_double(rep.C_col)
              << "\nsatisfied = " << (rep.satisfied ? "true" : "false") << "\n";
    return rep.satisfied ? 0 : 1;
  });
}

int cmd_solve(const Flags& f) {
  return guarded("solve", f, true, [](Run& r) {
    PhaseGrid grid = build_grid(r.sc);
    Solution s = stationary(r, grid);
    write_flux_csv(r.file("flux.csv"), s.psi, grid);
    write_dose_csv(r.file("dose.csv"), compute_dose(s.psi, r.sc.xs, grid), grid);
    double err;
    if (closed_form_error(r.sc, s.psi, grid, err)) {
      std::cout << "closed-form max error = " << format_double(err) << "\n";
      r.extra.push_back({"closed_form_max_error", format_double(err)});
    } else {
      std::cout << "closed-form comparator: not applicable to this scenario\n";
    }
    return 0;
  });
}

int cmd_dose(const Flags& f) {
  return guarded("dose", f, true, [](Run& r) {
    PhaseGrid grid = build_grid(r.sc);
    Solution s = stationary(r, grid);
    DoseMap d = compute_dose(s.psi, r.sc.xs, grid);
    write_dose_csv(r.file("dose.csv"), d, grid, true);
    double mx = 0, total = 0;
    for (int i = 0; i < grid.nodes(); ++i) {
      mx = std::max(mx, d[i]);
      total += d[i] * grid.spatial.weight(i);
    }
    std::cout << "max dose = " << format_double(mx) << "\nintegrated dose = " << format_double(total) << "\n";
    return 0;
  });
}

int cmd_evolve(const Flags& f) {
  return guarded("evolve", f, true, [](Run& r) {
    require_sources(r.sc);
    PhaseGrid grid = build_grid(r.sc);
    const TimeSpec& ts = r.sc.time;
    SpeciesKinematics kin;
    kin.mass = ts.mass;
    TimeSource src;
    TimeBoundary bnd;
    src.profile = discretize_volume(r.sc.sources.volume, grid);
    src.amplitude = [ts](double t) { return profile_value(ts.source_profile, ts.source_tau, t); };
    src.rate = [ts](double t) { return profile_rate(ts.source_profile, ts.source_tau, t); };
    bnd.profile = discretize_boundary(r.sc.sources.boundary, grid);
    bnd.amplitude = [ts](double t) { return profile_value(ts.boundary_profile, ts.boundary_tau, t); };
    bnd.rate = [ts](double t) { return profile_rate(ts.boundary_profile, ts.boundary_tau, t); };
    EvolveOptions opts;
    opts.series_order = ts.series_order;
    opts.treatment = ts.treatment;
    opts.keep_every = ts.keep_every;
    opts.ray_step = r.sc.solve.ray_step;
    TimeGrid tg{ts.T, ts.steps};
    EvolveResult res = evolve(PhaseField(grid), r.sc.sources.volume.empty() ? nullptr : &src,
                              r.sc.sources.boundary.empty() ? nullptr : &bnd, tg, r.sc.xs, kin, grid, opts);
    for (const std::string& w : res.warnings) std::cerr << "warning: " << w << "\n";
    std::ofstream man(r.file("trajectory.txt"));
    man << "step,time,file\n";
    for (std::size_t k = 0; k < res.trajectory.size(); ++k) {
      char name[64];
      std::snprintf(name, sizeof name, "flux_%05zu.csv", k);
      write_flux_csv(r.file(name), res.trajectory[k], grid);
      man << k << "," << format_double(res.times[k]) << "," << name << "\n";
    }
    if (ts.keep_every == 1) {
      write_dose_csv(r.file("dose.csv"), accumulate_dose(res.trajectory, tg, r.sc.xs, grid), grid, true);
    } else {
      std::cout << "time-integrated dose skipped: keep_every > 1 drops trajectory samples\n";
    }
    std::cout << "evolved " << ts.steps << " steps to t = " << format_double(ts.T) << "; "
              << res.trajectory.size() << " snapshots written\n";
    return 0;
  });
}

int cmd_plan_init(const Flags& f) {
  return guarded("plan-init", f, true, [](Run& r) {
    PhaseGrid grid = build_grid(r.sc);
    PlanningCase pc = planning_case(r, grid);
    PlanOptions opts = plan_options(r.sc);
    OptimalityResult res = pc.rx.mode == PlanMode::External ? solve_initial_external(pc, opts)
                                                            : solve_initial_internal(pc, opts);
    write_plan_outputs(r, pc, grid, res);
    std::ofstream log(r.file("convergence.log"));
    log << "iteration,update\n";
    for (std::size_t k = 0; k < res.history.size(); ++k) log << k + 1 << "," << format_double(res.history[k]) << "\n";
    std::cout << "fixed point: " << res.iterations << " iterations, complementarity "
              << format_double(res.complementarity_residual) << ", objective " << format_double(res.objective.total)
              << "\n";
    return 0;
  });
}

int cmd_optimize(const Flags& f) {
  return guarded("optimize", f, true, [&f](Run& r) {
    PhaseGrid grid = build_grid(r.sc);
    PlanningCase pc = planning_case(r, grid);
    PlanOptions opts = plan_options(r.sc);
    OptimalityResult init = pc.rx.mode == PlanMode::External ? solve_initial_external(pc, opts)
                                                             : solve_initial_internal(pc, opts);
    std::ofstream log(r.file("convergence.log"));
    log << "phase,iteration,objective\n";
    for (std::size_t k = 0; k < init.history.size(); ++k)
      log << "init," << k + 1 << "," << format_double(init.history[k]) << "\n";
    OptimalityResult res = init;
    r.extra.push_back({"phase", f.phase});
    if (f.phase != "init") {
      res = optimize_projected_gradient(pc, init.control, PlanPhase::Convex, opts);
      for (std::size_t k = 0; k < res.history.size(); ++k)
        log << "convex," << k << "," << format_double(res.history[k]) << "\n";
      std::cout << "convex phase: " << res.iterations << " iterations, " << res.status << ", J = "
                << format_double(res.objective.total) << "\n";
    }
    if (f.phase == "dv") {
      if (pc.rx.c_dv == 0) std::cerr << "warning: rx.weights.dv is 0; the dose-volume phase repeats the convex one\n";
      res = optimize_projected_gradient(pc, res.control, PlanPhase::DoseVolume, opts);
      for (std::size_t k = 0; k < res.history.size(); ++k)
        log << "dv," << k << "," << format_double(res.history[k]) << "\n";
      std::cout << "dose-volume phase: " << res.iterations << " iterations, " << res.status << ", J = "
                << format_double(res.objective.total) << ", J_DV = " << format_double(res.objective.J_DV) << "\n";
    }
    write_plan_outputs(r, pc, grid, res);
    return 0;
  });
}

int cmd_probe_regularity(const Flags& f) {
  return guarded("probe-regularity", f, false, [&f](Run& r) {
    RegularityCase rc;
    rc.domain = r.sc.domain;
    rc.order = r.sc.probe.order;
    int p = f.p ? *f.p : r.sc.probe.p;
    std::vector<double> eps = default_margins(r.sc.probe.levels);
    std::vector<double> n = regularity_probe(p, eps, rc);
    write_table_csv(r.file("probe.csv"), "eps", "norm", eps, n);
    std::cout << "eps,norm\n";
    for (std::size_t k = 0; k < eps.size(); ++k) std::cout << format_double(eps[k]) << "," << format_double(n[k]) << "\n";
    RegularityVerdict v = classify_regularity(n, p);
    std::cout << "p = " << p << ": " << to_string(v) << " (final/first ratio " << format_double(n.back() / n.front())
              << ")\n";
    r.extra.push_back({"p", std::to_string(p)});
    r.extra.push_back({"verdict", to_string(v)});
    return 0;
  });
}

int cmd_oracle_mc(const Flags& f) {
  return guarded("oracle-mc", f, true, [](Run& r) {
    PhaseGrid grid = build_grid(r.sc);
    McResult res = mc_transport_dose(r.sc.xs, r.sc.sources, grid, r.sc.run.particles, r.sc.run.seed);
    write_mc_csv(r.file("mc.csv"), res, grid);
    r.extra.push_back({"particles", std::to_string(res.n_particles)});
    double mx = 0;
    for (double d : res.dose) mx = std::max(mx, d);
    std::cout << res.n_particles << " histories, seed " << res.seed << ", max dose " << format_double(mx) << "\n";
    return 0;
  });
}

}  // namespace bte::cli
