#include "bte/planning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "bte/error.hpp"

namespace bte {

const char* to_string(Label l) {
  switch (l) {
    case Label::Target: return "target";
    case Label::Critical: return "critical";
    case Label::Normal: return "normal";
  }
  return "normal";
}

RegionMap label_regions(const std::vector<LabelShape>& shapes, const PhaseGrid& grid) {
  RegionMap map(grid.nodes(), Label::Normal);
  for (int i = 0; i < grid.nodes(); ++i)
    for (const LabelShape& s : shapes)
      if (s.shape.contains(grid.spatial.point(i))) {
        map[i] = s.label;
        break;
      }
  return map;
}

// ---------------------------------------------------------------- control space

ControlSpace::ControlSpace(const PlanningCase& pc)
    : grid_(pc.grid), mode_(pc.rx.mode), reduction_(pc.rx.reduction) {
  const PhaseGrid& g = *grid_;
  int nx = g.nodes(), nq = g.dirs(), nm = g.energies();
  double esum = 0, wsum = 0;
  for (double w : g.energy.weights) esum += w;
  for (double w : g.angular.weights) wsum += w;
  if (mode_ == PlanMode::External) {
    const BoundarySamples& bs = g.inflow;
    if (!pc.pair_mask.empty() && static_cast<int>(pc.pair_mask.size()) != bs.pairs())
      throw Error(ErrorKind::ShapeMismatch, "pair mask does not match the inflow samples");
    for (int j = 0; j < kSpecies; ++j)
      for (int p = 0; p < bs.pairs(); ++p)
        for (int m = 0; m < nm; ++m) {
          weights_.push_back(bs.weight[p] * g.energy.weights[m]);
          mask_.push_back(pc.species[j] && (pc.pair_mask.empty() || pc.pair_mask[p]));
        }
    return;
  }
  for (int j = 0; j < kSpecies; ++j)
    for (int i = 0; i < nx; ++i) {
      double wi = g.spatial.weight(i);
      switch (reduction_) {
        case ControlReduction::Full:
          for (int q = 0; q < nq; ++q)
            for (int m = 0; m < nm; ++m) weights_.push_back(wi * g.angular.weights[q] * g.energy.weights[m]);
          break;
        case ControlReduction::EnergyIndependent:
          for (int q = 0; q < nq; ++q) weights_.push_back(wi * g.angular.weights[q] * esum);
          break;
        case ControlReduction::EnergyAngleIndependent:
          weights_.push_back(wi * wsum * esum);
          break;
      }
    }
  std::size_t per_species = weights_.size() / kSpecies;
  for (int j = 0; j < kSpecies; ++j) mask_.insert(mask_.end(), per_species, pc.species[j]);
}

double ControlSpace::inner(const std::vector<double>& a, const std::vector<double>& b) const {
  double s = 0;
  for (std::size_t k = 0; k < weights_.size(); ++k) s += weights_[k] * a[k] * b[k];
  return s;
}

double ControlSpace::norm(const std::vector<double>& a) const { return std::sqrt(inner(a, a)); }

PhaseField ControlSpace::volume_source(const std::vector<double>& u) const {
  const PhaseGrid& g = *grid_;
  PhaseField f(g);
  if (mode_ == PlanMode::External) return f;
  int nx = g.nodes(), nq = g.dirs(), nm = g.energies();
  switch (reduction_) {
    case ControlReduction::Full:
      f.data() = u;
      break;
    case ControlReduction::EnergyIndependent:
      for (int j = 0; j < kSpecies; ++j)
        for (int i = 0; i < nx; ++i)
          for (int q = 0; q < nq; ++q)
            for (int m = 0; m < nm; ++m) f(j, i, q, m) = u[(static_cast<std::size_t>(j) * nx + i) * nq + q];
      break;
    case ControlReduction::EnergyAngleIndependent:
      for (int j = 0; j < kSpecies; ++j)
        for (int i = 0; i < nx; ++i)
          for (int q = 0; q < nq; ++q)
            for (int m = 0; m < nm; ++m) f(j, i, q, m) = u[static_cast<std::size_t>(j) * nx + i];
      break;
  }
  return f;
}

BoundaryField ControlSpace::boundary_source(const std::vector<double>& u) const {
  BoundaryField g(*grid_, Side::Inflow);
  if (mode_ == PlanMode::External) g.data() = u;
  return g;
}

std::vector<double> ControlSpace::restrict_adjoint(const AdjointSolution& adj) const {
  if (mode_ == PlanMode::External) return adj.inflow_trace.data();
  const PhaseGrid& g = *grid_;
  const PhaseField& ps = adj.psi_star;
  int nx = g.nodes(), nq = g.dirs(), nm = g.energies();
  double esum = 0, wsum = 0;
  for (double w : g.energy.weights) esum += w;
  for (double w : g.angular.weights) wsum += w;
  std::vector<double> r(size(), 0.0);
  switch (reduction_) {
    case ControlReduction::Full:
      r = ps.data();
      break;
    case ControlReduction::EnergyIndependent:
      for (int j = 0; j < kSpecies; ++j)
        for (int i = 0; i < nx; ++i)
          for (int q = 0; q < nq; ++q) {
            double s = 0;
            for (int m = 0; m < nm; ++m) s += g.energy.weights[m] * ps(j, i, q, m);
            r[(static_cast<std::size_t>(j) * nx + i) * nq + q] = s / esum;
          }
      break;
    case ControlReduction::EnergyAngleIndependent:
      for (int j = 0; j < kSpecies; ++j)
        for (int i = 0; i < nx; ++i) {
          double s = 0;
          for (int q = 0; q < nq; ++q)
            for (int m = 0; m < nm; ++m) s += g.angular.weights[q] * g.energy.weights[m] * ps(j, i, q, m);
          r[static_cast<std::size_t>(j) * nx + i] = s / (esum * wsum);
        }
      break;
  }
  return r;
}

void ControlSpace::project(std::vector<double>& u) const {
  for (std::size_t k = 0; k < u.size(); ++k) u[k] = mask_[k] ? std::max(0.0, u[k]) : 0.0;
}

// ---------------------------------------------------------------- objective

namespace {

double h_eps(double x, double eps) {
  if (x <= 0) return 0;
  if (x >= eps) return 1;
  return x / eps;
}

double h_eps_prime(double x, double eps) { return (x > 0 && x < eps) ? 1 / eps : 0; }

double powp(double x, int p) { return p == 1 ? std::abs(x) : x * x; }

enum class Kind { Tracking, Physical };

struct Evaluation {
  PhaseField psi;
  DoseMap dose;
  ObjectiveReport J;
  DoseMap residual;  // dJ/dD in the L2(G) metric, excluding c_sc and regularization
};

void check_case(const PlanningCase& pc) {
  if (!pc.grid) throw Error(ErrorKind::InvalidArgument, "planning case has no grid");
  if (static_cast<int>(pc.regions.size()) != pc.grid->nodes())
    throw Error(ErrorKind::ShapeMismatch, "region map does not match the grid");
  if (!(pc.rx.c > 0)) throw Error(ErrorKind::InvalidArgument, "regularization c must be positive");
}

Evaluation evaluate(const PlanningCase& pc, const ControlSpace& space, const std::vector<double>& u,
                    const PlanOptions& opts, Kind kind, bool with_dv) {
  const PhaseGrid& g = *pc.grid;
  Evaluation ev;
  PhaseField f = space.volume_source(u);
  BoundaryField b = space.boundary_source(u);
  ev.psi = solve_coupled(pc.xs, f, b, g, opts.solve).psi;
  ev.dose = compute_dose(ev.psi, pc.xs, g);
  const Prescription& rx = pc.rx;
  ev.residual.assign(g.nodes(), 0.0);
  if (kind == Kind::Tracking) {
    for (int i = 0; i < g.nodes(); ++i) {
      double w = g.spatial.weight(i), D = ev.dose[i];
      switch (pc.regions[i]) {
        case Label::Target:
          ev.J.J_T += w * (D - rx.track_target()) * (D - rx.track_target());
          ev.residual[i] = 2 * rx.c_t * (D - rx.track_target());
          break;
        case Label::Critical:
          ev.J.J_C += w * (D - rx.track_c) * (D - rx.track_c);
          ev.residual[i] = 2 * rx.c_c * (D - rx.track_c);
          break;
        case Label::Normal:
          ev.J.J_N += w * (D - rx.track_n) * (D - rx.track_n);
          ev.residual[i] = 2 * rx.c_n * (D - rx.track_n);
          break;
      }
    }
    ev.J.J_reg = space.inner(u, u);
    ev.J.total = rx.c_t * ev.J.J_T + rx.c_c * ev.J.J_C + rx.c_n * ev.J.J_N + rx.c * ev.J.J_reg;
    return ev;
  }
  Prescription r2 = rx;
  if (!with_dv) r2.c_dv = 0;
  ev.J = evaluate_objective(ev.dose, r2, pc.regions, 2, &u, &space, &ev.psi, g);
  double eps = rx.eps_value(), vol_c = 0, frac = 0;
  for (int i = 0; i < g.nodes(); ++i)
    if (pc.regions[i] == Label::Critical) {
      vol_c += g.spatial.weight(i);
      frac += g.spatial.weight(i) * h_eps(ev.dose[i] - rx.dv_dc, eps);
    }
  double excess = vol_c > 0 ? std::max(0.0, frac / vol_c - rx.dv_vc) : 0.0;
  for (int i = 0; i < g.nodes(); ++i) {
    double D = ev.dose[i];
    switch (pc.regions[i]) {
      case Label::Target:
        ev.residual[i] = 2 * rx.c_t * (D - rx.d0);
        break;
      case Label::Critical:
        ev.residual[i] = 2 * rx.c_c * std::max(0.0, D - rx.dcap_c);
        if (r2.c_dv > 0 && excess > 0) ev.residual[i] += r2.c_dv * 2 * excess * h_eps_prime(D - rx.dv_dc, eps) / vol_c;
        break;
      case Label::Normal:
        ev.residual[i] = 2 * rx.c_n * std::max(0.0, D - rx.dcap_n);
        break;
    }
  }
  return ev;
}

struct Gradient {
  std::vector<double> grad;
  AdjointSolution adj;
  std::vector<double> restricted;
};

Gradient gradient(const PlanningCase& pc, const ControlSpace& space, const std::vector<double>& u,
                  const Evaluation& ev, const PlanOptions& opts) {
  const PhaseGrid& g = *pc.grid;
  PhaseField h = dose_adjoint(ev.residual, pc.xs, g);
  if (pc.rx.c_sc > 0) h += (2 * pc.rx.c_sc) * ev.psi;
  h *= -0.5;
  Gradient gr;
  gr.adj = solve_adjoint(pc.xs, h, g, opts.solve);
  gr.restricted = space.restrict_adjoint(gr.adj);
  gr.grad.resize(u.size());
  for (std::size_t k = 0; k < u.size(); ++k)
    gr.grad[k] = space.mask()[k] ? -2 * gr.restricted[k] + 2 * pc.rx.c * u[k] : 0.0;
  return gr;
}

void kkt(const PlanningCase& pc, const std::vector<double>& u, const std::vector<double>& R,
         const std::vector<char>& mask, OptimalityResult& res) {
  double rmax = 0, umax = 0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    if (!mask[k]) continue;
    rmax = std::max(rmax, std::abs(R[k]));
    umax = std::max(umax, std::abs(u[k]));
  }
  double c = pc.rx.c;
  double tiny = std::numeric_limits<double>::min();
  double stat = 0, comp = 0, sign = 0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    if (!mask[k]) continue;
    double s = -R[k] + c * u[k];
    // fixed-point residual: covers stationarity where u > 0 and feasibility where u = 0
    stat = std::max(stat, std::abs(c * u[k] - std::max(0.0, R[k])));
    if (u[k] == 0) sign = std::max(sign, std::max(0.0, R[k]));
    comp = std::max(comp, std::abs(u[k] * s));
  }
  res.kkt_residual = std::max(stat, sign) / std::max(rmax, tiny);
  res.sign_residual = sign / std::max(rmax, tiny);
  res.complementarity_residual = comp / std::max(rmax * umax, tiny);
  if (rmax == 0) res.kkt_residual = res.sign_residual = res.complementarity_residual = 0;
}

OptimalityResult solve_initial(const PlanningCase& pc, const PlanOptions& opts) {
  check_case(pc);
  ControlSpace space(pc);
  std::vector<double> u(space.size(), 0.0);
  OptimalityResult res;
  double c = pc.rx.c, th = opts.theta;
  if (!(th > 0 && th <= 1)) throw Error(ErrorKind::InvalidArgument, "damping must lie in (0,1]");
  bool converged = false;
  for (int k = 1; k <= opts.max_fixed_point; ++k) {
    Evaluation ev = evaluate(pc, space, u, opts, Kind::Tracking, false);
    Gradient gr = gradient(pc, space, u, ev, opts);
    std::vector<double> next(u.size());
    for (std::size_t n = 0; n < u.size(); ++n) next[n] = gr.restricted[n] / c;
    space.project(next);
    for (std::size_t n = 0; n < u.size(); ++n) next[n] = (1 - th) * u[n] + th * next[n];
    std::vector<double> diff(u.size());
    for (std::size_t n = 0; n < u.size(); ++n) diff[n] = next[n] - u[n];
    double nn = space.norm(next);
    double update = nn > 0 ? space.norm(diff) / nn : 0.0;
    res.history.push_back(update);
    u = std::move(next);
    res.iterations = k;
    if (!std::isfinite(update)) break;
    if (update < opts.fixed_point_tol) {
      converged = true;
      break;
    }
  }
  if (!converged)
    throw Error(ErrorKind::NoConvergence,
                "optimality fixed point did not converge in " + std::to_string(res.iterations) +
                    " iterations (last update " + std::to_string(res.history.empty() ? 0.0 : res.history.back()) +
                    "); try a smaller damping theta or a larger c");
  Evaluation ev = evaluate(pc, space, u, opts, Kind::Tracking, false);
  Gradient gr = gradient(pc, space, u, ev, opts);
  kkt(pc, u, gr.restricted, space.mask(), res);
  res.control = std::move(u);
  res.psi = std::move(ev.psi);
  res.psi_star = std::move(gr.adj.psi_star);
  res.dose = std::move(ev.dose);
  res.objective = ev.J;
  res.status = "converged";
  return res;
}

}  // namespace

ObjectiveReport evaluate_objective(const DoseMap& dose, const Prescription& rx, const RegionMap& regions, int p,
                                   const std::vector<double>* control, const ControlSpace* space,
                                   const PhaseField* psi, const PhaseGrid& grid) {
  if (p != 1 && p != 2) throw Error(ErrorKind::BadExponent, "objective exponent must be 1 or 2");
  if (static_cast<int>(dose.size()) != grid.nodes() || static_cast<int>(regions.size()) != grid.nodes())
    throw Error(ErrorKind::ShapeMismatch, "dose or regions do not match the grid");
  ObjectiveReport J;
  double eps = rx.eps_value(), vol_c = 0, frac = 0;
  for (int i = 0; i < grid.nodes(); ++i) {
    double w = grid.spatial.weight(i), D = dose[i];
    switch (regions[i]) {
      case Label::Target:
        J.J_T += w * powp(rx.d0 - D, p);
        break;
      case Label::Critical:
        J.J_C += w * powp(std::max(0.0, D - rx.dcap_c), p);
        vol_c += w;
        frac += w * h_eps(D - rx.dv_dc, eps);
        break;
      case Label::Normal:
        J.J_N += w * powp(std::max(0.0, D - rx.dcap_n), p);
        break;
    }
  }
  if (vol_c > 0) J.J_DV = powp(std::max(0.0, frac / vol_c - rx.dv_vc), p);
  if (control && space) {
    for (std::size_t k = 0; k < control->size(); ++k) {
      double neg = std::max(0.0, -(*control)[k]);
      J.J_ad += space->weights()[k] * powp(neg, p);
      J.J_reg += space->weights()[k] * (*control)[k] * (*control)[k];
    }
  }
  if (psi) {
    if (p == 1) J.J_sc = integrate_phase(*psi, grid, 1);
    else J.J_sc = inner(*psi, *psi, grid);
  }
  J.total = rx.c_t * J.J_T + rx.c_c * J.J_C + rx.c_n * J.J_N + rx.c_dv * J.J_DV + rx.c_ad * J.J_ad +
            rx.c_sc * J.J_sc + rx.c * J.J_reg;
  return J;
}

GradientResult objective_gradient(const PlanningCase& pc, const std::vector<double>& u, const PlanOptions& opts,
                                  bool with_gradient) {
  check_case(pc);
  ControlSpace space(pc);
  if (u.size() != space.size()) throw Error(ErrorKind::ShapeMismatch, "control does not match the control space");
  Evaluation ev = evaluate(pc, space, u, opts, Kind::Physical, pc.rx.c_dv > 0);
  GradientResult out;
  out.objective = ev.J;
  if (with_gradient) {
    Gradient gr = gradient(pc, space, u, ev, opts);
    out.gradient = std::move(gr.grad);
    out.psi_star = std::move(gr.adj.psi_star);
  }
  out.psi = std::move(ev.psi);
  out.dose = std::move(ev.dose);
  return out;
}

double objective_value(const PlanningCase& pc, const std::vector<double>& u, const PlanOptions& opts) {
  return objective_gradient(pc, u, opts, false).objective.total;
}

OptimalityResult solve_initial_external(const PlanningCase& pc, const PlanOptions& opts) {
  if (pc.rx.mode != PlanMode::External) throw Error(ErrorKind::InvalidArgument, "case is not in external mode");
  return solve_initial(pc, opts);
}

OptimalityResult solve_initial_internal(const PlanningCase& pc, const PlanOptions& opts) {
  if (pc.rx.mode != PlanMode::Internal) throw Error(ErrorKind::InvalidArgument, "case is not in internal mode");
  return solve_initial(pc, opts);
}

namespace {

OptimalityResult projected_gradient_run(const PlanningCase& pc, const ControlSpace& space, std::vector<double> x,
                                        const PlanOptions& opts) {
  OptimalityResult res;
  space.project(x);
  GradientResult cur = objective_gradient(pc, x, opts);
  res.history.push_back(cur.objective.total);
  res.status = "max_iter";
  for (int it = 1; it <= opts.max_pg_iter; ++it) {
    const std::vector<double>& g = cur.gradient;
    std::vector<double> pg = x;
    for (std::size_t k = 0; k < x.size(); ++k) pg[k] -= g[k];
    space.project(pg);
    for (std::size_t k = 0; k < x.size(); ++k) pg[k] -= x[k];
    if (space.norm(pg) < 1e-5 * (1 + cur.objective.total)) {
      res.status = "converged";
      break;
    }
    double alpha = 1.0;
    bool accepted = false;
    while (alpha >= 1e-12) {
      std::vector<double> trial = x;
      for (std::size_t k = 0; k < x.size(); ++k) trial[k] -= alpha * g[k];
      space.project(trial);
      std::vector<double> step(x.size());
      for (std::size_t k = 0; k < x.size(); ++k) step[k] = trial[k] - x[k];
      double jt = objective_value(pc, trial, opts);
      if (jt <= cur.objective.total + 1e-4 * space.inner(g, step)) {
        x = std::move(trial);
        cur = objective_gradient(pc, x, opts);
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    res.iterations = it;
    if (!accepted) {
      if (it == 1) throw Error(ErrorKind::LineSearchStall, "Armijo backtracking fell below 1e-12 on the first step");
      res.status = "line_search_stall";
      break;
    }
    res.history.push_back(cur.objective.total);
  }
  res.control = std::move(x);
  res.objective = cur.objective;
  res.psi = std::move(cur.psi);
  res.psi_star = std::move(cur.psi_star);
  res.dose = std::move(cur.dose);
  return res;
}

}  // namespace

OptimalityResult optimize_projected_gradient(const PlanningCase& pc, const std::vector<double>& init, PlanPhase phase,
                                             const PlanOptions& opts) {
  check_case(pc);
  PlanningCase run = pc;
  if (phase == PlanPhase::Convex) run.rx.c_dv = 0;
  ControlSpace space(run);
  if (init.size() != space.size()) throw Error(ErrorKind::ShapeMismatch, "initial control does not match");
  OptimalityResult best = projected_gradient_run(run, space, init, opts);
  if (phase == PlanPhase::DoseVolume) {
    std::mt19937_64 rng(opts.seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    double scale = 0;
    for (double v : init) scale = std::max(scale, v);
    if (scale == 0) scale = 1;
    for (int s = 1; s < opts.multistart; ++s) {
      std::vector<double> start = init;
      for (std::size_t k = 0; k < start.size(); ++k) start[k] += 0.1 * scale * uni(rng);
      OptimalityResult r = projected_gradient_run(run, space, start, opts);
      if (r.objective.total < best.objective.total) best = std::move(r);
    }
  }
  return best;
}

}  // namespace bte
