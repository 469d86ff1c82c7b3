#include <doctest.h>

#include <cmath>
#include <random>

#include "bte/error.hpp"
#include "bte/planning.hpp"

using namespace bte;

namespace {

struct Setup {
  PhaseGrid grid;
  PlanningCase pc;
};

Setup make_setup(PlanMode mode, int nx = 6) {
  Setup s{build_phase_grid(Domain::ball({}, 1), nx, 2, 4, 2), {}};
  s.pc.xs = CrossSections::uniform(0.5, 0.5);
  std::vector<LabelShape> shapes(2);
  shapes[0].shape.radius = 0.4;
  shapes[1].shape.center = {0, 0.65, 0};
  shapes[1].shape.radius = 0.3;
  shapes[1].label = Label::Critical;
  s.pc.rx.mode = mode;
  s.pc.rx.c = 1e-2;
  s.pc.rx.dcap_c = 0.3;
  s.pc.rx.dcap_n = 0.5;
  return s;
}

void bind(Setup& s) {
  s.pc.grid = &s.grid;
  std::vector<LabelShape> shapes(2);
  shapes[0].shape.radius = 0.4;
  shapes[1].shape.center = {0, 0.65, 0};
  shapes[1].shape.radius = 0.3;
  shapes[1].label = Label::Critical;
  s.pc.regions = label_regions(shapes, s.grid);
}

PlanOptions tight() {
  PlanOptions o;
  o.solve.tol = 1e-13;
  o.solve.max_iter = 2000;
  return o;
}

std::vector<double> random_control(const ControlSpace& sp, std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> u(0, scale);
  std::vector<double> x(sp.size());
  for (auto& v : x) v = u(rng);
  sp.project(x);
  return x;
}

double volume(const PhaseGrid& g, const RegionMap& r, Label l) {
  double v = 0;
  for (int i = 0; i < g.nodes(); ++i)
    if (r[i] == l) v += g.spatial.weight(i);
  return v;
}

}  // namespace

TEST_SUITE("planning") {

TEST_CASE("objective examples") {
  Setup s = make_setup(PlanMode::External);
  bind(s);
  const PhaseGrid& g = s.grid;
  Prescription rx = s.pc.rx;
  rx.dv_dc = 0.4;
  rx.c_dv = 1;
  RegionMap& reg = s.pc.regions;

  DoseMap d(g.nodes());
  for (int i = 0; i < g.nodes(); ++i) d[i] = reg[i] == Label::Target ? rx.d0 : 0.1;
  ObjectiveReport z = evaluate_objective(d, rx, reg, 2, nullptr, nullptr, nullptr, g);
  CHECK(z.J_T == 0);
  CHECK(z.J_C == 0);
  CHECK(z.J_N == 0);
  CHECK(z.J_DV == 0);
  CHECK(z.total == 0);

  DoseMap over(g.nodes(), rx.dcap_c + 1);
  ObjectiveReport c = evaluate_objective(over, rx, reg, 2, nullptr, nullptr, nullptr, g);
  CHECK(c.J_C == doctest::Approx(volume(g, reg, Label::Critical)).epsilon(1e-12));

  CHECK(evaluate_objective(DoseMap(g.nodes(), 0.0), rx, reg, 2, nullptr, nullptr, nullptr, g).J_DV == 0);

  DoseMap sat(g.nodes(), rx.dv_dc + 2 * rx.eps_value());
  rx.dv_vc = 0.2;
  CHECK(evaluate_objective(sat, rx, reg, 2, nullptr, nullptr, nullptr, g).J_DV == doctest::Approx(0.64));
  CHECK(evaluate_objective(sat, rx, reg, 1, nullptr, nullptr, nullptr, g).J_DV == doctest::Approx(0.8));

  CHECK_THROWS_AS(evaluate_objective(sat, rx, reg, 3, nullptr, nullptr, nullptr, g), Error);
  CHECK_THROWS_AS(evaluate_objective(DoseMap(3), rx, reg, 2, nullptr, nullptr, nullptr, g), Error);

  // admissibility and regularization terms from a control
  ControlSpace sp(s.pc);
  std::vector<double> u(sp.size(), 0.0);
  u[0] = -2;
  u[1] = 3;
  ObjectiveReport a = evaluate_objective(d, rx, reg, 2, &u, &sp, nullptr, g);
  CHECK(a.J_ad == doctest::Approx(4 * sp.weights()[0]));
  CHECK(a.J_reg == doctest::Approx(4 * sp.weights()[0] + 9 * sp.weights()[1]));
}

TEST_CASE("gradient against central differences") {
  for (PlanMode mode : {PlanMode::External, PlanMode::Internal}) {
    Setup s = make_setup(mode, 5);
    bind(s);
    if (mode == PlanMode::Internal) s.pc.rx.reduction = ControlReduction::EnergyIndependent;
    s.pc.xs.background.transfer[0][1] = 0.2;
    s.pc.rx.c_sc = 0.01;
    PlanOptions o = tight();
    ControlSpace sp(s.pc);
    std::mt19937_64 rng(1);
    std::vector<double> u = random_control(sp, rng, mode == PlanMode::External ? 1.0 : 0.5);
    GradientResult gr = objective_gradient(s.pc, u, o);
    double worst = 0;
    for (int k = 0; k < 20; ++k) {
      std::vector<double> d = random_control(sp, rng, 1.0), up = u, um = u;
      double h = 1e-4;
      for (std::size_t n = 0; n < u.size(); ++n) {
        up[n] += h * d[n];
        um[n] -= h * d[n];
      }
      double fd = (objective_value(s.pc, up, o) - objective_value(s.pc, um, o)) / (2 * h);
      double ad = sp.inner(gr.gradient, d);
      worst = std::max(worst, std::abs(fd - ad) / std::abs(fd));
    }
    CHECK(worst < 1e-4);
  }
}

TEST_CASE("regularization part of the gradient is linear in c") {
  Setup s = make_setup(PlanMode::External, 5);
  bind(s);
  ControlSpace sp(s.pc);
  std::mt19937_64 rng(2);
  std::vector<double> u = random_control(sp, rng, 1.0);
  PlanOptions o = tight();
  std::vector<double> g1 = objective_gradient(s.pc, u, o).gradient;
  s.pc.rx.c *= 2;
  std::vector<double> g2 = objective_gradient(s.pc, u, o).gradient;
  double worst = 0;
  for (std::size_t k = 0; k < u.size(); ++k) worst = std::max(worst, std::abs(g2[k] - g1[k] - 2 * 1e-2 * u[k]));
  CHECK(worst < 1e-12);
}

TEST_CASE("initial problem: zero targets give zero control") {
  for (PlanMode mode : {PlanMode::External, PlanMode::Internal}) {
    Setup s = make_setup(mode, 5);
    bind(s);
    s.pc.rx.track_t = 0;
    OptimalityResult r =
        mode == PlanMode::External ? solve_initial_external(s.pc) : solve_initial_internal(s.pc);
    for (double v : r.control) CHECK(v == 0);
    CHECK(integrate_phase(r.psi, s.grid, 1) == 0);
  }
  Setup s = make_setup(PlanMode::External, 5);
  bind(s);
  CHECK_THROWS_AS(solve_initial_internal(s.pc), Error);
  s.pc.rx.c = 0;
  CHECK_THROWS_AS(solve_initial_external(s.pc), Error);
}

// the damped fixed point contracts when theta (1 + lambda_max / c) < 2, lambda_max = ||D S||^2 (about 50 here)
TEST_CASE("initial problem: optimality conditions") {
  Setup s = make_setup(PlanMode::External);
  bind(s);
  s.pc.rx.c = 20;
  PlanOptions o = tight();
  o.fixed_point_tol = 1e-9;
  OptimalityResult r = solve_initial_external(s.pc, o);
  CHECK(r.status == "converged");
  CHECK(r.complementarity_residual < 1e-6);
  CHECK(r.sign_residual < 1e-6);
  CHECK(r.kkt_residual < 1e-6);
  for (double v : r.control) CHECK(v >= 0);
  ControlSpace sp(s.pc);
  double n1 = sp.norm(r.control);
  CHECK(n1 > 0);

  s.pc.rx.c *= 2;
  OptimalityResult r2 = solve_initial_external(s.pc, o);
  CHECK(r2.complementarity_residual < 1e-6);
  CHECK(sp.norm(r2.control) < n1);
}

TEST_CASE("internal reductions collapse on an energy-symmetric case") {
  Setup s = make_setup(PlanMode::Internal, 5);
  bind(s);
  s.pc.rx.c = 20;
  PlanOptions o = tight();
  o.fixed_point_tol = 1e-10;
  OptimalityResult full = solve_initial_internal(s.pc, o);
  s.pc.rx.reduction = ControlReduction::EnergyIndependent;
  OptimalityResult red = solve_initial_internal(s.pc, o);
  CHECK(red.control.size() * s.grid.energies() == full.control.size());
  CHECK(red.objective.total == doctest::Approx(full.objective.total).epsilon(1e-6));
  CHECK(integrate_phase(red.psi - full.psi, s.grid, 1) < 1e-6 * integrate_phase(full.psi, s.grid, 1));
  CHECK(full.complementarity_residual < 1e-6);

  s.pc.rx.reduction = ControlReduction::EnergyAngleIndependent;
  OptimalityResult iso = solve_initial_internal(s.pc, o);
  CHECK(iso.control.size() == static_cast<std::size_t>(kSpecies * s.grid.nodes()));
  CHECK(iso.complementarity_residual < 1e-6);
}

TEST_CASE("convexity midpoint probe") {
  Setup s = make_setup(PlanMode::External, 5);
  bind(s);
  ControlSpace sp(s.pc);
  PlanOptions o = tight();
  std::mt19937_64 rng(3);
  for (int k = 0; k < 20; ++k) {
    std::vector<double> a = random_control(sp, rng, 2.0), b = random_control(sp, rng, 2.0), m(a.size());
    for (std::size_t n = 0; n < a.size(); ++n) m[n] = 0.5 * (a[n] + b[n]);
    double ja = objective_value(s.pc, a, o), jb = objective_value(s.pc, b, o), jm = objective_value(s.pc, m, o);
    CHECK(jm <= 0.5 * (ja + jb) + 1e-10);
  }
}

TEST_CASE("dose-volume term is Lipschitz") {
  Setup s = make_setup(PlanMode::External, 5);
  bind(s);
  const PhaseGrid& g = s.grid;
  ControlSpace sp(s.pc);
  PlanOptions o = tight();
  std::mt19937_64 rng(4);
  // threshold at the mean critical dose of a base control so the smoothed step is active
  std::vector<double> base = random_control(sp, rng, 1.0);
  DoseMap d0 = objective_gradient(s.pc, base, o, false).dose;
  double mean = 0, vc = volume(g, s.pc.regions, Label::Critical);
  for (int i = 0; i < g.nodes(); ++i)
    if (s.pc.regions[i] == Label::Critical) mean += g.spatial.weight(i) * d0[i] / vc;
  s.pc.rx.c_dv = 1;
  s.pc.rx.dv_dc = mean;
  s.pc.rx.dv_vc = 0.1;
  s.pc.rx.eps = 0.5 * mean;
  double eps = s.pc.rx.eps_value();
  double lmax = 0;
  for (int k = 0; k < 50; ++k) {
    std::vector<double> a = random_control(sp, rng, 0.1), b = a;
    for (std::size_t n = 0; n < a.size(); ++n) a[n] += base[n];
    std::vector<double> d = random_control(sp, rng, 0.05);
    b = a;
    for (std::size_t n = 0; n < b.size(); ++n) b[n] += d[n];
    GradientResult ra = objective_gradient(s.pc, a, o, false), rb = objective_gradient(s.pc, b, o, false);
    double dd = 0;
    for (int i = 0; i < g.nodes(); ++i)
      if (s.pc.regions[i] == Label::Critical)
        dd += g.spatial.weight(i) * (ra.dose[i] - rb.dose[i]) * (ra.dose[i] - rb.dose[i]);
    // |a^2 - b^2| <= 2|a - b| on [0,1] and |dH| <= |dD| / eps
    double diff = std::abs(ra.objective.J_DV - rb.objective.J_DV);
    CHECK(diff <= 2 / (eps * std::sqrt(vc)) * std::sqrt(dd) * (1 + 1e-9));
    lmax = std::max(lmax, diff / sp.norm(d));
  }
  MESSAGE("empirical Lipschitz constant " << lmax);
  CHECK(lmax > 0);
  CHECK(std::isfinite(lmax));
}

TEST_CASE("projected gradient") {
  Setup s = make_setup(PlanMode::External, 5);
  bind(s);
  s.pc.rx.c = 5;
  PlanOptions o = tight();
  std::vector<double> zero(ControlSpace(s.pc).size(), 0.0);
  OptimalityResult p2 = optimize_projected_gradient(s.pc, zero, PlanPhase::Convex, o);
  CHECK(p2.status == "converged");
  for (std::size_t k = 1; k < p2.history.size(); ++k) CHECK(p2.history[k] <= p2.history[k - 1]);
  for (double v : p2.control) CHECK(v >= 0);
  CHECK(p2.history.back() <= p2.history.front());

  OptimalityResult again = optimize_projected_gradient(s.pc, p2.control, PlanPhase::Convex, o);
  CHECK(again.iterations <= 2);
  CHECK(again.objective.total <= p2.objective.total + 1e-12);

  s.pc.rx.c_dv = 1;
  s.pc.rx.dv_dc = 0.1;
  s.pc.rx.dv_vc = 0.05;
  o.multistart = 2;
  OptimalityResult p3 = optimize_projected_gradient(s.pc, p2.control, PlanPhase::DoseVolume, o);
  for (std::size_t k = 1; k < p3.history.size(); ++k) CHECK(p3.history[k] <= p3.history[k - 1]);
  CHECK(p3.objective.total <= objective_value(s.pc, p2.control, o) + 1e-12);

  CHECK_THROWS_AS(optimize_projected_gradient(s.pc, {1.0}, PlanPhase::Convex, o), Error);
}

TEST_CASE("labels and control space") {
  Setup s = make_setup(PlanMode::External, 6);
  bind(s);
  const PhaseGrid& g = s.grid;
  for (int i = 0; i < g.nodes(); ++i) {
    Vec3 x = g.spatial.point(i);
    Label want = norm(x) < 0.4 ? Label::Target : norm(x - Vec3{0, 0.65, 0}) < 0.3 ? Label::Critical : Label::Normal;
    CHECK(s.pc.regions[i] == want);
  }
  CHECK(std::string(to_string(Label::Critical)) == "critical");

  s.pc.species = {true, false, true};
  ControlSpace sp(s.pc);
  CHECK(sp.size() == static_cast<std::size_t>(kSpecies * g.inflow.pairs() * g.energies()));
  std::vector<double> u(sp.size(), -1.0);
  u[sp.size() / 2] = 2.0;
  sp.project(u);
  for (std::size_t k = 0; k < u.size(); ++k) CHECK(u[k] == (k == sp.size() / 2 && sp.mask()[k] ? 2.0 : 0.0));
  s.pc.pair_mask = {1, 0};
  CHECK_THROWS_AS(ControlSpace{s.pc}, Error);
}

}
