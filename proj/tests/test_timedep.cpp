#include <doctest.h>

#include <cmath>
#include <random>

#include "bte/error.hpp"
#include "bte/timedep.hpp"
#include "bte/transport.hpp"
#include "oracles.hpp"

using namespace bte;

namespace {

PhaseGrid ball_grid(int nx) { return build_phase_grid(Domain::ball({}, 1), nx, 4, 8, 2, 0.5, 1.5); }

double t_ball(const Vec3& x, const Vec3& w) {
  return oracle::exit_time_bisect([](const Vec3& p) { return oracle::in_ball(p, {}, 1); }, x, w, 2.0);
}

PhaseField positive_random(const PhaseGrid& g, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0, 1);
  PhaseField f(g);
  for (auto& v : f.data()) v = u(rng);
  return f;
}

}  // namespace

TEST_SUITE("timedep") {

TEST_CASE("speeds") {
  SpeciesKinematics kin;
  kin.mass = {1, 2, 0.5};
  CHECK(kin.speed(2.0, 0) == doctest::Approx(2.0));
  CHECK(kin.speed(2.0, 1) == doctest::Approx(std::sqrt(2.0)));
  CHECK(kin.speed(1.0, 2) == doctest::Approx(2.0));
  kin.mass[0] = 0;
  CHECK_THROWS_AS(kin.speed(1.0, 0), Error);
}

TEST_CASE("free streaming basics") {
  PhaseGrid g = ball_grid(8);
  SpeciesKinematics kin;
  std::mt19937_64 rng(1);
  PhaseField psi = positive_random(g, rng);
  CHECK(free_streaming_step(psi, 0.0, kin, g) == psi);
  CHECK_THROWS_AS(free_streaming_step(psi, -1.0, kin, g), Error);

  // every particle leaves once v dt exceeds the diameter
  PhaseField gone = free_streaming_step(psi, 10.0, kin, g);
  CHECK(integrate_phase(gone, g, 1) == 0);

  PhaseField s = free_streaming_step(psi, 0.05, kin, g);
  CHECK(min_value(s) >= 0);

  PhaseGrid g0 = build_phase_grid(Domain::ball({}, 1), 6, 2, 4, 2);
  CHECK_THROWS_AS(free_streaming_step(PhaseField(g0, 1.0), 0.1, kin, g0), Error);
}

TEST_CASE("free streaming translates affine data exactly away from the boundary") {
  PhaseGrid g = build_phase_grid(Domain::box({0, 0, 0}, {1, 1, 1}), 16, 2, 4, 2, 0.5, 1.5);
  SpeciesKinematics kin;
  Vec3 b{0.3, -0.7, 0.45};
  PhaseField psi(g);
  for (int j = 0; j < kSpecies; ++j)
    for (int i = 0; i < g.nodes(); ++i)
      for (int q = 0; q < g.dirs(); ++q)
        for (int m = 0; m < 2; ++m) psi(j, i, q, m) = 2 + dot(b, g.spatial.point(i));
  double dt = 0.07;
  PhaseField out = free_streaming_step(psi, dt, kin, g);
  double h = 1.0 / 16, worst = 0;
  int checked = 0;
  for (int i = 0; i < g.nodes(); ++i) {
    Vec3 x = g.spatial.point(i);
    for (int q = 0; q < g.dirs(); ++q)
      for (int m = 0; m < 2; ++m) {
        double s = kin.speed(g.energy.nodes[m], 0) * dt;
        Vec3 y = x - s * g.angular.nodes[q];
        if (std::min({y.x, y.y, y.z}) < h || std::max({y.x, y.y, y.z}) > 1 - h) continue;
        worst = std::max(worst, std::abs(out(0, i, q, m) - (2 + dot(b, y))));
        ++checked;
      }
  }
  CHECK(checked > 1000);
  CHECK(worst < 1e-12);
}

TEST_CASE("trotter step") {
  PhaseGrid g = ball_grid(8);
  SpeciesKinematics kin;
  double dt = 0.02;

  // pure absorber on a constant field: interior nodes decay by exp(-dt v sigma)
  CrossSections abs = CrossSections::uniform(2.0, 0.0);
  PhaseField one(g, 1.0);
  PhaseField a = trotter_step(one, dt, abs, kin, g, 8);
  for (int i = 0; i < g.nodes(); ++i) {
    if (norm(g.spatial.point(i)) > 0.6) continue;
    for (int m = 0; m < 2; ++m) {
      double v = kin.speed(g.energy.nodes[m], 1);
      CHECK(a(1, i, 3, m) == doctest::Approx(std::exp(-dt * v * 2.0)).epsilon(1e-12));
    }
  }

  CrossSections xs = CrossSections::uniform(0.5, 1.0);
  xs.background.transfer[0][1] = 0.3;
  std::mt19937_64 rng(2);
  PhaseField psi = positive_random(g, rng);
  PhaseField s8 = trotter_step(psi, dt, xs, kin, g, 8);
  PhaseField s12 = trotter_step(psi, dt, xs, kin, g, 12);
  CHECK(min_value(s8) >= 0);
  CHECK(integrate_phase(s12 - s8, g, 1) < 1e-10 * integrate_phase(s8, g, 1));
  // mass never grows: absorption and leakage only
  CHECK(integrate_phase(s8, g, 1) <= integrate_phase(psi, g, 1));

  CHECK_THROWS_AS(trotter_step(psi, 1.0, xs, kin, g, 2), Error);
  CHECK_THROWS_AS(trotter_step(psi, 0.0, xs, kin, g, 8), Error);
  CHECK_THROWS_AS(trotter_step(psi, dt, xs, kin, g, 0), Error);
}

TEST_CASE("evolve without data stays zero") {
  PhaseGrid g = ball_grid(6);
  TimeGrid tg{1.0, 5};
  EvolveResult r = evolve(PhaseField(g), nullptr, nullptr, tg, CrossSections::uniform(1, 0.5), {}, g);
  REQUIRE(r.trajectory.size() == 6);
  for (const PhaseField& p : r.trajectory) CHECK(integrate_phase(p, g, 1) == 0);
  CHECK(r.times.back() == doctest::Approx(1.0));
  CHECK(r.stream_mass_change.size() == 5);

  EvolveOptions o;
  o.keep_every = 2;
  EvolveResult k = evolve(PhaseField(g), nullptr, nullptr, tg, CrossSections::uniform(1, 0.5), {}, g, o);
  CHECK(k.times == std::vector<double>{0.0, 0.4, 0.8, 1.0});

  CHECK_THROWS_AS(evolve(PhaseField(g), nullptr, nullptr, TimeGrid{0.0, 5}, CrossSections::uniform(1, 0), {}, g),
                  Error);
  PhaseGrid g0 = build_phase_grid(Domain::ball({}, 1), 6, 2, 4, 2);
  CHECK_THROWS_AS(evolve(PhaseField(g0), nullptr, nullptr, tg, CrossSections::uniform(1, 0), {}, g0), Error);
}

TEST_CASE("explicit boundary solution") {
  PhaseGrid g = ball_grid(10);
  SpeciesKinematics kin;
  CrossSections xs = CrossSections::uniform(0.8, 0.0);
  TimeBoundary b;
  b.profile = BoundaryField(g, Side::Inflow, 1.0);
  CHECK(integrate_phase(explicit_boundary_solution(b, 0.0, kin, xs, g), g, 1) == 0);

  // long after switch-on the solution is stationary
  PhaseField late = explicit_boundary_solution(b, 100.0, kin, xs, g);
  PhaseField stat = sweep_attenuated(xs, PhaseField(g), b.profile, g);
  CHECK(integrate_phase(late - stat, g, 1) < 1e-12 * integrate_phase(stat, g, 1));

  // linear ramp: psi = (t - tau/v) exp(-sigma tau) after arrival
  b.amplitude = [](double t) { return t; };
  double t = 0.9;
  PhaseField ramp = explicit_boundary_solution(b, t, kin, xs, g);
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> pick_i(0, g.nodes() - 1), pick_q(0, g.dirs() - 1);
  for (int k = 0; k < 100; ++k) {
    int i = pick_i(rng), q = pick_q(rng), m = k % 2, j = k % 3;
    double tau = t_ball(g.spatial.point(i), g.angular.nodes[q]);
    double v = kin.speed(g.energy.nodes[m], j);
    double expect = tau / v < t ? (t - tau / v) * std::exp(-0.8 * tau) : 0.0;
    CHECK(ramp(j, i, q, m) == doctest::Approx(expect).epsilon(1e-9));
  }

  CHECK_THROWS_AS(explicit_boundary_solution(b, t, kin, CrossSections::uniform(0.8, 0.1), g), Error);
}

TEST_CASE("retarded evolve reproduces the explicit solution without a kernel") {
  PhaseGrid g = ball_grid(8);
  SpeciesKinematics kin;
  CrossSections xs = CrossSections::uniform(0.8, 0.0);
  TimeBoundary b;
  b.profile = BoundaryField(g, Side::Inflow, 1.0);
  b.amplitude = [](double t) { return std::sin(3 * t) + 1; };
  TimeGrid tg{1.0, 8};
  EvolveResult r = evolve(PhaseField(g), nullptr, &b, tg, xs, kin, g);
  CHECK(r.warnings.size() == 1);
  for (std::size_t k = 1; k < r.trajectory.size(); ++k) {
    PhaseField e = explicit_boundary_solution(b, r.times[k], kin, xs, g);
    CHECK(integrate_phase(r.trajectory[k] - e, g, 1) < 1e-12 * integrate_phase(e, g, 1));
  }
}

TEST_CASE("evolve stays nonnegative with a kernel") {
  PhaseGrid g = ball_grid(6);
  SpeciesKinematics kin;
  CrossSections xs = CrossSections::uniform(0.4, 0.8);
  xs.background.transfer[0][2] = 0.2;
  std::mt19937_64 rng(4);
  TimeSource f;
  f.profile = positive_random(g, rng);
  TimeBoundary b;
  b.profile = BoundaryField(g, Side::Inflow, 1.0);
  EvolveResult r = evolve(PhaseField(g), &f, &b, TimeGrid{1.0, 10}, xs, kin, g);
  for (const PhaseField& p : r.trajectory) CHECK(min_value(p) >= 0);
  CHECK(integrate_phase(r.trajectory.back(), g, 1) > 0);
}

TEST_CASE("source rate") {
  TimeSource f;
  f.amplitude = [](double t) { return t * t; };
  CHECK(f.rate_at(1.5) == doctest::Approx(3.0).epsilon(1e-6));
  f.rate = [](double) { return 7.0; };
  CHECK(f.rate_at(1.5) == 7.0);
}

}
