#include <doctest.h>

#include <cmath>
#include <random>

#include "bte/discretization.hpp"
#include "bte/error.hpp"
#include "oracles.hpp"

using namespace bte;

TEST_SUITE("discretization") {

TEST_CASE("angular rule weights, symmetry and antipodes") {
  AngularQuadrature aq = AngularQuadrature::product(4, 8);
  double s = 0;
  for (double w : aq.weights) s += w;
  CHECK(std::abs(s - 4 * M_PI) < 1e-10);
  CHECK(aq.antipodally_closed());
  for (int a = 0; a < aq.size(); ++a) {
    CHECK(std::abs(norm(aq.nodes[a]) - 1) < 1e-14);
    CHECK(norm(aq.nodes[a] + aq.nodes[aq.antipode[a]]) < 1e-12);
    for (int b = a + 1; b < aq.size(); ++b) CHECK(norm(aq.nodes[a] - aq.nodes[b]) > 1e-6);
  }
  CHECK_FALSE(AngularQuadrature::product(4, 7).antipodally_closed());
}

TEST_CASE("angular rule integrates low-degree harmonics") {
  // zonal P_l(z) and sectoral x^a y^b z^c moments against closed forms
  AngularQuadrature aq = AngularQuadrature::product(4, 8);
  for (int l = 0; l <= 5; ++l) {
    double s = 0;
    for (int q = 0; q < aq.size(); ++q) s += aq.weights[q] * oracle::legendre(l, aq.nodes[q].z);
    CHECK(std::abs(s - (l == 0 ? 4 * M_PI : 0.0)) < 1e-9);
  }
  // int x^2 = 4pi/3, int x^2 y^2 = 4pi/15, int x^4 = 4pi/5, int x z = 0, int x^2 z^2 = 4pi/15
  auto moment = [&](auto f) {
    double s = 0;
    for (int q = 0; q < aq.size(); ++q) s += aq.weights[q] * f(aq.nodes[q]);
    return s;
  };
  CHECK(moment([](const Vec3& w) { return w.x * w.x; }) == doctest::Approx(4 * M_PI / 3).epsilon(1e-12));
  CHECK(moment([](const Vec3& w) { return w.x * w.x * w.y * w.y; }) == doctest::Approx(4 * M_PI / 15).epsilon(1e-12));
  CHECK(moment([](const Vec3& w) { return w.x * w.x * w.z * w.z; }) == doctest::Approx(4 * M_PI / 15).epsilon(1e-12));
  CHECK(moment([](const Vec3& w) { return std::pow(w.x, 4); }) == doctest::Approx(4 * M_PI / 5).epsilon(1e-12));
  CHECK(std::abs(moment([](const Vec3& w) { return w.x * w.z + w.y; })) < 1e-12);
}

TEST_CASE("energy rule exact to degree 2n-1") {
  EnergyGrid e = EnergyGrid::gauss(0.5, 2.0, 3);
  double s = 0;
  for (double w : e.weights) s += w;
  CHECK(std::abs(s - 1.5) < 1e-12);
  for (int k = 1; k < e.size(); ++k) CHECK(e.nodes[k] > e.nodes[k - 1]);
  for (int d = 0; d <= 5; ++d) {
    double q = 0;
    for (int m = 0; m < e.size(); ++m) q += e.weights[m] * std::pow(e.nodes[m], d);
    double exact = (std::pow(2.0, d + 1) - std::pow(0.5, d + 1)) / (d + 1);
    CHECK(std::abs(q - exact) < 1e-12 * std::max(1.0, exact));
  }
  CHECK_THROWS_AS(EnergyGrid::gauss(1.0, 0.5, 2), Error);
}

TEST_CASE("phase grid construction") {
  PhaseGrid g = build_phase_grid(Domain::ball({}, 1), 8, 4, 8, 2);
  CHECK(g.nodes() > 0);
  for (int i = 0; i < g.nodes(); ++i) CHECK(norm(g.spatial.point(i)) < 1);
  CHECK(g.nodes() * g.spatial.cell_volume() <= 8.0);
  for (int p = 0; p < g.inflow.pairs(); ++p) {
    CHECK(dot(g.angular.nodes[g.inflow.direction[p]], g.surface.normal(g.inflow.surface[p])) < 0);
    CHECK(g.inflow.weight[p] > 0);
  }
  CHECK_THROWS_AS(build_phase_grid(Domain::ball({}, 1), 1, 4, 8, 2), Error);
  CHECK_THROWS_AS(build_phase_grid(Domain::ball({}, 1), 8, 4, 8, 1), Error);
}

TEST_CASE("inflow measure of the ball") {
  // int over Gamma_- of |w.n| = 4 pi r^2 * pi * |I|
  double r = 0.7;
  PhaseGrid g = build_phase_grid(Domain::ball({}, r), 8, 8, 16, 2, 0.0, 2.0);
  BoundaryField one(g, Side::Inflow, 0.0);
  for (int p = 0; p < one.pairs(); ++p)
    for (int m = 0; m < one.energies(); ++m) one(0, p, m) = 1;
  double exact = 4 * M_PI * r * r * M_PI * 2.0;
  CHECK(std::abs(boundary_norm(one, g) - exact) / exact < 0.01);
}

TEST_CASE("inflow measure of the box") {
  PhaseGrid g = build_phase_grid(Domain::box({0, 0, 0}, {1, 2, 1}), 8, 8, 16, 2);
  BoundaryField one(g, Side::Inflow, 0.0);
  for (int p = 0; p < one.pairs(); ++p) one(1, p, 0) = one(1, p, 1) = 1;
  double area = 2 * (2 + 1 + 2);
  double exact = area * M_PI * 1.0;
  CHECK(std::abs(boundary_norm(one, g) - exact) / exact < 0.01);
}

TEST_CASE("integrate_phase") {
  PhaseGrid g = build_phase_grid(Domain::box({0, 0, 0}, {1, 1, 2}), 6, 4, 8, 2, 0.0, 3.0);
  PhaseField f(g, 0.0);
  for (std::size_t k = 0; k < f.size() / 3; ++k) f.data()[k] = 1;  // species 0
  CHECK(integrate_phase(f, g, 1) == doctest::Approx(2.0 * 4 * M_PI * 3.0).epsilon(1e-12));
  CHECK(integrate_phase(PhaseField(g), g, 1) == 0);
  CHECK_THROWS_AS(integrate_phase(f, g, 4), Error);

  // ball volume is approached by the clipped lattice
  PhaseGrid b = build_phase_grid(Domain::ball({}, 1), 32, 2, 4, 2);
  PhaseField one(b, 0.0);
  for (int i = 0; i < b.nodes(); ++i)
    for (int q = 0; q < b.dirs(); ++q)
      for (int m = 0; m < 2; ++m) one(0, i, q, m) = 1;
  CHECK(std::abs(integrate_phase(one, b, 1) / (4.0 / 3 * M_PI * 4 * M_PI) - 1) < 0.02);

  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0, 1);
  PhaseField a(g), c(g);
  for (auto& v : a.data()) v = n(rng);
  for (auto& v : c.data()) v = n(rng);
  for (int p = 1; p <= 3; ++p) {
    CHECK(integrate_phase(a, g, p) >= 0);
    CHECK(integrate_phase(a + c, g, p) <= integrate_phase(a, g, p) + integrate_phase(c, g, p) + 1e-12);
  }
  CHECK(integrate_phase(a, g, 2) == doctest::Approx(std::sqrt(inner(a, a, g))).epsilon(1e-12));
}

TEST_CASE("integrate_phase convergence under refinement") {
  // int_box exp(x + y z) w_z^2 over S: second order midpoint rule
  auto err = [](int nx) {
    PhaseGrid g = build_phase_grid(Domain::box({0, 0, 0}, {1, 1, 1}), nx, 2, 2, 2);
    PhaseField f(g);
    for (int i = 0; i < g.nodes(); ++i) {
      Vec3 x = g.spatial.point(i);
      for (int q = 0; q < g.dirs(); ++q)
        for (int m = 0; m < 2; ++m) f(0, i, q, m) = std::exp(x.x + x.y * x.z);
    }
    double inner_yz = oracle::simpson(
        [](double y) { return oracle::simpson([&](double z) { return std::exp(y * z); }, 0, 1, 200); }, 0, 1, 200);
    double exact = (std::exp(1.0) - 1) * inner_yz * 4 * M_PI;
    return std::abs(integrate_phase(f, g, 1) - exact);
  };
  double e1 = err(8), e2 = err(16);
  CHECK(e1 / e2 > 3.5);
}

TEST_CASE("interpolate_spatial") {
  PhaseGrid g = build_phase_grid(Domain::box({0, 0, 0}, {1, 1, 1}), 8, 2, 4, 2);
  PhaseField c(g, 2.5), lin(g);
  for (int i = 0; i < g.nodes(); ++i) {
    Vec3 x = g.spatial.point(i);
    for (int q = 0; q < g.dirs(); ++q)
      for (int m = 0; m < 2; ++m) lin(1, i, q, m) = 1 + 2 * x.x - x.y + 0.5 * x.z;
  }
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(1.0 / 16, 15.0 / 16);
  for (int k = 0; k < 50; ++k) {
    Vec3 x{u(rng), u(rng), u(rng)};
    CHECK(interpolate_spatial(c, g, x, 0, 1, 1) == doctest::Approx(2.5).epsilon(1e-14));
    CHECK(interpolate_spatial(lin, g, x, 1, 2, 0) == doctest::Approx(1 + 2 * x.x - x.y + 0.5 * x.z).epsilon(1e-13));
  }
  for (int i = 0; i < g.nodes(); i += 7) CHECK(interpolate_spatial(lin, g, g.spatial.point(i), 1, 0, 0) == lin(1, i, 0, 0));
  // zero extension outside the lattice hull, normalized extension keeps constants
  CHECK(interpolate_spatial(c, g, {0.01, 0.5, 0.5}, 0, 0, 0) < 2.5);
  CHECK(interpolate_spatial(c, g, {0.01, 0.5, 0.5}, 0, 0, 0, Extension::Normalized) == doctest::Approx(2.5));
}

TEST_CASE("upstream stencil treats inflow ghosts as zero") {
  PhaseGrid g = build_phase_grid(Domain::box({0, 0, 0}, {1, 1, 1}), 8, 2, 4, 2);
  // node next to the -x face, shifted half a cell backwards along +x
  int i = g.spatial.node_at(0, 3, 3);
  Vec3 w{1, 0, 0};
  Stencil s = g.spatial.stencil_upstream(i, g.spatial.shift(Vec3{-1.0 / 16, 0, 0}), g.domain, w);
  double total = 0;
  for (int k = 0; k < s.n; ++k) total += s.weight[k];
  CHECK(total == doctest::Approx(0.5));
  // same shift with w pointing away from that face: the ghost is downstream and dropped
  Stencil d = g.spatial.stencil_upstream(i, g.spatial.shift(Vec3{-1.0 / 16, 0, 0}), g.domain, Vec3{-1, 0, 0});
  total = 0;
  for (int k = 0; k < d.n; ++k) total += d.weight[k];
  CHECK(total == doctest::Approx(1.0));
}

TEST_CASE("field algebra") {
  PhaseField a(2, 2, 2, 1.0), b(2, 2, 2, 2.0);
  CHECK((a + b).data()[3] == 3);
  CHECK((b - a).data()[5] == 1);
  CHECK((2.0 * a).data()[0] == 2);
  CHECK(min_value(a - b) == -1);
  CHECK_FALSE(a.species_is_zero(0));
  CHECK(PhaseField(2, 2, 2).species_is_zero(2));
}

}
