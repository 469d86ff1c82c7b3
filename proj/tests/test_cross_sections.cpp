#include <doctest.h>

#include <cmath>
#include <random>

#include "bte/cross_sections.hpp"
#include "bte/error.hpp"
#include "oracles.hpp"

using namespace bte;

namespace {

PhaseField random_field(const PhaseGrid& g, std::mt19937_64& rng, bool nonneg) {
  std::uniform_real_distribution<double> u(nonneg ? 0.0 : -1.0, 1.0);
  PhaseField f(g);
  for (auto& v : f.data()) v = u(rng);
  return f;
}

// Brute-force kernel sum with the angular density written out from scratch.
double brute_force(const CrossSections& xs, const PhaseGrid& g, const PhaseField& psi, int j, int i, int q) {
  const Material& mat = xs.material_at(g.spatial.point(i));
  int nq = g.dirs(), nm = g.energies();
  double width = g.energy.em - g.energy.e0;
  double s = 0;
  for (int k = 0; k < kSpecies; ++k)
    for (int qp = 0; qp < nq; ++qp) {
      double ang;
      if (k == j && xs.family == AngularFamily::Screened && xs.g > 0) {
        auto hg = [&](int a, int b) {
          double mu = dot(g.angular.nodes[a], g.angular.nodes[b]);
          return std::pow(1 + xs.g * xs.g - 2 * xs.g * mu, -1.5);
        };
        double norm = 0;
        for (int b = 0; b < nq; ++b) norm += g.angular.weights[b] * hg(qp, b);
        ang = hg(qp, q) / norm;
      } else {
        ang = 1.0 / (4 * M_PI);
      }
      for (int mp = 0; mp < nm; ++mp)
        s += mat.strength(k, j) * ang / width * psi(k, i, qp, mp) * g.angular.weights[qp] * g.energy.weights[mp];
    }
  return s;
}

}  // namespace

TEST_SUITE("cross_sections") {

TEST_CASE("validate toy isotropic family") {
  PhaseGrid g = build_phase_grid(Domain::ball({}, 1), 6, 4, 8, 2);
  SubCriticalityReport r = validate(CrossSections::uniform(0.3, 0.7), g);
  CHECK(r.c_row == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(r.c_col == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(r.C_row == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(r.satisfied);

  SubCriticalityReport z = validate(CrossSections::uniform(1.0, 0.0), g);
  CHECK(z.c_row == doctest::Approx(1.0));
  CHECK(z.c_col == doctest::Approx(1.0));

  SubCriticalityReport c = validate(CrossSections::uniform(0.0, 1.0), g);
  CHECK_FALSE(c.satisfied);
  CHECK(c.c_row == 0);

  CrossSections bad = CrossSections::uniform(0.5, 0.5);
  bad.background.sigma_a[1] = -0.1;
  CHECK_THROWS_AS(validate(bad, g), Error);
}

TEST_CASE("validate with transfers and regions") {
  PhaseGrid g = build_phase_grid(Domain::ball({}, 1), 6, 4, 8, 2);
  CrossSections xs = CrossSections::uniform(0.5, 0.2);
  xs.background.transfer[0][1] = 0.3;  // species 0 -> 1
  XsRegion r;
  r.shape.radius = 0.5;
  r.material = xs.background;
  r.material.sigma_a = {0.1, 0.1, 0.1};
  xs.regions.push_back(r);
  SubCriticalityReport rep = validate(xs, g);
  // row margin of species 0: sigma_total - sigma_s - transfer = sigma_a; the column of species 1 carries the transfer in
  CHECK(rep.c_row == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(rep.c_col == doctest::Approx(0.1 - 0.3).epsilon(1e-12));
  CHECK_FALSE(rep.satisfied);
}

TEST_CASE("isotropic kernel on constants") {
  PhaseGrid g = build_phase_grid(Domain::ball({}, 1), 6, 4, 8, 3, 0.2, 1.7);
  CrossSections xs = CrossSections::uniform(0.1, 0.8);
  PhaseField k = apply_collision(xs, PhaseField(g, 1.0), g);
  for (double v : k.data()) CHECK(v == doctest::Approx(0.8).epsilon(1e-13));
  PhaseField z = apply_collision(CrossSections::uniform(1, 0), PhaseField(g, 1.0), g);
  for (double v : z.data()) CHECK(v == 0);
}

TEST_CASE("transfer kernel moves species 0 into species 1") {
  PhaseGrid g = build_phase_grid(Domain::ball({}, 1), 6, 4, 8, 2);
  CrossSections xs = CrossSections::uniform(1.0, 0.0);
  xs.background.transfer[0][1] = 0.4;
  PhaseField psi(g);
  for (int i = 0; i < g.nodes(); ++i)
    for (int q = 0; q < g.dirs(); ++q)
      for (int m = 0; m < 2; ++m) psi(0, i, q, m) = 1;
  PhaseField k = apply_collision(xs, psi, g);
  CHECK(k.species_is_zero(0));
  CHECK(k.species_is_zero(2));
  for (int i = 0; i < g.nodes(); i += 5) CHECK(k(1, i, 3, 1) == doctest::Approx(0.4).epsilon(1e-13));

  // the adjoint moves species-1 weight back into species 0
  PhaseField phi(g);
  for (int i = 0; i < g.nodes(); ++i)
    for (int q = 0; q < g.dirs(); ++q)
      for (int m = 0; m < 2; ++m) phi(1, i, q, m) = 1;
  PhaseField ka = apply_collision_adjoint(xs, phi, g);
  CHECK(ka.species_is_zero(1));
  CHECK(ka.species_is_zero(2));
  CHECK(ka(0, 0, 0, 0) == doctest::Approx(0.4).epsilon(1e-13));
}

TEST_CASE("collision matches brute force") {
  PhaseGrid g = build_phase_grid(Domain::ball({}, 1), 5, 4, 6, 2, 0.1, 1.0);
  std::mt19937_64 rng(21);
  for (int fam = 0; fam < 2; ++fam) {
    CrossSections xs = CrossSections::uniform(0.4, 0.6);
    xs.background.sigma_s = {0.6, 0.2, 0.9};
    xs.background.transfer[0][2] = 0.25;
    xs.background.transfer[1][0] = 0.15;
    XsRegion r;
    r.shape.kind = RegionShape::Kind::Box;
    r.shape.lo = {-1, -1, -1};
    r.shape.hi = {0, 1, 1};
    r.material = xs.background;
    r.material.sigma_s = {0.1, 0.3, 0.05};
    xs.regions.push_back(r);
    if (fam == 1) {
      xs.family = AngularFamily::Screened;
      xs.g = 0.6;
    }
    PhaseField psi = random_field(g, rng, false);
    PhaseField k = apply_collision(xs, psi, g);
    for (int t = 0; t < 40; ++t) {
      int j = t % 3, i = (t * 7) % g.nodes(), q = (t * 5) % g.dirs(), m = t % 2;
      CHECK(k(j, i, q, m) == doctest::Approx(brute_force(xs, g, psi, j, i, q)).epsilon(1e-12));
    }
  }
}

TEST_CASE("discrete duality and positivity") {
  PhaseGrid g = build_phase_grid(Domain::ball({}, 1), 5, 4, 6, 2);
  CrossSections xs = CrossSections::uniform(0.4, 0.6);
  xs.family = AngularFamily::Screened;
  xs.g = 0.7;
  xs.background.transfer[2][1] = 0.3;
  std::mt19937_64 rng(5);
  for (int t = 0; t < 20; ++t) {
    PhaseField a = random_field(g, rng, false), b = random_field(g, rng, false);
    double lhs = inner(apply_collision(xs, a, g), b, g), rhs = inner(a, apply_collision_adjoint(xs, b, g), g);
    CHECK(std::abs(lhs - rhs) <= 1e-10 * integrate_phase(a, g, 2) * integrate_phase(b, g, 2));
  }
  PhaseField p = random_field(g, rng, true);
  CHECK(min_value(apply_collision(xs, p, g)) >= 0);
}

TEST_CASE("symmetric isotropic kernel is self adjoint") {
  PhaseGrid g = build_phase_grid(Domain::ball({}, 1), 5, 4, 6, 2);
  CrossSections xs = CrossSections::uniform(0.4, 0.6);
  std::mt19937_64 rng(6);
  PhaseField a = random_field(g, rng, false);
  PhaseField k = apply_collision(xs, a, g), ka = apply_collision_adjoint(xs, a, g);
  for (std::size_t n = 0; n < k.size(); ++n) CHECK(k.data()[n] == doctest::Approx(ka.data()[n]).epsilon(1e-13));
}

TEST_CASE("boundedness by the row constant") {
  PhaseGrid g = build_phase_grid(Domain::ball({}, 1), 5, 4, 6, 2);
  CrossSections xs = CrossSections::uniform(0.4, 0.6);
  xs.family = AngularFamily::Screened;
  xs.g = 0.5;
  xs.background.transfer[0][1] = 0.2;
  SubCriticalityReport rep = validate(xs, g);
  double C = std::max(rep.C_row, rep.C_col);
  std::mt19937_64 rng(7);
  for (int t = 0; t < 10; ++t) {
    PhaseField p = random_field(g, rng, true);
    CHECK(integrate_phase(apply_collision(xs, p, g), g, 1) <= 1.1 * C * integrate_phase(p, g, 1));
  }
}

TEST_CASE("screened kernel normalization") {
  PhaseGrid g = build_phase_grid(Domain::ball({}, 1), 4, 6, 12, 2);
  CrossSections xs = CrossSections::uniform(0.2, 0.9);
  xs.family = AngularFamily::Screened;
  xs.g = 0.8;
  CollisionOperator op(xs, g);
  for (int qp = 0; qp < g.dirs(); ++qp) {
    double s = 0;
    for (int q = 0; q < g.dirs(); ++q) s += g.angular.weights[q] * op.angular(qp, q);
    CHECK(std::abs(0.9 * s - 0.9) < 1e-9);
  }
  // forward peaking: the density is largest along the incoming direction
  CHECK(op.angular(3, 3) > op.angular(3, g.angular.antipode[3]));
}

TEST_CASE("dense kernel table") {
  PhaseGrid g = build_phase_grid(Domain::box({0, 0, 0}, {1, 1, 1}), 2, 2, 2, 2);
  auto d = std::make_shared<DenseKernel>(g);
  for (int i = 0; i < g.nodes(); ++i)
    for (int qp = 0; qp < g.dirs(); ++qp)
      for (int q = 0; q < g.dirs(); ++q)
        for (int mp = 0; mp < 2; ++mp)
          for (int m = 0; m < 2; ++m) d->at(0, 2, i, qp, q, mp, m) = 0.1 * (1 + q + 2 * qp) * (1 + m);
  CrossSections xs = CrossSections::uniform(1.0, 0.0);
  xs.dense = d;
  std::mt19937_64 rng(8);
  PhaseField a = random_field(g, rng, false), b = random_field(g, rng, false);
  PhaseField k = apply_collision(xs, a, g);
  double ref = 0;
  for (int qp = 0; qp < g.dirs(); ++qp)
    for (int mp = 0; mp < 2; ++mp)
      ref += d->at(0, 2, 1, qp, 3, mp, 1) * a(0, 1, qp, mp) * g.angular.weights[qp] * g.energy.weights[mp];
  CHECK(k(2, 1, 3, 1) == doctest::Approx(ref).epsilon(1e-13));
  CHECK(k.species_is_zero(0));
  double lhs = inner(k, b, g), rhs = inner(a, apply_collision_adjoint(xs, b, g), g);
  CHECK(std::abs(lhs - rhs) < 1e-12 * std::abs(lhs) + 1e-14);
}

TEST_CASE("shape mismatch") {
  PhaseGrid g = build_phase_grid(Domain::ball({}, 1), 4, 2, 4, 2);
  CHECK_THROWS_AS(apply_collision(CrossSections::uniform(1, 1), PhaseField(3, 3, 3), g), Error);
}

}
