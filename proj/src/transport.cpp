#include "bte/transport.hpp"

#include <algorithm>
#include <cmath>

#include "bte/error.hpp"
#include "bte/parallel.hpp"
#include "bte/sweep.hpp"

namespace bte {

namespace {

double l1_diff(const PhaseField& a, const PhaseField& b, const PhaseGrid& grid) {
  return integrate_phase(a - b, grid, 1);
}

void check_options(const SolveOptions& o) {
  if (!(o.ray_step >= 0) || !(o.tol > 0) || o.max_iter < 1 || !(o.damping > 0 && o.damping <= 1))
    throw Error(ErrorKind::InvalidArgument, "invalid solve options");
}

// Fixed point x = base + T x with T given as a callable; relative L1 stopping.
template <class Apply>
PhaseField iterate(const PhaseField& base, Apply&& T, const PhaseGrid& grid, const SolveOptions& opts,
                   IterationReport& rep) {
  PhaseField x = base;
  double prev_update = 0;
  for (int n = 1; n <= opts.max_iter; ++n) {
    PhaseField fresh = base + T(x);
    PhaseField next = x;
    if (opts.damping == 1.0) {
      next = fresh;
    } else {
      next *= 1 - opts.damping;
      next += opts.damping * fresh;
    }
    double nn = integrate_phase(next, grid, 1);
    double update = nn > 0 ? l1_diff(next, x, grid) / nn : 0.0;
    rep.updates.push_back(update);
    if (n > 1 && prev_update > 0) rep.contraction = update / prev_update;
    prev_update = update;
    x = std::move(next);
    rep.iterations = n;
    if (update < opts.tol) {
      PhaseField check = base + T(x);
      double nx = integrate_phase(x, grid, 1);
      rep.residual = nx > 0 ? l1_diff(check, x, grid) / nx : 0.0;
      if (rep.residual < 10 * opts.tol) return x;
    }
  }
  throw Error(ErrorKind::NoConvergence, "source iteration did not reach tolerance in " +
                                            std::to_string(opts.max_iter) + " iterations (last update " +
                                            std::to_string(prev_update) + ")");
}

}  // namespace

PhaseField lift(const BoundaryField& g, const PhaseGrid& grid) {
  if (!g.matches(grid, Side::Inflow)) throw Error(ErrorKind::ShapeMismatch, "boundary data does not match grid");
  int nq = grid.dirs(), nm = grid.energies();
  PhaseField out(grid);
  parallel_for(grid.nodes(), [&](std::size_t b, std::size_t e) {
    for (std::size_t ii = b; ii < e; ++ii) {
      int i = static_cast<int>(ii);
      for (int q = 0; q < nq; ++q) {
        double t;
        Vec3 y;
        int face;
        ray_exit(grid.domain, grid.spatial.point(i), grid.angular.nodes[q], t, y, face);
        SurfaceStencil st = boundary_lookup(grid, Side::Inflow, q, y, face);
        for (int j = 0; j < kSpecies; ++j) {
          double* o = &out.data()[out.index(j, i, q, 0)];
          for (int l = 0; l < st.n; ++l)
            for (int m = 0; m < nm; ++m) o[m] += st.weight[l] * g(j, st.node[l], m);
        }
      }
    }
  });
  return out;
}

BoundaryField trace(const PhaseField& psi, const PhaseGrid& grid, Side side) {
  if (!psi.matches(grid)) throw Error(ErrorKind::ShapeMismatch, "field does not match grid");
  const BoundarySamples& bs = grid.samples(side);
  BoundaryField out(grid, side);
  double nudge = 1e-6 * grid.domain.diameter();
  int nm = grid.energies();
  parallel_for(bs.pairs(), [&](std::size_t b, std::size_t e) {
    for (std::size_t pp = b; pp < e; ++pp) {
      int p = static_cast<int>(pp);
      int s = bs.surface[p], q = bs.direction[p];
      Vec3 x = grid.surface.point(s) - nudge * grid.surface.normal(s);
      Stencil st = grid.spatial.stencil(x, Extension::Normalized);
      for (int j = 0; j < kSpecies; ++j)
        for (int m = 0; m < nm; ++m) {
          double v = 0;
          for (int l = 0; l < st.n; ++l) v += st.weight[l] * psi(j, st.node[l], q, m);
          out(j, p, m) = v;
        }
    }
  });
  return out;
}

PhaseField sweep_attenuated(const CrossSections& xs, const PhaseField& f, const BoundaryField& g,
                            const PhaseGrid& grid, const SolveOptions& opts) {
  check_options(opts);
  Sweeper sw(xs, grid, opts.ray_step, opts.force_ray_march);
  return sw.forward(&f, &g);
}

PhaseField resolvent_convection(double lambda, const PhaseField& f, const PhaseGrid& grid, const SolveOptions& opts) {
  if (!(lambda > 0)) throw Error(ErrorKind::NonPositiveLambda, "resolvent requires lambda > 0");
  check_options(opts);
  CrossSections xs = CrossSections::uniform(lambda, 0.0);
  Sweeper sw(xs, grid, opts.ray_step, opts.force_ray_march);
  return sw.forward(&f, nullptr);
}

Solution solve_coupled(const CrossSections& xs, const PhaseField& f, const BoundaryField& g, const PhaseGrid& grid,
                       const SolveOptions& opts) {
  check_options(opts);
  Sweeper sw(xs, grid, opts.ray_step, opts.force_ray_march);
  Solution sol;
  PhaseField base = sw.forward(&f, &g);
  if (!xs.has_kernel()) {
    sol.psi = std::move(base);
    return sol;
  }
  sol.report.contraction_guaranteed = validate(xs, grid).satisfied;
  CollisionOperator K(xs, grid);
  sol.psi = iterate(base, [&](const PhaseField& x) {
    PhaseField kx = K.apply(x);
    return sw.forward(&kx, nullptr);
  }, grid, opts, sol.report);
  return sol;
}

Decomposition decompose_primary_secondary(const CrossSections& xs, const PhaseField& f, const BoundaryField& g,
                                          const PhaseGrid& grid, const SolveOptions& opts) {
  Decomposition d;
  d.u = sweep_attenuated(xs, f, g, grid, opts);
  PhaseField ku = apply_collision(xs, d.u, grid);
  Solution w = solve_coupled(xs, ku, BoundaryField(grid, Side::Inflow), grid, opts);
  d.w = std::move(w.psi);
  d.report = w.report;
  return d;
}

AdjointSolution solve_adjoint(const CrossSections& xs, const PhaseField& f_star, const PhaseGrid& grid,
                              const SolveOptions& opts) {
  check_options(opts);
  if (!grid.angular.antipodally_closed())
    throw Error(ErrorKind::AsymmetricGrid, "adjoint solve needs an antipodally symmetric angular rule");
  if (!f_star.matches(grid)) throw Error(ErrorKind::ShapeMismatch, "adjoint source does not match grid");
  Sweeper sw(xs, grid, opts.ray_step, opts.force_ray_march);
  AdjointSolution sol;
  PhaseField base;
  sw.adjoint(f_star, &base, nullptr);
  if (!xs.has_kernel()) {
    sol.psi_star = std::move(base);
    sw.adjoint(f_star, nullptr, &sol.inflow_trace);
    return sol;
  }
  sol.report.contraction_guaranteed = validate(xs, grid).satisfied;
  CollisionOperator K(xs, grid);
  sol.psi_star = iterate(base, [&](const PhaseField& x) {
    PhaseField kx = K.apply_adjoint(x);
    PhaseField out;
    sw.adjoint(kx, &out, nullptr);
    return out;
  }, grid, opts, sol.report);
  PhaseField chi = f_star + K.apply_adjoint(sol.psi_star);
  sw.adjoint(chi, nullptr, &sol.inflow_trace);
  return sol;
}

}  // namespace bte
