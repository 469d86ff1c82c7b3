#include "bte/timedep.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "bte/error.hpp"
#include "bte/parallel.hpp"
#include "bte/sweep.hpp"
#include "bte/transport.hpp"

namespace bte {

double SpeciesKinematics::speed(double E, int j) const {
  if (!(mass[j] > 0)) throw Error(ErrorKind::InvalidArgument, "species mass must be positive");
  return std::sqrt(2 * E / mass[j]);
}

namespace {

double numeric_rate(const std::function<double(double)>& a, double t) {
  double h = 1e-6 * std::max(1.0, std::abs(t));
  return (a(t + h) - a(t - h)) / (2 * h);
}

void require_positive_energy(const PhaseGrid& grid) {
  if (!(grid.energy.e0 > 0)) throw Error(ErrorKind::InvalidArgument, "time-dependent runs need E0 > 0");
}

// v_j(E_m) laid out species-major
std::vector<double> speed_table(const SpeciesKinematics& kin, const PhaseGrid& grid) {
  std::vector<double> v(static_cast<std::size_t>(kSpecies) * grid.energies());
  for (int j = 0; j < kSpecies; ++j)
    for (int m = 0; m < grid.energies(); ++m) v[j * grid.energies() + m] = kin.speed(grid.energy.nodes[m], j);
  return v;
}

// retarded boundary solution without the kernel check
class RetardedBoundary {
public:
  RetardedBoundary(const TimeBoundary& g, const SpeciesKinematics& kin, const CrossSections& xs,
                   const PhaseGrid& grid, double ray_step)
      : g_(g), grid_(grid), speed_(speed_table(kin, grid)) {
    Sweeper sw(xs, grid, ray_step);
    rays_.resize(static_cast<std::size_t>(grid.nodes()) * grid.dirs());
    parallel_for(grid.nodes(), [&](std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i)
        for (int q = 0; q < grid.dirs(); ++q)
          rays_[i * grid.dirs() + q] = sw.boundary_ray(static_cast<int>(i), q);
    });
  }

  PhaseField at(double t) const {
    PhaseField out(grid_);
    int nq = grid_.dirs(), nm = grid_.energies();
    parallel_for(grid_.nodes(), [&](std::size_t b, std::size_t e) {
      for (std::size_t ii = b; ii < e; ++ii) {
        int i = static_cast<int>(ii);
        for (int q = 0; q < nq; ++q) {
          const Sweeper::BoundaryRay& r = rays_[ii * nq + q];
          for (int j = 0; j < kSpecies; ++j)
            for (int m = 0; m < nm; ++m) {
              double tr = t - r.t / speed_[j * nm + m];
              if (!(tr > 0)) continue;
              double gv = 0;
              for (int l = 0; l < r.bnd.n; ++l) gv += r.bnd.weight[l] * g_.profile(j, r.bnd.node[l], m);
              out(j, i, q, m) = g_.amplitude(tr) * r.attenuation[j] * gv;
            }
        }
      }
    });
    return out;
  }

private:
  const TimeBoundary& g_;
  const PhaseGrid& grid_;
  std::vector<double> speed_;
  std::vector<Sweeper::BoundaryRay> rays_;
};

}  // namespace

double TimeSource::rate_at(double t) const { return rate ? rate(t) : numeric_rate(amplitude, t); }
double TimeBoundary::rate_at(double t) const { return rate ? rate(t) : numeric_rate(amplitude, t); }

PhaseField free_streaming_step(const PhaseField& psi, double dt, const SpeciesKinematics& kin, const PhaseGrid& grid) {
  if (!(dt >= 0)) throw Error(ErrorKind::InvalidArgument, "time step must be nonnegative");
  if (!psi.matches(grid)) throw Error(ErrorKind::ShapeMismatch, "field does not match grid");
  if (dt == 0) return psi;
  require_positive_energy(grid);
  std::vector<double> v = speed_table(kin, grid);
  int nq = grid.dirs(), nm = grid.energies(), nx = grid.nodes();
  // direction-major copies so each direction reads and writes contiguous slices
  std::size_t per_dir = static_cast<std::size_t>(nx) * kSpecies * nm;
  std::vector<double> in_t(per_dir * nq), out_t(per_dir * nq, 0.0);
  for (int j = 0; j < kSpecies; ++j)
    for (int i = 0; i < nx; ++i)
      for (int q = 0; q < nq; ++q)
        for (int m = 0; m < nm; ++m)
          in_t[q * per_dir + (static_cast<std::size_t>(i) * kSpecies + j) * nm + m] = psi(j, i, q, m);
  parallel_for(nq, [&](std::size_t b, std::size_t e) {
    std::vector<SpatialGrid::Shift> shifts(static_cast<std::size_t>(kSpecies) * nm);
    for (std::size_t qq = b; qq < e; ++qq) {
      int q = static_cast<int>(qq);
      const double* slice = in_t.data() + qq * per_dir;
      double* dst = out_t.data() + qq * per_dir;
      const Vec3& w = grid.angular.nodes[q];
      for (int k = 0; k < kSpecies * nm; ++k) shifts[k] = grid.spatial.shift(-(v[k] * dt) * w);
      for (int i = 0; i < nx; ++i) {
        double t = escape_time_unchecked(grid.domain, grid.spatial.point(i), w);
        for (int m = 0; m < nm; ++m) {
          Stencil st;
          double s_prev = -1;
          for (int j = 0; j < kSpecies; ++j) {
            double s = v[j * nm + m] * dt;
            if (!(s < t)) continue;
            // species of equal mass share the stencil
            if (s != s_prev) st = grid.spatial.stencil_upstream(i, shifts[j * nm + m], grid.domain, w);
            s_prev = s;
            double val = 0;
            for (int k = 0; k < st.n; ++k)
              val += st.weight[k] * slice[(static_cast<std::size_t>(st.node[k]) * kSpecies + j) * nm + m];
            dst[(static_cast<std::size_t>(i) * kSpecies + j) * nm + m] = val;
          }
        }
      }
    }
  });
  PhaseField out(grid);
  for (int j = 0; j < kSpecies; ++j)
    for (int i = 0; i < nx; ++i)
      for (int q = 0; q < nq; ++q)
        for (int m = 0; m < nm; ++m)
          out(j, i, q, m) = out_t[q * per_dir + (static_cast<std::size_t>(i) * kSpecies + j) * nm + m];
  return out;
}

PhaseField trotter_step(const PhaseField& psi, double dt, const CrossSections& xs, const SpeciesKinematics& kin,
                        const PhaseGrid& grid, int series_order) {
  if (!(dt > 0)) throw Error(ErrorKind::InvalidArgument, "time step must be positive");
  if (series_order < 1) throw Error(ErrorKind::InvalidArgument, "series order must be >= 1");
  require_positive_energy(grid);
  std::vector<double> v = speed_table(kin, grid);
  int nq = grid.dirs(), nm = grid.energies();
  PhaseField cur = psi;
  if (xs.has_kernel()) {
    CollisionOperator K(xs, grid);
    K.set_receiver_scale(v);
    PhaseField term = psi;
    double norm0 = integrate_phase(psi, grid, 1);
    for (int k = 1; k <= series_order; ++k) {
      term = K.apply(term);
      term *= dt / k;
      cur += term;
    }
    if (integrate_phase(term, grid, 1) > 1e-8 * norm0)
      throw Error(ErrorKind::SeriesDivergence, "collision series not converged; reduce the time step");
  }
  auto totals = node_totals(xs, grid);
  for (int j = 0; j < kSpecies; ++j)
    for (int i = 0; i < grid.nodes(); ++i)
      for (int q = 0; q < nq; ++q)
        for (int m = 0; m < nm; ++m) cur(j, i, q, m) *= std::exp(-dt * v[j * nm + m] * totals[i][j]);
  return free_streaming_step(cur, dt, kin, grid);
}

PhaseField explicit_boundary_solution(const TimeBoundary& g, double t, const SpeciesKinematics& kin,
                                      const CrossSections& xs, const PhaseGrid& grid, double ray_step) {
  if (xs.has_kernel()) throw Error(ErrorKind::HasKernel, "explicit boundary solution needs a kernel-free medium");
  require_positive_energy(grid);
  if (!g.profile.matches(grid, Side::Inflow)) throw Error(ErrorKind::ShapeMismatch, "boundary data does not match grid");
  return RetardedBoundary(g, kin, xs, grid, ray_step).at(t);
}

EvolveResult evolve(const PhaseField& psi0, const TimeSource* f, const TimeBoundary* g, const TimeGrid& tg,
                    const CrossSections& xs, const SpeciesKinematics& kin, const PhaseGrid& grid,
                    const EvolveOptions& opts) {
  if (!(tg.T > 0) || tg.n_steps < 1) throw Error(ErrorKind::InvalidArgument, "invalid time grid");
  if (!psi0.matches(grid)) throw Error(ErrorKind::ShapeMismatch, "initial field does not match grid");
  require_positive_energy(grid);
  double dt = tg.dt();
  int nm = grid.energies();
  std::vector<double> v = speed_table(kin, grid);
  EvolveResult res;

  if (g) {
    BoundaryField tr = trace(psi0, grid, Side::Inflow);
    double a0 = g->amplitude(0.0), worst = 0;
    for (std::size_t k = 0; k < tr.size(); ++k) worst = std::max(worst, std::abs(tr.data()[k] - a0 * g->profile.data()[k]));
    if (worst > 1e-6)
      res.warnings.push_back("initial data incompatible with boundary data at t=0 (max mismatch " +
                             std::to_string(worst) + ")");
  }

  // speed-scaled volume source profile v f
  PhaseField fs;
  if (f) {
    fs = f->profile;
    for (int j = 0; j < kSpecies; ++j)
      for (int i = 0; i < grid.nodes(); ++i)
        for (int q = 0; q < grid.dirs(); ++q)
          for (int m = 0; m < nm; ++m) fs(j, i, q, m) *= v[j * nm + m];
  }
  std::unique_ptr<CollisionOperator> K;
  if (xs.has_kernel()) {
    K = std::make_unique<CollisionOperator>(xs, grid);
    K->set_receiver_scale(v);
  }

  auto keep = [&](int n, const PhaseField& psi) {
    if (n % std::max(1, opts.keep_every) == 0 || n == tg.n_steps) {
      res.trajectory.push_back(psi);
      res.times.push_back(n * dt);
    }
  };
  auto step = [&](const PhaseField& u) {
    PhaseField next = trotter_step(u, dt, xs, kin, grid, opts.series_order);
    double before = integrate_phase(u, grid, 1), after = integrate_phase(next, grid, 1);
    res.stream_mass_change.push_back(before > 0 ? (after - before) / before : 0.0);
    return next;
  };

  if (!g || opts.treatment == BoundaryTreatment::Retarded) {
    std::unique_ptr<RetardedBoundary> rb;
    if (g) rb = std::make_unique<RetardedBoundary>(*g, kin, xs, grid, opts.ray_step);
    PhaseField w = psi0;
    keep(0, psi0);
    for (int n = 0; n < tg.n_steps; ++n) {
      double tm = (n + 0.5) * dt;
      w = step(w);
      if (f) w += (dt * f->amplitude(tm)) * fs;
      if (rb && K) w += dt * K->apply(rb->at(tm));
      PhaseField psi = w;
      if (rb) psi += rb->at((n + 1) * dt);
      keep(n + 1, psi);
    }
    return res;
  }

  // lift substitution
  PhaseField Lg = lift(g->profile, grid);
  PhaseField damp(grid);  // (Σ~ - K~) L g
  auto totals = node_totals(xs, grid);
  for (int j = 0; j < kSpecies; ++j)
    for (int i = 0; i < grid.nodes(); ++i)
      for (int q = 0; q < grid.dirs(); ++q)
        for (int m = 0; m < nm; ++m) damp(j, i, q, m) = v[j * nm + m] * totals[i][j] * Lg(j, i, q, m);
  if (K) damp -= K->apply(Lg);
  PhaseField u = psi0 - g->amplitude(0.0) * Lg;
  keep(0, psi0);
  for (int n = 0; n < tg.n_steps; ++n) {
    double tm = (n + 0.5) * dt;
    u = step(u);
    if (f) u += (dt * f->amplitude(tm)) * fs;
    u += (-dt * g->rate_at(tm)) * Lg;
    u += (-dt * g->amplitude(tm)) * damp;
    keep(n + 1, u + g->amplitude((n + 1) * dt) * Lg);
  }
  return res;
}

}  // namespace bte
