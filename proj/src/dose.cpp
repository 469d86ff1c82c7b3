#include "bte/dose.hpp"

#include "bte/error.hpp"
#include "bte/parallel.hpp"

namespace bte {

DoseMap compute_dose(const PhaseField& psi, const CrossSections& xs, const PhaseGrid& grid) {
  if (!psi.matches(grid)) throw Error(ErrorKind::ShapeMismatch, "flux does not match grid");
  DoseMap d(grid.nodes(), 0.0);
  int nq = grid.dirs(), nm = grid.energies();
  parallel_for(grid.nodes(), [&](std::size_t b, std::size_t e) {
    for (std::size_t ii = b; ii < e; ++ii) {
      int i = static_cast<int>(ii);
      const Material& mat = xs.material_at(grid.spatial.point(i));
      double s = 0;
      for (int j = 0; j < kSpecies; ++j) {
        if (mat.kappa[j] == 0) continue;
        double sj = 0;
        for (int q = 0; q < nq; ++q) {
          const double* v = &psi.data()[psi.index(j, i, q, 0)];
          double sq = 0;
          for (int m = 0; m < nm; ++m) sq += v[m] * grid.energy.weights[m];
          sj += sq * grid.angular.weights[q];
        }
        s += mat.kappa[j] * sj;
      }
      d[i] = s;
    }
  });
  return d;
}

PhaseField dose_adjoint(const DoseMap& d, const CrossSections& xs, const PhaseGrid& grid) {
  if (static_cast<int>(d.size()) != grid.nodes()) throw Error(ErrorKind::ShapeMismatch, "dose does not match grid");
  PhaseField out(grid);
  for (int i = 0; i < grid.nodes(); ++i) {
    const Material& mat = xs.material_at(grid.spatial.point(i));
    for (int j = 0; j < kSpecies; ++j) {
      double v = mat.kappa[j] * d[i];
      if (v == 0) continue;
      for (int q = 0; q < grid.dirs(); ++q)
        for (int m = 0; m < grid.energies(); ++m) out(j, i, q, m) = v;
    }
  }
  return out;
}

DoseMap accumulate_dose(const std::vector<PhaseField>& traj, const TimeGrid& tg, const CrossSections& xs,
                        const PhaseGrid& grid) {
  if (static_cast<int>(traj.size()) != tg.n_steps + 1)
    throw Error(ErrorKind::LengthMismatch, "trajectory length must be n_steps + 1");
  DoseMap total(grid.nodes(), 0.0);
  double dt = tg.dt();
  for (std::size_t k = 0; k < traj.size(); ++k) {
    double w = (k == 0 || k + 1 == traj.size()) ? 0.5 * dt : dt;
    DoseMap d = compute_dose(traj[k], xs, grid);
    for (int i = 0; i < grid.nodes(); ++i) total[i] += w * d[i];
  }
  return total;
}

double dose_inner(const DoseMap& a, const DoseMap& b, const PhaseGrid& grid) {
  double s = 0;
  for (int i = 0; i < grid.nodes(); ++i) s += a[i] * b[i] * grid.spatial.weight(i);
  return s;
}

}  // namespace bte
