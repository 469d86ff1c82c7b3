#include "bte/green.hpp"

#include <cmath>

#include "bte/parallel.hpp"

namespace bte {

GreenReport check_green_identity(const PhaseFunction& u, const PhaseFunction& v, const PhaseGrid& grid) {
  int nq = grid.dirs(), nm = grid.energies();
  const auto& wq = grid.angular.weights;
  const auto& wm = grid.energy.weights;
  std::vector<double> vol(grid.nodes(), 0.0);
  parallel_for(grid.nodes(), [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      const Vec3& x = grid.spatial.point(static_cast<int>(i));
      double s = 0;
      for (int q = 0; q < nq; ++q) {
        const Vec3& w = grid.angular.nodes[q];
        for (int m = 0; m < nm; ++m) {
          double E = grid.energy.nodes[m];
          s += wq[q] * wm[m] * (u.along(x, w, E) * v.value(x, w, E) + v.along(x, w, E) * u.value(x, w, E));
        }
      }
      vol[i] = s * grid.spatial.weight(static_cast<int>(i));
    }
  });
  const SurfaceGrid& sg = grid.surface;
  std::vector<double> bnd(sg.size(), 0.0);
  parallel_for(sg.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t k = b; k < e; ++k) {
      int s = static_cast<int>(k);
      const Vec3& y = sg.point(s);
      const Vec3& n = sg.normal(s);
      double acc = 0;
      for (int q = 0; q < nq; ++q) {
        const Vec3& w = grid.angular.nodes[q];
        double c = dot(w, n);
        for (int m = 0; m < nm; ++m) {
          double E = grid.energy.nodes[m];
          acc += wq[q] * wm[m] * c * u.value(y, w, E) * v.value(y, w, E);
        }
      }
      bnd[k] = acc * sg.area(s);
    }
  });
  GreenReport r;
  for (double x : vol) r.volume += x;
  for (double x : bnd) r.boundary += x;
  r.residual = std::abs(r.volume - r.boundary) / (std::abs(r.volume) + std::abs(r.boundary) + 1);
  return r;
}

}  // namespace bte
