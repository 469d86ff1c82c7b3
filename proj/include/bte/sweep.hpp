#pragma once

#include <array>
#include <vector>

#include "bte/cross_sections.hpp"
#include "bte/discretization.hpp"

namespace bte {

// Attenuated characteristic integration along backward rays from every phase node.
//   forward:  psi = S f + U g
//   adjoint:  exact transposes S^T h and U^T h under the phase and boundary inner products
class Sweeper {
public:
  Sweeper(const CrossSections& xs, const PhaseGrid& grid, double ray_step = 0.0, bool force_march = false);

  PhaseField forward(const PhaseField* f, const BoundaryField* g) const;
  void adjoint(const PhaseField& h, PhaseField* volume, BoundaryField* boundary) const;

  // Backward ray data for the boundary term alone.
  struct BoundaryRay {
    double t = 0;
    std::array<double, kSpecies> attenuation{};
    SurfaceStencil bnd;
  };
  BoundaryRay boundary_ray(int i, int q) const;

  const PhaseGrid& grid() const { return *grid_; }
  double ray_step() const { return step_; }

private:
  struct Ray;
  void trace_ray(int i, int q, Ray& ray, bool need_interior) const;
  double sigma_at(const Vec3& p, int j) const;

  const CrossSections* xs_;
  const PhaseGrid* grid_;
  double step_;
  bool force_march_;
  bool uniform_;
  std::array<double, kSpecies> sigma0_{};
  std::vector<Material> materials_;
};

// Backward exit of the ray x - s w: time, exit point and box face (-1 for the ball).
void ray_exit(const Domain& dom, const Vec3& x, const Vec3& w, double& t, Vec3& y, int& face);

}  // namespace bte
