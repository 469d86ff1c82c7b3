#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "bte/cross_sections.hpp"
#include "bte/discretization.hpp"
#include "bte/dose.hpp"

namespace bte {

struct SpeciesKinematics {
  std::array<double, kSpecies> mass{1.0, 1.0, 1.0};
  double speed(double E, int j) const;
};

// Separable data: profile * amplitude(t). A missing rate is differentiated numerically.
struct TimeSource {
  PhaseField profile;
  std::function<double(double)> amplitude = [](double) { return 1.0; };
  std::function<double(double)> rate;
  double rate_at(double t) const;
};

struct TimeBoundary {
  BoundaryField profile;
  std::function<double(double)> amplitude = [](double) { return 1.0; };
  std::function<double(double)> rate;
  double rate_at(double t) const;
};

enum class BoundaryTreatment {
  Retarded,  // psi = explicit retarded boundary solution + remainder driven by K of it
  Lift,      // u = psi - L g(t)
};

struct EvolveOptions {
  int series_order = 8;
  BoundaryTreatment treatment = BoundaryTreatment::Retarded;
  int keep_every = 1;      // trajectory stride; the last step is always kept
  double ray_step = 0.0;   // for attenuation along non-uniform media
};

struct EvolveResult {
  std::vector<PhaseField> trajectory;
  std::vector<double> times;
  std::vector<double> stream_mass_change;  // relative L1 change across each streaming substep
  std::vector<std::string> warnings;
};

PhaseField free_streaming_step(const PhaseField& psi, double dt, const SpeciesKinematics& kin, const PhaseGrid& grid);
PhaseField trotter_step(const PhaseField& psi, double dt, const CrossSections& xs, const SpeciesKinematics& kin,
                        const PhaseGrid& grid, int series_order);
EvolveResult evolve(const PhaseField& psi0, const TimeSource* f, const TimeBoundary* g, const TimeGrid& tg,
                    const CrossSections& xs, const SpeciesKinematics& kin, const PhaseGrid& grid,
                    const EvolveOptions& opts = {});
PhaseField explicit_boundary_solution(const TimeBoundary& g, double t, const SpeciesKinematics& kin,
                                      const CrossSections& xs, const PhaseGrid& grid, double ray_step = 0.0);

}  // namespace bte
