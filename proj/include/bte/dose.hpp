#pragma once

#include <vector>

#include "bte/cross_sections.hpp"
#include "bte/discretization.hpp"

namespace bte {

// One value per spatial node.
using DoseMap = std::vector<double>;

DoseMap compute_dose(const PhaseField& psi, const CrossSections& xs, const PhaseGrid& grid);
PhaseField dose_adjoint(const DoseMap& d, const CrossSections& xs, const PhaseGrid& grid);

struct TimeGrid {
  double T = 1.0;
  int n_steps = 1;
  double dt() const { return T / n_steps; }
};

// Trapezoid-in-time integral; the trajectory holds n_steps + 1 samples.
DoseMap accumulate_dose(const std::vector<PhaseField>& traj, const TimeGrid& tg, const CrossSections& xs,
                        const PhaseGrid& grid);

double dose_inner(const DoseMap& a, const DoseMap& b, const PhaseGrid& grid);

}  // namespace bte
