#pragma once

#include <vector>

#include "bte/cross_sections.hpp"
#include "bte/discretization.hpp"

namespace bte {

struct SolveOptions {
  double ray_step = 0.0;  // 0 selects half the smallest cell size
  double tol = 1e-8;
  int max_iter = 500;
  double damping = 1.0;
  bool force_ray_march = false;
};

struct IterationReport {
  int iterations = 0;
  double residual = 0;
  double contraction = 0;             // empirical ratio of successive updates
  bool contraction_guaranteed = true; // false when validate() is not satisfied
  std::vector<double> updates;        // relative L1 update per iteration
};

struct Solution {
  PhaseField psi;
  IterationReport report;
};

struct Decomposition {
  PhaseField u;  // primary (uncollided)
  PhaseField w;  // secondary
  IterationReport report;
};

struct AdjointSolution {
  PhaseField psi_star;
  BoundaryField inflow_trace;  // discrete inflow trace of psi_star
  IterationReport report;
};

PhaseField lift(const BoundaryField& g, const PhaseGrid& grid);
BoundaryField trace(const PhaseField& psi, const PhaseGrid& grid, Side side);

PhaseField sweep_attenuated(const CrossSections& xs, const PhaseField& f, const BoundaryField& g,
                            const PhaseGrid& grid, const SolveOptions& opts = {});
PhaseField resolvent_convection(double lambda, const PhaseField& f, const PhaseGrid& grid,
                                const SolveOptions& opts = {});

Solution solve_coupled(const CrossSections& xs, const PhaseField& f, const BoundaryField& g, const PhaseGrid& grid,
                       const SolveOptions& opts = {});
Decomposition decompose_primary_secondary(const CrossSections& xs, const PhaseField& f, const BoundaryField& g,
                                          const PhaseGrid& grid, const SolveOptions& opts = {});

// Adjoint of the discrete forward map with homogeneous outflow data.
AdjointSolution solve_adjoint(const CrossSections& xs, const PhaseField& f_star, const PhaseGrid& grid,
                              const SolveOptions& opts = {});

}  // namespace bte
