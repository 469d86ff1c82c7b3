#pragma once

#include <array>
#include <string>
#include <vector>

#include "bte/cross_sections.hpp"
#include "bte/discretization.hpp"
#include "bte/dose.hpp"
#include "bte/transport.hpp"

namespace bte {

enum class Label { Target, Critical, Normal };
using RegionMap = std::vector<Label>;

enum class PlanMode { External, Internal };
enum class ControlReduction { Full, EnergyIndependent, EnergyAngleIndependent };

struct Prescription {
  double d0 = 1.0;      // target dose
  double dcap_c = 0.5;  // critical cap
  double dcap_n = 0.5;  // normal-tissue cap
  double dv_dc = 0.3;   // dose-volume threshold
  double dv_vc = 0.2;   // allowed critical volume fraction above dv_dc
  double c_t = 1, c_c = 1, c_n = 1, c_dv = 0;
  double c_ad = 0, c_sc = 0;
  double c = 1e-2;      // regularization
  double eps = 0;       // H_eps width; 0 selects 0.05 * dv_dc
  // tracking targets of the initial problem
  double track_t = -1;  // negative selects d0
  double track_c = 0, track_n = 0;
  PlanMode mode = PlanMode::External;
  ControlReduction reduction = ControlReduction::Full;

  double eps_value() const { return eps > 0 ? eps : 0.05 * dv_dc; }
  double track_target() const { return track_t >= 0 ? track_t : d0; }
  bool operator==(const Prescription&) const = default;
};

struct PlanningCase {
  const PhaseGrid* grid = nullptr;
  CrossSections xs;
  RegionMap regions;
  Prescription rx;
  std::array<bool, kSpecies> species{true, true, true};  // controllable species
  std::vector<char> pair_mask;  // external mode: usable inflow pairs; empty means all
};

// Control vector with the metric of its space (boundary or phase measure).
class ControlSpace {
public:
  explicit ControlSpace(const PlanningCase& pc);

  std::size_t size() const { return weights_.size(); }
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<char>& mask() const { return mask_; }
  double inner(const std::vector<double>& a, const std::vector<double>& b) const;
  double norm(const std::vector<double>& a) const;

  // control -> transport data
  PhaseField volume_source(const std::vector<double>& u) const;
  BoundaryField boundary_source(const std::vector<double>& u) const;
  // adjoint quantity restricted to control space (gamma_- psi* or the reduced average of psi*)
  std::vector<double> restrict_adjoint(const AdjointSolution& adj) const;
  void project(std::vector<double>& u) const;  // positive part on unmasked entries, zero elsewhere

  PlanMode mode() const { return mode_; }
  ControlReduction reduction() const { return reduction_; }

private:
  const PhaseGrid* grid_;
  PlanMode mode_;
  ControlReduction reduction_;
  std::vector<double> weights_;
  std::vector<char> mask_;
};

struct ObjectiveReport {
  double J_T = 0, J_C = 0, J_N = 0, J_DV = 0, J_ad = 0, J_sc = 0;
  double J_reg = 0;  // ||control||^2, weighted by c in the total
  double total = 0;
};

struct OptimalityResult {
  std::vector<double> control;
  PhaseField psi;
  PhaseField psi_star;
  DoseMap dose;
  ObjectiveReport objective;
  double kkt_residual = 0;
  double complementarity_residual = 0;
  double sign_residual = 0;
  int iterations = 0;
  std::vector<double> history;  // objective or update per iteration
  std::string status;
};

struct PlanOptions {
  SolveOptions solve;           // inner transport solves
  double theta = 0.5;           // fixed-point damping
  double fixed_point_tol = 1e-6;
  int max_fixed_point = 500;
  int max_pg_iter = 200;
  int multistart = 5;
  unsigned long long seed = 1;
};

ObjectiveReport evaluate_objective(const DoseMap& dose, const Prescription& rx, const RegionMap& regions, int p,
                                   const std::vector<double>* control, const ControlSpace* space,
                                   const PhaseField* psi, const PhaseGrid& grid);

struct GradientResult {
  std::vector<double> gradient;
  ObjectiveReport objective;
  PhaseField psi, psi_star;
  DoseMap dose;
};

// Objective (smooth terms plus c||u||^2) and its adjoint gradient in the control metric.
GradientResult objective_gradient(const PlanningCase& pc, const std::vector<double>& u, const PlanOptions& opts,
                                  bool with_gradient = true);
double objective_value(const PlanningCase& pc, const std::vector<double>& u, const PlanOptions& opts);

OptimalityResult solve_initial_external(const PlanningCase& pc, const PlanOptions& opts = {});
OptimalityResult solve_initial_internal(const PlanningCase& pc, const PlanOptions& opts = {});

enum class PlanPhase { Convex, DoseVolume };
OptimalityResult optimize_projected_gradient(const PlanningCase& pc, const std::vector<double>& init,
                                             PlanPhase phase, const PlanOptions& opts = {});

// Labels from analytic shapes: first matching shape wins, default Normal.
struct LabelShape {
  RegionShape shape;
  Label label = Label::Target;
  std::string name;
  bool operator==(const LabelShape&) const = default;
};
RegionMap label_regions(const std::vector<LabelShape>& shapes, const PhaseGrid& grid);

const char* to_string(Label l);

}  // namespace bte
