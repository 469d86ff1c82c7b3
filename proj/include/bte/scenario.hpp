#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "bte/cross_sections.hpp"
#include "bte/discretization.hpp"
#include "bte/geometry.hpp"
#include "bte/planning.hpp"
#include "bte/sources.hpp"
#include "bte/timedep.hpp"
#include "bte/transport.hpp"

namespace bte {

struct GridSpec {
  int nx = 16, n_polar = 8, n_azimuth = 16, n_energy = 2;
  double e0 = 0.0, em = 1.0;
  bool operator==(const GridSpec&) const = default;
};

enum class Profile { Constant, Ramp, Smooth };  // 1, min(1, t/tau), 1 - exp(-t/tau)

struct TimeSpec {
  double T = 1.0;
  int steps = 100;
  int series_order = 8;
  BoundaryTreatment treatment = BoundaryTreatment::Retarded;
  int keep_every = 1;
  std::array<double, kSpecies> mass{1, 1, 1};
  Profile boundary_profile = Profile::Constant, source_profile = Profile::Constant;
  double boundary_tau = 1.0, source_tau = 1.0;
  bool operator==(const TimeSpec&) const = default;
};

struct PlanSpec {
  Prescription rx;
  std::vector<LabelShape> labels;
  std::string labels_csv;
  std::array<bool, kSpecies> species{true, true, true};
  double theta = 0.5, fixed_point_tol = 1e-6;
  int max_fixed_point = 500, max_pg_iter = 200, multistart = 5;
  bool operator==(const PlanSpec&) const = default;
};

struct ProbeSpec {
  int p = 3;
  int levels = 8;
  int order = 8;
  bool operator==(const ProbeSpec&) const = default;
};

struct RunSpec {
  std::uint64_t seed = 1;
  long long particles = 100000;
  std::string out = "out";
  int threads = 0;  // 0: BTE_THREADS or hardware
  bool operator==(const RunSpec&) const = default;
};

struct Scenario {
  Domain domain = Domain::ball({}, 1);
  GridSpec grid;
  CrossSections xs;
  SourceSet sources;
  SolveOptions solve;
  TimeSpec time;
  PlanSpec plan;
  ProbeSpec probe;
  RunSpec run;

  bool operator==(const Scenario& o) const;
};

// Throws Error(ParseError) with "origin:line:col: message".
Scenario parse_scenario(const std::string& text, const std::string& origin = "config");
Scenario load_scenario(const std::string& path);
std::string serialize_scenario(const Scenario& s);

PhaseGrid build_grid(const Scenario& s);
double profile_value(Profile p, double tau, double t);
double profile_rate(Profile p, double tau, double t);

}  // namespace bte
