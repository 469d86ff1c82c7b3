#pragma once

#include <cstdint>
#include <vector>

#include "bte/cross_sections.hpp"
#include "bte/discretization.hpp"
#include "bte/dose.hpp"
#include "bte/sources.hpp"

namespace bte {

struct McResult {
  DoseMap dose;
  std::vector<double> std_error;  // per node
  long long n_particles = 0;
  std::uint64_t seed = 0;
};

// Counter-based generator: stream k of seed s is independent of how streams are scheduled.
class SplitMix64 {
public:
  SplitMix64(std::uint64_t seed, std::uint64_t stream);
  std::uint64_t next();
  double uniform();  // in [0,1)

private:
  std::uint64_t state_;
};

// Analog Monte Carlo dose with a track-length estimator, tallied per lattice cell
// and divided by the cell volume inside G.
McResult mc_transport_dose(const CrossSections& xs, const SourceSet& sources, const PhaseGrid& grid,
                           long long n_particles, std::uint64_t seed);

// Volume of lattice cell cut by G for every node.
std::vector<double> cell_volumes_in_domain(const PhaseGrid& grid);

}  // namespace bte
