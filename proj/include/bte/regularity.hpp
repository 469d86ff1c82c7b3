#pragma once

#include <string>
#include <vector>

#include "bte/geometry.hpp"

namespace bte {

struct RegularityCase {
  Domain domain = Domain::ball({}, 1);
  double sigma = 1.0;   // total cross section; the closed form needs 1
  double source = 1.0;  // constant source; the closed form needs 1
  int order = 8;        // Gauss points per graded panel
};

// Decreasing margins 0.1 .. 0.001, geometric.
std::vector<double> default_margins(int levels = 8);

// ||d psi / d x_j||_{L^p(G_eps x S)} summed over j as (sum_j int |.|^p)^(1/p), psi = 1 - exp(-t(x,w)),
// for each margin eps (G_eps = B(c, r - eps)).
std::vector<double> regularity_probe(int p, const std::vector<double>& eps, const RegularityCase& rc = {});

enum class RegularityVerdict { Bounded, Divergent, Undecided };
// Ratio of the last two increments of N^p: >= 0.9 divergent, <= 0.8 bounded.
RegularityVerdict classify_regularity(const std::vector<double>& norms, int p);
const char* to_string(RegularityVerdict v);

}  // namespace bte
