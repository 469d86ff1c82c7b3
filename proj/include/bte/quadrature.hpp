#pragma once

#include <vector>

namespace bte {

struct GaussRule {
  std::vector<double> nodes;    // increasing
  std::vector<double> weights;
};

// n-point Gauss-Legendre rule on [a, b].
GaussRule gauss_legendre(int n, double a, double b);

}  // namespace bte
