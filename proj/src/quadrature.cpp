#include "bte/quadrature.hpp"

#include <gsl/gsl_integration.h>

#include <algorithm>
#include <numeric>

#include "bte/error.hpp"

namespace bte {

GaussRule gauss_legendre(int n, double a, double b) {
  if (n < 1) throw Error(ErrorKind::InvalidArgument, "Gauss-Legendre rule needs at least one point");
  gsl_integration_glfixed_table* table = gsl_integration_glfixed_table_alloc(static_cast<size_t>(n));
  std::vector<double> x(n), w(n);
  for (int i = 0; i < n; ++i) gsl_integration_glfixed_point(a, b, static_cast<size_t>(i), &x[i], &w[i], table);
  gsl_integration_glfixed_table_free(table);
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int l, int r) { return x[l] < x[r]; });
  GaussRule rule;
  for (int i : order) {
    rule.nodes.push_back(x[i]);
    rule.weights.push_back(w[i]);
  }
  return rule;
}

}  // namespace bte
