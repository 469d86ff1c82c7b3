#pragma once

#include <functional>

#include "bte/discretization.hpp"

namespace bte {

// Analytic phase-space function with its exact derivative along w.
struct PhaseFunction {
  std::function<double(const Vec3& x, const Vec3& w, double E)> value;
  std::function<double(const Vec3& x, const Vec3& w, double E)> along;  // w . grad_x value
};

struct GreenReport {
  double volume = 0;    // int (w.grad u) v + (w.grad v) u
  double boundary = 0;  // surface integral of (w.n) u v
  double residual = 0;  // |volume - boundary| / (|volume| + |boundary| + 1)
};

GreenReport check_green_identity(const PhaseFunction& u, const PhaseFunction& v, const PhaseGrid& grid);

}  // namespace bte
