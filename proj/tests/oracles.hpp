#pragma once

// Test-side reference computations. None of these call into the solver paths
// they are used to check.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "bte/vec3.hpp"

namespace oracle {

inline bool in_ball(const bte::Vec3& x, const bte::Vec3& c, double r) {
  bte::Vec3 d = x - c;
  return bte::dot(d, d) < r * r;
}

inline bool in_box(const bte::Vec3& x, const bte::Vec3& lo, const bte::Vec3& hi) {
  for (int a = 0; a < 3; ++a)
    if (!(x[a] > lo[a] && x[a] < hi[a])) return false;
  return true;
}

// Backward exit time by bracketing and bisection on a membership test.
template <class Inside>
double exit_time_bisect(const Inside& inside, const bte::Vec3& x, const bte::Vec3& w, double tmax) {
  double a = 0, b = tmax;
  for (int k = 0; k < 200; ++k) {
    double m = 0.5 * (a + b);
    if (inside(x - m * w)) a = m;
    else b = m;
  }
  return 0.5 * (a + b);
}

inline bte::Vec3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0, 1);
  bte::Vec3 v{n(rng), n(rng), n(rng)};
  return bte::normalized(v);
}

inline bte::Vec3 random_in_ball(std::mt19937_64& rng, double r) {
  std::uniform_real_distribution<double> u(-r, r);
  for (;;) {
    bte::Vec3 x{u(rng), u(rng), u(rng)};
    if (bte::dot(x, x) < r * r) return x;
  }
}

// Composite Simpson rule on [a, b] with n (even) panels.
template <class F>
double simpson(const F& f, double a, double b, int n) {
  double h = (b - a) / n, s = f(a) + f(b);
  for (int k = 1; k < n; ++k) s += (k % 2 ? 4 : 2) * f(a + k * h);
  return s * h / 3;
}

// Legendre polynomial P_l(x) by the three-term recurrence.
inline double legendre(int l, double x) {
  double p0 = 1, p1 = x;
  if (l == 0) return p0;
  for (int k = 2; k <= l; ++k) {
    double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  return p1;
}

inline double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace oracle
