#include "bte/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bte/error.hpp"

namespace bte {

namespace {

void check_direction(const Vec3& w) {
  if (std::abs(norm(w) - 1.0) > 1e-12) throw Error(ErrorKind::BadDirection, "direction is not a unit vector");
}

constexpr double kFlowTau = 1e-12;

}  // namespace

Domain Domain::ball(const Vec3& center, double radius) {
  if (!(radius > 0)) throw Error(ErrorKind::InvalidArgument, "ball radius must be positive");
  return Domain(Ball{center, radius});
}

Domain Domain::box(const Vec3& lo, const Vec3& hi) {
  for (int a = 0; a < 3; ++a)
    if (!(lo[a] < hi[a])) throw Error(ErrorKind::InvalidArgument, "box requires lo < hi componentwise");
  return Domain(Box{lo, hi});
}

bool Domain::contains(const Vec3& x) const {
  if (is_ball()) {
    const Ball& b = as_ball();
    return norm(x - b.center) < b.radius;
  }
  const Box& b = as_box();
  for (int a = 0; a < 3; ++a)
    if (!(x[a] > b.lo[a] && x[a] < b.hi[a])) return false;
  return true;
}

bool Domain::contains_closure(const Vec3& x) const {
  double tol = tolerance();
  if (is_ball()) {
    const Ball& b = as_ball();
    return norm(x - b.center) <= b.radius + tol;
  }
  const Box& b = as_box();
  for (int a = 0; a < 3; ++a)
    if (x[a] < b.lo[a] - tol || x[a] > b.hi[a] + tol) return false;
  return true;
}

double Domain::diameter() const {
  if (is_ball()) return 2 * as_ball().radius;
  return norm(as_box().hi - as_box().lo);
}

double Domain::volume() const {
  if (is_ball()) return 4.0 / 3.0 * M_PI * std::pow(as_ball().radius, 3);
  Vec3 e = as_box().hi - as_box().lo;
  return e.x * e.y * e.z;
}

Vec3 Domain::bbox_lo() const {
  if (is_ball()) {
    const Ball& b = as_ball();
    return b.center - Vec3{b.radius, b.radius, b.radius};
  }
  return as_box().lo;
}

Vec3 Domain::bbox_hi() const {
  if (is_ball()) {
    const Ball& b = as_ball();
    return b.center + Vec3{b.radius, b.radius, b.radius};
  }
  return as_box().hi;
}

double Domain::tolerance() const { return std::max(1e-12 * diameter(), 1e-14); }

Vec3 Domain::normal_at(const Vec3& y) const {
  if (is_ball()) return normalized(y - as_ball().center);
  const Box& b = as_box();
  int best = 0;
  double best_excess = -std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    double lo_ex = b.lo[a] - y[a], hi_ex = y[a] - b.hi[a];
    if (lo_ex > best_excess) { best_excess = lo_ex; best = 2 * a; }
    if (hi_ex > best_excess) { best_excess = hi_ex; best = 2 * a + 1; }
  }
  Vec3 n;
  n[best / 2] = (best % 2) ? 1.0 : -1.0;
  return n;
}

bool Domain::operator==(const Domain& o) const {
  if (is_ball() != o.is_ball()) return false;
  if (is_ball()) return as_ball().center == o.as_ball().center && as_ball().radius == o.as_ball().radius;
  return as_box().lo == o.as_box().lo && as_box().hi == o.as_box().hi;
}

double escape_time_unchecked(const Domain& dom, const Vec3& x, const Vec3& w) {
  if (dom.is_ball()) {
    const Ball& b = dom.as_ball();
    Vec3 p = x - b.center;
    double xw = dot(p, w);
    double disc = xw * xw + b.radius * b.radius - dot(p, p);
    return std::max(0.0, xw + std::sqrt(std::max(0.0, disc)));
  }
  const Box& b = dom.as_box();
  double t = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    if (w[a] > 0) t = std::min(t, (x[a] - b.lo[a]) / w[a]);
    else if (w[a] < 0) t = std::min(t, (x[a] - b.hi[a]) / w[a]);
  }
  return std::max(0.0, t);
}

double escape_time(const Domain& dom, const Vec3& x, const Vec3& w) {
  check_direction(w);
  if (!dom.contains(x)) throw Error(ErrorKind::NotInterior, "point is not interior to the domain");
  return escape_time_unchecked(dom, x, w);
}

double escape_time_forward(const Domain& dom, const Vec3& y, const Vec3& w) {
  check_direction(w);
  if (!dom.contains_closure(y)) throw Error(ErrorKind::NotInterior, "point is outside the closed domain");
  return escape_time_unchecked(dom, y, -w);
}

BoundaryHit boundary_hit(const Domain& dom, const Vec3& x, const Vec3& w) {
  BoundaryHit hit;
  hit.time = escape_time(dom, x, w);
  hit.point = x - hit.time * w;
  if (dom.is_ball()) {
    hit.normal = normalized(hit.point - dom.as_ball().center);
  } else {
    const Box& b = dom.as_box();
    double best = std::numeric_limits<double>::infinity();
    for (int a = 0; a < 3; ++a) {
      double s = std::numeric_limits<double>::infinity();
      if (w[a] > 0) s = (x[a] - b.lo[a]) / w[a];
      else if (w[a] < 0) s = (x[a] - b.hi[a]) / w[a];
      if (s < best) {
        best = s;
        hit.face = 2 * a + (w[a] < 0 ? 1 : 0);
      }
    }
    hit.normal = Vec3{};
    hit.normal[hit.face / 2] = (hit.face % 2) ? 1.0 : -1.0;
    // snap onto the face to remove rounding drift
    hit.point[hit.face / 2] = (hit.face % 2) ? b.hi[hit.face / 2] : b.lo[hit.face / 2];
  }
  if (std::abs(dot(w, hit.normal)) < kFlowTau) throw Error(ErrorKind::TangentFace, "ray grazes the boundary");
  return hit;
}

FlowClass classify_boundary(const Domain& dom, const Vec3& y, const Vec3& w) {
  double tol = std::max(1e-9 * dom.diameter(), 1e-14);
  if (dom.is_ball()) {
    const Ball& b = dom.as_ball();
    if (std::abs(norm(y - b.center) - b.radius) > tol)
      throw Error(ErrorKind::NotOnBoundary, "point is not on the sphere");
    double wn = dot(w, normalized(y - b.center));
    if (wn < -kFlowTau) return FlowClass::Inflow;
    if (wn > kFlowTau) return FlowClass::Outflow;
    return FlowClass::Tangent;
  }
  const Box& b = dom.as_box();
  if (!dom.contains_closure(y)) throw Error(ErrorKind::NotOnBoundary, "point is outside the box");
  bool on_face = false, all_in = true, any_out = false;
  for (int a = 0; a < 3; ++a) {
    for (int side = 0; side < 2; ++side) {
      double plane = side ? b.hi[a] : b.lo[a];
      if (std::abs(y[a] - plane) > tol) continue;
      on_face = true;
      double wn = side ? w[a] : -w[a];
      if (!(wn < -kFlowTau)) all_in = false;
      if (wn > kFlowTau) any_out = true;
    }
  }
  if (!on_face) throw Error(ErrorKind::NotOnBoundary, "point is not on a box face");
  if (any_out) return FlowClass::Outflow;
  if (all_in) return FlowClass::Inflow;
  return FlowClass::Tangent;
}

}  // namespace bte
