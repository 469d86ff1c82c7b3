#pragma once

#include <variant>

#include "bte/vec3.hpp"

namespace bte {

struct Ball {
  Vec3 center;
  double radius = 1;
};

struct Box {
  Vec3 lo;
  Vec3 hi{1, 1, 1};
};

struct BoundaryHit {
  Vec3 point;
  Vec3 normal;
  double time = 0;
  int face = -1;  // box face 2*axis + (hi ? 1 : 0); -1 for the ball
};

enum class FlowClass { Inflow, Outflow, Tangent };

class Domain {
public:
  static Domain ball(const Vec3& center, double radius);
  static Domain box(const Vec3& lo, const Vec3& hi);

  bool is_ball() const { return std::holds_alternative<Ball>(shape_); }
  const Ball& as_ball() const { return std::get<Ball>(shape_); }
  const Box& as_box() const { return std::get<Box>(shape_); }

  bool contains(const Vec3& x) const;
  bool contains_closure(const Vec3& x) const;
  double diameter() const;
  double volume() const;
  Vec3 bbox_lo() const;
  Vec3 bbox_hi() const;
  double tolerance() const;  // 1e-12 * diameter, floored at 1e-14

  // Outward normal at a boundary point. For a box edge the face with the
  // largest coordinate excess wins.
  Vec3 normal_at(const Vec3& y) const;

  bool operator==(const Domain& o) const;

private:
  explicit Domain(std::variant<Ball, Box> s) : shape_(s) {}
  std::variant<Ball, Box> shape_;
};

double escape_time(const Domain& dom, const Vec3& x, const Vec3& w);
double escape_time_forward(const Domain& dom, const Vec3& y, const Vec3& w);
BoundaryHit boundary_hit(const Domain& dom, const Vec3& x, const Vec3& w);
FlowClass classify_boundary(const Domain& dom, const Vec3& y, const Vec3& w);

// Backward escape time without precondition checks; x must lie in the closure.
double escape_time_unchecked(const Domain& dom, const Vec3& x, const Vec3& w);

}  // namespace bte
