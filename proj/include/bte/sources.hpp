#pragma once

#include <string>
#include <vector>

#include "bte/cross_sections.hpp"
#include "bte/discretization.hpp"
#include "bte/geometry.hpp"

namespace bte {

// Analytic volume source f_j(x, w, E) = amplitude * spatial(x) * [E in window].
struct VolumeSource {
  enum class Kind { Constant, GaussianBump, PerRegion } kind = Kind::Constant;
  std::string name;
  int species = 0;
  double amplitude = 1.0;
  Vec3 center;           // GaussianBump
  double width = 0.1;    // GaussianBump standard deviation
  RegionShape shape;     // PerRegion
  double e_lo = -1, e_hi = -1;  // energy window; negative selects the whole interval

  double spatial(const Vec3& x) const;
  bool operator==(const VolumeSource&) const = default;
};

// Analytic inflow source on a boundary patch with a direction cone around the inward normal.
// Ball: spherical cap about `axis` with half-angle `half_angle`. Box: face `face` (0..5 = -x,+x,-y,+y,-z,+z).
struct BoundarySource {
  std::string name;
  int species = 0;
  double amplitude = 1.0;
  Vec3 axis{0, 0, -1};
  double half_angle = M_PI / 2;  // radians
  int face = 0;
  double cone = M_PI / 2;        // max angle between w and the inward normal
  double taper = 0.0;            // cosine taper width (radians) at the cap edge
  double e_lo = -1, e_hi = -1;

  // patch profile at surface point y (0 outside, 1 inside, smooth across the taper)
  double patch(const Domain& dom, const Vec3& y) const;
  double value(const Domain& dom, const Vec3& y, const Vec3& w) const;
  double patch_area(const Domain& dom) const;  // area of the support
  bool operator==(const BoundarySource&) const = default;
};

struct SourceSet {
  std::vector<VolumeSource> volume;
  std::vector<BoundarySource> boundary;
  bool empty() const { return volume.empty() && boundary.empty(); }
  bool operator==(const SourceSet&) const = default;
};

double energy_window(double e_lo, double e_hi, double e0, double em, double E);
double window_width(double e_lo, double e_hi, double e0, double em);

PhaseField discretize_volume(const std::vector<VolumeSource>& f, const PhaseGrid& grid);
BoundaryField discretize_boundary(const std::vector<BoundarySource>& g, const PhaseGrid& grid);

}  // namespace bte
