#include "bte/sources.hpp"

#include <algorithm>
#include <cmath>

#include "bte/error.hpp"

namespace bte {

namespace {

double cos_taper(double t) { return 0.5 * (1 + std::cos(M_PI * std::clamp(t, 0.0, 1.0))); }

}  // namespace

double energy_window(double e_lo, double e_hi, double e0, double em, double E) {
  double lo = e_lo < 0 ? e0 : e_lo, hi = e_hi < 0 ? em : e_hi;
  return (E >= lo && E <= hi) ? 1.0 : 0.0;
}

double window_width(double e_lo, double e_hi, double e0, double em) {
  double lo = std::max(e_lo < 0 ? e0 : e_lo, e0), hi = std::min(e_hi < 0 ? em : e_hi, em);
  return std::max(0.0, hi - lo);
}

double VolumeSource::spatial(const Vec3& x) const {
  switch (kind) {
    case Kind::Constant: return amplitude;
    case Kind::GaussianBump: {
      Vec3 d = x - center;
      return amplitude * std::exp(-dot(d, d) / (2 * width * width));
    }
    case Kind::PerRegion: return shape.contains(x) ? amplitude : 0.0;
  }
  return 0.0;
}

double BoundarySource::patch(const Domain& dom, const Vec3& y) const {
  if (dom.is_ball()) {
    const Ball& b = dom.as_ball();
    Vec3 a = normalized(axis);
    double c = std::clamp(dot(y - b.center, a) / b.radius, -1.0, 1.0);
    double theta = std::acos(c);
    if (theta >= half_angle) return 0.0;
    if (taper <= 0 || theta <= half_angle - taper) return 1.0;
    return cos_taper((theta - (half_angle - taper)) / taper);
  }
  const Box& bx = dom.as_box();
  int ax = face / 2;
  double plane = face % 2 ? bx.hi[ax] : bx.lo[ax];
  if (std::abs(y[ax] - plane) > 1e-9 * dom.diameter()) return 0.0;
  double v = 1.0;
  for (int a = 0; a < 3; ++a) {
    if (a == ax) continue;
    double d = std::min(y[a] - bx.lo[a], bx.hi[a] - y[a]);
    if (d < 0) return 0.0;
    if (taper > 0 && d < taper) v *= cos_taper(1 - d / taper);
  }
  return v;
}

double BoundarySource::value(const Domain& dom, const Vec3& y, const Vec3& w) const {
  double p = patch(dom, y);
  if (p == 0) return 0.0;
  Vec3 n = dom.normal_at(y);
  double c = -dot(w, n);
  if (c <= 0) return 0.0;
  if (std::acos(std::min(1.0, c)) > cone) return 0.0;
  return amplitude * p;
}

double BoundarySource::patch_area(const Domain& dom) const {
  if (dom.is_ball()) {
    double r = dom.as_ball().radius;
    return 2 * M_PI * r * r * (1 - std::cos(std::min(half_angle, M_PI)));
  }
  const Box& bx = dom.as_box();
  int ax = face / 2;
  double area = 1;
  for (int a = 0; a < 3; ++a)
    if (a != ax) area *= bx.hi[a] - bx.lo[a];
  return area;
}

PhaseField discretize_volume(const std::vector<VolumeSource>& f, const PhaseGrid& grid) {
  PhaseField out(grid);
  for (const VolumeSource& s : f) {
    if (s.species < 0 || s.species >= kSpecies) throw Error(ErrorKind::InvalidArgument, "source species out of range");
    for (int i = 0; i < grid.nodes(); ++i) {
      double v = s.spatial(grid.spatial.point(i));
      if (v == 0) continue;
      for (int m = 0; m < grid.energies(); ++m) {
        double e = energy_window(s.e_lo, s.e_hi, grid.energy.e0, grid.energy.em, grid.energy.nodes[m]);
        if (e == 0) continue;
        for (int q = 0; q < grid.dirs(); ++q) out(s.species, i, q, m) += v * e;
      }
    }
  }
  return out;
}

BoundaryField discretize_boundary(const std::vector<BoundarySource>& g, const PhaseGrid& grid) {
  BoundaryField out(grid, Side::Inflow);
  const BoundarySamples& bs = grid.inflow;
  for (const BoundarySource& s : g) {
    if (s.species < 0 || s.species >= kSpecies) throw Error(ErrorKind::InvalidArgument, "source species out of range");
    if (!grid.domain.is_ball() && (s.face < 0 || s.face > 5))
      throw Error(ErrorKind::InvalidArgument, "box face must lie in 0..5");
    for (int p = 0; p < bs.pairs(); ++p) {
      const Vec3& y = grid.surface.point(bs.surface[p]);
      const Vec3& w = grid.angular.nodes[bs.direction[p]];
      if (!grid.domain.is_ball() && grid.surface.face(bs.surface[p]) != s.face) continue;
      double v = s.value(grid.domain, y, w);
      if (v == 0) continue;
      for (int m = 0; m < grid.energies(); ++m)
        out(s.species, p, m) += v * energy_window(s.e_lo, s.e_hi, grid.energy.e0, grid.energy.em, grid.energy.nodes[m]);
    }
  }
  return out;
}

}  // namespace bte
