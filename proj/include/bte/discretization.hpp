#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "bte/geometry.hpp"
#include "bte/vec3.hpp"

namespace bte {

constexpr int kSpecies = 3;

struct AngularQuadrature {
  std::vector<Vec3> nodes;
  std::vector<double> weights;
  std::vector<int> antipode;  // -1 where no antipodal node exists
  int n_polar = 0, n_azimuth = 0;

  static AngularQuadrature product(int n_polar, int n_azimuth);
  int size() const { return static_cast<int>(nodes.size()); }
  bool antipodally_closed() const;
};

struct EnergyGrid {
  double e0 = 0, em = 1;
  std::vector<double> nodes, weights;

  static EnergyGrid gauss(double e0, double em, int n);
  int size() const { return static_cast<int>(nodes.size()); }
  double width() const { return em - e0; }
};

enum class Extension { Zero, Normalized };

struct Stencil {
  int n = 0;
  std::array<int, 8> node{};
  std::array<double, 8> weight{};
};

class SpatialGrid {
public:
  static SpatialGrid build(const Domain& dom, int nx);

  int size() const { return static_cast<int>(points_.size()); }
  const Vec3& point(int i) const { return points_[i]; }
  double weight(int) const { return cell_volume_; }
  double cell_volume() const { return cell_volume_; }
  const std::array<int, 3>& lattice(int i) const { return lattice_[i]; }
  const std::array<int, 3>& dims() const { return dims_; }
  const Vec3& spacing() const { return h_; }
  const Vec3& origin() const { return lo_; }
  double min_spacing() const;
  // node index of lattice cell (ix,iy,iz), -1 when the cell centre is outside G
  int node_at(int ix, int iy, int iz) const;
  Vec3 cell_center(int ix, int iy, int iz) const;

  Stencil stencil(const Vec3& p, Extension ext) const;
  // Trilinear offset and weights for a displacement d, shared by every node.
  struct Shift {
    std::array<int, 3> base{};
    std::array<double, 8> weight{};
  };
  Shift shift(const Vec3& d) const;
  // Normalized stencil at point(i) + d for data with zero inflow along w: outside
  // lattice cells whose ray c + tw enters G count as zero, other outside cells are dropped.
  Stencil stencil_upstream(int i, const Shift& sh, const Domain& dom, const Vec3& w) const;

private:
  std::vector<Vec3> points_;
  std::vector<std::array<int, 3>> lattice_;
  std::vector<int> lattice_to_node_;
  std::vector<int> nearest_;  // nearest interior node per lattice cell
  std::array<int, 3> dims_{};
  Vec3 lo_, h_;
  double cell_volume_ = 0;
};

struct SurfaceStencil {
  int n = 0;
  std::array<int, 4> node{};
  std::array<double, 4> weight{};
};

// Quadrature on the boundary: latitude-longitude for the ball, midpoint grids per box face.
class SurfaceGrid {
public:
  static SurfaceGrid build(const Domain& dom, int nx);

  int size() const { return static_cast<int>(points_.size()); }
  const Vec3& point(int s) const { return points_[s]; }
  const Vec3& normal(int s) const { return normals_[s]; }
  double area(int s) const { return areas_[s]; }
  int face(int s) const { return faces_[s]; }

  // Bilinear weights over neighbouring surface nodes. face_hint selects the box face.
  SurfaceStencil stencil(const Vec3& y, int face_hint) const;

private:
  bool ball_ = true;
  Vec3 center_;
  double radius_ = 1;
  std::vector<double> mu_;
  int n_phi_ = 0;
  // box faces: lattice extents per face
  Box box_;
  std::array<int, 6> face_offset_{};
  std::array<std::array<int, 2>, 6> face_dims_{};
  std::vector<Vec3> points_, normals_;
  std::vector<double> areas_;
  std::vector<int> faces_;
};

enum class Side { Inflow, Outflow };

// Surface node x direction pairs on one side, grouped by direction.
struct BoundarySamples {
  Side side = Side::Inflow;
  std::vector<int> surface;   // per pair
  std::vector<int> direction; // per pair
  std::vector<double> weight; // area * w_q * |w.n|
  std::vector<int> dir_begin; // pairs of direction q are [dir_begin[q], dir_begin[q+1])
  std::vector<int> pair_of;   // surface * Nq + q -> pair or -1

  int pairs() const { return static_cast<int>(surface.size()); }
};

struct PhaseGrid {
  Domain domain = Domain::ball({}, 1);
  SpatialGrid spatial;
  AngularQuadrature angular;
  EnergyGrid energy;
  SurfaceGrid surface;
  BoundarySamples inflow, outflow;

  int nodes() const { return spatial.size(); }
  int dirs() const { return angular.size(); }
  int energies() const { return energy.size(); }
  const BoundarySamples& samples(Side s) const { return s == Side::Inflow ? inflow : outflow; }
  double ray_step_default() const { return spatial.min_spacing() / 2; }
};

PhaseGrid build_phase_grid(const Domain& dom, int nx, int n_polar, int n_azimuth, int n_energy,
                           double e0 = 0.0, double em = 1.0);

class PhaseField {
public:
  PhaseField() = default;
  PhaseField(int nodes, int dirs, int energies, double value = 0.0);
  explicit PhaseField(const PhaseGrid& grid, double value = 0.0)
      : PhaseField(grid.nodes(), grid.dirs(), grid.energies(), value) {}

  std::size_t index(int j, int i, int q, int m) const {
    return ((static_cast<std::size_t>(j) * nodes_ + i) * dirs_ + q) * energies_ + m;
  }
  double& operator()(int j, int i, int q, int m) { return v_[index(j, i, q, m)]; }
  double operator()(int j, int i, int q, int m) const { return v_[index(j, i, q, m)]; }

  int nodes() const { return nodes_; }
  int dirs() const { return dirs_; }
  int energies() const { return energies_; }
  std::size_t size() const { return v_.size(); }
  std::vector<double>& data() { return v_; }
  const std::vector<double>& data() const { return v_; }

  bool matches(const PhaseGrid& g) const {
    return nodes_ == g.nodes() && dirs_ == g.dirs() && energies_ == g.energies();
  }
  bool same_shape(const PhaseField& o) const {
    return nodes_ == o.nodes_ && dirs_ == o.dirs_ && energies_ == o.energies_;
  }
  bool species_is_zero(int j) const;

  PhaseField& operator+=(const PhaseField& o);
  PhaseField& operator-=(const PhaseField& o);
  PhaseField& operator*=(double s);
  bool operator==(const PhaseField&) const = default;

private:
  int nodes_ = 0, dirs_ = 0, energies_ = 0;
  std::vector<double> v_;
};

PhaseField operator+(PhaseField a, const PhaseField& b);
PhaseField operator-(PhaseField a, const PhaseField& b);
PhaseField operator*(double s, PhaseField a);

// Values on the boundary samples of one side, indexed (species, pair, energy).
class BoundaryField {
public:
  BoundaryField() = default;
  BoundaryField(const PhaseGrid& grid, Side side, double value = 0.0);

  std::size_t index(int j, int p, int m) const {
    return (static_cast<std::size_t>(j) * pairs_ + p) * energies_ + m;
  }
  double& operator()(int j, int p, int m) { return v_[index(j, p, m)]; }
  double operator()(int j, int p, int m) const { return v_[index(j, p, m)]; }

  Side side() const { return side_; }
  int pairs() const { return pairs_; }
  int energies() const { return energies_; }
  std::size_t size() const { return v_.size(); }
  std::vector<double>& data() { return v_; }
  const std::vector<double>& data() const { return v_; }
  bool matches(const PhaseGrid& g, Side s) const {
    return side_ == s && pairs_ == g.samples(s).pairs() && energies_ == g.energies();
  }
  bool is_zero() const;

  BoundaryField& operator+=(const BoundaryField& o);
  BoundaryField& operator*=(double s);

private:
  Side side_ = Side::Inflow;
  int pairs_ = 0, energies_ = 0;
  std::vector<double> v_;
};

// sum_j (sum |v|^p w)^(1/p) for p=1; (sum_j ||v_j||_p^p)^(1/p) for p=2,3
double integrate_phase(const PhaseField& f, const PhaseGrid& grid, int p);
double inner(const PhaseField& a, const PhaseField& b, const PhaseGrid& grid);
double boundary_norm(const BoundaryField& g, const PhaseGrid& grid);  // T^1 norm
double boundary_inner(const BoundaryField& a, const BoundaryField& b, const PhaseGrid& grid);
double min_value(const PhaseField& f);

double interpolate_spatial(const PhaseField& f, const PhaseGrid& grid, const Vec3& x, int j, int q, int m,
                           Extension ext = Extension::Zero);

// Boundary value lookup for direction q at surface point y; weights sum to one.
SurfaceStencil boundary_lookup(const PhaseGrid& grid, Side side, int q, const Vec3& y, int face);

}  // namespace bte
