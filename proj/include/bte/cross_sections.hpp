#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "bte/discretization.hpp"
#include "bte/vec3.hpp"

namespace bte {

enum class AngularFamily { Isotropic, Screened };

struct Material {
  std::array<double, kSpecies> sigma_a{};
  std::array<double, kSpecies> sigma_s{};  // within-species scattering strength
  std::array<double, kSpecies> kappa{};
  // transfer[k][j]: strength of the isotropic k -> j coupling, k != j
  std::array<std::array<double, kSpecies>, kSpecies> transfer{};

  // Σ_j = absorption + within-species scattering + all transfers out of j
  double sigma_total(int j) const;
  // strength of the k -> j kernel (sigma_s on the diagonal)
  double strength(int k, int j) const { return k == j ? sigma_s[j] : transfer[k][j]; }
  bool has_kernel() const;
  bool operator==(const Material&) const = default;
};

struct RegionShape {
  enum class Kind { Sphere, Box } kind = Kind::Sphere;
  Vec3 center;
  double radius = 0;
  Vec3 lo, hi;

  bool contains(const Vec3& x) const;
  bool operator==(const RegionShape&) const = default;
};

struct XsRegion {
  std::string name;
  RegionShape shape;
  Material material;
  bool operator==(const XsRegion&) const = default;
};

// Tabulated kernel sigma(k->j, node, q', q, m', m). Refused above 2 GiB.
class DenseKernel {
public:
  static constexpr std::size_t kMaxBytes = std::size_t(2) << 30;
  explicit DenseKernel(const PhaseGrid& grid);

  double& at(int k, int j, int i, int qp, int q, int mp, int m) { return v_[index(k, j, i, qp, q, mp, m)]; }
  double at(int k, int j, int i, int qp, int q, int mp, int m) const { return v_[index(k, j, i, qp, q, mp, m)]; }
  int nodes() const { return nodes_; }
  int dirs() const { return dirs_; }
  int energies() const { return energies_; }

private:
  std::size_t index(int k, int j, int i, int qp, int q, int mp, int m) const {
    std::size_t r = static_cast<std::size_t>(k * kSpecies + j);
    r = r * nodes_ + i;
    r = (r * dirs_ + qp) * dirs_ + q;
    return (r * energies_ + mp) * energies_ + m;
  }
  int nodes_, dirs_, energies_;
  std::vector<double> v_;
};

class CrossSections {
public:
  Material background;
  std::vector<XsRegion> regions;  // first containing region wins
  AngularFamily family = AngularFamily::Isotropic;
  double g = 0.0;  // screening parameter in [0,1)
  // replaces the separable kernel when set; totals still come from the materials
  std::shared_ptr<const DenseKernel> dense;

  static CrossSections uniform(double sigma_a, double sigma_s, double kappa = 1.0);

  int region_index(const Vec3& x) const;  // -1 for background
  const Material& material(int region) const { return region < 0 ? background : regions[region].material; }
  const Material& material_at(const Vec3& x) const { return material(region_index(x)); }
  bool has_kernel() const;
  bool uniform_totals() const;
  bool operator==(const CrossSections& o) const {
    return background == o.background && regions == o.regions && family == o.family && g == o.g &&
           dense == o.dense;
  }
};

struct SubCriticalityReport {
  double c_row = 0, c_col = 0;
  double C_row = 0, C_col = 0;
  bool satisfied = false;
};

SubCriticalityReport validate(const CrossSections& xs, const PhaseGrid& grid);

// K bound to a grid: region lookup and angular matrices are cached.
class CollisionOperator {
public:
  CollisionOperator(const CrossSections& xs, const PhaseGrid& grid);

  PhaseField apply(const PhaseField& psi) const;
  PhaseField apply_adjoint(const PhaseField& phi) const;
  bool is_zero() const { return zero_; }
  // scale output species j at energy m by factor(j, m); used for speed scaling
  void set_receiver_scale(std::vector<double> scale) { scale_ = std::move(scale); }

  // discrete outgoing-angle density for the within-species kernel: row qp, column q
  double angular(int qp, int q) const;
  double strength(int i, int k, int j) const { return materials_[region_[i]].strength(k, j); }

private:
  void apply_impl(const PhaseField& in, PhaseField& out, bool adjoint) const;

  const PhaseGrid* grid_;
  const CrossSections* xs_;
  std::vector<int> region_;        // per node, offset by one (0 = background)
  std::vector<Material> materials_;
  bool isotropic_ = true;
  bool zero_ = false;
  std::vector<double> A_;          // Nq x Nq normalized screened matrix
  std::vector<double> scale_;      // kSpecies x Nm
};

PhaseField apply_collision(const CrossSections& xs, const PhaseField& psi, const PhaseGrid& grid);
PhaseField apply_collision_adjoint(const CrossSections& xs, const PhaseField& phi, const PhaseGrid& grid);

// Σ_j at every spatial node, laid out node-major.
std::vector<std::array<double, kSpecies>> node_totals(const CrossSections& xs, const PhaseGrid& grid);

}  // namespace bte
