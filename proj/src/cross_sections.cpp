#include "bte/cross_sections.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bte/error.hpp"
#include "bte/parallel.hpp"

namespace bte {

double Material::sigma_total(int j) const {
  double s = sigma_a[j] + sigma_s[j];
  for (int k = 0; k < kSpecies; ++k)
    if (k != j) s += transfer[j][k];
  return s;
}

bool Material::has_kernel() const {
  for (int j = 0; j < kSpecies; ++j) {
    if (sigma_s[j] != 0) return true;
    for (int k = 0; k < kSpecies; ++k)
      if (k != j && transfer[k][j] != 0) return true;
  }
  return false;
}

bool RegionShape::contains(const Vec3& x) const {
  if (kind == Kind::Sphere) return norm(x - center) < radius;
  for (int a = 0; a < 3; ++a)
    if (!(x[a] > lo[a] && x[a] < hi[a])) return false;
  return true;
}

DenseKernel::DenseKernel(const PhaseGrid& grid)
    : nodes_(grid.nodes()), dirs_(grid.dirs()), energies_(grid.energies()) {
  double count = static_cast<double>(kSpecies) * kSpecies * nodes_ * dirs_ * dirs_ * energies_ * energies_;
  if (count * sizeof(double) > static_cast<double>(kMaxBytes))
    throw Error(ErrorKind::MemoryLimit, "dense kernel table would exceed 2 GiB");
  v_.assign(static_cast<std::size_t>(count), 0.0);
}

CrossSections CrossSections::uniform(double sigma_a, double sigma_s, double kappa) {
  CrossSections xs;
  xs.background.sigma_a.fill(sigma_a);
  xs.background.sigma_s.fill(sigma_s);
  xs.background.kappa.fill(kappa);
  return xs;
}

int CrossSections::region_index(const Vec3& x) const {
  for (std::size_t r = 0; r < regions.size(); ++r)
    if (regions[r].shape.contains(x)) return static_cast<int>(r);
  return -1;
}

bool CrossSections::has_kernel() const {
  if (dense) return true;
  if (background.has_kernel()) return true;
  return std::any_of(regions.begin(), regions.end(), [](const XsRegion& r) { return r.material.has_kernel(); });
}

bool CrossSections::uniform_totals() const {
  for (const XsRegion& r : regions)
    for (int j = 0; j < kSpecies; ++j)
      if (r.material.sigma_total(j) != background.sigma_total(j)) return false;
  return true;
}

std::vector<std::array<double, kSpecies>> node_totals(const CrossSections& xs, const PhaseGrid& grid) {
  std::vector<std::array<double, kSpecies>> out(grid.nodes());
  for (int i = 0; i < grid.nodes(); ++i) {
    const Material& mat = xs.material_at(grid.spatial.point(i));
    for (int j = 0; j < kSpecies; ++j) out[i][j] = mat.sigma_total(j);
  }
  return out;
}

// ---------------------------------------------------------------- collision operator

namespace {

double screened_density(double g, double mu) {
  double d = 1 + g * g - 2 * g * mu;
  return (1 - g * g) / (4 * M_PI * d * std::sqrt(d));
}

}  // namespace

CollisionOperator::CollisionOperator(const CrossSections& xs, const PhaseGrid& grid) : grid_(&grid), xs_(&xs) {
  materials_.push_back(xs.background);
  for (const XsRegion& r : xs.regions) materials_.push_back(r.material);
  region_.resize(grid.nodes());
  for (int i = 0; i < grid.nodes(); ++i) region_[i] = xs.region_index(grid.spatial.point(i)) + 1;
  zero_ = !xs.has_kernel();
  if (xs.dense) {
    const DenseKernel& d = *xs.dense;
    if (d.nodes() != grid.nodes() || d.dirs() != grid.dirs() || d.energies() != grid.energies())
      throw Error(ErrorKind::ShapeMismatch, "dense kernel does not match grid");
  }
  isotropic_ = xs.family == AngularFamily::Isotropic || xs.g == 0.0;
  if (!isotropic_) {
    if (!(xs.g >= 0 && xs.g < 1)) throw Error(ErrorKind::InvalidArgument, "screening parameter must lie in [0,1)");
    int nq = grid.dirs();
    A_.assign(static_cast<std::size_t>(nq) * nq, 0.0);
    for (int qp = 0; qp < nq; ++qp) {
      double row = 0;
      for (int q = 0; q < nq; ++q) {
        double a = screened_density(xs.g, dot(grid.angular.nodes[qp], grid.angular.nodes[q]));
        A_[static_cast<std::size_t>(qp) * nq + q] = a;
        row += grid.angular.weights[q] * a;
      }
      for (int q = 0; q < nq; ++q) A_[static_cast<std::size_t>(qp) * nq + q] /= row;
    }
  }
}

double CollisionOperator::angular(int qp, int q) const {
  if (isotropic_) {
    double w = 0;
    for (double x : grid_->angular.weights) w += x;
    return 1.0 / w;
  }
  return A_[static_cast<std::size_t>(qp) * grid_->dirs() + q];
}

PhaseField CollisionOperator::apply(const PhaseField& psi) const {
  if (!psi.matches(*grid_)) throw Error(ErrorKind::ShapeMismatch, "field does not match grid");
  PhaseField out(*grid_);
  if (!zero_) apply_impl(psi, out, false);
  return out;
}

PhaseField CollisionOperator::apply_adjoint(const PhaseField& phi) const {
  if (!phi.matches(*grid_)) throw Error(ErrorKind::ShapeMismatch, "field does not match grid");
  PhaseField out(*grid_);
  if (!zero_) apply_impl(phi, out, true);
  return out;
}

void CollisionOperator::apply_impl(const PhaseField& in, PhaseField& out, bool adjoint) const {
  const PhaseGrid& g = *grid_;
  int nq = g.dirs(), nm = g.energies();
  const auto& wq = g.angular.weights;
  const auto& wm = g.energy.weights;
  double width = g.energy.width();
  double wsum = 0;
  for (double x : wq) wsum += x;
  auto scale = [&](int j, int m) { return scale_.empty() ? 1.0 : scale_[j * nm + m]; };

  if (xs_->dense) {
    const DenseKernel& d = *xs_->dense;
    parallel_for(g.nodes(), [&](std::size_t b, std::size_t e) {
      for (std::size_t ii = b; ii < e; ++ii) {
        int i = static_cast<int>(ii);
        for (int j = 0; j < kSpecies; ++j)
          for (int q = 0; q < nq; ++q)
            for (int m = 0; m < nm; ++m) {
              double s = 0;
              for (int k = 0; k < kSpecies; ++k)
                for (int qp = 0; qp < nq; ++qp)
                  for (int mp = 0; mp < nm; ++mp) {
                    double v = adjoint ? in(k, i, qp, mp) * scale(k, mp) : in(k, i, qp, mp);
                    double sig = adjoint ? d.at(j, k, i, q, qp, m, mp) : d.at(k, j, i, qp, q, mp, m);
                    s += sig * v * wq[qp] * wm[mp];
                  }
              out(j, i, q, m) = adjoint ? s : s * scale(j, m);
            }
      }
    });
    return;
  }

  parallel_for(g.nodes(), [&](std::size_t b, std::size_t e) {
    std::vector<double> phi(static_cast<std::size_t>(kSpecies) * nq), res(nq);
    for (std::size_t ii = b; ii < e; ++ii) {
      int i = static_cast<int>(ii);
      const Material& mat = materials_[region_[i]];
      double total[kSpecies];
      for (int k = 0; k < kSpecies; ++k) {
        total[k] = 0;
        for (int q = 0; q < nq; ++q) {
          const double* v = &in.data()[in.index(k, i, q, 0)];
          double s = 0;
          for (int m = 0; m < nm; ++m) s += wm[m] * v[m] * (adjoint ? scale(k, m) : 1.0);
          phi[k * nq + q] = s / width;
          total[k] += wq[q] * phi[k * nq + q];
        }
      }
      for (int j = 0; j < kSpecies; ++j) {
        // isotropic part: transfers plus the diagonal when isotropic
        double iso = 0;
        for (int k = 0; k < kSpecies; ++k) {
          if (k == j && !isotropic_) continue;
          double s = adjoint ? mat.strength(j, k) : mat.strength(k, j);
          iso += s * total[k] / wsum;
        }
        double sd = mat.strength(j, j);
        if (!isotropic_ && sd != 0) {
          for (int q = 0; q < nq; ++q) {
            double s = 0;
            if (adjoint) {
              const double* row = &A_[static_cast<std::size_t>(q) * nq];
              for (int qp = 0; qp < nq; ++qp) s += row[qp] * wq[qp] * phi[j * nq + qp];
            } else {
              for (int qp = 0; qp < nq; ++qp) s += A_[static_cast<std::size_t>(qp) * nq + q] * wq[qp] * phi[j * nq + qp];
            }
            res[q] = iso + sd * s;
          }
        } else {
          std::fill(res.begin(), res.end(), iso);
        }
        for (int q = 0; q < nq; ++q) {
          double* o = &out.data()[out.index(j, i, q, 0)];
          for (int m = 0; m < nm; ++m) o[m] = adjoint ? res[q] : res[q] * scale(j, m);
        }
      }
    }
  });
}

PhaseField apply_collision(const CrossSections& xs, const PhaseField& psi, const PhaseGrid& grid) {
  return CollisionOperator(xs, grid).apply(psi);
}

PhaseField apply_collision_adjoint(const CrossSections& xs, const PhaseField& phi, const PhaseGrid& grid) {
  return CollisionOperator(xs, grid).apply_adjoint(phi);
}

// ---------------------------------------------------------------- validation

SubCriticalityReport validate(const CrossSections& xs, const PhaseGrid& grid) {
  auto check = [](const Material& m) {
    for (int j = 0; j < kSpecies; ++j) {
      if (m.sigma_a[j] < 0 || m.sigma_s[j] < 0 || m.kappa[j] < 0)
        throw Error(ErrorKind::NegativeData, "negative cross-section entry");
      for (int k = 0; k < kSpecies; ++k)
        if (m.transfer[j][k] < 0) throw Error(ErrorKind::NegativeData, "negative transfer kernel");
    }
  };
  check(xs.background);
  for (const XsRegion& r : xs.regions) check(r.material);

  CollisionOperator op(xs, grid);
  int nq = grid.dirs(), nm = grid.energies();
  const auto& wq = grid.angular.weights;
  const auto& wm = grid.energy.weights;
  double width = grid.energy.width();

  // angular row/column integrals of the within-species kernel
  std::vector<double> arow(nq, 0.0), acol(nq, 0.0);
  for (int q = 0; q < nq; ++q)
    for (int qp = 0; qp < nq; ++qp) {
      arow[q] += wq[qp] * op.angular(q, qp);
      acol[q] += wq[qp] * op.angular(qp, q);
    }
  double esum = 0;
  for (double x : wm) esum += x;
  double efac = esum / width;

  SubCriticalityReport rep;
  rep.c_row = rep.c_col = std::numeric_limits<double>::infinity();
  rep.C_row = rep.C_col = 0;
  for (int i = 0; i < grid.nodes(); ++i) {
    const Material& mat = xs.material_at(grid.spatial.point(i));
    for (int j = 0; j < kSpecies; ++j) {
      double sig = mat.sigma_total(j);
      for (int q = 0; q < nq; ++q)
        for (int m = 0; m < nm; ++m) {
          double row = 0, col = 0;
          if (xs.dense) {
            for (int k = 0; k < kSpecies; ++k)
              for (int qp = 0; qp < nq; ++qp)
                for (int mp = 0; mp < nm; ++mp) {
                  double a = xs.dense->at(j, k, i, q, qp, m, mp), b = xs.dense->at(k, j, i, qp, q, mp, m);
                  if (a < 0 || b < 0) throw Error(ErrorKind::NegativeData, "negative dense kernel entry");
                  row += a * wq[qp] * wm[mp];
                  col += b * wq[qp] * wm[mp];
                }
          } else {
            for (int k = 0; k < kSpecies; ++k) {
              if (k == j) {
                row += mat.sigma_s[j] * arow[q] * efac;
                col += mat.sigma_s[j] * acol[q] * efac;
              } else {
                row += mat.transfer[j][k] * efac;
                col += mat.transfer[k][j] * efac;
              }
            }
          }
          rep.c_row = std::min(rep.c_row, sig - row);
          rep.c_col = std::min(rep.c_col, sig - col);
          rep.C_row = std::max(rep.C_row, row);
          rep.C_col = std::max(rep.C_col, col);
        }
    }
  }
  // margins within rounding of zero are reported as exactly zero
  double snap = 1e-12 * std::max(1.0, std::max(rep.C_row, rep.C_col));
  if (std::abs(rep.c_row) < snap) rep.c_row = 0;
  if (std::abs(rep.c_col) < snap) rep.c_col = 0;
  rep.satisfied = rep.c_row > 0 && rep.c_col > 0;
  return rep;
}

}  // namespace bte
