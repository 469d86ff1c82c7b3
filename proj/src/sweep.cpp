#include "bte/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bte/error.hpp"
#include "bte/parallel.hpp"

namespace bte {

void ray_exit(const Domain& dom, const Vec3& x, const Vec3& w, double& t, Vec3& y, int& face) {
  t = escape_time_unchecked(dom, x, w);
  y = x - t * w;
  face = -1;
  if (dom.is_ball()) return;
  const Box& b = dom.as_box();
  double best = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    double s = std::numeric_limits<double>::infinity();
    if (w[a] > 0) s = (x[a] - b.lo[a]) / w[a];
    else if (w[a] < 0) s = (x[a] - b.hi[a]) / w[a];
    if (s < best) {
      best = s;
      face = 2 * a + (w[a] < 0 ? 1 : 0);
    }
  }
}

namespace {

// integrals of exp(-a u) and u exp(-a u) over [0,1]
inline void segment_weights(double a, double& i1, double& iu) {
  if (a < 1e-3) {
    i1 = 1 - a / 2 + a * a / 6 - a * a * a / 24;
    iu = 0.5 - a / 3 + a * a / 8 - a * a * a / 30;
    return;
  }
  double e = std::exp(-a);
  i1 = -std::expm1(-a) / a;
  iu = (1 - e * (1 + a)) / (a * a);
}

}  // namespace

struct Sweeper::Ray {
  double t = 0;
  Vec3 y;
  int face = -1;
  int segments = 0;
  double length = 0;
  std::vector<Stencil> st;
  std::vector<std::array<double, kSpecies>> sigma;
  // per species: coefficient of the interpolated source at each sample, boundary attenuation
  std::array<std::vector<double>, kSpecies> coef;
  std::array<double, kSpecies> tail{};
  std::array<int, kSpecies> root{};  // species whose coefficients are shared
  SurfaceStencil bnd;
};

Sweeper::Sweeper(const CrossSections& xs, const PhaseGrid& grid, double ray_step, bool force_march)
    : xs_(&xs), grid_(&grid), step_(ray_step > 0 ? ray_step : grid.ray_step_default()), force_march_(force_march) {
  uniform_ = xs.uniform_totals();
  for (int j = 0; j < kSpecies; ++j) {
    sigma0_[j] = xs.background.sigma_total(j);
    if (sigma0_[j] < 0) throw Error(ErrorKind::NegativeData, "negative total cross section");
  }
  for (const XsRegion& r : xs.regions)
    for (int j = 0; j < kSpecies; ++j)
      if (r.material.sigma_total(j) < 0) throw Error(ErrorKind::NegativeData, "negative total cross section");
}

double Sweeper::sigma_at(const Vec3& p, int j) const {
  if (uniform_) return sigma0_[j];
  return xs_->material_at(p).sigma_total(j);
}

void Sweeper::trace_ray(int i, int q, Ray& ray, bool need_interior) const {
  const PhaseGrid& g = *grid_;
  const Vec3& x = g.spatial.point(i);
  const Vec3& w = g.angular.nodes[q];
  ray_exit(g.domain, x, w, ray.t, ray.y, ray.face);
  ray.bnd = boundary_lookup(g, Side::Inflow, q, ray.y, ray.face);
  if (!need_interior && uniform_) {
    ray.segments = 0;
    for (int j = 0; j < kSpecies; ++j) ray.root[j] = j;
    for (int j = 0; j < kSpecies; ++j) ray.tail[j] = std::exp(-sigma0_[j] * ray.t);
    return;
  }
  int K = std::max(1, static_cast<int>(std::ceil(ray.t / step_ - 1e-9)));
  ray.segments = K;
  ray.length = ray.t / K;
  ray.st.resize(K + 1);
  ray.sigma.resize(K + 1);
  for (int k = 0; k <= K; ++k) {
    Vec3 p = k == K ? ray.y : x - (k * ray.length) * w;
    if (need_interior) {
      if (k == 0) {
        ray.st[0].n = 1;
        ray.st[0].node[0] = i;
        ray.st[0].weight[0] = 1.0;
      } else {
        ray.st[k] = g.spatial.stencil(p, Extension::Normalized);
      }
    }
    for (int j = 0; j < kSpecies; ++j) ray.sigma[k][j] = sigma_at(p, j);
  }
  for (int j = 0; j < kSpecies; ++j) {
    std::vector<double>& c = ray.coef[j];
    // species with identical totals along the ray reuse the earlier coefficients
    int twin = -1;
    for (int k = 0; k < j && twin < 0; ++k) {
      if (ray.root[k] != k) continue;
      bool same = true;
      for (int s = 0; s <= K && same; ++s) same = ray.sigma[s][k] == ray.sigma[s][j];
      if (same) twin = k;
    }
    ray.root[j] = twin >= 0 ? twin : j;
    if (twin >= 0) {
      c = ray.coef[twin];
      ray.tail[j] = ray.tail[twin];
      continue;
    }
    c.assign(K + 1, 0.0);
    double att = ray.length;  // exp(-T_k) * segment length
    double last_a = -1, i1 = 0, iu = 0, ea = 1;
    for (int k = 0; k < K; ++k) {
      double a = 0.5 * (ray.sigma[k][j] + ray.sigma[k + 1][j]) * ray.length;
      if (a != last_a) {
        segment_weights(a, i1, iu);
        ea = std::exp(-a);
        last_a = a;
      }
      c[k] += att * (i1 - iu);
      c[k + 1] += att * iu;
      att *= ea;
    }
    ray.tail[j] = att / ray.length;
  }
}

Sweeper::BoundaryRay Sweeper::boundary_ray(int i, int q) const {
  Ray ray;
  trace_ray(i, q, ray, false);
  BoundaryRay out;
  out.t = ray.t;
  out.attenuation = ray.tail;
  out.bnd = ray.bnd;
  return out;
}

PhaseField Sweeper::forward(const PhaseField* f, const BoundaryField* g) const {
  const PhaseGrid& G = *grid_;
  if (f && !f->matches(G)) throw Error(ErrorKind::ShapeMismatch, "source does not match grid");
  if (g && !g->matches(G, Side::Inflow)) throw Error(ErrorKind::ShapeMismatch, "boundary data does not match grid");
  int nq = G.dirs(), nm = G.energies(), nx = G.nodes();
  PhaseField out(G);

  std::array<bool, kSpecies> f_active{}, g_active{};
  for (int j = 0; j < kSpecies; ++j) {
    f_active[j] = f && !f->species_is_zero(j);
    g_active[j] = false;
    if (g)
      for (int p = 0; p < g->pairs() && !g_active[j]; ++p)
        for (int m = 0; m < nm; ++m)
          if ((*g)(j, p, m) != 0) { g_active[j] = true; break; }
  }
  // (j, q) slices whose source is spatially constant admit the closed form when totals are uniform
  std::vector<char> closed(static_cast<std::size_t>(kSpecies) * nq, 0);
  for (int j = 0; j < kSpecies; ++j)
    for (int q = 0; q < nq; ++q) {
      bool c = uniform_ && !force_march_;
      if (c && f_active[j]) {
        for (int m = 0; m < nm && c; ++m) {
          double v0 = (*f)(j, 0, q, m);
          for (int i = 1; i < nx; ++i)
            if ((*f)(j, i, q, m) != v0) { c = false; break; }
        }
      }
      closed[j * nq + q] = c;
    }
  bool any_active = std::any_of(f_active.begin(), f_active.end(), [](bool b) { return b; }) ||
                    std::any_of(g_active.begin(), g_active.end(), [](bool b) { return b; });
  if (!any_active) return out;

  // direction-major: the per-direction source slice stays in cache
  parallel_for(nq, [&](std::size_t b, std::size_t e) {
    Ray ray;
    std::vector<double> src, acc;
    std::vector<int> mj;
    for (std::size_t qq = b; qq < e; ++qq) {
      int q = static_cast<int>(qq);
      mj.clear();
      for (int j = 0; j < kSpecies; ++j)
        if (f_active[j] && !closed[j * nq + q]) mj.push_back(j);
      int ns = static_cast<int>(mj.size());
      int row = ns * nm;
      src.assign(static_cast<std::size_t>(nx) * row, 0.0);
      acc.assign(row, 0.0);
      for (int s = 0; s < ns; ++s)
        for (int l = 0; l < nx; ++l)
          for (int m = 0; m < nm; ++m) src[static_cast<std::size_t>(l) * row + s * nm + m] = (*f)(mj[s], l, q, m);
      for (int i = 0; i < nx; ++i) {
        trace_ray(i, q, ray, ns > 0);
        if (ns > 0) {
          std::fill(acc.begin(), acc.end(), 0.0);
          bool shared = true;
          for (int s = 1; s < ns; ++s) shared = shared && ray.root[mj[s]] == ray.root[mj[0]];
          if (shared) {
            const std::vector<double>& c = ray.coef[ray.root[mj[0]]];
            for (int k = 0; k <= ray.segments; ++k) {
              const Stencil& st = ray.st[k];
              for (int l = 0; l < st.n; ++l) {
                double wgt = c[k] * st.weight[l];
                const double* v = &src[static_cast<std::size_t>(st.node[l]) * row];
                for (int r = 0; r < row; ++r) acc[r] += wgt * v[r];
              }
            }
          } else {
            for (int s = 0; s < ns; ++s) {
              const std::vector<double>& c = ray.coef[mj[s]];
              for (int k = 0; k <= ray.segments; ++k) {
                const Stencil& st = ray.st[k];
                for (int l = 0; l < st.n; ++l) {
                  double wgt = c[k] * st.weight[l];
                  const double* v = &src[static_cast<std::size_t>(st.node[l]) * row + s * nm];
                  for (int m = 0; m < nm; ++m) acc[s * nm + m] += wgt * v[m];
                }
              }
            }
          }
          for (int s = 0; s < ns; ++s) {
            double* o = &out.data()[out.index(mj[s], i, q, 0)];
            for (int m = 0; m < nm; ++m) o[m] += acc[s * nm + m];
          }
        }
        for (int j = 0; j < kSpecies; ++j) {
          double* o = &out.data()[out.index(j, i, q, 0)];
          if (f_active[j] && closed[j * nq + q]) {
            double s = sigma0_[j];
            double fac = s > 0 ? -std::expm1(-s * ray.t) / s : ray.t;
            for (int m = 0; m < nm; ++m) o[m] += fac * (*f)(j, 0, q, m);
          }
          if (g_active[j]) {
            for (int l = 0; l < ray.bnd.n; ++l) {
              double wgt = ray.tail[j] * ray.bnd.weight[l];
              for (int m = 0; m < nm; ++m) o[m] += wgt * (*g)(j, ray.bnd.node[l], m);
            }
          }
        }
      }
    }
  });
  return out;
}

void Sweeper::adjoint(const PhaseField& h, PhaseField* volume, BoundaryField* boundary) const {
  const PhaseGrid& G = *grid_;
  if (!h.matches(G)) throw Error(ErrorKind::ShapeMismatch, "field does not match grid");
  int nq = G.dirs(), nm = G.energies(), nx = G.nodes();
  if (volume) *volume = PhaseField(G);
  if (boundary) *boundary = BoundaryField(G, Side::Inflow);
  std::array<bool, kSpecies> active{};
  bool any = false;
  for (int j = 0; j < kSpecies; ++j) any |= (active[j] = !h.species_is_zero(j));
  if (!any || (!volume && !boundary)) return;
  const BoundarySamples& bs = G.inflow;

  parallel_for(nq, [&](std::size_t b, std::size_t e) {
    Ray ray;
    std::vector<double> acc;
    if (volume) acc.resize(static_cast<std::size_t>(kSpecies) * nx * nm);
    for (std::size_t qq = b; qq < e; ++qq) {
      int q = static_cast<int>(qq);
      double wq = G.angular.weights[q];
      std::fill(acc.begin(), acc.end(), 0.0);
      for (int i = 0; i < nx; ++i) {
        trace_ray(i, q, ray, volume != nullptr);
        double wi = G.spatial.weight(i);
        for (int j = 0; j < kSpecies; ++j) {
          if (!active[j]) continue;
          const double* hv = &h.data()[h.index(j, i, q, 0)];
          if (volume) {
            const std::vector<double>& c = ray.coef[j];
            double* aj = &acc[static_cast<std::size_t>(j) * nx * nm];
            for (int k = 0; k <= ray.segments; ++k) {
              const Stencil& st = ray.st[k];
              for (int l = 0; l < st.n; ++l) {
                double wgt = c[k] * st.weight[l] * wi / G.spatial.weight(st.node[l]);
                double* o = aj + static_cast<std::size_t>(st.node[l]) * nm;
                for (int m = 0; m < nm; ++m) o[m] += wgt * hv[m];
              }
            }
          }
          if (boundary) {
            for (int l = 0; l < ray.bnd.n; ++l) {
              int p = ray.bnd.node[l];
              double wgt = ray.tail[j] * ray.bnd.weight[l] * wi * wq / bs.weight[p];
              for (int m = 0; m < nm; ++m) (*boundary)(j, p, m) += wgt * hv[m];
            }
          }
        }
      }
      if (volume)
        for (int j = 0; j < kSpecies; ++j) {
          if (!active[j]) continue;
          for (int l = 0; l < nx; ++l)
            for (int m = 0; m < nm; ++m)
              (*volume)(j, l, q, m) = acc[(static_cast<std::size_t>(j) * nx + l) * nm + m];
        }
    }
  });
}

}  // namespace bte
