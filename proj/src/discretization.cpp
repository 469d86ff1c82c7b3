#include "bte/discretization.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "bte/error.hpp"
#include "bte/quadrature.hpp"

namespace bte {

// ---------------------------------------------------------------- angular / energy

AngularQuadrature AngularQuadrature::product(int n_polar, int n_azimuth) {
  if (n_polar < 2 || n_azimuth < 2) throw Error(ErrorKind::InvalidArgument, "angular counts must be >= 2");
  GaussRule mu = gauss_legendre(n_polar, -1.0, 1.0);
  // enforce exact mirror symmetry of the polar rule
  for (int i = 0; i < n_polar / 2; ++i) {
    int k = n_polar - 1 - i;
    double m = 0.5 * (mu.nodes[k] - mu.nodes[i]);
    double w = 0.5 * (mu.weights[k] + mu.weights[i]);
    mu.nodes[i] = -m;
    mu.nodes[k] = m;
    mu.weights[i] = mu.weights[k] = w;
  }
  if (n_polar % 2) mu.nodes[n_polar / 2] = 0.0;

  AngularQuadrature aq;
  aq.n_polar = n_polar;
  aq.n_azimuth = n_azimuth;
  double dphi = 2 * M_PI / n_azimuth;
  std::vector<double> c(n_azimuth), s(n_azimuth);
  for (int k = 0; k < n_azimuth; ++k) {
    double phi = (k + 0.5) * dphi;
    c[k] = std::cos(phi);
    s[k] = std::sin(phi);
  }
  if (n_azimuth % 2 == 0) {
    for (int k = n_azimuth / 2; k < n_azimuth; ++k) {
      c[k] = -c[k - n_azimuth / 2];
      s[k] = -s[k - n_azimuth / 2];
    }
  }
  for (int i = 0; i < n_polar; ++i) {
    double st = std::sqrt(std::max(0.0, 1 - mu.nodes[i] * mu.nodes[i]));
    for (int k = 0; k < n_azimuth; ++k) {
      aq.nodes.push_back({st * c[k], st * s[k], mu.nodes[i]});
      aq.weights.push_back(mu.weights[i] * dphi);
    }
  }
  int n = aq.size();
  aq.antipode.assign(n, -1);
  if (n_azimuth % 2 == 0) {
    for (int i = 0; i < n_polar; ++i)
      for (int k = 0; k < n_azimuth; ++k)
        aq.antipode[i * n_azimuth + k] = (n_polar - 1 - i) * n_azimuth + (k + n_azimuth / 2) % n_azimuth;
  }
  return aq;
}

bool AngularQuadrature::antipodally_closed() const {
  for (int q = 0; q < size(); ++q) {
    if (antipode[q] < 0) return false;
    if (norm(nodes[q] + nodes[antipode[q]]) >= 1e-12) return false;
  }
  return true;
}

EnergyGrid EnergyGrid::gauss(double e0, double em, int n) {
  if (n < 2) throw Error(ErrorKind::InvalidArgument, "energy count must be >= 2");
  if (!(e0 >= 0) || !(em > e0)) throw Error(ErrorKind::InvalidArgument, "energy interval requires 0 <= e0 < em");
  GaussRule r = gauss_legendre(n, e0, em);
  return EnergyGrid{e0, em, r.nodes, r.weights};
}

// ---------------------------------------------------------------- spatial lattice

SpatialGrid SpatialGrid::build(const Domain& dom, int nx) {
  if (nx < 2) throw Error(ErrorKind::InvalidArgument, "nx must be >= 2");
  SpatialGrid g;
  g.lo_ = dom.bbox_lo();
  Vec3 ext = dom.bbox_hi() - g.lo_;
  g.dims_ = {nx, nx, nx};
  g.h_ = {ext.x / nx, ext.y / nx, ext.z / nx};
  g.cell_volume_ = g.h_.x * g.h_.y * g.h_.z;
  std::size_t cells = static_cast<std::size_t>(nx) * nx * nx;
  g.lattice_to_node_.assign(cells, -1);
  for (int iz = 0; iz < nx; ++iz)
    for (int iy = 0; iy < nx; ++iy)
      for (int ix = 0; ix < nx; ++ix) {
        Vec3 p = g.cell_center(ix, iy, iz);
        if (!dom.contains(p)) continue;
        g.lattice_to_node_[(static_cast<std::size_t>(iz) * nx + iy) * nx + ix] = static_cast<int>(g.points_.size());
        g.points_.push_back(p);
        g.lattice_.push_back({ix, iy, iz});
      }
  if (g.points_.empty()) throw Error(ErrorKind::EmptyGrid, "no lattice point falls inside the domain");

  // breadth-first fill of the nearest interior node for every lattice cell
  g.nearest_ = g.lattice_to_node_;
  std::deque<std::size_t> queue;
  for (std::size_t c = 0; c < cells; ++c)
    if (g.nearest_[c] >= 0) queue.push_back(c);
  while (!queue.empty()) {
    std::size_t c = queue.front();
    queue.pop_front();
    int ix = static_cast<int>(c % nx), iy = static_cast<int>((c / nx) % nx), iz = static_cast<int>(c / nx / nx);
    const int off[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
    for (const auto& o : off) {
      int jx = ix + o[0], jy = iy + o[1], jz = iz + o[2];
      if (jx < 0 || jy < 0 || jz < 0 || jx >= nx || jy >= nx || jz >= nx) continue;
      std::size_t d = (static_cast<std::size_t>(jz) * nx + jy) * nx + jx;
      if (g.nearest_[d] >= 0) continue;
      g.nearest_[d] = g.nearest_[c];
      queue.push_back(d);
    }
  }
  return g;
}

double SpatialGrid::min_spacing() const { return std::min({h_.x, h_.y, h_.z}); }

int SpatialGrid::node_at(int ix, int iy, int iz) const {
  if (ix < 0 || iy < 0 || iz < 0 || ix >= dims_[0] || iy >= dims_[1] || iz >= dims_[2]) return -1;
  return lattice_to_node_[(static_cast<std::size_t>(iz) * dims_[1] + iy) * dims_[0] + ix];
}

Vec3 SpatialGrid::cell_center(int ix, int iy, int iz) const {
  return {lo_.x + (ix + 0.5) * h_.x, lo_.y + (iy + 0.5) * h_.y, lo_.z + (iz + 0.5) * h_.z};
}

Stencil SpatialGrid::stencil(const Vec3& p, Extension ext) const {
  double u[3];
  int i0[3];
  for (int a = 0; a < 3; ++a) {
    // shifted by one so truncation acts as floor for points inside the bounding box
    double v = (p[a] - lo_[a]) / h_[a] + 0.5;
    int iv = v >= 0 ? static_cast<int>(v) : static_cast<int>(std::floor(v));
    i0[a] = iv - 1;
    u[a] = v - iv;
  }
  Stencil s;
  double total = 0;
  int nxl = dims_[0], nyl = dims_[1];
  bool inner = i0[0] >= 0 && i0[1] >= 0 && i0[2] >= 0 && i0[0] + 1 < dims_[0] && i0[1] + 1 < dims_[1] &&
               i0[2] + 1 < dims_[2];
  std::size_t base = inner ? (static_cast<std::size_t>(i0[2]) * nyl + i0[1]) * nxl + i0[0] : 0;
  double wx[2] = {1 - u[0], u[0]}, wy[2] = {1 - u[1], u[1]}, wz[2] = {1 - u[2], u[2]};
  for (int c = 0; c < 8; ++c) {
    int dx = c & 1, dy = (c >> 1) & 1, dz = (c >> 2) & 1;
    double w = wx[dx] * wy[dy] * wz[dz];
    if (w <= 0) continue;
    int node = inner ? lattice_to_node_[base + (static_cast<std::size_t>(dz) * nyl + dy) * nxl + dx]
                     : node_at(i0[0] + dx, i0[1] + dy, i0[2] + dz);
    if (node < 0) continue;
    s.node[s.n] = node;
    s.weight[s.n] = w;
    ++s.n;
    total += w;
  }
  if (ext == Extension::Zero) return s;
  if (total > 1e-12) {
    for (int k = 0; k < s.n; ++k) s.weight[k] /= total;
    return s;
  }
  int c[3];
  for (int a = 0; a < 3; ++a)
    c[a] = std::clamp(static_cast<int>(std::lround(std::floor((p[a] - lo_[a]) / h_[a]))), 0, dims_[a] - 1);
  s.n = 1;
  s.node[0] = nearest_[(static_cast<std::size_t>(c[2]) * dims_[1] + c[1]) * dims_[0] + c[0]];
  s.weight[0] = 1.0;
  return s;
}

namespace {

bool ray_enters(const Domain& dom, const Vec3& y, const Vec3& w) {
  if (dom.is_ball()) {
    const Ball& b = dom.as_ball();
    Vec3 d = y - b.center;
    double bb = dot(d, w), c = dot(d, d) - b.radius * b.radius;
    return bb < 0 && bb * bb - c > 0;
  }
  const Box& bx = dom.as_box();
  double t0 = 0, t1 = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    if (w[a] == 0) {
      if (y[a] < bx.lo[a] || y[a] > bx.hi[a]) return false;
      continue;
    }
    double ta = (bx.lo[a] - y[a]) / w[a], tb = (bx.hi[a] - y[a]) / w[a];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
  }
  return t1 > t0;
}

}  // namespace

SpatialGrid::Shift SpatialGrid::shift(const Vec3& d) const {
  Shift sh;
  double u[3];
  for (int a = 0; a < 3; ++a) {
    double v = d[a] / h_[a];
    double f = std::floor(v);
    sh.base[a] = static_cast<int>(f);
    u[a] = v - f;
  }
  for (int c = 0; c < 8; ++c) {
    int dx = c & 1, dy = (c >> 1) & 1, dz = (c >> 2) & 1;
    sh.weight[c] = (dx ? u[0] : 1 - u[0]) * (dy ? u[1] : 1 - u[1]) * (dz ? u[2] : 1 - u[2]);
  }
  return sh;
}

Stencil SpatialGrid::stencil_upstream(int i, const Shift& sh, const Domain& dom, const Vec3& w) const {
  const std::array<int, 3>& l = lattice_[i];
  int i0 = l[0] + sh.base[0], j0 = l[1] + sh.base[1], k0 = l[2] + sh.base[2];
  Stencil s;
  double total = 0;
  for (int c = 0; c < 8; ++c) {
    double wt = sh.weight[c];
    if (wt <= 0) continue;
    int ix = i0 + (c & 1), iy = j0 + ((c >> 1) & 1), iz = k0 + ((c >> 2) & 1);
    int node = node_at(ix, iy, iz);
    if (node < 0) {
      if (ray_enters(dom, cell_center(ix, iy, iz), w)) total += wt;
      continue;
    }
    s.node[s.n] = node;
    s.weight[s.n] = wt;
    ++s.n;
    total += wt;
  }
  if (total > 1e-12) {
    for (int k = 0; k < s.n; ++k) s.weight[k] /= total;
    return s;
  }
  Vec3 p = cell_center(i0, j0, k0);
  for (int a = 0; a < 3; ++a) p[a] += 0.5 * h_[a];
  return stencil(p, Extension::Normalized);
}

// ---------------------------------------------------------------- surface

SurfaceGrid SurfaceGrid::build(const Domain& dom, int nx) {
  SurfaceGrid sg;
  if (dom.is_ball()) {
    const Ball& b = dom.as_ball();
    sg.ball_ = true;
    sg.center_ = b.center;
    sg.radius_ = b.radius;
    int n_mu = std::max(2 * nx, 4);
    sg.n_phi_ = 2 * n_mu;
    GaussRule mu = gauss_legendre(n_mu, -1.0, 1.0);
    sg.mu_ = mu.nodes;
    double dphi = 2 * M_PI / sg.n_phi_;
    for (int a = 0; a < n_mu; ++a) {
      double st = std::sqrt(std::max(0.0, 1 - mu.nodes[a] * mu.nodes[a]));
      for (int k = 0; k < sg.n_phi_; ++k) {
        double phi = (k + 0.5) * dphi;
        Vec3 n{st * std::cos(phi), st * std::sin(phi), mu.nodes[a]};
        sg.points_.push_back(b.center + b.radius * n);
        sg.normals_.push_back(n);
        sg.areas_.push_back(b.radius * b.radius * mu.weights[a] * dphi);
        sg.faces_.push_back(-1);
      }
    }
    return sg;
  }
  const Box& b = dom.as_box();
  sg.ball_ = false;
  sg.box_ = b;
  Vec3 h = (b.hi - b.lo) * (1.0 / nx);
  for (int f = 0; f < 6; ++f) {
    int a = f / 2, a1 = (a + 1) % 3, a2 = (a + 2) % 3;
    sg.face_offset_[f] = sg.size();
    sg.face_dims_[f] = {nx, nx};
    for (int k2 = 0; k2 < nx; ++k2)
      for (int k1 = 0; k1 < nx; ++k1) {
        Vec3 p;
        p[a] = (f % 2) ? b.hi[a] : b.lo[a];
        p[a1] = b.lo[a1] + (k1 + 0.5) * h[a1];
        p[a2] = b.lo[a2] + (k2 + 0.5) * h[a2];
        Vec3 n;
        n[a] = (f % 2) ? 1.0 : -1.0;
        sg.points_.push_back(p);
        sg.normals_.push_back(n);
        sg.areas_.push_back(h[a1] * h[a2]);
        sg.faces_.push_back(f);
      }
  }
  return sg;
}

SurfaceStencil SurfaceGrid::stencil(const Vec3& y, int face_hint) const {
  SurfaceStencil s;
  if (ball_) {
    Vec3 d = normalized(y - center_);
    int n_mu = static_cast<int>(mu_.size());
    double mu = std::clamp(d.z, -1.0, 1.0);
    int a0, a1;
    double ta;
    if (mu <= mu_.front()) {
      a0 = a1 = 0;
      ta = 0;
    } else if (mu >= mu_.back()) {
      a0 = a1 = n_mu - 1;
      ta = 0;
    } else {
      a0 = static_cast<int>(std::upper_bound(mu_.begin(), mu_.end(), mu) - mu_.begin()) - 1;
      a1 = a0 + 1;
      ta = (mu - mu_[a0]) / (mu_[a1] - mu_[a0]);
    }
    double phi = std::atan2(d.y, d.x);
    if (phi < 0) phi += 2 * M_PI;
    double u = phi / (2 * M_PI / n_phi_) - 0.5;
    double fl = std::floor(u);
    double tp = u - fl;
    int k0 = ((static_cast<int>(fl) % n_phi_) + n_phi_) % n_phi_;
    int k1 = (k0 + 1) % n_phi_;
    auto add = [&](int a, int k, double w) {
      if (w <= 0) return;
      s.node[s.n] = a * n_phi_ + k;
      s.weight[s.n] = w;
      ++s.n;
    };
    if (a0 == a1) {
      add(a0, k0, 1 - tp);
      add(a0, k1, tp);
    } else {
      add(a0, k0, (1 - ta) * (1 - tp));
      add(a0, k1, (1 - ta) * tp);
      add(a1, k0, ta * (1 - tp));
      add(a1, k1, ta * tp);
    }
    return s;
  }
  int f = face_hint;
  if (f < 0 || f > 5) {
    // pick the face the point is closest to
    double best = std::numeric_limits<double>::infinity();
    for (int c = 0; c < 6; ++c) {
      int a = c / 2;
      double dist = std::abs(y[a] - ((c % 2) ? box_.hi[a] : box_.lo[a]));
      if (dist < best) { best = dist; f = c; }
    }
  }
  int a = f / 2, ax[2] = {(a + 1) % 3, (a + 2) % 3};
  int i0[2];
  double t[2];
  for (int r = 0; r < 2; ++r) {
    int n = face_dims_[f][r];
    double h = (box_.hi[ax[r]] - box_.lo[ax[r]]) / n;
    double u = std::clamp((y[ax[r]] - box_.lo[ax[r]]) / h - 0.5, 0.0, static_cast<double>(n - 1));
    i0[r] = std::min(static_cast<int>(std::floor(u)), n - 2);
    if (n == 1) i0[r] = 0;
    t[r] = u - i0[r];
  }
  int n1 = face_dims_[f][0];
  for (int c = 0; c < 4; ++c) {
    int d1 = c & 1, d2 = (c >> 1) & 1;
    double w = (d1 ? t[0] : 1 - t[0]) * (d2 ? t[1] : 1 - t[1]);
    if (w <= 0) continue;
    s.node[s.n] = face_offset_[f] + (i0[1] + d2) * n1 + (i0[0] + d1);
    s.weight[s.n] = w;
    ++s.n;
  }
  return s;
}

// ---------------------------------------------------------------- phase grid

namespace {

BoundarySamples make_samples(const SurfaceGrid& sg, const AngularQuadrature& aq, Side side) {
  BoundarySamples bs;
  bs.side = side;
  int nq = aq.size();
  bs.pair_of.assign(static_cast<std::size_t>(sg.size()) * nq, -1);
  bs.dir_begin.assign(nq + 1, 0);
  for (int q = 0; q < nq; ++q) {
    bs.dir_begin[q] = bs.pairs();
    for (int s = 0; s < sg.size(); ++s) {
      double wn = dot(aq.nodes[q], sg.normal(s));
      bool keep = side == Side::Inflow ? wn < -1e-12 : wn > 1e-12;
      if (!keep) continue;
      bs.pair_of[static_cast<std::size_t>(s) * nq + q] = bs.pairs();
      bs.surface.push_back(s);
      bs.direction.push_back(q);
      bs.weight.push_back(sg.area(s) * aq.weights[q] * std::abs(wn));
    }
  }
  bs.dir_begin[nq] = bs.pairs();
  return bs;
}

}  // namespace

PhaseGrid build_phase_grid(const Domain& dom, int nx, int n_polar, int n_azimuth, int n_energy, double e0,
                           double em) {
  if (nx < 2 || n_polar < 2 || n_azimuth < 2 || n_energy < 2)
    throw Error(ErrorKind::InvalidArgument, "all grid counts must be >= 2");
  PhaseGrid g;
  g.domain = dom;
  g.spatial = SpatialGrid::build(dom, nx);
  g.angular = AngularQuadrature::product(n_polar, n_azimuth);
  g.energy = EnergyGrid::gauss(e0, em, n_energy);
  g.surface = SurfaceGrid::build(dom, nx);
  g.inflow = make_samples(g.surface, g.angular, Side::Inflow);
  g.outflow = make_samples(g.surface, g.angular, Side::Outflow);
  return g;
}

// ---------------------------------------------------------------- fields

PhaseField::PhaseField(int nodes, int dirs, int energies, double value)
    : nodes_(nodes), dirs_(dirs), energies_(energies),
      v_(static_cast<std::size_t>(kSpecies) * nodes * dirs * energies, value) {}

bool PhaseField::species_is_zero(int j) const {
  std::size_t n = static_cast<std::size_t>(nodes_) * dirs_ * energies_;
  auto b = v_.begin() + static_cast<std::ptrdiff_t>(j * n);
  return std::all_of(b, b + static_cast<std::ptrdiff_t>(n), [](double x) { return x == 0.0; });
}

PhaseField& PhaseField::operator+=(const PhaseField& o) {
  if (!same_shape(o)) throw Error(ErrorKind::ShapeMismatch, "phase field shapes differ");
  for (std::size_t k = 0; k < v_.size(); ++k) v_[k] += o.v_[k];
  return *this;
}

PhaseField& PhaseField::operator-=(const PhaseField& o) {
  if (!same_shape(o)) throw Error(ErrorKind::ShapeMismatch, "phase field shapes differ");
  for (std::size_t k = 0; k < v_.size(); ++k) v_[k] -= o.v_[k];
  return *this;
}

PhaseField& PhaseField::operator*=(double s) {
  for (double& x : v_) x *= s;
  return *this;
}

PhaseField operator+(PhaseField a, const PhaseField& b) { return a += b; }
PhaseField operator-(PhaseField a, const PhaseField& b) { return a -= b; }
PhaseField operator*(double s, PhaseField a) { return a *= s; }

BoundaryField::BoundaryField(const PhaseGrid& grid, Side side, double value)
    : side_(side), pairs_(grid.samples(side).pairs()), energies_(grid.energies()),
      v_(static_cast<std::size_t>(kSpecies) * pairs_ * energies_, value) {}

bool BoundaryField::is_zero() const {
  return std::all_of(v_.begin(), v_.end(), [](double x) { return x == 0.0; });
}

BoundaryField& BoundaryField::operator+=(const BoundaryField& o) {
  if (o.v_.size() != v_.size() || o.side_ != side_) throw Error(ErrorKind::ShapeMismatch, "boundary shapes differ");
  for (std::size_t k = 0; k < v_.size(); ++k) v_[k] += o.v_[k];
  return *this;
}

BoundaryField& BoundaryField::operator*=(double s) {
  for (double& x : v_) x *= s;
  return *this;
}

// ---------------------------------------------------------------- norms

double integrate_phase(const PhaseField& f, const PhaseGrid& grid, int p) {
  if (p < 1 || p > 3) throw Error(ErrorKind::BadExponent, "exponent must be 1, 2 or 3");
  if (!f.matches(grid)) throw Error(ErrorKind::ShapeMismatch, "field does not match grid");
  double total = 0;
  for (int j = 0; j < kSpecies; ++j) {
    double sj = 0;
    for (int i = 0; i < f.nodes(); ++i) {
      double wi = grid.spatial.weight(i);
      for (int q = 0; q < f.dirs(); ++q) {
        double wq = grid.angular.weights[q];
        const double* v = &f.data()[f.index(j, i, q, 0)];
        for (int m = 0; m < f.energies(); ++m) {
          double a = std::abs(v[m]);
          sj += (p == 1 ? a : (p == 2 ? a * a : a * a * a)) * wi * wq * grid.energy.weights[m];
        }
      }
    }
    total += sj;
  }
  return p == 1 ? total : std::pow(total, 1.0 / p);
}

double inner(const PhaseField& a, const PhaseField& b, const PhaseGrid& grid) {
  if (!a.matches(grid) || !b.matches(grid)) throw Error(ErrorKind::ShapeMismatch, "field does not match grid");
  double s = 0;
  for (int j = 0; j < kSpecies; ++j)
    for (int i = 0; i < a.nodes(); ++i) {
      double si = 0;
      for (int q = 0; q < a.dirs(); ++q) {
        std::size_t k = a.index(j, i, q, 0);
        double sq = 0;
        for (int m = 0; m < a.energies(); ++m) sq += a.data()[k + m] * b.data()[k + m] * grid.energy.weights[m];
        si += sq * grid.angular.weights[q];
      }
      s += si * grid.spatial.weight(i);
    }
  return s;
}

double boundary_norm(const BoundaryField& g, const PhaseGrid& grid) {
  const BoundarySamples& bs = grid.samples(g.side());
  double s = 0;
  for (int j = 0; j < kSpecies; ++j)
    for (int p = 0; p < g.pairs(); ++p)
      for (int m = 0; m < g.energies(); ++m) s += std::abs(g(j, p, m)) * bs.weight[p] * grid.energy.weights[m];
  return s;
}

double boundary_inner(const BoundaryField& a, const BoundaryField& b, const PhaseGrid& grid) {
  if (a.size() != b.size()) throw Error(ErrorKind::ShapeMismatch, "boundary shapes differ");
  const BoundarySamples& bs = grid.samples(a.side());
  double s = 0;
  for (int j = 0; j < kSpecies; ++j)
    for (int p = 0; p < a.pairs(); ++p)
      for (int m = 0; m < a.energies(); ++m) s += a(j, p, m) * b(j, p, m) * bs.weight[p] * grid.energy.weights[m];
  return s;
}

double min_value(const PhaseField& f) {
  return f.size() ? *std::min_element(f.data().begin(), f.data().end()) : 0.0;
}

double interpolate_spatial(const PhaseField& f, const PhaseGrid& grid, const Vec3& x, int j, int q, int m,
                           Extension ext) {
  Stencil s = grid.spatial.stencil(x, ext);
  double v = 0;
  for (int k = 0; k < s.n; ++k) v += s.weight[k] * f(j, s.node[k], q, m);
  return v;
}

SurfaceStencil boundary_lookup(const PhaseGrid& grid, Side side, int q, const Vec3& y, int face) {
  const BoundarySamples& bs = grid.samples(side);
  int nq = grid.dirs();
  SurfaceStencil raw = grid.surface.stencil(y, face);
  SurfaceStencil out;
  double total = 0;
  for (int k = 0; k < raw.n; ++k) {
    int p = bs.pair_of[static_cast<std::size_t>(raw.node[k]) * nq + q];
    if (p < 0) continue;
    out.node[out.n] = p;
    out.weight[out.n] = raw.weight[k];
    total += raw.weight[k];
    ++out.n;
  }
  if (out.n > 0 && total > 1e-12) {
    for (int k = 0; k < out.n; ++k) out.weight[k] /= total;
    return out;
  }
  // nearest surface node carrying this direction
  out.n = 0;
  double best = std::numeric_limits<double>::infinity();
  for (int p = bs.dir_begin[q]; p < bs.dir_begin[q + 1]; ++p) {
    double d = norm(grid.surface.point(bs.surface[p]) - y);
    if (d < best) {
      best = d;
      out.n = 1;
      out.node[0] = p;
      out.weight[0] = 1.0;
    }
  }
  return out;
}

}  // namespace bte
