#include "bte/mc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bte/error.hpp"
#include "bte/geometry.hpp"
#include "bte/parallel.hpp"

namespace bte {

namespace {

std::uint64_t mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
constexpr long long kChunk = 1 << 15;

Vec3 isotropic(SplitMix64& rng) {
  double mu = 2 * rng.uniform() - 1, phi = 2 * M_PI * rng.uniform();
  double s = std::sqrt(std::max(0.0, 1 - mu * mu));
  return {s * std::cos(phi), s * std::sin(phi), mu};
}

// Direction at polar cosine mu and azimuth phi about the unit axis a.
Vec3 rotate(const Vec3& a, double mu, double phi) {
  Vec3 t = std::abs(a.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
  Vec3 u = normalized(cross(a, t));
  Vec3 v = cross(a, u);
  double s = std::sqrt(std::max(0.0, 1 - mu * mu));
  return normalized(mu * a + s * std::cos(phi) * u + s * std::sin(phi) * v);
}

double sample_screened_mu(double g, SplitMix64& rng) {
  if (g == 0) return 2 * rng.uniform() - 1;
  double f = (1 - g * g) / (1 - g + 2 * g * rng.uniform());
  return std::clamp((1 + g * g - f * f) / (2 * g), -1.0, 1.0);
}

struct Stratum {
  bool boundary = false;
  int index = 0;       // into the volume or boundary list
  double measure = 0;  // nominal integral of the source
  long long begin = 0, count = 0;
};

struct Tracker {
  const CrossSections& xs;
  const PhaseGrid& grid;
  const std::vector<double>& inv_volume;  // per node, 0 where the cell has no node
  std::vector<std::array<double, kSpecies>> kappa;  // per node
  std::array<double, kSpecies> sigma_max{};
  bool screened = false;

  std::vector<double> score;
  std::vector<int> touched;

  void add(int node, double v) {
    if (score[node] == 0) touched.push_back(node);
    score[node] += v;
  }

  // Track-length tally of the segment a -> a + len * w through the lattice.
  void tally(const Vec3& a, const Vec3& w, double len, int j, double weight) {
    const SpatialGrid& sg = grid.spatial;
    const Vec3& lo = sg.origin();
    const Vec3& h = sg.spacing();
    const auto& dims = sg.dims();
    int c[3];
    double tmax[3], tdelta[3];
    int step[3];
    for (int k = 0; k < 3; ++k) {
      double p = (a[k] - lo[k]) / h[k];
      c[k] = std::clamp(static_cast<int>(std::floor(p)), 0, dims[k] - 1);
      if (w[k] > 0) {
        step[k] = 1;
        tmax[k] = (lo[k] + (c[k] + 1) * h[k] - a[k]) / w[k];
        tdelta[k] = h[k] / w[k];
      } else if (w[k] < 0) {
        step[k] = -1;
        tmax[k] = (lo[k] + c[k] * h[k] - a[k]) / w[k];
        tdelta[k] = -h[k] / w[k];
      } else {
        step[k] = 0;
        tmax[k] = tdelta[k] = std::numeric_limits<double>::infinity();
      }
    }
    double t = 0;
    while (t < len) {
      int k = tmax[0] < tmax[1] ? (tmax[0] < tmax[2] ? 0 : 2) : (tmax[1] < tmax[2] ? 1 : 2);
      double t1 = std::min(std::max(tmax[k], t), len);
      int node = sg.node_at(c[0], c[1], c[2]);
      if (node >= 0 && t1 > t) add(node, weight * (t1 - t) * kappa[node][j] * inv_volume[node]);
      t = t1;
      if (t >= len) break;
      c[k] += step[k];
      if (c[k] < 0 || c[k] >= dims[k]) break;
      tmax[k] += tdelta[k];
    }
  }

  void history(Vec3 x, Vec3 w, int j, double weight, SplitMix64& rng) {
    const Domain& dom = grid.domain;
    for (int guard = 0; guard < 1000000; ++guard) {
      double smax = sigma_max[j];
      double esc = escape_time_forward(dom, x, w);
      double l = smax > 0 ? -std::log(1 - rng.uniform()) / smax : std::numeric_limits<double>::infinity();
      if (l >= esc) {
        tally(x, w, esc, j, weight);
        return;
      }
      tally(x, w, l, j, weight);
      x = x + l * w;
      const Material& mat = xs.material_at(x);
      double st = mat.sigma_total(j);
      if (rng.uniform() * smax >= st) continue;  // virtual collision
      double u = rng.uniform() * st;
      if (u < mat.sigma_a[j]) return;
      u -= mat.sigma_a[j];
      int k = kSpecies - 1;
      for (int kk = 0; kk < kSpecies; ++kk) {
        double s = mat.strength(j, kk);
        if (u < s) {
          k = kk;
          break;
        }
        u -= s;
      }
      if (k == j && screened) {
        double mu = sample_screened_mu(xs.g, rng);
        w = rotate(w, mu, 2 * M_PI * rng.uniform());
      } else {
        w = isotropic(rng);
      }
      j = k;
    }
  }
};

}  // namespace

SplitMix64::SplitMix64(std::uint64_t seed, std::uint64_t stream)
    : state_(mix(seed * kGolden + mix(stream + kGolden))) {}

std::uint64_t SplitMix64::next() {
  state_ += kGolden;
  return mix(state_);
}

double SplitMix64::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

std::vector<double> cell_volumes_in_domain(const PhaseGrid& grid) {
  const SpatialGrid& sg = grid.spatial;
  const Vec3& h = sg.spacing();
  double full = h.x * h.y * h.z;
  std::vector<double> vol(grid.nodes(), full);
  if (!grid.domain.is_ball()) return vol;
  const Ball& b = grid.domain.as_ball();
  double half_diag = 0.5 * norm(h);
  constexpr int n = 12;
  for (int i = 0; i < grid.nodes(); ++i) {
    const Vec3& p = sg.point(i);
    if (norm(p - b.center) + half_diag <= b.radius) continue;
    int inside = 0;
    for (int a = 0; a < n; ++a)
      for (int bb = 0; bb < n; ++bb)
        for (int c = 0; c < n; ++c) {
          Vec3 q{p.x + ((a + 0.5) / n - 0.5) * h.x, p.y + ((bb + 0.5) / n - 0.5) * h.y,
                 p.z + ((c + 0.5) / n - 0.5) * h.z};
          if (norm(q - b.center) < b.radius) ++inside;
        }
    vol[i] = full * inside / (n * n * n);
  }
  return vol;
}

McResult mc_transport_dose(const CrossSections& xs, const SourceSet& sources, const PhaseGrid& grid,
                           long long n_particles, std::uint64_t seed) {
  if (xs.dense) throw Error(ErrorKind::InvalidArgument, "Monte Carlo needs the separable kernel");
  if (n_particles <= 0) throw Error(ErrorKind::InvalidArgument, "particle count must be positive");
  if (!validate(xs, grid).satisfied)
    throw Error(ErrorKind::SubCriticalViolation, "histories need genuine absorption (sub-criticality fails)");
  if (sources.empty()) throw Error(ErrorKind::ZeroSource, "no volume or boundary source given");

  McResult res;
  res.n_particles = n_particles;
  res.seed = seed;
  res.dose.assign(grid.nodes(), 0.0);
  res.std_error.assign(grid.nodes(), 0.0);

  const Domain& dom = grid.domain;
  double e0 = grid.energy.e0, em = grid.energy.em;
  std::vector<Stratum> strata;
  for (std::size_t s = 0; s < sources.volume.size(); ++s) {
    const VolumeSource& v = sources.volume[s];
    if (v.species < 0 || v.species >= kSpecies) throw Error(ErrorKind::InvalidArgument, "source species out of range");
    if (v.amplitude < 0) throw Error(ErrorKind::NegativeData, "negative source amplitude");
    double m = v.amplitude * dom.volume() * 4 * M_PI * window_width(v.e_lo, v.e_hi, e0, em);
    if (m > 0) strata.push_back({false, static_cast<int>(s), m});
  }
  for (std::size_t s = 0; s < sources.boundary.size(); ++s) {
    const BoundarySource& b = sources.boundary[s];
    if (b.species < 0 || b.species >= kSpecies) throw Error(ErrorKind::InvalidArgument, "source species out of range");
    if (b.amplitude < 0) throw Error(ErrorKind::NegativeData, "negative source amplitude");
    double sc = std::sin(std::min(b.cone, M_PI / 2));
    double m = b.amplitude * b.patch_area(dom) * M_PI * sc * sc * window_width(b.e_lo, b.e_hi, e0, em);
    if (m > 0) strata.push_back({true, static_cast<int>(s), m});
  }
  if (strata.empty()) return res;

  // largest-remainder allocation of particles to strata
  double total = 0;
  for (const Stratum& s : strata) total += s.measure;
  long long assigned = 0;
  std::vector<std::pair<double, int>> rem;
  for (std::size_t k = 0; k < strata.size(); ++k) {
    double exact = n_particles * strata[k].measure / total;
    strata[k].count = static_cast<long long>(std::floor(exact));
    assigned += strata[k].count;
    rem.push_back({-(exact - std::floor(exact)), static_cast<int>(k)});
  }
  std::sort(rem.begin(), rem.end());
  for (std::size_t k = 0; assigned < n_particles; ++k, ++assigned) ++strata[rem[k % rem.size()].second].count;
  long long begin = 0;
  for (Stratum& s : strata) {
    s.begin = begin;
    begin += s.count;
  }

  std::vector<double> vol = cell_volumes_in_domain(grid);
  std::vector<double> inv_vol(vol.size());
  for (std::size_t i = 0; i < vol.size(); ++i) inv_vol[i] = vol[i] > 0 ? 1 / vol[i] : 0.0;
  std::vector<std::array<double, kSpecies>> kappa(grid.nodes());
  for (int i = 0; i < grid.nodes(); ++i) kappa[i] = xs.material_at(grid.spatial.point(i)).kappa;
  std::array<double, kSpecies> smax{};
  auto upd = [&](const Material& m) {
    for (int j = 0; j < kSpecies; ++j) smax[j] = std::max(smax[j], m.sigma_total(j));
  };
  upd(xs.background);
  for (const XsRegion& r : xs.regions) upd(r.material);
  bool screened = xs.family == AngularFamily::Screened && xs.g != 0;

  int S = static_cast<int>(strata.size());
  int N = grid.nodes();
  long long n_chunks = (n_particles + kChunk - 1) / kChunk;
  // per chunk: [stratum][node] sums and sums of squares
  std::vector<std::vector<double>> sum(n_chunks), sq(n_chunks);
  Vec3 lo = dom.bbox_lo(), hi = dom.bbox_hi();

  parallel_for(static_cast<std::size_t>(n_chunks), [&](std::size_t cb, std::size_t ce) {
    Tracker tr{xs, grid, inv_vol, kappa, smax, screened, std::vector<double>(N, 0.0), {}};
    for (std::size_t c = cb; c < ce; ++c) {
      std::vector<double>& cs = sum[c];
      std::vector<double>& cq = sq[c];
      cs.assign(static_cast<std::size_t>(S) * N, 0.0);
      cq.assign(static_cast<std::size_t>(S) * N, 0.0);
      long long p0 = static_cast<long long>(c) * kChunk, p1 = std::min(n_particles, p0 + kChunk);
      int st = 0;
      for (long long p = p0; p < p1; ++p) {
        while (p >= strata[st].begin + strata[st].count) ++st;
        const Stratum& s = strata[st];
        SplitMix64 rng(seed, static_cast<std::uint64_t>(p));
        Vec3 x, w;
        int j;
        double weight;
        if (!s.boundary) {
          const VolumeSource& v = sources.volume[s.index];
          do {
            x = {lo.x + (hi.x - lo.x) * rng.uniform(), lo.y + (hi.y - lo.y) * rng.uniform(),
                 lo.z + (hi.z - lo.z) * rng.uniform()};
          } while (!dom.contains(x));
          w = isotropic(rng);
          j = v.species;
          weight = s.measure * v.spatial(x) / v.amplitude / s.count;
        } else {
          const BoundarySource& b = sources.boundary[s.index];
          if (dom.is_ball()) {
            const Ball& ball = dom.as_ball();
            double cmin = std::cos(std::min(b.half_angle, M_PI));
            double mu = cmin + (1 - cmin) * rng.uniform();
            Vec3 d = rotate(normalized(b.axis), mu, 2 * M_PI * rng.uniform());
            x = ball.center + ball.radius * d;
          } else {
            const Box& bx = dom.as_box();
            int ax = b.face / 2;
            for (int a = 0; a < 3; ++a) {
              double r = rng.uniform();
              x[a] = a == ax ? (b.face % 2 ? bx.hi[a] : bx.lo[a]) : bx.lo[a] + (bx.hi[a] - bx.lo[a]) * r;
            }
          }
          Vec3 n = dom.normal_at(x);
          double sc = std::sin(std::min(b.cone, M_PI / 2));
          double sin_t = sc * std::sqrt(rng.uniform());
          w = rotate(-1.0 * n, std::sqrt(std::max(0.0, 1 - sin_t * sin_t)), 2 * M_PI * rng.uniform());
          j = b.species;
          weight = s.measure * b.patch(dom, x) / s.count;
        }
        if (weight != 0) tr.history(x, w, j, weight, rng);
        double* rs = &cs[static_cast<std::size_t>(st) * N];
        double* rq = &cq[static_cast<std::size_t>(st) * N];
        for (int node : tr.touched) {
          double v = tr.score[node];
          rs[node] += v;
          rq[node] += v * v;
          tr.score[node] = 0;
        }
        tr.touched.clear();
      }
    }
  });

  std::vector<double> tot(static_cast<std::size_t>(S) * N, 0.0), tot2(tot.size(), 0.0);
  for (long long c = 0; c < n_chunks; ++c)
    for (std::size_t k = 0; k < tot.size(); ++k) {
      tot[k] += sum[c][k];
      tot2[k] += sq[c][k];
    }
  for (int st = 0; st < S; ++st) {
    double n = static_cast<double>(strata[st].count);
    if (n == 0) continue;
    for (int i = 0; i < N; ++i) {
      // scores carry the 1/n factor: estimate = sum, variance of the mean = (n*sum_sq - sum^2)/(n-1)
      double s1 = tot[static_cast<std::size_t>(st) * N + i], s2 = tot2[static_cast<std::size_t>(st) * N + i];
      res.dose[i] += s1;
      if (n > 1) res.std_error[i] += std::max(0.0, (n * s2 - s1 * s1) / (n - 1));
    }
  }
  for (double& e : res.std_error) e = std::sqrt(e);
  return res;
}

}  // namespace bte
