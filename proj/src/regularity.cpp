#include "bte/regularity.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "bte/error.hpp"
#include "bte/parallel.hpp"
#include "bte/quadrature.hpp"

namespace bte {

namespace {

struct Rule {
  std::vector<double> x, w;
  void add(double a, double b, const std::vector<double>& gx, const std::vector<double>& gw) {
    for (std::size_t k = 0; k < gx.size(); ++k) {
      x.push_back(a + (b - a) * gx[k]);
      w.push_back((b - a) * gw[k]);
    }
  }
};

// panels geometric in the distance to `sing`, from d_lo to d_hi
void graded(Rule& r, double sing, double d_lo, double d_hi, const std::vector<double>& gx,
            const std::vector<double>& gw) {
  double d = d_lo;
  while (d < d_hi * (1 - 1e-14)) {
    double nd = std::min(2 * d, d_hi);
    r.add(sing - nd, sing - d, gx, gw);
    d = nd;
  }
}

}  // namespace

std::vector<double> default_margins(int levels) {
  std::vector<double> e(levels);
  for (int k = 0; k < levels; ++k) e[k] = 0.1 * std::pow(0.01, levels > 1 ? double(k) / (levels - 1) : 0.0);
  return e;
}

std::vector<double> regularity_probe(int p, const std::vector<double>& eps, const RegularityCase& rc) {
  if (p < 1 || p > 3) throw Error(ErrorKind::BadExponent, "regularity probe supports p in {1,2,3}");
  if (!rc.domain.is_ball()) throw Error(ErrorKind::WrongConfiguration, "regularity probe needs a ball domain");
  if (rc.sigma != 1.0 || rc.source != 1.0)
    throw Error(ErrorKind::WrongConfiguration, "regularity probe needs sigma = 1 and f = 1");
  if (rc.order < 2) throw Error(ErrorKind::InvalidArgument, "quadrature order must be at least 2");
  double r = rc.domain.as_ball().radius;
  for (std::size_t k = 0; k < eps.size(); ++k) {
    if (!(eps[k] > 0 && eps[k] < r)) throw Error(ErrorKind::InvalidArgument, "margins must lie in (0, r)");
    if (k > 0 && !(eps[k] < eps[k - 1])) throw Error(ErrorKind::InvalidArgument, "margins must decrease");
  }
  if (eps.empty()) return {};

  GaussRule g = gauss_legendre(rc.order, 0.0, 1.0);
  const std::vector<double>& gx = g.nodes;
  const std::vector<double>& gw = g.weights;

  // orientation of x: product rule on the sphere
  GaussRule gc = gauss_legendre(2 * rc.order, -1.0, 1.0);
  int naz = 4 * rc.order, nphi = 4 * rc.order;
  std::vector<Vec3> xhat;
  std::vector<double> xw;
  for (std::size_t a = 0; a < gc.nodes.size(); ++a)
    for (int b = 0; b < naz; ++b) {
      double c = gc.nodes[a], s = std::sqrt(1 - c * c), ph = 2 * M_PI * (b + 0.5) / naz;
      xhat.push_back({s * std::cos(ph), s * std::sin(ph), c});
      xw.push_back(gc.weights[a] * 2 * M_PI / naz);
    }

  // shells in radius: [0, r - eps0], then [r - eps_{k-1}, r - eps_k]
  std::vector<Rule> shells(eps.size());
  graded(shells[0], r, eps[0], r, gx, gw);
  for (std::size_t k = 1; k < eps.size(); ++k) graded(shells[k], r, eps[k], eps[k - 1], gx, gw);

  auto integrand = [&](const Vec3& x, const Vec3& w) {
    double b = dot(x, w);
    double R = std::sqrt(std::max(0.0, b * b + r * r - dot(x, x)));
    double t = b + R;
    double e = std::exp(-t);
    double s = 0;
    for (int j = 0; j < 3; ++j) {
      double v = std::abs(e * (w[j] + (b * w[j] - x[j]) / R));
      s += p == 1 ? v : (p == 2 ? v * v : v * v * v);
    }
    return s;
  };

  std::vector<double> partial(eps.size(), 0.0);
  for (std::size_t k = 0; k < eps.size(); ++k) {
    const Rule& sr = shells[k];
    std::vector<double> per(xhat.size(), 0.0);
    parallel_for(xhat.size(), [&](std::size_t b0, std::size_t e0) {
      for (std::size_t a = b0; a < e0; ++a) {
        const Vec3& n = xhat[a];
        Vec3 t = std::abs(n.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
        Vec3 u = normalized(cross(n, t)), v = cross(n, u);
        double acc = 0;
        for (std::size_t is = 0; is < sr.x.size(); ++is) {
          double s = sr.x[is];
          Vec3 x = s * n;
          // mu grading around the tangent set, scale sqrt(r^2 - s^2) / s
          double delta = r * r - s * s;
          double base = s > 0 ? std::min(1.0, 0.125 * std::sqrt(delta) / s) : 1.0;
          Rule mr;
          mr.add(0.0, base, gx, gw);
          for (double lo = base; lo < 1 - 1e-14; lo = std::min(1.0, 2 * lo)) mr.add(lo, std::min(1.0, 2 * lo), gx, gw);
          double ang = 0;
          for (std::size_t im = 0; im < mr.x.size(); ++im)
            for (int sign = -1; sign <= 1; sign += 2) {
              double mu = sign * mr.x[im], sm = std::sqrt(std::max(0.0, 1 - mu * mu));
              double ring = 0;
              for (int ip = 0; ip < nphi; ++ip) {
                double ph = 2 * M_PI * (ip + 0.5) / nphi;
                Vec3 w = mu * n + sm * std::cos(ph) * u + sm * std::sin(ph) * v;
                ring += integrand(x, w);
              }
              ang += mr.w[im] * ring * 2 * M_PI / nphi;
            }
          acc += sr.w[is] * s * s * ang;
        }
        per[a] = xw[a] * acc;
      }
    });
    for (double v : per) partial[k] += v;
  }
  std::vector<double> out(eps.size());
  double cum = 0;
  for (std::size_t k = 0; k < eps.size(); ++k) {
    cum += partial[k];
    out[k] = std::pow(cum, 1.0 / p);
  }
  return out;
}

RegularityVerdict classify_regularity(const std::vector<double>& norms, int p) {
  if (norms.size() < 3) return RegularityVerdict::Undecided;
  std::size_t n = norms.size();
  double a = std::pow(norms[n - 1], p) - std::pow(norms[n - 2], p);
  double b = std::pow(norms[n - 2], p) - std::pow(norms[n - 3], p);
  if (b <= 0) return a > 0 ? RegularityVerdict::Divergent : RegularityVerdict::Bounded;
  double ratio = a / b;
  if (ratio >= 0.9) return RegularityVerdict::Divergent;
  if (ratio <= 0.8) return RegularityVerdict::Bounded;
  return RegularityVerdict::Undecided;
}

const char* to_string(RegularityVerdict v) {
  switch (v) {
    case RegularityVerdict::Bounded: return "BOUNDED";
    case RegularityVerdict::Divergent: return "DIVERGENT";
    case RegularityVerdict::Undecided: return "UNDECIDED";
  }
  return "UNDECIDED";
}

}  // namespace bte
