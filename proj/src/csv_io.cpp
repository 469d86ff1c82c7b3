#include "bte/csv_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "bte/error.hpp"

namespace bte {

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::InvalidArgument, "cannot write " + path);
  return out;
}

void finish(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw Error(ErrorKind::InvalidArgument, "write failed for " + path);
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::uint64_t fnv1a(const std::string& data) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void write_flux_csv(const std::string& path, const PhaseField& psi, const PhaseGrid& grid) {
  std::ofstream out = open_out(path);
  out << "species,ix,iy,iz,iomega,ienergy,value\n";
  for (int j = 0; j < kSpecies; ++j)
    for (int i = 0; i < grid.nodes(); ++i) {
      const auto& l = grid.spatial.lattice(i);
      for (int q = 0; q < grid.dirs(); ++q)
        for (int m = 0; m < grid.energies(); ++m)
          out << j << ',' << l[0] << ',' << l[1] << ',' << l[2] << ',' << q << ',' << m << ','
              << format_double(psi(j, i, q, m)) << '\n';
    }
  finish(out, path);
}

void write_dose_csv(const std::string& path, const DoseMap& d, const PhaseGrid& grid, bool normalized) {
  std::ofstream out = open_out(path);
  double mx = 0;
  for (double v : d) mx = std::max(mx, v);
  out << "ix,iy,iz,x,y,z,dose" << (normalized ? ",dose_rel" : "") << '\n';
  for (int i = 0; i < grid.nodes(); ++i) {
    const auto& l = grid.spatial.lattice(i);
    const Vec3& p = grid.spatial.point(i);
    out << l[0] << ',' << l[1] << ',' << l[2] << ',' << format_double(p.x) << ',' << format_double(p.y) << ','
        << format_double(p.z) << ',' << format_double(d[i]);
    if (normalized) out << ',' << format_double(mx > 0 ? d[i] / mx : 0.0);
    out << '\n';
  }
  finish(out, path);
}

void write_mc_csv(const std::string& path, const McResult& r, const PhaseGrid& grid) {
  std::ofstream out = open_out(path);
  out << "ix,iy,iz,x,y,z,dose,stderr\n";
  for (int i = 0; i < grid.nodes(); ++i) {
    const auto& l = grid.spatial.lattice(i);
    const Vec3& p = grid.spatial.point(i);
    out << l[0] << ',' << l[1] << ',' << l[2] << ',' << format_double(p.x) << ',' << format_double(p.y) << ','
        << format_double(p.z) << ',' << format_double(r.dose[i]) << ',' << format_double(r.std_error[i]) << '\n';
  }
  finish(out, path);
}

void write_control_csv(const std::string& path, const std::vector<double>& u, const ControlSpace& space,
                       const PhaseGrid& grid) {
  std::ofstream out = open_out(path);
  int nm = grid.energies(), nq = grid.dirs(), nx = grid.nodes();
  std::size_t k = 0;
  if (space.mode() == PlanMode::External) {
    const BoundarySamples& bs = grid.inflow;
    out << "species,pair,isurface,iomega,ienergy,x,y,z,value\n";
    for (int j = 0; j < kSpecies; ++j)
      for (int p = 0; p < bs.pairs(); ++p) {
        const Vec3& y = grid.surface.point(bs.surface[p]);
        for (int m = 0; m < nm; ++m, ++k)
          out << j << ',' << p << ',' << bs.surface[p] << ',' << bs.direction[p] << ',' << m << ','
              << format_double(y.x) << ',' << format_double(y.y) << ',' << format_double(y.z) << ','
              << format_double(u[k]) << '\n';
      }
  } else {
    out << "species,ix,iy,iz,iomega,ienergy,value\n";
    ControlReduction r = space.reduction();
    int q_count = r == ControlReduction::EnergyAngleIndependent ? 1 : nq;
    int m_count = r == ControlReduction::Full ? nm : 1;
    for (int j = 0; j < kSpecies; ++j)
      for (int i = 0; i < nx; ++i) {
        const auto& l = grid.spatial.lattice(i);
        for (int q = 0; q < q_count; ++q)
          for (int m = 0; m < m_count; ++m, ++k)
            out << j << ',' << l[0] << ',' << l[1] << ',' << l[2] << ',' << (q_count == 1 ? -1 : q) << ','
                << (m_count == 1 && r != ControlReduction::Full ? -1 : m) << ',' << format_double(u[k]) << '\n';
      }
  }
  finish(out, path);
}

void write_labels_csv(const std::string& path, const RegionMap& map, const PhaseGrid& grid) {
  std::ofstream out = open_out(path);
  out << "ix,iy,iz,label\n";
  for (int i = 0; i < grid.nodes(); ++i) {
    const auto& l = grid.spatial.lattice(i);
    out << l[0] << ',' << l[1] << ',' << l[2] << ',' << to_string(map[i]) << '\n';
  }
  finish(out, path);
}

RegionMap read_labels_csv(const std::string& path, const PhaseGrid& grid) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::ParseError, path + ":0:0: cannot open label file");
  RegionMap map(grid.nodes(), Label::Normal);
  std::string line;
  int ln = 0;
  while (std::getline(in, line)) {
    ++ln;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || (ln == 1 && line.rfind("ix", 0) == 0)) continue;
    std::istringstream ss(line);
    std::string a, b, c, lab;
    if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',') || !std::getline(ss, c, ',') ||
        !std::getline(ss, lab))
      throw Error(ErrorKind::ParseError, path + ":" + std::to_string(ln) + ":1: expected ix,iy,iz,label");
    int ix, iy, iz;
    try {
      ix = std::stoi(a);
      iy = std::stoi(b);
      iz = std::stoi(c);
    } catch (const std::exception&) {
      throw Error(ErrorKind::ParseError, path + ":" + std::to_string(ln) + ":1: bad lattice index");
    }
    int node = grid.spatial.node_at(ix, iy, iz);
    if (node < 0)
      throw Error(ErrorKind::ParseError, path + ":" + std::to_string(ln) + ":1: cell is not a grid node");
    if (lab == "target") map[node] = Label::Target;
    else if (lab == "critical") map[node] = Label::Critical;
    else if (lab == "normal") map[node] = Label::Normal;
    else
      throw Error(ErrorKind::ParseError, path + ":" + std::to_string(ln) + ":" +
                                             std::to_string(a.size() + b.size() + c.size() + 4) +
                                             ": label must be target, critical or normal");
  }
  return map;
}

void write_table_csv(const std::string& path, const std::string& a, const std::string& b,
                     const std::vector<double>& xa, const std::vector<double>& xb) {
  std::ofstream out = open_out(path);
  out << a << ',' << b << '\n';
  for (std::size_t k = 0; k < xa.size() && k < xb.size(); ++k)
    out << format_double(xa[k]) << ',' << format_double(xb[k]) << '\n';
  finish(out, path);
}

void write_key_values(const std::string& path, const std::vector<std::pair<std::string, std::string>>& kv) {
  std::ofstream out = open_out(path);
  for (const auto& [k, v] : kv) out << k << " = " << v << '\n';
  finish(out, path);
}

}  // namespace bte
