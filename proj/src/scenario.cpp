#include "bte/scenario.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "bte/error.hpp"

namespace bte {

namespace {

struct Entry {
  std::string value;
  int line = 0, col = 0;  // position of the value
  int key_col = 0;
  bool used = false;
};

class Table {
public:
  explicit Table(std::string origin) : origin_(std::move(origin)) {}

  [[noreturn]] void fail(int line, int col, const std::string& msg) const {
    throw Error(ErrorKind::ParseError, origin_ + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + msg);
  }
  [[noreturn]] void fail(const Entry& e, const std::string& msg) const { fail(e.line, e.col, msg); }

  void add(const std::string& key, Entry e) {
    if (entries_.count(key)) fail(e.line, e.key_col, "duplicate key '" + key + "'");
    order_.push_back(key);
    entries_[key] = std::move(e);
  }
  void add_section(const std::string& s, int line, int col) {
    if (std::find(sections_.begin(), sections_.end(), s) != sections_.end()) fail(line, col, "duplicate section [" + s + "]");
    sections_.push_back(s);
  }
  const std::vector<std::string>& sections() const { return sections_; }

  Entry* find(const std::string& key) {
    auto it = entries_.find(key);
    if (it == entries_.end()) return nullptr;
    it->second.used = true;
    return &it->second;
  }

  void unused_check() const {
    for (const std::string& k : order_) {
      const Entry& e = entries_.at(k);
      if (!e.used) fail(e.line, e.key_col, "unknown key '" + k + "'");
    }
  }

  double number(const Entry& e) const {
    const char* s = e.value.c_str();
    char* end = nullptr;
    double v = std::strtod(s, &end);
    if (end == s || *end != '\0' || !std::isfinite(v)) fail(e, "expected a number, got '" + e.value + "'");
    return v;
  }
  std::vector<double> numbers(const Entry& e) const {
    std::istringstream in(e.value);
    std::vector<double> out;
    std::string tok;
    while (in >> tok) {
      Entry t = e;
      t.value = tok;
      out.push_back(number(t));
    }
    return out;
  }

  void get(const std::string& key, double& v, bool nonneg = false) {
    if (Entry* e = find(key)) {
      v = number(*e);
      if (nonneg && v < 0) fail(*e, "'" + key + "' must be nonnegative");
    }
  }
  void positive(const std::string& key, double& v) {
    if (Entry* e = find(key)) {
      v = number(*e);
      if (!(v > 0)) fail(*e, "'" + key + "' must be positive");
    }
  }
  void get(const std::string& key, int& v, int lo) {
    if (Entry* e = find(key)) {
      double d = number(*e);
      if (d != std::floor(d) || d < lo || d > 1e9) fail(*e, "'" + key + "' must be an integer >= " + std::to_string(lo));
      v = static_cast<int>(d);
    }
  }
  void get(const std::string& key, long long& v, long long lo) {
    if (Entry* e = find(key)) {
      char* end = nullptr;
      long long d = std::strtoll(e->value.c_str(), &end, 10);
      if (*end != '\0' || e->value.empty() || d < lo) fail(*e, "'" + key + "' must be an integer >= " + std::to_string(lo));
      v = d;
    }
  }
  void get(const std::string& key, std::uint64_t& v) {
    if (Entry* e = find(key)) {
      char* end = nullptr;
      unsigned long long d = std::strtoull(e->value.c_str(), &end, 10);
      if (*end != '\0' || e->value.empty() || e->value[0] == '-') fail(*e, "'" + key + "' must be a nonnegative integer");
      v = d;
    }
  }
  void get(const std::string& key, std::string& v) {
    if (Entry* e = find(key)) v = e->value;
  }
  void get(const std::string& key, bool& v) {
    if (Entry* e = find(key)) {
      if (e->value == "true" || e->value == "1") v = true;
      else if (e->value == "false" || e->value == "0") v = false;
      else fail(*e, "expected true or false");
    }
  }
  void get(const std::string& key, Vec3& v) {
    if (Entry* e = find(key)) {
      std::vector<double> n = numbers(*e);
      if (n.size() != 3) fail(*e, "'" + key + "' needs three numbers");
      v = {n[0], n[1], n[2]};
    }
  }
  // per-species vector: one value broadcasts, three values per species, key[j] sets one
  void species(const std::string& key, std::array<double, kSpecies>& v, bool nonneg) {
    if (Entry* e = find(key)) {
      std::vector<double> n = numbers(*e);
      if (n.size() == 1) v.fill(n[0]);
      else if (n.size() == kSpecies) std::copy(n.begin(), n.end(), v.begin());
      else fail(*e, "'" + key + "' needs one or three numbers");
      for (double x : v)
        if (nonneg && x < 0) fail(*e, "'" + key + "' must be nonnegative");
    }
    for (int j = 0; j < kSpecies; ++j) get(key + "[" + std::to_string(j) + "]", v[j], nonneg);
  }
  template <class E>
  void choice(const std::string& key, E& v, const std::vector<std::pair<std::string, E>>& opts) {
    if (Entry* e = find(key)) {
      for (const auto& [name, val] : opts)
        if (e->value == name) {
          v = val;
          return;
        }
      std::string list;
      for (const auto& o : opts) list += (list.empty() ? "" : "|") + o.first;
      fail(*e, "'" + key + "' must be one of " + list);
    }
  }
  bool has(const std::string& key) const { return entries_.count(key) > 0; }
  const Entry* peek(const std::string& key) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? nullptr : &it->second;
  }

private:
  std::string origin_;
  std::map<std::string, Entry> entries_;
  std::vector<std::string> order_;
  std::vector<std::string> sections_;
};

std::string trim(const std::string& s, std::size_t& lead) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) {
    lead = s.size();
    return "";
  }
  std::size_t e = s.find_last_not_of(" \t\r");
  lead = b;
  return s.substr(b, e - b + 1);
}

bool valid_name(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-')) return false;
  return true;
}

bool known_section(const std::string& s) {
  static const char* fixed[] = {"domain", "grid", "energy", "xs", "rx", "rx.dv", "rx.weights", "plan",
                                "solve", "time", "probe", "run"};
  for (const char* f : fixed)
    if (s == f) return true;
  for (const char* p : {"xs.region.", "source.", "label."}) {
    std::string pre = p;
    if (s.rfind(pre, 0) == 0 && valid_name(s.substr(pre.size()))) return true;
  }
  return false;
}

Table tokenize(const std::string& text, const std::string& origin) {
  Table t(origin);
  std::istringstream in(text);
  std::string raw, section;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::size_t hash = raw.find('#');
    std::string body = hash == std::string::npos ? raw : raw.substr(0, hash);
    std::size_t lead;
    std::string s = trim(body, lead);
    if (s.empty()) continue;
    int col = static_cast<int>(lead) + 1;
    if (s.front() == '[') {
      if (s.back() != ']') t.fail(line, col + static_cast<int>(s.size()) - 1, "expected ']' to close the section");
      std::size_t l2;
      std::string name = trim(s.substr(1, s.size() - 2), l2);
      if (!known_section(name)) t.fail(line, col + 1, "unknown section [" + name + "]");
      t.add_section(name, line, col);
      section = name;
      continue;
    }
    std::size_t eq = s.find('=');
    if (eq == std::string::npos) t.fail(line, col, "expected 'key = value'");
    std::size_t lk, lv;
    std::string key = trim(s.substr(0, eq), lk);
    std::string value = trim(s.substr(eq + 1), lv);
    if (key.empty()) t.fail(line, col, "missing key before '='");
    if (section.empty()) t.fail(line, col, "key '" + key + "' appears before any section");
    if (value.empty()) t.fail(line, col + static_cast<int>(eq) + 1, "missing value for '" + key + "'");
    Entry e;
    e.value = value;
    e.line = line;
    e.key_col = col;
    e.col = col + static_cast<int>(eq + 1 + lv);
    t.add(section + "." + key, e);
  }
  return t;
}

void read_material(Table& t, const std::string& pre, Material& m) {
  t.species(pre + "sigma_a", m.sigma_a, true);
  t.species(pre + "sigma_s", m.sigma_s, true);
  t.species(pre + "kappa", m.kappa, true);
  for (int k = 0; k < kSpecies; ++k)
    for (int j = 0; j < kSpecies; ++j) {
      if (k == j) continue;
      t.get(pre + "transfer[" + std::to_string(k) + "][" + std::to_string(j) + "]", m.transfer[k][j], true);
    }
}

void read_shape(Table& t, const std::string& pre, RegionShape& s, const std::string& section) {
  std::string kind = "sphere";
  if (Entry* e = t.find(pre + "shape")) {
    kind = e->value;
    if (kind != "sphere" && kind != "box") t.fail(*e, "'shape' must be sphere or box");
  } else {
    t.fail(0, 0, "section [" + section + "] needs a 'shape'");
  }
  s.kind = kind == "sphere" ? RegionShape::Kind::Sphere : RegionShape::Kind::Box;
  if (s.kind == RegionShape::Kind::Sphere) {
    t.get(pre + "center", s.center);
    t.positive(pre + "radius", s.radius);
  } else {
    t.get(pre + "lo", s.lo);
    t.get(pre + "hi", s.hi);
  }
}

int parse_face(Table& t, Entry& e) {
  static const char* names[] = {"-x", "+x", "-y", "+y", "-z", "+z"};
  for (int f = 0; f < 6; ++f)
    if (e.value == names[f]) return f;
  t.fail(e, "'face' must be one of -x +x -y +y -z +z");
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}
std::string fmt(const Vec3& v) { return fmt(v.x) + " " + fmt(v.y) + " " + fmt(v.z); }
std::string fmt(const std::array<double, kSpecies>& v) { return fmt(v[0]) + " " + fmt(v[1]) + " " + fmt(v[2]); }

}  // namespace

bool Scenario::operator==(const Scenario& o) const {
  return domain == o.domain && grid == o.grid && xs == o.xs && sources == o.sources &&
         solve.ray_step == o.solve.ray_step && solve.tol == o.solve.tol && solve.max_iter == o.solve.max_iter &&
         solve.damping == o.solve.damping && solve.force_ray_march == o.solve.force_ray_march && time == o.time &&
         plan == o.plan && probe == o.probe && run == o.run;
}

double profile_value(Profile p, double tau, double t) {
  switch (p) {
    case Profile::Constant: return 1.0;
    case Profile::Ramp: return std::min(1.0, std::max(0.0, t / tau));
    case Profile::Smooth: return 1.0 - std::exp(-std::max(0.0, t) / tau);
  }
  return 1.0;
}

double profile_rate(Profile p, double tau, double t) {
  switch (p) {
    case Profile::Constant: return 0.0;
    case Profile::Ramp: return (t >= 0 && t < tau) ? 1.0 / tau : 0.0;
    case Profile::Smooth: return t >= 0 ? std::exp(-t / tau) / tau : 0.0;
  }
  return 0.0;
}

Scenario parse_scenario(const std::string& text, const std::string& origin) {
  Table t = tokenize(text, origin);
  Scenario s;

  // domain
  std::string kind = "ball";
  if (Entry* e = t.find("domain.kind")) {
    kind = e->value;
    if (kind != "ball" && kind != "box") t.fail(*e, "'domain.kind' must be ball or box");
  }
  if (kind == "ball") {
    Vec3 c;
    double r = 1;
    t.get("domain.center", c);
    t.positive("domain.radius", r);
    s.domain = Domain::ball(c, r);
  } else {
    Vec3 lo{0, 0, 0}, hi{1, 1, 1};
    t.get("domain.lo", lo);
    t.get("domain.hi", hi);
    if (!(hi.x > lo.x && hi.y > lo.y && hi.z > lo.z)) {
      const Entry* e = t.peek("domain.hi");
      t.fail(e ? e->line : 0, e ? e->col : 0, "'domain.hi' must exceed 'domain.lo' on every axis");
    }
    s.domain = Domain::box(lo, hi);
  }

  // grid and energy
  t.get("grid.nx", s.grid.nx, 2);
  t.get("grid.n_polar", s.grid.n_polar, 2);
  t.get("grid.n_azimuth", s.grid.n_azimuth, 2);
  t.get("grid.n_energy", s.grid.n_energy, 2);
  t.get("energy.e0", s.grid.e0, true);
  t.get("energy.em", s.grid.em, true);
  if (!(s.grid.em > s.grid.e0)) {
    const Entry* e = t.peek("energy.em");
    t.fail(e ? e->line : 0, e ? e->col : 0, "'energy.em' must exceed 'energy.e0'");
  }

  // cross sections
  std::string kernel = "isotropic";
  if (Entry* e = t.find("xs.kernel")) {
    kernel = e->value;
    if (kernel != "isotropic" && kernel != "screened" && kernel != "transfer")
      t.fail(*e, "'xs.kernel' must be isotropic, screened or transfer");
  }
  s.xs.family = kernel == "screened" ? AngularFamily::Screened : AngularFamily::Isotropic;
  t.get("xs.g", s.xs.g, true);
  if (const Entry* e = t.peek("xs.g"); e && s.xs.g >= 1) t.fail(*e, "'xs.g' must lie in [0,1)");
  s.xs.background.kappa.fill(1.0);
  read_material(t, "xs.", s.xs.background);
  for (const std::string& sec : t.sections()) {
    if (sec.rfind("xs.region.", 0) != 0) continue;
    XsRegion r;
    r.name = sec.substr(10);
    r.material = s.xs.background;
    read_shape(t, sec + ".", r.shape, sec);
    read_material(t, sec + ".", r.material);
    s.xs.regions.push_back(r);
  }
  if (kernel == "isotropic") {
    auto has_transfer = [](const Material& m) {
      for (int k = 0; k < kSpecies; ++k)
        for (int j = 0; j < kSpecies; ++j)
          if (k != j && m.transfer[k][j] != 0) return true;
      return false;
    };
    bool any = has_transfer(s.xs.background);
    for (const XsRegion& r : s.xs.regions) any = any || has_transfer(r.material);
    if (any) {
      const Entry* e = t.peek("xs.kernel");
      t.fail(e ? e->line : 0, e ? e->col : 0, "transfer entries need 'xs.kernel = transfer' or 'screened'");
    }
  }

  // sources
  for (const std::string& sec : t.sections()) {
    if (sec.rfind("source.", 0) != 0) continue;
    std::string pre = sec + ".", name = sec.substr(7);
    Entry* ke = t.find(pre + "kind");
    if (!ke) t.fail(0, 0, "section [" + sec + "] needs a 'kind'");
    int species = 0;
    double amp = 1, e_lo = -1, e_hi = -1;
    t.get(pre + "species", species, 0);
    if (species >= kSpecies) t.fail(*t.find(pre + "species"), "'species' must be 0, 1 or 2");
    t.get(pre + "amplitude", amp, true);
    t.get(pre + "e_lo", e_lo, true);
    t.get(pre + "e_hi", e_hi, true);
    if (ke->value == "boundary-patch") {
      BoundarySource b;
      b.name = name;
      b.species = species;
      b.amplitude = amp;
      b.e_lo = e_lo;
      b.e_hi = e_hi;
      if (s.domain.is_ball()) {
        t.get(pre + "axis", b.axis);
        if (norm(b.axis) == 0) t.fail(*t.find(pre + "axis"), "'axis' must be nonzero");
        b.axis = normalized(b.axis);
        t.positive(pre + "half_angle", b.half_angle);
      } else {
        Entry* fe = t.find(pre + "face");
        if (!fe) t.fail(ke->line, ke->col, "box boundary patch needs a 'face'");
        b.face = parse_face(t, *fe);
      }
      t.positive(pre + "cone", b.cone);
      t.get(pre + "taper", b.taper, true);
      s.sources.boundary.push_back(b);
      continue;
    }
    VolumeSource v;
    v.name = name;
    v.species = species;
    v.amplitude = amp;
    v.e_lo = e_lo;
    v.e_hi = e_hi;
    if (ke->value == "constant") {
      v.kind = VolumeSource::Kind::Constant;
    } else if (ke->value == "gaussian-bump") {
      v.kind = VolumeSource::Kind::GaussianBump;
      t.get(pre + "center", v.center);
      t.positive(pre + "width", v.width);
    } else if (ke->value == "per-region") {
      v.kind = VolumeSource::Kind::PerRegion;
      read_shape(t, pre, v.shape, sec);
    } else {
      t.fail(*ke, "'kind' must be constant, gaussian-bump, per-region or boundary-patch");
    }
    s.sources.volume.push_back(v);
  }

  // solver
  t.get("solve.tol", s.solve.tol, true);
  t.get("solve.max_iter", s.solve.max_iter, 1);
  t.positive("solve.damping", s.solve.damping);
  t.get("solve.ray_step", s.solve.ray_step, true);
  t.get("solve.force_march", s.solve.force_ray_march);

  // time
  t.positive("time.T", s.time.T);
  t.get("time.steps", s.time.steps, 1);
  t.get("time.series_order", s.time.series_order, 0);
  t.get("time.keep_every", s.time.keep_every, 1);
  t.choice("time.treatment", s.time.treatment,
           {{"retarded", BoundaryTreatment::Retarded}, {"lift", BoundaryTreatment::Lift}});
  t.species("time.mass", s.time.mass, true);
  const std::vector<std::pair<std::string, Profile>> profiles = {
      {"constant", Profile::Constant}, {"ramp", Profile::Ramp}, {"smooth", Profile::Smooth}};
  t.choice("time.boundary_profile", s.time.boundary_profile, profiles);
  t.choice("time.source_profile", s.time.source_profile, profiles);
  t.positive("time.boundary_tau", s.time.boundary_tau);
  t.positive("time.source_tau", s.time.source_tau);

  // planning
  Prescription& rx = s.plan.rx;
  t.get("rx.d0", rx.d0, true);
  t.get("rx.dcap_c", rx.dcap_c, true);
  t.get("rx.dcap_n", rx.dcap_n, true);
  t.get("rx.dv.d_c", rx.dv_dc, true);
  t.get("rx.dv.v_c", rx.dv_vc, true);
  t.get("rx.weights.t", rx.c_t, true);
  t.get("rx.weights.c", rx.c_c, true);
  t.get("rx.weights.n", rx.c_n, true);
  t.get("rx.weights.dv", rx.c_dv, true);
  t.get("rx.weights.ad", rx.c_ad, true);
  t.get("rx.weights.sc", rx.c_sc, true);
  t.positive("rx.c", rx.c);
  t.get("rx.eps", rx.eps, true);
  t.get("rx.track_t", rx.track_t);
  t.get("rx.track_c", rx.track_c, true);
  t.get("rx.track_n", rx.track_n, true);
  t.choice("rx.mode", rx.mode, {{"external", PlanMode::External}, {"internal", PlanMode::Internal}});
  t.choice("rx.reduction", rx.reduction,
           {{"full", ControlReduction::Full},
            {"energy", ControlReduction::EnergyIndependent},
            {"energy-angle", ControlReduction::EnergyAngleIndependent}});
  t.get("rx.labels_csv", s.plan.labels_csv);
  {
    std::array<double, kSpecies> sp{1, 1, 1};
    t.species("rx.species", sp, true);
    for (int j = 0; j < kSpecies; ++j) s.plan.species[j] = sp[j] != 0;
  }
  for (const std::string& sec : t.sections()) {
    if (sec.rfind("label.", 0) != 0) continue;
    LabelShape l;
    l.name = sec.substr(6);
    read_shape(t, sec + ".", l.shape, sec);
    l.label = Label::Target;
    t.choice(sec + ".label", l.label,
             {{"target", Label::Target}, {"critical", Label::Critical}, {"normal", Label::Normal}});
    s.plan.labels.push_back(l);
  }
  t.positive("plan.theta", s.plan.theta);
  if (s.plan.theta > 1) t.fail(*t.find("plan.theta"), "'plan.theta' must lie in (0,1]");
  t.positive("plan.fixed_point_tol", s.plan.fixed_point_tol);
  t.get("plan.max_fixed_point", s.plan.max_fixed_point, 1);
  t.get("plan.max_pg_iter", s.plan.max_pg_iter, 1);
  t.get("plan.multistart", s.plan.multistart, 1);

  // probe and run
  t.get("probe.p", s.probe.p, 1);
  if (s.probe.p > 3) t.fail(*t.find("probe.p"), "'probe.p' must be 1, 2 or 3");
  t.get("probe.levels", s.probe.levels, 3);
  t.get("probe.order", s.probe.order, 2);
  t.get("run.seed", s.run.seed);
  t.get("run.particles", s.run.particles, 1LL);
  t.get("run.out", s.run.out);
  t.get("run.threads", s.run.threads, 0);

  t.unused_check();
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::ParseError, path + ":0:0: cannot open file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str(), path);
}

std::string serialize_scenario(const Scenario& s) {
  std::ostringstream o;
  auto kv = [&](const std::string& k, const std::string& v) { o << k << " = " << v << "\n"; };
  auto material = [&](const Material& m) {
    kv("sigma_a", fmt(m.sigma_a));
    kv("sigma_s", fmt(m.sigma_s));
    kv("kappa", fmt(m.kappa));
    for (int k = 0; k < kSpecies; ++k)
      for (int j = 0; j < kSpecies; ++j)
        if (k != j && m.transfer[k][j] != 0)
          kv("transfer[" + std::to_string(k) + "][" + std::to_string(j) + "]", fmt(m.transfer[k][j]));
  };
  auto shape = [&](const RegionShape& r) {
    if (r.kind == RegionShape::Kind::Sphere) {
      kv("shape", "sphere");
      kv("center", fmt(r.center));
      kv("radius", fmt(r.radius));
    } else {
      kv("shape", "box");
      kv("lo", fmt(r.lo));
      kv("hi", fmt(r.hi));
    }
  };
  o << "[domain]\n";
  if (s.domain.is_ball()) {
    kv("kind", "ball");
    kv("center", fmt(s.domain.as_ball().center));
    kv("radius", fmt(s.domain.as_ball().radius));
  } else {
    kv("kind", "box");
    kv("lo", fmt(s.domain.as_box().lo));
    kv("hi", fmt(s.domain.as_box().hi));
  }
  o << "\n[grid]\n";
  kv("nx", std::to_string(s.grid.nx));
  kv("n_polar", std::to_string(s.grid.n_polar));
  kv("n_azimuth", std::to_string(s.grid.n_azimuth));
  kv("n_energy", std::to_string(s.grid.n_energy));
  o << "\n[energy]\n";
  kv("e0", fmt(s.grid.e0));
  kv("em", fmt(s.grid.em));

  bool transfer = false;
  auto check_t = [&](const Material& m) {
    for (int k = 0; k < kSpecies; ++k)
      for (int j = 0; j < kSpecies; ++j)
        if (k != j && m.transfer[k][j] != 0) transfer = true;
  };
  check_t(s.xs.background);
  for (const XsRegion& r : s.xs.regions) check_t(r.material);
  o << "\n[xs]\n";
  kv("kernel", s.xs.family == AngularFamily::Screened ? "screened" : (transfer ? "transfer" : "isotropic"));
  kv("g", fmt(s.xs.g));
  material(s.xs.background);
  for (const XsRegion& r : s.xs.regions) {
    o << "\n[xs.region." << r.name << "]\n";
    shape(r.shape);
    material(r.material);
  }
  for (const VolumeSource& v : s.sources.volume) {
    o << "\n[source." << v.name << "]\n";
    switch (v.kind) {
      case VolumeSource::Kind::Constant: kv("kind", "constant"); break;
      case VolumeSource::Kind::GaussianBump:
        kv("kind", "gaussian-bump");
        kv("center", fmt(v.center));
        kv("width", fmt(v.width));
        break;
      case VolumeSource::Kind::PerRegion:
        kv("kind", "per-region");
        shape(v.shape);
        break;
    }
    kv("species", std::to_string(v.species));
    kv("amplitude", fmt(v.amplitude));
    if (v.e_lo >= 0) kv("e_lo", fmt(v.e_lo));
    if (v.e_hi >= 0) kv("e_hi", fmt(v.e_hi));
  }
  for (const BoundarySource& b : s.sources.boundary) {
    static const char* faces[] = {"-x", "+x", "-y", "+y", "-z", "+z"};
    o << "\n[source." << b.name << "]\n";
    kv("kind", "boundary-patch");
    kv("species", std::to_string(b.species));
    kv("amplitude", fmt(b.amplitude));
    if (s.domain.is_ball()) {
      kv("axis", fmt(b.axis));
      kv("half_angle", fmt(b.half_angle));
    } else {
      kv("face", faces[b.face]);
    }
    kv("cone", fmt(b.cone));
    kv("taper", fmt(b.taper));
    if (b.e_lo >= 0) kv("e_lo", fmt(b.e_lo));
    if (b.e_hi >= 0) kv("e_hi", fmt(b.e_hi));
  }
  o << "\n[solve]\n";
  kv("tol", fmt(s.solve.tol));
  kv("max_iter", std::to_string(s.solve.max_iter));
  kv("damping", fmt(s.solve.damping));
  kv("ray_step", fmt(s.solve.ray_step));
  kv("force_march", s.solve.force_ray_march ? "true" : "false");

  auto prof = [](Profile p) { return p == Profile::Constant ? "constant" : (p == Profile::Ramp ? "ramp" : "smooth"); };
  o << "\n[time]\n";
  kv("T", fmt(s.time.T));
  kv("steps", std::to_string(s.time.steps));
  kv("series_order", std::to_string(s.time.series_order));
  kv("keep_every", std::to_string(s.time.keep_every));
  kv("treatment", s.time.treatment == BoundaryTreatment::Retarded ? "retarded" : "lift");
  kv("mass", fmt(s.time.mass));
  kv("boundary_profile", prof(s.time.boundary_profile));
  kv("boundary_tau", fmt(s.time.boundary_tau));
  kv("source_profile", prof(s.time.source_profile));
  kv("source_tau", fmt(s.time.source_tau));

  const Prescription& rx = s.plan.rx;
  o << "\n[rx]\n";
  kv("d0", fmt(rx.d0));
  kv("dcap_c", fmt(rx.dcap_c));
  kv("dcap_n", fmt(rx.dcap_n));
  kv("c", fmt(rx.c));
  kv("eps", fmt(rx.eps));
  kv("track_t", fmt(rx.track_t));
  kv("track_c", fmt(rx.track_c));
  kv("track_n", fmt(rx.track_n));
  kv("mode", rx.mode == PlanMode::External ? "external" : "internal");
  kv("reduction", rx.reduction == ControlReduction::Full
                      ? "full"
                      : (rx.reduction == ControlReduction::EnergyIndependent ? "energy" : "energy-angle"));
  kv("species", std::string(s.plan.species[0] ? "1" : "0") + " " + (s.plan.species[1] ? "1" : "0") + " " +
                    (s.plan.species[2] ? "1" : "0"));
  if (!s.plan.labels_csv.empty()) kv("labels_csv", s.plan.labels_csv);
  o << "\n[rx.dv]\n";
  kv("d_c", fmt(rx.dv_dc));
  kv("v_c", fmt(rx.dv_vc));
  o << "\n[rx.weights]\n";
  kv("t", fmt(rx.c_t));
  kv("c", fmt(rx.c_c));
  kv("n", fmt(rx.c_n));
  kv("dv", fmt(rx.c_dv));
  kv("ad", fmt(rx.c_ad));
  kv("sc", fmt(rx.c_sc));
  for (const LabelShape& l : s.plan.labels) {
    o << "\n[label." << l.name << "]\n";
    shape(l.shape);
    kv("label", to_string(l.label));
  }
  o << "\n[plan]\n";
  kv("theta", fmt(s.plan.theta));
  kv("fixed_point_tol", fmt(s.plan.fixed_point_tol));
  kv("max_fixed_point", std::to_string(s.plan.max_fixed_point));
  kv("max_pg_iter", std::to_string(s.plan.max_pg_iter));
  kv("multistart", std::to_string(s.plan.multistart));
  o << "\n[probe]\n";
  kv("p", std::to_string(s.probe.p));
  kv("levels", std::to_string(s.probe.levels));
  kv("order", std::to_string(s.probe.order));
  o << "\n[run]\n";
  kv("seed", std::to_string(s.run.seed));
  kv("particles", std::to_string(s.run.particles));
  kv("out", s.run.out);
  kv("threads", std::to_string(s.run.threads));
  return o.str();
}

PhaseGrid build_grid(const Scenario& s) {
  return build_phase_grid(s.domain, s.grid.nx, s.grid.n_polar, s.grid.n_azimuth, s.grid.n_energy, s.grid.e0,
                          s.grid.em);
}

}  // namespace bte
