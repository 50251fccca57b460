#include "mctdh3mix/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace mctdh {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

[[noreturn]] void fail(int line, const std::string& msg) {
  throw parse_error("config line " + std::to_string(line) + ": " + msg);
}

// One parsed [section] with strict typed accessors; leftover keys are errors.
class Section {
 public:
  Section() = default;
  explicit Section(std::string name) : name_(std::move(name)) {}

  const std::string& name() const { return name_; }

  void insert(int line, const std::string& key, const std::string& value) {
    if (kv_.count(key)) fail(line, "duplicate key '" + key + "' in [" + name_ + "]");
    kv_[key] = {line, value};
  }

  bool has(const std::string& key) const { return kv_.count(key) != 0; }

  std::string get_string(const std::string& key) {
    auto it = kv_.find(key);
    if (it == kv_.end())
      throw parse_error("config: [" + name_ + "] is missing required key '" + key + "'");
    consumed_.insert(key);
    return it->second.second;
  }
  std::string get_string(const std::string& key, const std::string& dflt) {
    return has(key) ? get_string(key) : dflt;
  }

  double get_double(const std::string& key) { return parse_double(key, get_string(key)); }
  double get_double(const std::string& key, double dflt) {
    return has(key) ? get_double(key) : dflt;
  }

  int64_t get_int(const std::string& key) { return parse_int(key, get_string(key)); }
  int64_t get_int(const std::string& key, int64_t dflt) { return has(key) ? get_int(key) : dflt; }

  bool get_bool(const std::string& key, bool dflt) {
    if (!has(key)) return dflt;
    const std::string v = lower(get_string(key));
    if (v == "true" || v == "yes" || v == "1") return true;
    if (v == "false" || v == "no" || v == "0") return false;
    fail(line_of(key), "key '" + key + "' expects a boolean, got '" + v + "'");
  }

  void finish() const {
    for (const auto& [key, lv] : kv_)
      if (!consumed_.count(key))
        fail(lv.first, "unknown key '" + key + "' in section [" + name_ + "]");
  }

  int line_of(const std::string& key) const {
    auto it = kv_.find(key);
    return it == kv_.end() ? 0 : it->second.first;
  }

 private:
  double parse_double(const std::string& key, const std::string& v) {
    double out = 0.0;
    const char* b = v.data();
    const char* e = v.data() + v.size();
    auto [p, ec] = std::from_chars(b, e, out);
    if (ec != std::errc{} || p != e)
      fail(line_of(key), "key '" + key + "' expects a number, got '" + v + "'");
    return out;
  }
  int64_t parse_int(const std::string& key, const std::string& v) {
    int64_t out = 0;
    const char* b = v.data();
    const char* e = v.data() + v.size();
    auto [p, ec] = std::from_chars(b, e, out);
    if (ec != std::errc{} || p != e)
      fail(line_of(key), "key '" + key + "' expects an integer, got '" + v + "'");
    return out;
  }

  std::string name_;
  std::map<std::string, std::pair<int, std::string>> kv_;
  std::set<std::string> consumed_;
};

const std::set<std::string> kValidTags = {"AA",  "BB",  "CC",  "AAA", "BBB", "CCC",
                                          "AB",  "AC",  "BC",  "AAB", "ABB", "AAC",
                                          "ACC", "BBC", "BCC", "ABC"};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::vector<int> tag_species(const std::string& tag) {
  require(kValidTags.count(tag) != 0, "tag_species: unknown interaction tag '" + tag + "'");
  std::vector<int> out;
  for (char c : tag) out.push_back(c - 'A');
  return out;
}

Config parse_config(const std::string& text) {
  std::map<std::string, Section> sections;
  std::vector<std::string> order;
  Section* cur = nullptr;

  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string s = raw;
    const auto hash = s.find('#');
    if (hash != std::string::npos) s = s.substr(0, hash);
    s = trim(s);
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') fail(line, "malformed section header '" + s + "'");
      const std::string name = trim(s.substr(1, s.size() - 2));
      if (name.empty()) fail(line, "empty section name");
      if (sections.count(name)) fail(line, "duplicate section [" + name + "]");
      cur = &(sections[name] = Section(name));
      order.push_back(name);
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) fail(line, "expected 'key = value', got '" + s + "'");
    if (!cur) fail(line, "key outside of any [section]");
    const std::string key = trim(s.substr(0, eq));
    const std::string value = trim(s.substr(eq + 1));
    if (key.empty()) fail(line, "empty key");
    if (value.empty()) fail(line, "empty value for key '" + key + "'");
    cur->insert(line, key, value);
  }

  Config cfg;
  std::set<std::string> known;

  // [grid]
  if (!sections.count("grid")) throw parse_error("config: missing required section [grid]");
  known.insert("grid");
  {
    Section& g = sections["grid"];
    cfg.grid.n_points = static_cast<int>(g.get_int("n_points"));
    cfg.grid.x_min = g.get_double("x_min");
    cfg.grid.x_max = g.get_double("x_max");
    const std::string b = lower(g.get_string("boundary", "hardwall"));
    if (b == "hardwall")
      cfg.grid.boundary = Boundary::HardWall;
    else if (b == "periodic")
      cfg.grid.boundary = Boundary::Periodic;
    else
      fail(g.line_of("boundary"), "boundary must be 'hardwall' or 'periodic'");
    g.finish();
  }

  // [species.A] .. [species.C], contiguous from A
  const std::array<std::string, 3> species_names = {"species.A", "species.B", "species.C"};
  for (int x = 0; x < 3; ++x) {
    if (!sections.count(species_names[x])) break;
    known.insert(species_names[x]);
    Section& s = sections[species_names[x]];
    SpeciesConfig sc;
    const std::string stat = lower(s.get_string("statistics"));
    if (stat == "boson")
      sc.statistics = Statistics::Boson;
    else if (stat == "fermion")
      sc.statistics = Statistics::Fermion;
    else
      fail(s.line_of("statistics"), "statistics must be 'boson' or 'fermion'");
    sc.n_particles = static_cast<int>(s.get_int("n_particles"));
    sc.n_orbitals = static_cast<int>(s.get_int("n_orbitals"));
    sc.mass = s.get_double("mass", 1.0);
    const std::string trap = lower(s.get_string("trap", "none"));
    if (trap == "none")
      sc.trap.kind = TrapSpec::Kind::None;
    else if (trap == "harmonic")
      sc.trap.kind = TrapSpec::Kind::Harmonic;
    else
      fail(s.line_of("trap"), "trap must be 'none' or 'harmonic'");
    sc.trap.omega = s.get_double("omega", 1.0);
    sc.trap.center = s.get_double("center", 0.0);
    sc.trap.drive_amp = s.get_double("drive_amp", 0.0);
    sc.trap.drive_omega = s.get_double("drive_omega", 0.0);
    s.finish();
    cfg.species.push_back(sc);
  }
  if (cfg.species.empty()) throw parse_error("config: missing required section [species.A]");

  // [interaction.TAG]
  for (const std::string& name : order) {
    if (name.rfind("interaction.", 0) != 0) continue;
    known.insert(name);
    const std::string tag = name.substr(std::string("interaction.").size());
    if (!kValidTags.count(tag))
      throw parse_error("config: unknown interaction tag '" + tag + "'");
    Section& s = sections[name];
    InteractionConfig ic;
    ic.tag = tag;
    const std::string kind = lower(s.get_string("kind"));
    if (kind == "contact")
      ic.spec.kind = KernelKind::Contact;
    else if (kind == "gaussian")
      ic.spec.kind = KernelKind::Gaussian;
    else if (kind == "contact3")
      ic.spec.kind = KernelKind::ContactTriple;
    else if (kind == "gaussian3")
      ic.spec.kind = KernelKind::GaussianTriple;
    else
      fail(s.line_of("kind"), "kind must be contact, gaussian, contact3 or gaussian3");
    ic.spec.strength = s.get_double("strength");
    ic.spec.sigma = s.get_double("sigma", 0.0);
    const std::string ramp = lower(s.get_string("ramp", "constant"));
    if (ramp == "constant")
      ic.spec.ramp = RampKind::Constant;
    else if (ramp == "linear")
      ic.spec.ramp = RampKind::Linear;
    else if (ramp == "sinusoidal")
      ic.spec.ramp = RampKind::Sinusoidal;
    else
      fail(s.line_of("ramp"), "ramp must be constant, linear or sinusoidal");
    ic.spec.ramp_param = s.get_double("ramp_param", 0.0);
    s.finish();
    cfg.interactions.push_back(ic);
  }

  // [propagation]
  if (!sections.count("propagation"))
    throw parse_error("config: missing required section [propagation]");
  known.insert("propagation");
  {
    Section& p = sections["propagation"];
    const std::string mode = lower(p.get_string("mode"));
    if (mode == "real")
      cfg.prop.mode = RunMode::RealTime;
    else if (mode == "imaginary")
      cfg.prop.mode = RunMode::Imaginary;
    else if (mode == "ci")
      cfg.prop.mode = RunMode::FixedOrbitalCI;
    else
      fail(p.line_of("mode"), "mode must be 'real', 'imaginary' or 'ci'");
    const std::string kind = lower(p.get_string("propagator", "rk45"));
    if (kind == "rk45")
      cfg.prop.propagator = PropagatorKind::AdaptiveRk;
    else if (kind == "lanczos")
      cfg.prop.propagator = PropagatorKind::Lanczos;
    else
      fail(p.line_of("propagator"), "propagator must be 'rk45' or 'lanczos'");
    cfg.prop.t_final = p.get_double("t_final");
    cfg.prop.output_stride = p.get_double("output_stride", 0.0);
    cfg.prop.dt_init = p.get_double("dt_init", 1e-3);
    cfg.prop.rel_tol = p.get_double("rel_tol", 1e-8);
    cfg.prop.abs_tol = p.get_double("abs_tol", 1e-10);
    cfg.prop.krylov_dim = static_cast<int>(p.get_int("krylov_dim", 12));
    cfg.prop.drift_threshold = p.get_double("drift_threshold", 1e-8);
    cfg.prop.relax_energy_tol = p.get_double("relax_energy_tol", -1.0);
    cfg.prop.relax_residual_tol = p.get_double("relax_residual_tol", 1e-6);
    p.finish();
  }

  // [run]
  if (sections.count("run")) {
    known.insert("run");
    Section& r = sections["run"];
    cfg.run.seed = static_cast<uint64_t>(r.get_int("seed", 0));
    cfg.run.strict_warnings = r.get_bool("strict_warnings", false);
    cfg.run.label = r.get_string("label", "run");
    r.finish();
  }

  for (const std::string& name : order)
    if (!known.count(name)) throw parse_error("config: unknown section [" + name + "]");

  return cfg;
}

Config load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw parse_error("config: cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const Config& c) {
  std::ostringstream out;
  out << "[grid]\n";
  out << "n_points = " << c.grid.n_points << "\n";
  out << "x_min = " << fmt(c.grid.x_min) << "\n";
  out << "x_max = " << fmt(c.grid.x_max) << "\n";
  out << "boundary = " << (c.grid.boundary == Boundary::HardWall ? "hardwall" : "periodic")
      << "\n";
  for (size_t x = 0; x < c.species.size(); ++x) {
    const SpeciesConfig& s = c.species[x];
    out << "\n[species." << static_cast<char>('A' + x) << "]\n";
    out << "statistics = " << (s.statistics == Statistics::Boson ? "boson" : "fermion") << "\n";
    out << "n_particles = " << s.n_particles << "\n";
    out << "n_orbitals = " << s.n_orbitals << "\n";
    out << "mass = " << fmt(s.mass) << "\n";
    out << "trap = " << (s.trap.kind == TrapSpec::Kind::None ? "none" : "harmonic") << "\n";
    out << "omega = " << fmt(s.trap.omega) << "\n";
    out << "center = " << fmt(s.trap.center) << "\n";
    out << "drive_amp = " << fmt(s.trap.drive_amp) << "\n";
    out << "drive_omega = " << fmt(s.trap.drive_omega) << "\n";
  }
  for (const InteractionConfig& ic : c.interactions) {
    out << "\n[interaction." << ic.tag << "]\n";
    const char* kind = "contact";
    switch (ic.spec.kind) {
      case KernelKind::Contact: kind = "contact"; break;
      case KernelKind::Gaussian: kind = "gaussian"; break;
      case KernelKind::ContactTriple: kind = "contact3"; break;
      case KernelKind::GaussianTriple: kind = "gaussian3"; break;
    }
    out << "kind = " << kind << "\n";
    out << "strength = " << fmt(ic.spec.strength) << "\n";
    out << "sigma = " << fmt(ic.spec.sigma) << "\n";
    const char* ramp = "constant";
    if (ic.spec.ramp == RampKind::Linear) ramp = "linear";
    if (ic.spec.ramp == RampKind::Sinusoidal) ramp = "sinusoidal";
    out << "ramp = " << ramp << "\n";
    out << "ramp_param = " << fmt(ic.spec.ramp_param) << "\n";
  }
  out << "\n[propagation]\n";
  const char* mode = "real";
  if (c.prop.mode == RunMode::Imaginary) mode = "imaginary";
  if (c.prop.mode == RunMode::FixedOrbitalCI) mode = "ci";
  out << "mode = " << mode << "\n";
  out << "propagator = "
      << (c.prop.propagator == PropagatorKind::AdaptiveRk ? "rk45" : "lanczos") << "\n";
  out << "t_final = " << fmt(c.prop.t_final) << "\n";
  out << "output_stride = " << fmt(c.prop.output_stride) << "\n";
  out << "dt_init = " << fmt(c.prop.dt_init) << "\n";
  out << "rel_tol = " << fmt(c.prop.rel_tol) << "\n";
  out << "abs_tol = " << fmt(c.prop.abs_tol) << "\n";
  out << "krylov_dim = " << c.prop.krylov_dim << "\n";
  out << "drift_threshold = " << fmt(c.prop.drift_threshold) << "\n";
  out << "relax_energy_tol = " << fmt(c.prop.relax_energy_tol) << "\n";
  out << "relax_residual_tol = " << fmt(c.prop.relax_residual_tol) << "\n";
  out << "\n[run]\n";
  out << "seed = " << c.run.seed << "\n";
  out << "strict_warnings = " << (c.run.strict_warnings ? "true" : "false") << "\n";
  out << "label = " << c.run.label << "\n";
  return out.str();
}

std::vector<std::string> validate_config(const Config& c) {
  std::vector<std::string> warnings;
  auto hard = [](bool cond, const std::string& msg) {
    if (!cond) throw validation_error("config: " + msg);
  };

  hard(c.grid.n_points >= 4, "grid needs at least 4 points");
  hard(c.grid.x_max > c.grid.x_min, "grid needs x_max > x_min");
  hard(!c.species.empty() && c.species.size() <= 3, "1 to 3 species required");

  for (size_t x = 0; x < c.species.size(); ++x) {
    const SpeciesConfig& s = c.species[x];
    const std::string who = std::string("species.") + static_cast<char>('A' + x);
    hard(s.n_particles >= 1, who + ": n_particles must be >= 1");
    hard(s.n_orbitals >= 1, who + ": n_orbitals must be >= 1");
    hard(s.n_orbitals <= c.grid.n_points, who + ": more orbitals than grid points");
    hard(s.statistics != Statistics::Fermion || s.n_particles <= s.n_orbitals,
         who + ": fermions need n_orbitals >= n_particles");
    hard(s.mass > 0.0, who + ": mass must be positive");
    hard(s.trap.kind != TrapSpec::Kind::Harmonic || s.trap.omega > 0.0,
         who + ": harmonic trap needs omega > 0");
  }

  std::set<std::string> seen;
  for (const InteractionConfig& ic : c.interactions) {
    const std::string who = "interaction." + ic.tag;
    hard(!seen.count(ic.tag), who + ": duplicate tag");
    seen.insert(ic.tag);
    const std::vector<int> axes = tag_species(ic.tag);
    for (int a : axes)
      hard(a < static_cast<int>(c.species.size()),
           who + ": species " + std::string(1, static_cast<char>('A' + a)) + " is not declared");
    const bool two_body = ic.tag.size() == 2;
    const bool kernel2 =
        ic.spec.kind == KernelKind::Contact || ic.spec.kind == KernelKind::Gaussian;
    hard(two_body == kernel2, who + (two_body ? ": two-body tags need kind contact|gaussian"
                                              : ": three-body tags need kind contact3|gaussian3"));
    if (ic.spec.kind == KernelKind::Gaussian || ic.spec.kind == KernelKind::GaussianTriple)
      hard(ic.spec.sigma > 0.0, who + ": gaussian kernels need sigma > 0");
    if (ic.spec.ramp == RampKind::Linear)
      hard(ic.spec.ramp_param > 0.0, who + ": linear ramp needs ramp_param > 0");
    // Contact interaction between identical fermions vanishes by antisymmetry.
    if (ic.tag.size() == 2 && ic.tag[0] == ic.tag[1] &&
        ic.spec.kind == KernelKind::Contact &&
        c.species[static_cast<size_t>(ic.tag[0] - 'A')].statistics == Statistics::Fermion)
      warnings.push_back(who + ": contact interaction between identical fermions has no effect");
  }

  hard(c.prop.t_final > 0.0, "propagation: t_final must be positive");
  hard(c.prop.output_stride >= 0.0, "propagation: output_stride must be >= 0");
  hard(c.prop.dt_init > 0.0, "propagation: dt_init must be positive");
  hard(c.prop.rel_tol > 0.0 && c.prop.abs_tol > 0.0, "propagation: tolerances must be positive");
  hard(c.prop.krylov_dim >= 1, "propagation: krylov_dim must be >= 1");
  if (c.prop.propagator == PropagatorKind::Lanczos && c.prop.mode != RunMode::FixedOrbitalCI)
    warnings.push_back(
        "propagation: lanczos moves coefficients only; orbitals stay frozen outside ci mode");

  return warnings;
}

}  // namespace mctdh
