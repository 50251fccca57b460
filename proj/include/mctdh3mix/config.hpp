#pragma once

#include <string>
#include <vector>

#include "mctdh3mix/prop.hpp"

namespace mctdh {

// Malformed config text (unknown keys, bad values): CLI exit code 2.
struct parse_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Well-formed but physically inconsistent configs: CLI exit code 3.
struct validation_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GridConfig {
  int n_points = 0;
  double x_min = 0.0;
  double x_max = 0.0;
  Boundary boundary = Boundary::HardWall;
};

struct SpeciesConfig {
  Statistics statistics = Statistics::Boson;
  int n_particles = 1;
  int n_orbitals = 1;
  double mass = 1.0;
  TrapSpec trap;
};

// Valid tags: AA BB CC AAA BBB CCC AB AC BC AAB ABB AAC ACC BBC BCC ABC.
struct InteractionConfig {
  std::string tag;
  InteractionSpec spec;
};

enum class RunMode { RealTime, Imaginary, FixedOrbitalCI };

struct PropagationConfig {
  RunMode mode = RunMode::RealTime;
  PropagatorKind propagator = PropagatorKind::AdaptiveRk;
  double t_final = 1.0;
  double output_stride = 0.0;  // 0 = endpoints only
  double dt_init = 1e-3;
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
  int krylov_dim = 12;
  double drift_threshold = 1e-8;
  double relax_energy_tol = -1.0;  // < 0: follow abs_tol
  double relax_residual_tol = 1e-6;
};

struct RunSettings {
  uint64_t seed = 0;
  bool strict_warnings = false;
  std::string label = "run";
};

struct Config {
  GridConfig grid;
  std::vector<SpeciesConfig> species;  // A, then optionally B, C
  std::vector<InteractionConfig> interactions;
  PropagationConfig prop;
  RunSettings run;
};

Config parse_config(const std::string& text);
Config load_config(const std::string& path);

// Canonical text form; parse_config(serialize_config(c)) reproduces c.
std::string serialize_config(const Config& c);

// Hard inconsistencies throw validation_error; the return value lists
// warnings (escalated to errors by run.strict_warnings at the call site).
std::vector<std::string> validate_config(const Config& c);

// Species axes touched by an interaction tag, e.g. "AAB" -> {0, 0, 1}.
std::vector<int> tag_species(const std::string& tag);

}  // namespace mctdh
