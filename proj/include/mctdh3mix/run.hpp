#pragma once

#include "mctdh3mix/config.hpp"
#include "mctdh3mix/prop.hpp"

namespace mctdh {

namespace exit_code {
constexpr int kOk = 0;
constexpr int kError = 1;
constexpr int kParse = 2;
constexpr int kValidation = 3;
constexpr int kStiffness = 4;
constexpr int kNoConvergence = 5;
}  // namespace exit_code

struct RunOptions {
  std::string output_dir = ".";
  bool write_checkpoint = false;
  std::string restore_path;  // resume from this checkpoint when nonempty
  bool verify_oracle = false;
  int oracle_samples = 5;
};

// Instantiate the dynamical system a validated config declares.
System make_system(const Config& cfg);

// Worst elementwise deviation between the matrix-free Hamiltonian application
// and the dense oracle on `samples` random normalized coefficient vectors.
double oracle_deviation(const System& sys, const SystemState& y, double t, uint64_t seed,
                        int samples);

struct Checkpoint {
  double t = 0.0;
  double dt_carry = 0.0;
  SystemState state;
};

// Binary checkpoint: "MC3M" magic, version, grid/species header, time, the
// carried step proposal, coefficients, orbitals, CRC32 trailer.
void save_checkpoint(const std::string& path, const Config& cfg, const Checkpoint& cp);
Checkpoint load_checkpoint(const std::string& path, const Config& cfg, const System& sys);

// Execute a run: writes trajectory.csv and summary.json (and checkpoint.bin
// on request) into output_dir. Returns a CLI exit code.
int run_simulation(const Config& cfg, const RunOptions& opt);

}  // namespace mctdh
