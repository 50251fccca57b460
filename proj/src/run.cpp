#include "mctdh3mix/run.hpp"

#include <json.hpp>
#include <zlib.h>

#include <bit>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include "mctdh3mix/oracle.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace mctdh {

namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

int family_index(int a1, int a2, int doubled) {
  for (int f = 0; f < 6; ++f) {
    const PairTripleFamily& fam = kPairTriples[f];
    if (fam.a1 == a1 && fam.a2 == a2 && fam.doubled == doubled) return f;
  }
  throw std::invalid_argument("family_index: no such pair-triple family");
}

int threads_in_use() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace

System make_system(const Config& cfg) {
  Grid grid{cfg.grid.n_points, cfg.grid.x_min, cfg.grid.x_max, cfg.grid.boundary};
  std::vector<SpeciesPhys> phys;
  for (const SpeciesConfig& s : cfg.species) {
    SpeciesPhys p;
    p.spec = SpeciesSpec{s.statistics, s.n_particles, s.n_orbitals};
    p.mass = s.mass;
    p.trap = s.trap;
    phys.push_back(p);
  }
  System sys(grid, std::move(phys));

  for (const InteractionConfig& ic : cfg.interactions) {
    const std::vector<int> ax = tag_species(ic.tag);
    if (ax.size() == 2) {
      if (ax[0] == ax[1])
        sys.set_intra_pair(ax[0], ic.spec);
      else
        sys.set_inter_pair(pair_index(ax[0], ax[1]), ic.spec);
    } else {
      if (ax[0] == ax[1] && ax[1] == ax[2]) {
        sys.set_intra_triple(ax[0], ic.spec);
      } else if (ax[0] != ax[1] && ax[1] != ax[2] && ax[0] != ax[2]) {
        sys.set_triple(ic.spec);
      } else {
        const int doubled = ax[0] == ax[1] ? ax[0] : ax[2];
        const int a1 = ax[0];
        const int a2 = ax[2];
        sys.set_pair_triple(family_index(a1, a2, doubled), ic.spec);
      }
    }
  }
  return sys;
}

double oracle_deviation(const System& sys, const SystemState& y, double t, uint64_t seed,
                        int samples) {
  const IntegralTables tables = sys.build_tables(y.orbitals, t);
  const Eigen::MatrixXcd h = oracle::build_dense(sys.space().layout(), tables);
  const int64_t d = sys.space().layout().total_dim();

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  double worst = 0.0;
  for (int s = 0; s < samples; ++s) {
    CoeffTensor c = sys.space().make_tensor();
    for (int64_t i = 0; i < d; ++i) c[i] = cplx{uni(rng), uni(rng)};
    const double nn = std::sqrt(pairwise_norm2(c.data(), d));
    for (int64_t i = 0; i < d; ++i) c[i] /= nn;

    const CoeffTensor fast = apply_hamiltonian(sys.space(), tables, c);
    Eigen::VectorXcd dense = Eigen::VectorXcd::Zero(d);
    for (int64_t i = 0; i < d; ++i) dense(i) = c[i];
    dense = (h * dense).eval();
    for (int64_t i = 0; i < d; ++i) worst = std::max(worst, std::abs(fast[i] - dense(i)));
  }
  return worst;
}

namespace {

void put_bytes(std::vector<unsigned char>& buf, const void* p, size_t n) {
  const unsigned char* b = static_cast<const unsigned char*>(p);
  buf.insert(buf.end(), b, b + n);
}
template <class T>
void put(std::vector<unsigned char>& buf, T v) {
  put_bytes(buf, &v, sizeof(T));
}

struct ByteReader {
  const unsigned char* p;
  const unsigned char* end;
  void take(void* out, size_t n) {
    require(static_cast<size_t>(end - p) >= n, "checkpoint: truncated file");
    std::memcpy(out, p, n);
    p += n;
  }
  template <class T>
  T get() {
    T v;
    take(&v, sizeof(T));
    return v;
  }
};

constexpr char kMagic[4] = {'M', 'C', '3', 'M'};
constexpr uint32_t kVersion = 1;

}  // namespace

void save_checkpoint(const std::string& path, const Config& cfg, const Checkpoint& cp) {
  std::vector<unsigned char> buf;
  put_bytes(buf, kMagic, 4);
  put<uint32_t>(buf, kVersion);
  put<uint32_t>(buf, static_cast<uint32_t>(cfg.species.size()));
  put<int32_t>(buf, cfg.grid.n_points);
  put<double>(buf, cfg.grid.x_min);
  put<double>(buf, cfg.grid.x_max);
  put<uint8_t>(buf, cfg.grid.boundary == Boundary::Periodic ? 1 : 0);
  for (const SpeciesConfig& s : cfg.species) {
    put<uint8_t>(buf, s.statistics == Statistics::Fermion ? 1 : 0);
    put<int32_t>(buf, s.n_particles);
    put<int32_t>(buf, s.n_orbitals);
  }
  put<double>(buf, cp.t);
  put<double>(buf, cp.dt_carry);
  put<int64_t>(buf, cp.state.c.size());
  put_bytes(buf, cp.state.c.data(), static_cast<size_t>(cp.state.c.size()) * sizeof(cplx));
  for (size_t x = 0; x < cfg.species.size(); ++x) {
    const OrbitalSet& o = cp.state.orbitals[x];
    put<int64_t>(buf, o.size());
    put_bytes(buf, o.data(), static_cast<size_t>(o.size()) * sizeof(cplx));
  }
  uint32_t crc = static_cast<uint32_t>(crc32(0L, Z_NULL, 0));
  crc = static_cast<uint32_t>(crc32(crc, buf.data(), static_cast<uInt>(buf.size())));
  put<uint32_t>(buf, crc);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), "checkpoint: cannot open '" + path + "' for writing");
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  require(static_cast<bool>(out), "checkpoint: write to '" + path + "' failed");
}

Checkpoint load_checkpoint(const std::string& path, const Config& cfg, const System& sys) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw validation_error("checkpoint: cannot open '" + path + "'");
  std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)),
                                 std::istreambuf_iterator<char>());
  if (buf.size() < 4 + sizeof(uint32_t) * 2) throw validation_error("checkpoint: file too short");

  uint32_t stored_crc;
  std::memcpy(&stored_crc, buf.data() + buf.size() - sizeof(uint32_t), sizeof(uint32_t));
  uint32_t crc = static_cast<uint32_t>(crc32(0L, Z_NULL, 0));
  crc = static_cast<uint32_t>(
      crc32(crc, buf.data(), static_cast<uInt>(buf.size() - sizeof(uint32_t))));
  if (crc != stored_crc) throw validation_error("checkpoint: CRC mismatch, file corrupted");

  ByteReader r{buf.data(), buf.data() + buf.size() - sizeof(uint32_t)};
  char magic[4];
  r.take(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0)
    throw validation_error("checkpoint: bad magic, not a checkpoint file");
  if (r.get<uint32_t>() != kVersion) throw validation_error("checkpoint: unsupported version");

  const uint32_t nsp = r.get<uint32_t>();
  const int32_t npts = r.get<int32_t>();
  const double xmin = r.get<double>();
  const double xmax = r.get<double>();
  const uint8_t boundary = r.get<uint8_t>();
  bool match = nsp == cfg.species.size() && npts == cfg.grid.n_points &&
               xmin == cfg.grid.x_min && xmax == cfg.grid.x_max &&
               boundary == (cfg.grid.boundary == Boundary::Periodic ? 1 : 0);
  for (uint32_t x = 0; x < nsp; ++x) {
    const uint8_t stat = r.get<uint8_t>();
    const int32_t n = r.get<int32_t>();
    const int32_t m = r.get<int32_t>();
    if (x < cfg.species.size()) {
      const SpeciesConfig& s = cfg.species[x];
      match = match && stat == (s.statistics == Statistics::Fermion ? 1 : 0) &&
              n == s.n_particles && m == s.n_orbitals;
    }
  }
  if (!match) throw validation_error("checkpoint: stored system does not match the config");

  Checkpoint cp;
  cp.t = r.get<double>();
  cp.dt_carry = r.get<double>();
  cp.state = initial_state(sys, cp.t);  // right shapes; contents overwritten
  const int64_t nc = r.get<int64_t>();
  require(nc == cp.state.c.size(), "checkpoint: coefficient count mismatch");
  r.take(cp.state.c.data(), static_cast<size_t>(nc) * sizeof(cplx));
  for (int x = 0; x < sys.n_species(); ++x) {
    const int64_t no = r.get<int64_t>();
    require(no == cp.state.orbitals[x].size(), "checkpoint: orbital block size mismatch");
    r.take(cp.state.orbitals[x].data(), static_cast<size_t>(no) * sizeof(cplx));
  }
  require(r.p == r.end, "checkpoint: trailing bytes");
  return cp;
}

namespace {

std::string csv_header(const Config& cfg) {
  std::string h = "t,energy_re,energy_im,norm";
  for (size_t x = 0; x < cfg.species.size(); ++x) {
    const char sp = static_cast<char>('A' + x);
    for (int j = 1; j <= cfg.species[x].n_orbitals; ++j)
      h += ",nocc_" + std::string(1, sp) + "_" + std::to_string(j);
    h += ",mean_x_" + std::string(1, sp);
  }
  return h;
}

void csv_row(std::FILE* f, const Config& cfg, double t, const Observables& o) {
  std::fprintf(f, "%.17g,%.17g,%.17g,%.17g", t, o.energy.real(), o.energy.imag(), o.norm);
  for (size_t x = 0; x < cfg.species.size(); ++x) {
    for (double v : o.nat_occ[x]) std::fprintf(f, ",%.17g", v);
    std::fprintf(f, ",%.17g", o.mean_x[x]);
  }
  std::fprintf(f, "\n");
}

const char* mode_name(RunMode m) {
  switch (m) {
    case RunMode::RealTime: return "real";
    case RunMode::Imaginary: return "imaginary";
    case RunMode::FixedOrbitalCI: return "ci";
  }
  return "real";
}

}  // namespace

int run_simulation(const Config& cfg, const RunOptions& opt) {
  const std::vector<std::string> warnings = validate_config(cfg);
  for (const std::string& w : warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  if (cfg.run.strict_warnings && !warnings.empty())
    throw validation_error("strict_warnings: " + warnings.front());

  System sys = make_system(cfg);

  namespace fs = std::filesystem;
  fs::create_directories(opt.output_dir);
  const std::string traj_path = (fs::path(opt.output_dir) / "trajectory.csv").string();
  const std::string summary_path = (fs::path(opt.output_dir) / "summary.json").string();
  const std::string ckpt_path = (fs::path(opt.output_dir) / "checkpoint.bin").string();

  double t0 = 0.0;
  double dt_start = 0.0;
  SystemState y;
  if (!opt.restore_path.empty()) {
    Checkpoint cp = load_checkpoint(opt.restore_path, cfg, sys);
    t0 = cp.t;
    dt_start = cp.dt_carry;
    y = std::move(cp.state);
  } else {
    y = initial_state(sys, 0.0);
  }

  double oracle_dev = -1.0;
  if (opt.verify_oracle) {
    oracle_dev = oracle_deviation(sys, y, t0, cfg.run.seed, opt.oracle_samples);
    std::fprintf(stderr, "oracle deviation: %.3e (%d samples)\n", oracle_dev,
                 opt.oracle_samples);
    if (!(oracle_dev <= 1e-10)) {
      std::fprintf(stderr, "error: matrix-free Hamiltonian disagrees with the dense oracle\n");
      return exit_code::kError;
    }
  }

  PropagationOptions popt;
  popt.mode =
      cfg.prop.mode == RunMode::Imaginary ? TimeMode::ImaginaryTime : TimeMode::RealTime;
  popt.kind = cfg.prop.propagator;
  popt.fixed_orbitals = cfg.prop.mode == RunMode::FixedOrbitalCI ||
                        cfg.prop.propagator == PropagatorKind::Lanczos;
  popt.control.rel_tol = cfg.prop.rel_tol;
  popt.control.abs_tol = cfg.prop.abs_tol;
  popt.control.dt_init = cfg.prop.dt_init;
  popt.krylov_dim = cfg.prop.krylov_dim;
  popt.drift_threshold = cfg.prop.drift_threshold;
  popt.relax_energy_tol =
      cfg.prop.relax_energy_tol < 0.0 ? cfg.prop.abs_tol : cfg.prop.relax_energy_tol;
  popt.relax_residual_tol = cfg.prop.relax_residual_tol;
  popt.dt_start = dt_start;

  std::FILE* csv = std::fopen(traj_path.c_str(), "w");
  if (!csv) throw std::runtime_error("cannot open '" + traj_path + "' for writing");
  std::fprintf(csv, "%s\n", csv_header(cfg).c_str());

  Observables last_obs;
  double last_t = t0;
  Observer observer = [&](double t, const SystemState& s, const StepEvents&) {
    last_obs = measure(sys, s, t);
    last_t = t;
    csv_row(csv, cfg, t, last_obs);
  };

  int code = exit_code::kOk;
  std::string status = "ok";
  PropagationResult res;
  try {
    res = propagate(sys, std::move(y), t0, cfg.prop.t_final, cfg.prop.output_stride, popt,
                    observer);
    if (popt.mode == TimeMode::ImaginaryTime && !res.converged) {
      status = "no_convergence";
      code = exit_code::kNoConvergence;
      std::fprintf(stderr,
                   "error: relaxation did not converge within t=%.17g "
                   "(|dE| tol %.3e, residual tol %.3e, residual %.3e)\n",
                   cfg.prop.t_final, popt.relax_energy_tol, popt.relax_residual_tol,
                   res.residual);
    }
  } catch (const stiffness_error& e) {
    std::fclose(csv);
    std::fprintf(stderr, "error: %s\n", e.what());
    status = "stiffness";
    nlohmann::json j;
    j["label"] = cfg.run.label;
    j["status"] = status;
    j["mode"] = mode_name(cfg.prop.mode);
    std::ofstream(summary_path) << j.dump(2) << "\n";
    return exit_code::kStiffness;
  }
  std::fclose(csv);

  if (opt.write_checkpoint) {
    Checkpoint cp;
    cp.t = res.t;
    cp.dt_carry = res.dt_carry;
    cp.state = res.state;
    save_checkpoint(ckpt_path, cfg, cp);
  }

  nlohmann::json j;
  j["label"] = cfg.run.label;
  j["status"] = status;
  j["mode"] = mode_name(cfg.prop.mode);
  j["propagator"] = cfg.prop.propagator == PropagatorKind::AdaptiveRk ? "rk45" : "lanczos";
  j["t_start"] = t0;
  j["t_final_requested"] = cfg.prop.t_final;
  j["t_reached"] = res.t;
  j["dt_carry"] = res.dt_carry;
  j["energy_re"] = last_obs.energy.real();
  j["energy_im"] = last_obs.energy.imag();
  j["norm"] = last_obs.norm;
  for (size_t x = 0; x < cfg.species.size(); ++x) {
    const std::string sp(1, static_cast<char>('A' + x));
    j["natural_occupations"][sp] = last_obs.nat_occ[x];
    j["mean_x"][sp] = last_obs.mean_x[x];
  }
  j["events"] = {{"accepted", res.events.n_accepted},
                 {"rejected", res.events.n_rejected},
                 {"rhs_evaluations", res.events.n_rhs},
                 {"renormalizations", res.events.n_renorm},
                 {"reorthonormalizations", res.events.n_mgs}};
  if (cfg.prop.mode == RunMode::Imaginary) {
    j["converged"] = res.converged;
    j["relax_energy"] = res.energy;
    j["relax_residual"] = res.residual;
  }
  if (opt.verify_oracle) j["oracle_deviation"] = oracle_dev;
  j["seed"] = cfg.run.seed;
  j["threads"] = threads_in_use();
  j["checkpoint"] = opt.write_checkpoint ? ckpt_path : "";
  std::ofstream(summary_path) << j.dump(2) << "\n";

  (void)last_t;
  return code;
}

}  // namespace mctdh
