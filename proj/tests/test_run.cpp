#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>

#include "mctdh3mix/run.hpp"

using namespace mctdh;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& hint) {
  static int counter = 0;
  fs::path p = fs::temp_directory_path() /
               ("mctdh3mix_test_" + hint + "_" + std::to_string(++counter));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

Config small_real_config() {
  Config c;
  c.grid = {64, -6.0, 6.0, Boundary::HardWall};
  SpeciesConfig a;
  a.statistics = Statistics::Boson;
  a.n_particles = 2;
  a.n_orbitals = 2;
  a.trap.kind = TrapSpec::Kind::Harmonic;
  c.species.push_back(a);
  InteractionConfig ic;
  ic.tag = "AA";
  ic.spec.kind = KernelKind::Contact;
  ic.spec.strength = 0.5;
  c.interactions.push_back(ic);
  c.prop.mode = RunMode::RealTime;
  c.prop.t_final = 0.1;
  c.prop.output_stride = 0.05;
  c.prop.rel_tol = 1e-8;
  c.prop.abs_tol = 1e-10;
  c.run.label = "unit";
  return c;
}

RunOptions out_to(const fs::path& dir) {
  RunOptions o;
  o.output_dir = dir.string();
  return o;
}

nlohmann::json read_summary(const fs::path& dir) {
  std::ifstream in(dir / "summary.json");
  REQUIRE(in.good());
  nlohmann::json j;
  in >> j;
  return j;
}

std::vector<std::string> read_lines(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in.good());
  std::vector<std::string> lines;
  std::string l;
  while (std::getline(in, l))
    if (!l.empty()) lines.push_back(l);
  return lines;
}

}  // namespace

TEST_CASE("configs instantiate systems with the declared couplings") {
  Config c = small_real_config();
  SpeciesConfig b;
  b.statistics = Statistics::Fermion;
  b.n_particles = 1;
  b.n_orbitals = 2;
  b.mass = 2.5;
  c.species.push_back(b);
  SpeciesConfig cc = b;
  cc.statistics = Statistics::Boson;
  c.species.push_back(cc);
  auto add = [&c](const std::string& tag, KernelKind kind, double strength) {
    InteractionConfig ic;
    ic.tag = tag;
    ic.spec.kind = kind;
    ic.spec.strength = strength;
    c.interactions.push_back(ic);
  };
  add("BBB", KernelKind::ContactTriple, 0.1);
  add("AC", KernelKind::Contact, 0.2);
  add("ABB", KernelKind::ContactTriple, 0.3);
  add("BCC", KernelKind::ContactTriple, 0.4);
  add("ABC", KernelKind::ContactTriple, 0.5);
  const System sys = make_system(c);

  CHECK(sys.n_species() == 3);
  CHECK(sys.grid().n == 64);
  CHECK(sys.phys(1).mass == 2.5);
  CHECK(sys.phys(1).spec.stat == Statistics::Fermion);
  CHECK(sys.intra_pair(0).has_value());   // AA
  CHECK_FALSE(sys.intra_pair(1).has_value());
  CHECK(sys.intra_triple(1).has_value()); // BBB
  CHECK_FALSE(sys.intra_triple(0).has_value());
  CHECK(sys.inter_pair(1).has_value());   // AC sits at ordered pair index 1
  CHECK_FALSE(sys.inter_pair(0).has_value());
  CHECK(sys.pair_triple(1).has_value());  // ABB
  CHECK(sys.pair_triple(5).has_value());  // BCC
  CHECK_FALSE(sys.pair_triple(0).has_value());
  CHECK(sys.triple().has_value());        // ABC
  CHECK(sys.intra_pair(0)->spec().strength == 0.5);
  CHECK(sys.inter_pair(1)->spec().strength == 0.2);
}

TEST_CASE("matrix-free and dense routes agree on a freshly built system") {
  const Config c = small_real_config();
  const System sys = make_system(c);
  const SystemState y = initial_state(sys);
  CHECK(oracle_deviation(sys, y, 0.0, 7, 4) < 1e-13);
}

TEST_CASE("a real-time run writes a trajectory table and a summary record") {
  const fs::path dir = fresh_dir("real");
  const Config c = small_real_config();
  CHECK(run_simulation(c, out_to(dir)) == exit_code::kOk);

  const std::vector<std::string> lines = read_lines(dir / "trajectory.csv");
  REQUIRE(lines.size() == 4);  // header + t = 0, 0.05, 0.1
  CHECK(lines[0] == "t,energy_re,energy_im,norm,nocc_A_1,nocc_A_2,mean_x_A");
  CHECK(lines[1].rfind("0,", 0) == 0);
  // rows carry 7 comma-separated numeric fields
  for (size_t r = 1; r < lines.size(); ++r)
    CHECK(std::count(lines[r].begin(), lines[r].end(), ',') == 6);

  const nlohmann::json j = read_summary(dir);
  CHECK(j["label"] == "unit");
  CHECK(j["status"] == "ok");
  CHECK(j["mode"] == "real");
  CHECK(j["propagator"] == "rk45");
  CHECK(j["t_reached"].get<double>() == 0.1);
  CHECK(std::abs(j["norm"].get<double>() - 1.0) < 1e-10);
  CHECK(j["events"]["accepted"].get<int64_t>() > 0);
  CHECK(j["events"]["rhs_evaluations"].get<int64_t>() > 0);
  CHECK(j["natural_occupations"]["A"].size() == 2);
  CHECK(j["threads"].get<int>() >= 1);
  CHECK(j["checkpoint"] == "");
  CHECK_FALSE(fs::exists(dir / "checkpoint.bin"));
}

TEST_CASE("an imaginary-time run records its convergence data") {
  const fs::path dir = fresh_dir("imag");
  Config c = small_real_config();
  c.prop.mode = RunMode::Imaginary;
  c.prop.t_final = 50.0;
  c.prop.output_stride = 1.0;
  CHECK(run_simulation(c, out_to(dir)) == exit_code::kOk);
  const nlohmann::json j = read_summary(dir);
  CHECK(j["status"] == "ok");
  CHECK(j["converged"].get<bool>());
  CHECK(j["relax_residual"].get<double>() < 1e-6);
  CHECK(j["relax_energy"].get<double>() > 1.0);   // repulsive pair
  CHECK(j["relax_energy"].get<double>() < 1.25);
  CHECK(j["t_reached"].get<double>() < 50.0);     // stopped at convergence
}

TEST_CASE("a relaxation cut off before convergence reports failure") {
  const fs::path dir = fresh_dir("noconv");
  Config c = small_real_config();
  c.prop.mode = RunMode::Imaginary;
  c.prop.t_final = 2e-3;  // a couple of steps at most
  CHECK(run_simulation(c, out_to(dir)) == exit_code::kNoConvergence);
  const nlohmann::json j = read_summary(dir);
  CHECK(j["status"] == "no_convergence");
  CHECK_FALSE(j["converged"].get<bool>());
}

TEST_CASE("strict warnings escalate advisory findings") {
  const fs::path dir = fresh_dir("strict");
  Config c = small_real_config();
  c.species[0].statistics = Statistics::Fermion;  // AA contact now vanishes
  c.run.strict_warnings = true;
  CHECK_THROWS_AS((void)run_simulation(c, out_to(dir)), validation_error);
  c.run.strict_warnings = false;
  CHECK(run_simulation(c, out_to(dir)) == exit_code::kOk);
}

TEST_CASE("checkpoints restore the exact stored state") {
  const Config c = small_real_config();
  const System sys = make_system(c);
  const fs::path dir = fresh_dir("ckpt");
  const std::string path = (dir / "state.bin").string();

  Checkpoint cp;
  cp.t = 0.375;
  cp.dt_carry = 6.25e-3;
  cp.state = initial_state(sys);
  cp.state.c[1] = cplx{0.25, -0.125};
  cp.state.orbitals[0].orbital(2)[3] = cplx{0.5, 0.75};
  save_checkpoint(path, c, cp);

  const Checkpoint back = load_checkpoint(path, c, sys);
  CHECK(back.t == cp.t);
  CHECK(back.dt_carry == cp.dt_carry);
  for (int64_t i = 0; i < cp.state.c.size(); ++i) CHECK(back.state.c[i] == cp.state.c[i]);
  for (int64_t i = 0; i < cp.state.orbitals[0].size(); ++i)
    CHECK(back.state.orbitals[0].data()[i] == cp.state.orbitals[0].data()[i]);

  // flipping one payload byte breaks the integrity trailer
  std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
  f.seekp(40);
  char byte = 0;
  f.seekg(40);
  f.read(&byte, 1);
  byte = static_cast<char>(byte ^ 0x10);
  f.seekp(40);
  f.write(&byte, 1);
  f.close();
  CHECK_THROWS((void)load_checkpoint(path, c, sys));

  // a mismatched system layout is rejected up front
  save_checkpoint(path, c, cp);
  Config other = c;
  other.species[0].n_orbitals = 3;
  const System sys2 = make_system(other);
  CHECK_THROWS((void)load_checkpoint(path, other, sys2));
}

TEST_CASE("a run resumed from its checkpoint matches the uninterrupted run") {
  Config whole = small_real_config();
  whole.prop.t_final = 0.2;
  whole.prop.output_stride = 0.1;
  const fs::path dir_whole = fresh_dir("whole");
  REQUIRE(run_simulation(whole, out_to(dir_whole)) == exit_code::kOk);

  Config first = whole;
  first.prop.t_final = 0.1;
  const fs::path dir_first = fresh_dir("first");
  RunOptions opt_first = out_to(dir_first);
  opt_first.write_checkpoint = true;
  REQUIRE(run_simulation(first, opt_first) == exit_code::kOk);

  Config second = whole;  // t_final back to 0.2, resumes from t = 0.1
  const fs::path dir_second = fresh_dir("second");
  RunOptions opt_second = out_to(dir_second);
  opt_second.restore_path = (dir_first / "checkpoint.bin").string();
  REQUIRE(run_simulation(second, opt_second) == exit_code::kOk);

  // the resumed trajectory reproduces the uninterrupted rows bit for bit
  const std::vector<std::string> a = read_lines(dir_whole / "trajectory.csv");
  const std::vector<std::string> b = read_lines(dir_second / "trajectory.csv");
  REQUIRE(a.size() == 4);  // header, 0, 0.1, 0.2
  REQUIRE(b.size() == 3);  // header, 0.1, 0.2
  CHECK(a[0] == b[0]);
  CHECK(a[2] == b[1]);
  CHECK(a[3] == b[2]);

  const nlohmann::json js = read_summary(dir_second);
  const nlohmann::json jw = read_summary(dir_whole);
  CHECK(js["energy_re"].get<double>() == jw["energy_re"].get<double>());
  CHECK(js["dt_carry"].get<double>() == jw["dt_carry"].get<double>());
  CHECK(js["t_start"].get<double>() == 0.1);
}
