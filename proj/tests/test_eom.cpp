#include <doctest.h>

#include <random>

#include "mctdh3mix/eom.hpp"
#include "mctdh3mix/oracle.hpp"

using namespace mctdh;

namespace {

Grid ho_grid(int n = 96) { return Grid{n, -8.0, 8.0, Boundary::HardWall}; }

SpeciesPhys harmonic_species(Statistics stat, int n, int m, double mass = 1.0) {
  SpeciesPhys p;
  p.spec = SpeciesSpec{stat, n, m};
  p.mass = mass;
  p.trap.kind = TrapSpec::Kind::Harmonic;
  p.trap.omega = 1.0;
  return p;
}

InteractionSpec contact(double lambda) {
  InteractionSpec s;
  s.kind = KernelKind::Contact;
  s.strength = lambda;
  return s;
}

InteractionSpec contact3(double lambda) {
  InteractionSpec s;
  s.kind = KernelKind::ContactTriple;
  s.strength = lambda;
  return s;
}

SystemState axpy(const SystemState& y, double h, const SystemState& dy) {
  SystemState out = y;
  for (int64_t i = 0; i < out.c.size(); ++i) out.c[i] += h * dy.c[i];
  for (int x = 0; x < 3; ++x)
    for (int64_t i = 0; i < out.orbitals[x].size(); ++i)
      out.orbitals[x].data()[i] += h * dy.orbitals[x].data()[i];
  return out;
}

double energy_of(const System& sys, const SystemState& y, double t) {
  return std::real(measure(sys, y, t).energy);
}

}  // namespace

TEST_CASE("regularized inverse floors small density eigenvalues") {
  Table<2> rho({2, 2});
  rho(1, 1) = 2.0;
  rho(2, 2) = 0.0;
  const Table<2> inv = regularized_inverse(rho);
  CHECK(std::abs(inv(1, 1) - 0.5) < 1e-12);
  CHECK(std::abs(inv(2, 2) - 1e8) < 1.0);
  CHECK(std::abs(inv(1, 2)) < 1e-12);

  // well-conditioned case: a plain inverse
  Table<2> full({2, 2});
  full(1, 1) = 1.5;
  full(2, 2) = 0.5;
  full(1, 2) = cplx{0.2, 0.1};
  full(2, 1) = cplx{0.2, -0.1};
  const Table<2> finv = regularized_inverse(full);
  for (int k = 1; k <= 2; ++k)
    for (int j = 1; j <= 2; ++j) {
      cplx acc{};
      for (int s = 1; s <= 2; ++s) acc += finv(k, s) * full(s, j);
      CHECK(std::abs(acc - (k == j ? 1.0 : 0.0)) < 1e-10);
    }
}

TEST_CASE("initial state: lowest configuration on trap eigenstates") {
  System sys(ho_grid(), {harmonic_species(Statistics::Boson, 2, 3),
                         harmonic_species(Statistics::Fermion, 2, 3, 2.0)});
  const SystemState y = initial_state(sys);
  CHECK(y.c[0] == cplx{1.0, 0.0});
  for (int64_t i = 1; i < y.c.size(); ++i) CHECK(y.c[i] == cplx{});
  for (int x = 0; x < 2; ++x) {
    CHECK(y.orbitals[x].n_orbitals() == 3);
    CHECK(gram_defect(sys.grid(), y.orbitals[x]) < 1e-12);
  }
}

TEST_CASE("coefficient motion is the dense Hamiltonian action times the time factor") {
  System sys(ho_grid(64), {harmonic_species(Statistics::Boson, 2, 2),
                           harmonic_species(Statistics::Boson, 1, 2)});
  sys.set_intra_pair(0, contact(0.5));
  sys.set_inter_pair(0, contact(-0.3));
  SystemState y = initial_state(sys);
  y.c[0] = 0.8;
  y.c[1] = cplx{0.3, 0.4};
  y.c[2] = cplx{0.0, std::sqrt(1.0 - 0.64 - 0.25)};

  const IntegralTables tables = sys.build_tables(y.orbitals, 0.0);
  const Eigen::MatrixXcd hm = oracle::build_dense(sys.space().layout(), tables);
  Eigen::VectorXcd cv(y.c.size());
  for (int64_t i = 0; i < y.c.size(); ++i) cv(i) = y.c[i];
  const Eigen::VectorXcd hc = hm * cv;

  const SystemState dreal = eom_rhs(sys, y, 0.0, TimeMode::RealTime);
  const SystemState dimag = eom_rhs(sys, y, 0.0, TimeMode::ImaginaryTime);
  for (int64_t i = 0; i < y.c.size(); ++i) {
    CHECK(std::abs(dreal.c[i] - cplx{0.0, -1.0} * hc(i)) < 1e-12);
    CHECK(std::abs(dimag.c[i] - (-hc(i))) < 1e-12);
  }
}

TEST_CASE("non-interacting eigenstates are stationary in real time") {
  System sys(ho_grid(), {harmonic_species(Statistics::Boson, 2, 2)});
  const SystemState y = initial_state(sys);
  const SystemState dy = eom_rhs(sys, y, 0.0, TimeMode::RealTime);
  for (int64_t i = 0; i < dy.orbitals[0].size(); ++i)
    CHECK(std::abs(dy.orbitals[0].data()[i]) < 1e-10);
  // the coefficient still rotates with the total energy's phase
  const double e = energy_of(sys, y, 0.0);
  CHECK(std::abs(dy.c[0] - cplx{0.0, -e}) < 1e-10);
}

TEST_CASE("orbital motion stays orthogonal to the occupied space") {
  System sys(ho_grid(64), {harmonic_species(Statistics::Boson, 3, 3)});
  sys.set_intra_pair(0, contact(0.8));
  sys.set_intra_triple(0, contact3(0.2));
  SystemState y = initial_state(sys);
  y.c[0] = 0.6;
  y.c[3] = cplx{0.5, 0.3};
  y.c[7] = cplx{0.2, -0.5};

  const SystemState dy = eom_rhs(sys, y, 0.0, TimeMode::RealTime);
  bool moved = false;
  for (int j = 1; j <= 3; ++j) {
    double mag = 0.0;
    for (const cplx& v : dy.orbitals[0].orbital(j)) mag = std::max(mag, std::abs(v));
    moved = moved || mag > 1e-6;
    for (int k = 1; k <= 3; ++k)
      CHECK(std::abs(grid_dot(sys.grid(), y.orbitals[0].orbital(k),
                              dy.orbitals[0].orbital(j))) < 1e-10);
  }
  CHECK(moved);

  const SystemState frozen = eom_rhs(sys, y, 0.0, TimeMode::RealTime, true);
  for (int64_t i = 0; i < frozen.orbitals[0].size(); ++i)
    CHECK(frozen.orbitals[0].data()[i] == cplx{});
}

TEST_CASE("every declared interaction family reaches every species' mean field") {
  System sys(ho_grid(48), {harmonic_species(Statistics::Boson, 1, 2),
                           harmonic_species(Statistics::Boson, 1, 2),
                           harmonic_species(Statistics::Boson, 1, 2)});
  for (int x = 0; x < 3; ++x) {
    sys.set_intra_pair(x, contact(0.1));
    sys.set_intra_triple(x, contact3(0.1));
  }
  for (int p = 0; p < 3; ++p) sys.set_inter_pair(p, contact(0.1));
  for (int f = 0; f < 6; ++f) sys.set_pair_triple(f, contact3(0.1));
  sys.set_triple(contact3(0.1));

  const SystemState y = initial_state(sys);
  const TablesBundle b = sys.build_bundle(y.orbitals, 0.0);
  const RdmSet rdms = build_rdms(sys.space(), y.c, RdmRequest::for_tables(b.tables));
  for (int x = 0; x < 3; ++x) {
    MeanFieldCensus census;
    (void)assemble_mean_field(sys, b, rdms, x, &census);
    CHECK(census.two_body[x] == 3);    // own pair + two cross pairs
    CHECK(census.three_body[x] == 6);  // own triple + four mixed pairs + full triple
  }
}

TEST_CASE("single-orbital condensate sees the bare pair density as mean field") {
  System sys(ho_grid(64), {harmonic_species(Statistics::Boson, 3, 1)});
  sys.set_intra_pair(0, contact(0.7));
  const SystemState y = initial_state(sys);
  const TablesBundle b = sys.build_bundle(y.orbitals, 0.0);
  const RdmSet rdms = build_rdms(sys.space(), y.c, RdmRequest::for_tables(b.tables));
  const FnTable<2> g = assemble_mean_field(sys, b, rdms, 0);
  REQUIRE(g.dim(0) == 1);
  for (int i = 0; i < sys.grid().n; ++i) {
    const double dens = std::norm(y.orbitals[0].orbital(1)[i]);
    // <rho_1111> = N(N-1) = 6 and the two equivalent pair slots carry no 1/2
    CHECK(std::abs(g.at(1, 1)[i] - 6.0 * 0.7 * dens) < 1e-12);
  }
}

TEST_CASE("real-time flow conserves energy and norm to first order") {
  System sys(ho_grid(64), {harmonic_species(Statistics::Boson, 2, 2),
                           harmonic_species(Statistics::Fermion, 2, 3, 1.5)});
  sys.set_intra_pair(0, contact(0.6));
  sys.set_inter_pair(0, contact(0.4));
  sys.set_pair_triple(0, contact3(0.15));  // AAB
  SystemState y = initial_state(sys);
  y.c[0] = 0.7;
  y.c[1] = cplx{0.4, 0.2};
  y.c[2] = cplx{-0.1, 0.55};
  const double cn = norm(y.c);
  for (int64_t i = 0; i < y.c.size(); ++i) y.c[i] /= cn;

  const SystemState dy = eom_rhs(sys, y, 0.0, TimeMode::RealTime);
  const double h = 1e-3;
  const double de =
      (energy_of(sys, axpy(y, h, dy), 0.0) - energy_of(sys, axpy(y, -h, dy), 0.0)) /
      (2.0 * h);
  CHECK(std::abs(de) < 1e-6);

  const cplx cdot = expectation(y.c, dy.c);
  CHECK(std::abs(std::real(cdot)) < 1e-12);  // norm-preserving
  CHECK(std::imag(cdot) == doctest::Approx(-energy_of(sys, y, 0.0)).epsilon(1e-10));
}

TEST_CASE("imaginary-time flow strictly lowers the energy away from stationarity") {
  System sys(ho_grid(64), {harmonic_species(Statistics::Boson, 2, 2)});
  sys.set_intra_pair(0, contact(0.9));
  SystemState y = initial_state(sys);
  y.c[0] = 0.6;
  y.c[1] = 0.8;

  const SystemState dy = eom_rhs(sys, y, 0.0, TimeMode::ImaginaryTime);
  const double h = 1e-3;
  // energy of the normalized state: measure() divides by the norm
  const double ep = energy_of(sys, axpy(y, h, dy), 0.0);
  const double em = energy_of(sys, axpy(y, -h, dy), 0.0);
  CHECK((ep - em) / (2.0 * h) < -1e-3);
}

TEST_CASE("stationarity matrix is Hermitian for a condensate eigenstate") {
  System sys(ho_grid(), {harmonic_species(Statistics::Boson, 2, 2)});
  const SystemState y = initial_state(sys);
  const Table<2> mu = lagrange_matrix(sys, y, 0.0, 0);
  CHECK(hermiticity_defect(mu) < 1e-10);
  // occupied diagonal element carries rho_11 * e_1 = N * e_1
  const double e1 = std::real(mu(1, 1)) / 2.0;
  CHECK(e1 == doctest::Approx(0.5).epsilon(1e-3));

  Table<2> skew({2, 2});
  skew(1, 2) = cplx{0.0, 1.0};
  skew(2, 1) = cplx{0.0, 0.0};
  CHECK(hermiticity_defect(skew) == doctest::Approx(1.0));
}

TEST_CASE("observables of the non-interacting trap ground state") {
  System sys(ho_grid(192), {harmonic_species(Statistics::Boson, 2, 2)});
  const SystemState y = initial_state(sys);
  const Observables obs = measure(sys, y, 0.0);
  CHECK(std::abs(obs.energy - 1.0) < 2e-3);  // two particles at omega/2
  CHECK(std::abs(std::imag(obs.energy)) < 1e-12);
  CHECK(obs.norm == doctest::Approx(1.0).epsilon(1e-12));
  REQUIRE(obs.nat_occ[0].size() == 2);
  CHECK(obs.nat_occ[0][0] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(std::abs(obs.nat_occ[0][1]) < 1e-12);
  CHECK(std::abs(obs.mean_x[0]) < 1e-10);

  SpeciesPhys off = harmonic_species(Statistics::Boson, 2, 2);
  off.trap.center = 1.0;
  System sys2(Grid{192, -7.0, 9.0, Boundary::HardWall}, {off});
  const Observables obs2 = measure(sys2, initial_state(sys2), 0.0);
  CHECK(obs2.mean_x[0] == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("position matrix elements are plain grid quadratures") {
  Grid g = ho_grid(48);
  TrapSpec trap;
  trap.kind = TrapSpec::Kind::Harmonic;
  OneBodyOp h(g, 1.0, trap_potential(g, trap, 1.0, 0.0));
  OrbitalSet orbs = eigenstate_orbitals(h, 3);
  const Table<2> pos = position_table(g, orbs);
  for (int k = 1; k <= 3; ++k)
    for (int q = 1; q <= 3; ++q) {
      cplx want{};
      for (int i = 0; i < g.n; ++i)
        want += std::conj(orbs.orbital(k)[i]) * g.x(i) * orbs.orbital(q)[i];
      want *= g.dx();
      CHECK(std::abs(pos(k, q) - want) < 1e-13);
    }
  // harmonic-oscillator selection rule: <0|x|1> = 1/sqrt(2)
  CHECK(std::abs(std::abs(pos(1, 2)) - 1.0 / std::sqrt(2.0)) < 1e-2);
  CHECK(std::abs(pos(1, 1)) < 1e-10);
}
