#include <doctest.h>

#include <random>

#include "mctdh3mix/grid1d.hpp"

using namespace mctdh;

namespace {

OrbitalSet fill_orbitals(const Grid& g, int n_orb,
                         const std::function<cplx(int j, double x)>& f) {
  OrbitalSet orbs(n_orb, g.n);
  for (int j = 1; j <= n_orb; ++j) {
    auto slot = orbs.orbital(j);
    for (int gi = 0; gi < g.n; ++gi) slot[gi] = f(j, g.x(gi));
  }
  return orbs;
}

double gauss_entry(const Grid& g, double sigma, int i, int j) {
  double d = g.x(i) - g.x(j);
  if (g.boundary == Boundary::Periodic) d -= g.length() * std::round(d / g.length());
  return std::exp(-d * d / (2.0 * sigma * sigma));
}

}  // namespace

TEST_CASE("grid spacing, coordinates and validation") {
  Grid hw{5, 0.0, 1.0, Boundary::HardWall};
  CHECK(hw.dx() == doctest::Approx(0.25));
  CHECK(hw.x(4) == doctest::Approx(1.0));
  Grid per{5, 0.0, 1.0, Boundary::Periodic};
  CHECK(per.dx() == doctest::Approx(0.2));
  CHECK(per.x(4) == doctest::Approx(0.8));  // right endpoint identified with x_min

  CHECK_NOTHROW(hw.validate());
  Grid bad1{3, 0.0, 1.0, Boundary::HardWall};
  CHECK_THROWS(bad1.validate());
  Grid bad2{8, 2.0, 1.0, Boundary::HardWall};
  CHECK_THROWS(bad2.validate());
}

TEST_CASE("grid inner product carries the quadrature weight and conjugates left") {
  Grid g{5, 0.0, 1.0, Boundary::HardWall};
  std::vector<cplx> a(5, cplx{0.0, 1.0}), b(5, cplx{2.0, 0.0});
  CHECK(std::abs(grid_dot(g, a, b) - cplx{0.0, -2.5} * 1.0) < 1e-15);
}

TEST_CASE("orthonormalization drives the Gram defect to round-off") {
  Grid g{64, -6.0, 6.0, Boundary::HardWall};
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  OrbitalSet orbs(4, g.n);
  for (int j = 1; j <= 4; ++j)
    for (auto& v : orbs.orbital(j)) v = cplx{uni(rng), uni(rng)};
  CHECK(gram_defect(g, orbs) > 0.1);
  mgs_orthonormalize(g, orbs);
  CHECK(gram_defect(g, orbs) < 1e-13);
}

TEST_CASE("trap potential: harmonic bowl plus sinusoidal linear drive") {
  Grid g{4, -1.0, 2.0, Boundary::HardWall};
  TrapSpec trap;
  trap.kind = TrapSpec::Kind::Harmonic;
  trap.omega = 2.0;
  trap.center = 0.5;
  trap.drive_amp = 0.3;
  trap.drive_omega = 1.5;
  const double mass = 2.0;
  const double t = 0.4;
  const auto v = trap_potential(g, trap, mass, t);
  for (int gi = 0; gi < g.n; ++gi) {
    const double x = g.x(gi);
    const double want =
        0.5 * mass * 4.0 * (x - 0.5) * (x - 0.5) + 0.3 * std::sin(1.5 * t) * x;
    CHECK(v[gi] == doctest::Approx(want).epsilon(1e-14));
  }
  TrapSpec none;
  for (double val : trap_potential(g, none, 1.0, 0.0)) CHECK(val == 0.0);
}

TEST_CASE("finite-difference spectra match the exact discrete eigenvalues") {
  const double mass = 1.3;

  Grid box{40, 0.0, 3.0, Boundary::HardWall};
  OneBodyOp h(box, mass, std::vector<double>(box.n, 0.0));
  OrbitalSet orbs = eigenstate_orbitals(h, 5);
  CHECK(gram_defect(box, orbs) < 1e-12);
  for (int j = 1; j <= 5; ++j) {
    std::vector<cplx> hp(box.n);
    h.apply(orbs.orbital(j), hp);
    const double e = std::real(grid_dot(box, orbs.orbital(j), hp));
    const double exact =
        (1.0 - std::cos(j * M_PI / (box.n + 1))) / (mass * box.dx() * box.dx());
    CHECK(e == doctest::Approx(exact).epsilon(1e-10));
  }

  Grid ring{32, 0.0, 5.0, Boundary::Periodic};
  OneBodyOp hr(ring, mass, std::vector<double>(ring.n, 0.0));
  std::vector<cplx> wave(ring.n), hw(ring.n);
  for (int gi = 0; gi < ring.n; ++gi)
    wave[gi] = std::exp(cplx{0.0, 2.0 * M_PI * ring.x(gi) / ring.length()});
  hr.apply(wave, hw);
  const double ew =
      (1.0 - std::cos(2.0 * M_PI / ring.n)) / (mass * ring.dx() * ring.dx());
  for (int gi = 0; gi < ring.n; ++gi) CHECK(std::abs(hw[gi] - ew * wave[gi]) < 1e-12);

  // dense() is the same operator as apply()
  const Eigen::MatrixXd hm = hr.dense();
  Eigen::VectorXcd wv(ring.n);
  for (int gi = 0; gi < ring.n; ++gi) wv(gi) = wave[gi];
  const Eigen::VectorXcd hv = hm * wv;
  for (int gi = 0; gi < ring.n; ++gi) CHECK(std::abs(hv(gi) - hw[gi]) < 1e-12);
}

TEST_CASE("harmonic ground energy converges at second order in the spacing") {
  TrapSpec trap;
  trap.kind = TrapSpec::Kind::Harmonic;
  auto e0 = [&](int n) {
    Grid g{n, -8.0, 8.0, Boundary::HardWall};
    OneBodyOp h(g, 1.0, trap_potential(g, trap, 1.0, 0.0));
    OrbitalSet orbs = eigenstate_orbitals(h, 1);
    std::vector<cplx> hp(g.n);
    h.apply(orbs.orbital(1), hp);
    return std::real(grid_dot(g, orbs.orbital(1), hp));
  };
  const double err1 = std::abs(e0(129) - 0.5);
  const double err2 = std::abs(e0(257) - 0.5);
  CHECK(err1 < 2e-3);
  const double ratio = err1 / err2;  // halved spacing -> roughly quartered error
  CHECK(ratio > 3.2);
  CHECK(ratio < 4.8);
}

TEST_CASE("eigenstate orbitals come out with a deterministic sign") {
  Grid g{50, -7.0, 7.0, Boundary::HardWall};
  TrapSpec trap;
  trap.kind = TrapSpec::Kind::Harmonic;
  OneBodyOp h(g, 1.0, trap_potential(g, trap, 1.0, 0.0));
  const OrbitalSet a = eigenstate_orbitals(h, 4);
  const OrbitalSet b = eigenstate_orbitals(h, 4);
  for (int64_t i = 0; i < a.size(); ++i) CHECK(a.data()[i] == b.data()[i]);
  // the ground state's dominant amplitude is positive
  double peak = 0.0;
  for (const cplx& v : a.orbital(1)) peak = std::max(peak, std::real(v));
  CHECK(peak > 0.0);
}

TEST_CASE("interaction ramps: constant, linear switch-on, sinusoidal") {
  CHECK(ramp_factor(RampKind::Constant, 3.0, 7.0) == 1.0);
  CHECK(ramp_factor(RampKind::Linear, 2.0, -1.0) == 0.0);
  CHECK(ramp_factor(RampKind::Linear, 2.0, 0.5) == doctest::Approx(0.25));
  CHECK(ramp_factor(RampKind::Linear, 2.0, 5.0) == 1.0);
  CHECK(ramp_factor(RampKind::Linear, 0.0, 5.0) == 1.0);  // no ramp time means always on
  CHECK(ramp_factor(RampKind::Sinusoidal, 2.0, 0.7) == doctest::Approx(std::sin(1.4)));
}

TEST_CASE("pair matrix elements on a unit-width gaussian orbital: closed forms") {
  // |phi|^2 is the standard normal density, so contact gives 1/(2 sqrt(pi))
  // and the unnormalized gaussian kernel gives sigma / sqrt(2 + sigma^2).
  Grid g{800, -14.0, 14.0, Boundary::HardWall};
  OrbitalSet orbs = fill_orbitals(g, 1, [](int, double x) {
    return std::pow(2.0 * M_PI, -0.25) * std::exp(-x * x / 4.0);
  });
  REQUIRE(gram_defect(g, orbs) < 1e-12);

  InteractionSpec contact;
  contact.kind = KernelKind::Contact;
  contact.strength = 0.7;
  IntraPairBuild cb = build_intra_pair(g, PairKernel(g, contact), 0.0, orbs);
  CHECK(std::abs(cb.w(1, 1, 1, 1) - 0.7 / (2.0 * std::sqrt(M_PI))) < 1e-12);

  InteractionSpec gauss;
  gauss.kind = KernelKind::Gaussian;
  gauss.strength = 1.0;
  gauss.sigma = 0.5;
  IntraPairBuild gb = build_intra_pair(g, PairKernel(g, gauss), 0.0, orbs);
  CHECK(std::abs(gb.w(1, 1, 1, 1) - 1.0 / 3.0) < 1e-10);  // sigma/sqrt(2+sigma^2)

  InteractionSpec c3;
  c3.kind = KernelKind::ContactTriple;
  c3.strength = 0.9;
  IntraTripleBuild tb = build_intra_triple(g, TripleKernel(g, c3), 0.0, orbs);
  CHECK(std::abs(tb.u(1, 1, 1, 1, 1, 1) - 0.9 / (2.0 * std::sqrt(3.0) * M_PI)) < 1e-12);

  InteractionSpec g3;
  g3.kind = KernelKind::GaussianTriple;
  g3.strength = 1.0;
  g3.sigma = 0.5;
  IntraTripleBuild hb = build_intra_triple(g, TripleKernel(g, g3), 0.0, orbs);
  const double s2 = 0.25;
  const double hub = s2 / std::sqrt((1.0 + s2) * (3.0 + s2));
  CHECK(std::abs(hb.u(1, 1, 1, 1, 1, 1) - hub) < 1e-10);
}

TEST_CASE("periodic gaussian kernel uses the minimum image distance") {
  Grid g{128, 0.0, 20.0, Boundary::Periodic};
  InteractionSpec gauss;
  gauss.kind = KernelKind::Gaussian;
  gauss.strength = 1.0;
  gauss.sigma = 1.0;
  PairKernel k(g, gauss);

  // a flat density sees the full kernel mass sigma*sqrt(2*pi) regardless of x
  const double flat = 1.0 / std::sqrt(g.length());
  std::vector<cplx> dens(g.n, flat * flat);
  GridFn im = k.image(0.0, dens);
  for (const cplx& v : im)
    CHECK(std::abs(v - std::sqrt(2.0 * M_PI) / g.length()) < 1e-10);

  // cyclic shifts commute with the convolution
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  std::vector<cplx> f(g.n);
  for (auto& v : f) v = cplx{uni(rng), uni(rng)};
  std::vector<cplx> fs(g.n);
  const int shift = 37;
  for (int i = 0; i < g.n; ++i) fs[(i + shift) % g.n] = f[i];
  const GridFn a = k.image(0.0, f);
  const GridFn b = k.image(0.0, fs);
  for (int i = 0; i < g.n; ++i) CHECK(std::abs(b[(i + shift) % g.n] - a[i]) < 1e-11);
}

TEST_CASE("one-body table holds bra-operator-ket quadratures") {
  Grid g{48, -6.0, 6.0, Boundary::HardWall};
  TrapSpec trap;
  trap.kind = TrapSpec::Kind::Harmonic;
  OneBodyOp h(g, 1.0, trap_potential(g, trap, 1.0, 0.0));
  OrbitalSet orbs = eigenstate_orbitals(h, 3);
  const Table<2> ht = build_h_table(g, h, orbs);
  std::vector<cplx> hp(g.n);
  for (int k = 1; k <= 3; ++k)
    for (int q = 1; q <= 3; ++q) {
      h.apply(orbs.orbital(q), hp);
      CHECK(std::abs(ht(k, q) - grid_dot(g, orbs.orbital(k), hp)) < 1e-13);
    }
}

TEST_CASE("intra-species pair build against direct double quadrature") {
  Grid g{64, -8.0, 8.0, Boundary::HardWall};
  TrapSpec trap;
  trap.kind = TrapSpec::Kind::Harmonic;
  OneBodyOp h(g, 1.0, trap_potential(g, trap, 1.0, 0.0));
  OrbitalSet orbs = eigenstate_orbitals(h, 2);

  InteractionSpec gauss;
  gauss.kind = KernelKind::Gaussian;
  gauss.strength = 0.8;
  gauss.sigma = 1.0;
  gauss.ramp = RampKind::Linear;
  gauss.ramp_param = 2.0;
  const double t = 0.5;  // ramp factor 0.25
  PairKernel k(g, gauss);
  IntraPairBuild b = build_intra_pair(g, k, t, orbs);

  const double lam = 0.8 * 0.25;
  const double dx = g.dx();
  for (int kk = 1; kk <= 2; ++kk)
    for (int s = 1; s <= 2; ++s)
      for (int q = 1; q <= 2; ++q)
        for (int l = 1; l <= 2; ++l) {
          cplx direct{};
          for (int i = 0; i < g.n; ++i)
            for (int j = 0; j < g.n; ++j)
              direct += std::conj(orbs.orbital(kk)[i]) * orbs.orbital(q)[i] *
                        gauss_entry(g, 1.0, i, j) * std::conj(orbs.orbital(s)[j]) *
                        orbs.orbital(l)[j];
          direct *= lam * dx * dx;
          CHECK(std::abs(b.w(kk, s, q, l) - direct) < 1e-11);
          // the shared effective potential reproduces the same element
          cplx via_pot{};
          for (int i = 0; i < g.n; ++i)
            via_pot += std::conj(orbs.orbital(kk)[i]) * b.pot.at(s, l)[i] *
                       orbs.orbital(q)[i];
          CHECK(std::abs(b.w(kk, s, q, l) - via_pot * dx) < 1e-12);
        }
}

TEST_CASE("cross-species pair build: elements and both effective potentials") {
  Grid g{48, -7.0, 7.0, Boundary::HardWall};
  TrapSpec trap;
  trap.kind = TrapSpec::Kind::Harmonic;
  OneBodyOp h1(g, 1.0, trap_potential(g, trap, 1.0, 0.0));
  OneBodyOp h2(g, 2.5, trap_potential(g, trap, 2.5, 0.0));
  OrbitalSet first = eigenstate_orbitals(h1, 2);
  OrbitalSet second = eigenstate_orbitals(h2, 3);

  InteractionSpec gauss;
  gauss.kind = KernelKind::Gaussian;
  gauss.strength = -0.6;
  gauss.sigma = 0.7;
  PairKernel k(g, gauss);
  InterPairBuild b = build_inter_pair(g, k, 0.0, first, second);

  const double dx = g.dx();
  for (int kk = 1; kk <= 2; ++kk)
    for (int kp = 1; kp <= 3; ++kp)
      for (int q = 1; q <= 2; ++q)
        for (int qp = 1; qp <= 3; ++qp) {
          cplx direct{};
          for (int i = 0; i < g.n; ++i)
            for (int j = 0; j < g.n; ++j)
              direct += std::conj(first.orbital(kk)[i]) * first.orbital(q)[i] *
                        gauss_entry(g, 0.7, i, j) * std::conj(second.orbital(kp)[j]) *
                        second.orbital(qp)[j];
          direct *= -0.6 * dx * dx;
          CHECK(std::abs(b.w(kk, kp, q, qp) - direct) < 1e-11);

          cplx via1{};
          for (int i = 0; i < g.n; ++i)
            via1 += std::conj(first.orbital(kk)[i]) * b.pot_on_first.at(kp, qp)[i] *
                    first.orbital(q)[i];
          CHECK(std::abs(b.w(kk, kp, q, qp) - via1 * dx) < 1e-12);

          cplx via2{};
          for (int j = 0; j < g.n; ++j)
            via2 += std::conj(second.orbital(kp)[j]) * b.pot_on_second.at(kk, q)[j] *
                    second.orbital(qp)[j];
          CHECK(std::abs(b.w(kk, kp, q, qp) - via2 * dx) < 1e-12);
        }
}

TEST_CASE("doubled-species triple build against direct triple quadrature") {
  Grid g{24, -6.0, 6.0, Boundary::HardWall};
  TrapSpec trap;
  trap.kind = TrapSpec::Kind::Harmonic;
  OneBodyOp h1(g, 1.0, trap_potential(g, trap, 1.0, 0.0));
  OneBodyOp h2(g, 1.7, trap_potential(g, trap, 1.7, 0.0));
  OrbitalSet oa = eigenstate_orbitals(h1, 2);
  OrbitalSet ob = eigenstate_orbitals(h2, 2);

  InteractionSpec g3;
  g3.kind = KernelKind::GaussianTriple;
  g3.strength = 0.4;
  g3.sigma = 1.2;
  TripleKernel k(g, g3);

  auto hub = [&](int i, int j, int l) {
    return (gauss_entry(g, 1.2, i, j) * gauss_entry(g, 1.2, i, l) +
            gauss_entry(g, 1.2, j, i) * gauss_entry(g, 1.2, j, l) +
            gauss_entry(g, 1.2, l, i) * gauss_entry(g, 1.2, l, j)) /
           3.0;
  };
  const double dx = g.dx();

  for (const bool doubled_first : {true, false}) {
    CAPTURE(doubled_first);
    PairTripleBuild b = build_pair_triple(g, k, 0.0, oa, ob, doubled_first);
    const OrbitalSet& dbl = doubled_first ? oa : ob;
    const OrbitalSet& a1 = oa;
    const OrbitalSet& a2 = ob;
    for (int kk = 1; kk <= 2; ++kk)
      for (int kp = 1; kp <= 2; ++kp)
        for (int s = 1; s <= 2; ++s)
          for (int q = 1; q <= 2; ++q)
            for (int qp = 1; qp <= 2; ++qp)
              for (int l = 1; l <= 2; ++l) {
                cplx direct{};
                for (int i = 0; i < g.n; ++i) {
                  const cplx fa = std::conj(a1.orbital(kk)[i]) * a1.orbital(q)[i];
                  for (int j = 0; j < g.n; ++j) {
                    const cplx fb = std::conj(a2.orbital(kp)[j]) * a2.orbital(qp)[j];
                    for (int m = 0; m < g.n; ++m)
                      direct += fa * fb * hub(i, j, m) *
                                std::conj(dbl.orbital(s)[m]) * dbl.orbital(l)[m];
                  }
                }
                direct *= 0.4 * dx * dx * dx;
                REQUIRE(std::abs(b.u(kk, kp, s, q, qp, l) - direct) < 1e-10);
              }

    // pot_on_doubled carries (s, k_single, l, q_single), leaving one doubled
    // pair open; pot_on_single carries both doubled pairs (k, s, q, l)
    const OrbitalSet& sgl = doubled_first ? ob : oa;
    for (int kd = 1; kd <= 2; ++kd)
      for (int qd = 1; qd <= 2; ++qd)
        for (int s = 1; s <= 2; ++s)
          for (int l = 1; l <= 2; ++l)
            for (int ks = 1; ks <= 2; ++ks)
              for (int qs = 1; qs <= 2; ++qs) {
                const cplx want = doubled_first ? b.u(kd, ks, s, qd, qs, l)
                                                : b.u(ks, kd, s, qs, qd, l);
                cplx via_d{};
                for (int m = 0; m < g.n; ++m)
                  via_d += std::conj(dbl.orbital(kd)[m]) *
                           b.pot_on_doubled.at(s, ks, l, qs)[m] * dbl.orbital(qd)[m];
                REQUIRE(std::abs(want - via_d * dx) < 1e-11);

                cplx via_s{};
                for (int m = 0; m < g.n; ++m)
                  via_s += std::conj(sgl.orbital(ks)[m]) *
                           b.pot_on_single.at(kd, s, qd, l)[m] * sgl.orbital(qs)[m];
                REQUIRE(std::abs(want - via_s * dx) < 1e-11);
              }
  }
}

TEST_CASE("full three-species triple build against direct quadrature") {
  Grid g{20, -5.0, 5.0, Boundary::HardWall};
  TrapSpec trap;
  trap.kind = TrapSpec::Kind::Harmonic;
  OneBodyOp h1(g, 1.0, trap_potential(g, trap, 1.0, 0.0));
  OneBodyOp h2(g, 1.5, trap_potential(g, trap, 1.5, 0.0));
  OneBodyOp h3(g, 0.8, trap_potential(g, trap, 0.8, 0.0));
  OrbitalSet oa = eigenstate_orbitals(h1, 2);
  OrbitalSet ob = eigenstate_orbitals(h2, 2);
  OrbitalSet oc = eigenstate_orbitals(h3, 2);

  InteractionSpec c3;
  c3.kind = KernelKind::ContactTriple;
  c3.strength = 1.1;
  TripleKernel k(g, c3);
  TripleBuild b = build_triple(g, k, 0.0, oa, ob, oc);

  const double dx = g.dx();
  for (int kk = 1; kk <= 2; ++kk)
    for (int kp = 1; kp <= 2; ++kp)
      for (int kpp = 1; kpp <= 2; ++kpp)
        for (int q = 1; q <= 2; ++q)
          for (int qp = 1; qp <= 2; ++qp)
            for (int qpp = 1; qpp <= 2; ++qpp) {
              cplx direct{};
              for (int i = 0; i < g.n; ++i)
                direct += std::conj(oa.orbital(kk)[i]) * oa.orbital(q)[i] *
                          std::conj(ob.orbital(kp)[i]) * ob.orbital(qp)[i] *
                          std::conj(oc.orbital(kpp)[i]) * oc.orbital(qpp)[i];
              direct *= 1.1 * dx;
              CHECK(std::abs(b.u(kk, kp, kpp, q, qp, qpp) - direct) < 1e-12);

              // per-species effective potentials close the same element
              cplx via_a{};
              for (int i = 0; i < g.n; ++i)
                via_a += std::conj(oa.orbital(kk)[i]) *
                         b.pot[0].at(kp, kpp, qp, qpp)[i] * oa.orbital(q)[i];
              CHECK(std::abs(b.u(kk, kp, kpp, q, qp, qpp) - via_a * dx) < 1e-12);
              cplx via_b{};
              for (int i = 0; i < g.n; ++i)
                via_b += std::conj(ob.orbital(kp)[i]) *
                         b.pot[1].at(kk, kpp, q, qpp)[i] * ob.orbital(qp)[i];
              CHECK(std::abs(b.u(kk, kp, kpp, q, qp, qpp) - via_b * dx) < 1e-12);
              cplx via_c{};
              for (int i = 0; i < g.n; ++i)
                via_c += std::conj(oc.orbital(kpp)[i]) *
                         b.pot[2].at(kk, kp, q, qp)[i] * oc.orbital(qpp)[i];
              CHECK(std::abs(b.u(kk, kp, kpp, q, qp, qpp) - via_c * dx) < 1e-12);
            }
}

TEST_CASE("triple-quadrature table of grid functions keeps slots distinct") {
  FnTable<2> t({2, 3}, 4);
  CHECK(t.dim(0) == 2);
  CHECK(t.dim(1) == 3);
  CHECK(t.npts() == 4);
  t.at(2, 3)[1] = cplx{5.0, 0.0};
  t.at(1, 1)[0] = cplx{7.0, 0.0};
  CHECK(t.at(2, 3)[1] == cplx{5.0, 0.0});
  CHECK(t.at(1, 1)[0] == cplx{7.0, 0.0});
  CHECK(t.at(2, 3)[0] == cplx{});
  CHECK(t.at(1, 2)[1] == cplx{});
}
