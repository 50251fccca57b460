#include "mctdh3mix/eom.hpp"

#include <Eigen/Dense>

namespace mctdh {

namespace {

void axpy(cplx w, std::span<const cplx> src, std::span<cplx> dst) {
  for (size_t i = 0; i < dst.size(); ++i) dst[i] += w * src[i];
}

void axpy_product(cplx w, std::span<const cplx> pot, std::span<const cplx> phi,
                  std::span<cplx> dst) {
  for (size_t i = 0; i < dst.size(); ++i) dst[i] += w * pot[i] * phi[i];
}

}  // namespace

System::System(Grid grid, std::vector<SpeciesPhys> phys) : grid_(grid), phys_(std::move(phys)) {
  grid_.validate();
  require(!phys_.empty() && phys_.size() <= 3, "System: 1 to 3 species");
  std::vector<SpeciesSpec> specs;
  for (const SpeciesPhys& p : phys_) {
    require(p.mass > 0.0, "System: mass must be positive");
    require(p.spec.n_orbitals <= grid_.n, "System: more orbitals than grid points");
    specs.push_back(p.spec);
  }
  space_ = std::make_unique<MixtureSpace>(specs);
}

void System::set_intra_pair(int x, const InteractionSpec& s) {
  require(x >= 0 && x < n_species(), "set_intra_pair: no such species");
  require(s.kind == KernelKind::Contact || s.kind == KernelKind::Gaussian,
          "set_intra_pair: needs a two-body kernel");
  intra_pair_[x].emplace(grid_, s);
}

void System::set_intra_triple(int x, const InteractionSpec& s) {
  require(x >= 0 && x < n_species(), "set_intra_triple: no such species");
  require(s.kind == KernelKind::ContactTriple || s.kind == KernelKind::GaussianTriple,
          "set_intra_triple: needs a three-body kernel");
  intra_triple_[x].emplace(grid_, s);
}

void System::set_inter_pair(int pair, const InteractionSpec& s) {
  require(pair >= 0 && pair < 3, "set_inter_pair: bad pair index");
  require(kSpeciesPairs[pair][1] < n_species(), "set_inter_pair: species not present");
  require(s.kind == KernelKind::Contact || s.kind == KernelKind::Gaussian,
          "set_inter_pair: needs a two-body kernel");
  inter_pair_[pair].emplace(grid_, s);
}

void System::set_pair_triple(int family, const InteractionSpec& s) {
  require(family >= 0 && family < 6, "set_pair_triple: bad family index");
  require(kPairTriples[family].a2 < n_species(), "set_pair_triple: species not present");
  require(s.kind == KernelKind::ContactTriple || s.kind == KernelKind::GaussianTriple,
          "set_pair_triple: needs a three-body kernel");
  pair_triple_[family].emplace(grid_, s);
}

void System::set_triple(const InteractionSpec& s) {
  require(n_species() == 3, "set_triple: needs three species");
  require(s.kind == KernelKind::ContactTriple || s.kind == KernelKind::GaussianTriple,
          "set_triple: needs a three-body kernel");
  triple_.emplace(grid_, s);
}

OneBodyOp System::one_body(int x, double t) const {
  return OneBodyOp(grid_, phys_[x].mass, trap_potential(grid_, phys_[x].trap, phys_[x].mass, t));
}

TablesBundle System::build_bundle(const std::array<OrbitalSet, 3>& orbs, double t) const {
  TablesBundle b;
  b.tables.n_species = n_species();
  for (int x = 0; x < n_species(); ++x) {
    b.tables.h[x] = build_h_table(grid_, one_body(x, t), orbs[x]);
    if (intra_pair_[x]) {
      b.intra_pair[x] = build_intra_pair(grid_, *intra_pair_[x], t, orbs[x]);
      b.tables.w_intra[x] = b.intra_pair[x]->w;
    }
    if (intra_triple_[x]) {
      b.intra_triple[x] = build_intra_triple(grid_, *intra_triple_[x], t, orbs[x]);
      b.tables.u_intra[x] = b.intra_triple[x]->u;
    }
  }
  for (int p = 0; p < 3; ++p) {
    if (!inter_pair_[p]) continue;
    const auto [x, y] = kSpeciesPairs[p];
    b.inter_pair[p] = build_inter_pair(grid_, *inter_pair_[p], t, orbs[x], orbs[y]);
    b.tables.w_inter[p] = b.inter_pair[p]->w;
  }
  for (int f = 0; f < 6; ++f) {
    if (!pair_triple_[f]) continue;
    const PairTripleFamily& fam = kPairTriples[f];
    b.pair_triple[f] = build_pair_triple(grid_, *pair_triple_[f], t, orbs[fam.a1], orbs[fam.a2],
                                         fam.doubled == fam.a1);
    b.tables.u_pair[f] = b.pair_triple[f]->u;
  }
  if (triple_) {
    b.triple = build_triple(grid_, *triple_, t, orbs[0], orbs[1], orbs[2]);
    b.tables.u_triple = b.triple->u;
  }
  return b;
}

IntegralTables System::build_tables(const std::array<OrbitalSet, 3>& orbs, double t) const {
  return build_bundle(orbs, t).tables;
}

SystemState initial_state(const System& sys, double t0) {
  SystemState y;
  y.c = sys.space().make_tensor();
  y.c[0] = 1.0;
  for (int x = 0; x < sys.n_species(); ++x)
    y.orbitals[x] = eigenstate_orbitals(sys.one_body(x, t0), sys.phys(x).spec.n_orbitals);
  return y;
}

Table<2> regularized_inverse(const Table<2>& rho1) {
  const int m = rho1.dim(0);
  Eigen::MatrixXcd r(m, m);
  for (int k = 1; k <= m; ++k)
    for (int q = 1; q <= m; ++q) r(k - 1, q - 1) = rho1(k, q);
  const double tr = r.real().trace();
  const double eps = 1e-8 * std::max(tr / m, 1.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(r);
  Eigen::VectorXd lam = es.eigenvalues();
  for (int i = 0; i < m; ++i) lam(i) = 1.0 / std::max(lam(i), eps);
  Eigen::MatrixXcd inv =
      es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().adjoint();
  Table<2> out({m, m});
  for (int k = 1; k <= m; ++k)
    for (int q = 1; q <= m; ++q) out(k, q) = inv(k - 1, q - 1);
  return out;
}

FnTable<2> assemble_mean_field(const System& sys, const TablesBundle& b, const RdmSet& rdms,
                               int x, MeanFieldCensus* census) {
  const int m = sys.phys(x).spec.n_orbitals;
  const int n = sys.grid().n;
  FnTable<2> g({m, m}, n);

  auto count2 = [&] { if (census) ++census->two_body[x]; };
  auto count3 = [&] { if (census) ++census->three_body[x]; };

  if (b.intra_pair[x]) {
    const IntraPairBuild& ip = *b.intra_pair[x];
    const Table<4>& r2 = *rdms.rho2[x];
#pragma omp parallel for collapse(2) schedule(static)
    for (int k = 1; k <= m; ++k)
      for (int q = 1; q <= m; ++q)
        for (int s = 1; s <= m; ++s)
          for (int l = 1; l <= m; ++l) axpy(r2(k, s, q, l), ip.pot.at(s, l), g.at(k, q));
    count2();
  }

  if (b.intra_triple[x]) {
    const IntraTripleBuild& it = *b.intra_triple[x];
    const Table<6>& r3 = *rdms.rho3[x];
#pragma omp parallel for collapse(2) schedule(static)
    for (int k = 1; k <= m; ++k)
      for (int q = 1; q <= m; ++q)
        for (int s = 1; s <= m; ++s)
          for (int p = 1; p <= m; ++p)
            for (int l = 1; l <= m; ++l)
              for (int r = 1; r <= m; ++r)
                axpy(0.5 * r3(k, s, p, q, l, r), it.pot.at(s, p, l, r), g.at(k, q));
    count3();
  }

  for (int p = 0; p < 3; ++p) {
    if (!b.inter_pair[p]) continue;
    const auto [x0, y0] = kSpeciesPairs[p];
    if (x0 != x && y0 != x) continue;
    const InterPairBuild& ip = *b.inter_pair[p];
    const Table<4>& ri = *rdms.rho_inter[p];
    const int mo = sys.phys(x0 == x ? y0 : x0).spec.n_orbitals;
    if (x0 == x) {
#pragma omp parallel for collapse(2) schedule(static)
      for (int k = 1; k <= m; ++k)
        for (int q = 1; q <= m; ++q)
          for (int kp = 1; kp <= mo; ++kp)
            for (int qp = 1; qp <= mo; ++qp)
              axpy(ri(k, kp, q, qp), ip.pot_on_first.at(kp, qp), g.at(k, q));
    } else {
#pragma omp parallel for collapse(2) schedule(static)
      for (int kp = 1; kp <= m; ++kp)
        for (int qp = 1; qp <= m; ++qp)
          for (int k = 1; k <= mo; ++k)
            for (int q = 1; q <= mo; ++q)
              axpy(ri(k, kp, q, qp), ip.pot_on_second.at(k, q), g.at(kp, qp));
    }
    count2();
  }

  for (int f = 0; f < 6; ++f) {
    if (!b.pair_triple[f]) continue;
    const PairTripleFamily& fam = kPairTriples[f];
    if (fam.a1 != x && fam.a2 != x) continue;
    const PairTripleBuild& pt = *b.pair_triple[f];
    const Table<6>& rp = *rdms.rho_pair[f];
    const bool doubled_first = fam.doubled == fam.a1;
    const int md = sys.phys(fam.doubled).spec.n_orbitals;
    const int msg = sys.phys(doubled_first ? fam.a2 : fam.a1).spec.n_orbitals;
    if (x == fam.doubled) {
      if (doubled_first) {
#pragma omp parallel for collapse(2) schedule(static)
        for (int k = 1; k <= m; ++k)
          for (int q = 1; q <= m; ++q)
            for (int kp = 1; kp <= msg; ++kp)
              for (int qp = 1; qp <= msg; ++qp)
                for (int s = 1; s <= md; ++s)
                  for (int l = 1; l <= md; ++l)
                    axpy(rp(k, kp, s, q, qp, l), pt.pot_on_doubled.at(s, kp, l, qp), g.at(k, q));
      } else {
#pragma omp parallel for collapse(2) schedule(static)
        for (int kp = 1; kp <= m; ++kp)
          for (int qp = 1; qp <= m; ++qp)
            for (int k = 1; k <= msg; ++k)
              for (int q = 1; q <= msg; ++q)
                for (int s = 1; s <= md; ++s)
                  for (int l = 1; l <= md; ++l)
                    axpy(rp(k, kp, s, q, qp, l), pt.pot_on_doubled.at(s, k, l, q), g.at(kp, qp));
      }
    } else {
      if (doubled_first) {
#pragma omp parallel for collapse(2) schedule(static)
        for (int kp = 1; kp <= m; ++kp)
          for (int qp = 1; qp <= m; ++qp)
            for (int k = 1; k <= md; ++k)
              for (int q = 1; q <= md; ++q)
                for (int s = 1; s <= md; ++s)
                  for (int l = 1; l <= md; ++l)
                    axpy(0.5 * rp(k, kp, s, q, qp, l), pt.pot_on_single.at(k, s, q, l),
                         g.at(kp, qp));
      } else {
#pragma omp parallel for collapse(2) schedule(static)
        for (int k = 1; k <= m; ++k)
          for (int q = 1; q <= m; ++q)
            for (int kp = 1; kp <= md; ++kp)
              for (int qp = 1; qp <= md; ++qp)
                for (int s = 1; s <= md; ++s)
                  for (int l = 1; l <= md; ++l)
                    axpy(0.5 * rp(k, kp, s, q, qp, l), pt.pot_on_single.at(kp, s, qp, l),
                         g.at(k, q));
      }
    }
    count3();
  }

  if (b.triple) {
    const TripleBuild& tb = *b.triple;
    const Table<6>& rt = *rdms.rho_triple;
    const int ma = sys.phys(0).spec.n_orbitals;
    const int mb = sys.phys(1).spec.n_orbitals;
    const int mc = sys.phys(2).spec.n_orbitals;
    if (x == 0) {
#pragma omp parallel for collapse(2) schedule(static)
      for (int k = 1; k <= ma; ++k)
        for (int q = 1; q <= ma; ++q)
          for (int kp = 1; kp <= mb; ++kp)
            for (int qp = 1; qp <= mb; ++qp)
              for (int kpp = 1; kpp <= mc; ++kpp)
                for (int qpp = 1; qpp <= mc; ++qpp)
                  axpy(rt(k, kp, kpp, q, qp, qpp), tb.pot[0].at(kp, kpp, qp, qpp), g.at(k, q));
    } else if (x == 1) {
#pragma omp parallel for collapse(2) schedule(static)
      for (int kp = 1; kp <= mb; ++kp)
        for (int qp = 1; qp <= mb; ++qp)
          for (int k = 1; k <= ma; ++k)
            for (int q = 1; q <= ma; ++q)
              for (int kpp = 1; kpp <= mc; ++kpp)
                for (int qpp = 1; qpp <= mc; ++qpp)
                  axpy(rt(k, kp, kpp, q, qp, qpp), tb.pot[1].at(k, kpp, q, qpp), g.at(kp, qp));
    } else {
#pragma omp parallel for collapse(2) schedule(static)
      for (int kpp = 1; kpp <= mc; ++kpp)
        for (int qpp = 1; qpp <= mc; ++qpp)
          for (int k = 1; k <= ma; ++k)
            for (int q = 1; q <= ma; ++q)
              for (int kp = 1; kp <= mb; ++kp)
                for (int qp = 1; qp <= mb; ++qp)
                  axpy(rt(k, kp, kpp, q, qp, qpp), tb.pot[2].at(k, kp, q, qp), g.at(kpp, qpp));
    }
    count3();
  }

  return g;
}

namespace {

void orbital_rhs(const System& sys, const TablesBundle& b, const RdmSet& rdms,
                 const SystemState& y, double t, int x, cplx tau, OrbitalSet& dphi,
                 MeanFieldCensus* census) {
  const OrbitalSet& phi = y.orbitals[x];
  const int m = phi.n_orbitals();
  const int n = phi.n_points();
  const OneBodyOp h = sys.one_body(x, t);
  const FnTable<2> g = assemble_mean_field(sys, b, rdms, x, census);
  const Table<2> rinv = regularized_inverse(rdms.rho1[x]);

  // mf_k = sum_q G_kq .* phi_q
  std::vector<GridFn> mf(m, GridFn(n, cplx{}));
  for (int k = 1; k <= m; ++k)
    for (int q = 1; q <= m; ++q) axpy_product(1.0, g.at(k, q), phi.orbital(q), mf[k - 1]);

  GridFn pre(n);
  for (int j = 1; j <= m; ++j) {
    h.apply(phi.orbital(j), pre);
    for (int k = 1; k <= m; ++k) axpy(rinv(j, k), mf[k - 1], pre);
    // project out the occupied subspace, then scale
    for (int u = 1; u <= m; ++u) {
      const cplx overlap = grid_dot(sys.grid(), phi.orbital(u), pre);
      axpy(-overlap, phi.orbital(u), pre);
    }
    std::span<cplx> out = dphi.orbital(j);
    for (int i = 0; i < n; ++i) out[i] = tau * pre[i];
  }
}

}  // namespace

SystemState eom_rhs(const System& sys, const SystemState& y, double t, TimeMode mode,
                    bool fixed_orbitals, MeanFieldCensus* census) {
  const TablesBundle b = sys.build_bundle(y.orbitals, t);
  const cplx tau = mode == TimeMode::RealTime ? cplx{0.0, -1.0} : cplx{-1.0, 0.0};

  SystemState dy;
  dy.c = apply_hamiltonian(sys.space(), b.tables, y.c);
  for (int64_t i = 0; i < dy.c.size(); ++i) dy.c[i] *= tau;

  for (int x = 0; x < sys.n_species(); ++x)
    dy.orbitals[x] = OrbitalSet(y.orbitals[x].n_orbitals(), y.orbitals[x].n_points());
  if (!fixed_orbitals) {
    const RdmSet rdms = build_rdms(sys.space(), y.c, RdmRequest::for_tables(b.tables));
    for (int x = 0; x < sys.n_species(); ++x)
      orbital_rhs(sys, b, rdms, y, t, x, tau, dy.orbitals[x], census);
  }
  return dy;
}

Table<2> lagrange_matrix(const System& sys, const SystemState& y, double t, int x) {
  const TablesBundle b = sys.build_bundle(y.orbitals, t);
  const RdmSet rdms = build_rdms(sys.space(), y.c, RdmRequest::for_tables(b.tables));
  const FnTable<2> g = assemble_mean_field(sys, b, rdms, x);
  const OneBodyOp h = sys.one_body(x, t);
  const OrbitalSet& phi = y.orbitals[x];
  const int m = phi.n_orbitals();
  const int n = phi.n_points();

  Table<2> mu({m, m});
  GridFn acc(n), hq(n);
  for (int k = 1; k <= m; ++k) {
    std::fill(acc.begin(), acc.end(), cplx{});
    for (int q = 1; q <= m; ++q) {
      h.apply(phi.orbital(q), hq);
      axpy(rdms.rho1[x](k, q), hq, acc);
      axpy_product(1.0, g.at(k, q), phi.orbital(q), acc);
    }
    for (int j = 1; j <= m; ++j) mu(k, j) = grid_dot(sys.grid(), phi.orbital(j), acc);
  }
  return mu;
}

double hermiticity_defect(const Table<2>& mu) {
  const int m = mu.dim(0);
  double worst = 0.0;
  for (int k = 1; k <= m; ++k)
    for (int j = 1; j <= m; ++j) worst = std::max(worst, std::abs(mu(k, j) - std::conj(mu(j, k))));
  return worst;
}

Table<2> position_table(const Grid& g, const OrbitalSet& orbs) {
  const int m = orbs.n_orbitals();
  Table<2> out({m, m});
  GridFn xphi(g.n);
  for (int q = 1; q <= m; ++q) {
    std::span<const cplx> pq = orbs.orbital(q);
    for (int i = 0; i < g.n; ++i) xphi[i] = g.x(i) * pq[i];
    for (int k = 1; k <= m; ++k) out(k, q) = grid_dot(g, orbs.orbital(k), xphi);
  }
  return out;
}

Observables measure(const System& sys, const SystemState& y, double t) {
  Observables obs;
  const IntegralTables tables = sys.build_tables(y.orbitals, t);
  const CoeffTensor hc = apply_hamiltonian(sys.space(), tables, y.c);
  const double n2 = pairwise_norm2(y.c.data(), y.c.size());
  obs.norm = std::sqrt(n2);
  obs.energy = n2 > 0.0 ? expectation(y.c, hc) / n2 : cplx{};

  const RdmSet rdms = build_rdms(sys.space(), y.c, RdmRequest{});
  for (int x = 0; x < sys.n_species(); ++x) {
    Table<2> rho1 = rdms.rho1[x];
    if (n2 > 0.0)
      for (cplx& v : rho1.data()) v /= n2;
    obs.nat_occ[x] = natural_occupations(rho1);
    const Table<2> xt = position_table(sys.grid(), y.orbitals[x]);
    cplx mx = 0.0;
    const int m = rho1.dim(0);
    for (int k = 1; k <= m; ++k)
      for (int q = 1; q <= m; ++q) mx += rho1(k, q) * xt(k, q);
    obs.mean_x[x] = mx.real() / sys.phys(x).spec.n_particles;
  }
  return obs;
}

}  // namespace mctdh
