#include "mctdh3mix/rdm.hpp"

#include <Eigen/Dense>
#include <vector>

namespace mctdh {

namespace {

// Cache of rho1-applied coefficient vectors, T[(a-1)*M + (b-1)] = rho_ab C.
std::vector<CoeffTensor> rho1_bank(const MixtureSpace& ms, int axis, const CoeffTensor& c) {
  const int m = ms.layout().spec(axis).n_orbitals;
  std::vector<CoeffTensor> bank;
  bank.reserve(static_cast<size_t>(m) * m);
  for (int a = 1; a <= m; ++a)
    for (int b = 1; b <= m; ++b) bank.push_back(apply_rho1(ms, axis, a, b, c));
  return bank;
}

const CoeffTensor& at(const std::vector<CoeffTensor>& bank, int m, int a, int b) {
  return bank[static_cast<size_t>(a - 1) * m + (b - 1)];
}

}  // namespace

RdmRequest RdmRequest::for_tables(const IntegralTables& tables) {
  RdmRequest req;
  for (int x = 0; x < 3; ++x) {
    req.intra2[x] = tables.w_intra[x].has_value();
    req.intra3[x] = tables.u_intra[x].has_value();
  }
  for (int p = 0; p < 3; ++p) req.inter[p] = tables.w_inter[p].has_value();
  for (int f = 0; f < 6; ++f) req.pair[f] = tables.u_pair[f].has_value();
  req.triple = tables.u_triple.has_value();
  return req;
}

RdmSet build_rdms(const MixtureSpace& ms, const CoeffTensor& c, const RdmRequest& req) {
  const MixtureLayout& lay = ms.layout();
  RdmSet out;

  std::array<std::vector<CoeffTensor>, 3> bank;
  for (int x = 0; x < lay.n_species(); ++x) bank[x] = rho1_bank(ms, x, c);

  for (int x = 0; x < lay.n_species(); ++x) {
    const int m = lay.spec(x).n_orbitals;
    const double sf = lay.spec(x).stat == Statistics::Fermion ? 1.0 : -1.0;

    out.rho1[x] = Table<2>({m, m});
    for (int k = 1; k <= m; ++k)
      for (int q = 1; q <= m; ++q) out.rho1[x](k, q) = expectation(c, at(bank[x], m, k, q));

    if (req.intra2[x] || req.intra3[x]) {
      // <rho_kslq> = sf dlt_sl <rho_kq> - sf <rho_lk C, rho_sq C>
      Table<4> r2({m, m, m, m});
      for (int k = 1; k <= m; ++k)
        for (int s = 1; s <= m; ++s)
          for (int q = 1; q <= m; ++q)
            for (int l = 1; l <= m; ++l) {
              cplx v = -sf * expectation(at(bank[x], m, l, k), at(bank[x], m, s, q));
              if (s == l) v += sf * out.rho1[x](k, q);
              r2(k, s, q, l) = v;
            }
      if (req.intra2[x]) out.rho2[x] = r2;
      if (req.intra3[x]) {
        Table<6> r3({m, m, m, m, m, m});
        for (int k = 1; k <= m; ++k)
          for (int s = 1; s <= m; ++s)
            for (int p = 1; p <= m; ++p)
              for (int q = 1; q <= m; ++q)
                for (int l = 1; l <= m; ++l)
                  for (int r = 1; r <= m; ++r)
                    r3(k, s, p, q, l, r) =
                        expectation(c, apply_rho3_intra(ms, x, k, s, p, r, l, q, c));
        out.rho3[x] = r3;
      }
    }
  }

  for (int p = 0; p < 3; ++p) {
    if (!req.inter[p]) continue;
    const auto [x, y] = kSpeciesPairs[p];
    const int mx = lay.spec(x).n_orbitals;
    const int my = lay.spec(y).n_orbitals;
    Table<4> ri({mx, my, mx, my});
    for (int k = 1; k <= mx; ++k)
      for (int kp = 1; kp <= my; ++kp)
        for (int q = 1; q <= mx; ++q)
          for (int qp = 1; qp <= my; ++qp)
            ri(k, kp, q, qp) = expectation(at(bank[x], mx, q, k), at(bank[y], my, kp, qp));
    out.rho_inter[p] = ri;
  }

  for (int f = 0; f < 6; ++f) {
    if (!req.pair[f]) continue;
    const PairTripleFamily& fam = kPairTriples[f];
    const int m1 = lay.spec(fam.a1).n_orbitals;
    const int m2 = lay.spec(fam.a2).n_orbitals;
    const bool doubled_first = fam.doubled == fam.a1;
    const int sg = doubled_first ? fam.a2 : fam.a1;
    const int msg = lay.spec(sg).n_orbitals;
    const int md = lay.spec(fam.doubled).n_orbitals;

    // Adjoint-applied doubled-species pair operators: (rho_kslq)^H C = rho_qlsk C.
    std::vector<CoeffTensor> adj;
    adj.reserve(static_cast<size_t>(md) * md * md * md);
    for (int kd = 1; kd <= md; ++kd)
      for (int s = 1; s <= md; ++s)
        for (int l = 1; l <= md; ++l)
          for (int qd = 1; qd <= md; ++qd)
            adj.push_back(apply_rho2_intra(ms, fam.doubled, qd, l, s, kd, c));
    auto adj_at = [&](int kd, int s, int l, int qd) -> const CoeffTensor& {
      return adj[((static_cast<size_t>(kd - 1) * md + (s - 1)) * md + (l - 1)) * md + (qd - 1)];
    };

    Table<6> rp({m1, m2, md, m1, m2, md});
    for (int k = 1; k <= m1; ++k)
      for (int kp = 1; kp <= m2; ++kp)
        for (int s = 1; s <= md; ++s)
          for (int q = 1; q <= m1; ++q)
            for (int qp = 1; qp <= m2; ++qp)
              for (int l = 1; l <= md; ++l) {
                const int kd = doubled_first ? k : kp;
                const int qd = doubled_first ? q : qp;
                const int ks = doubled_first ? kp : k;
                const int qs = doubled_first ? qp : q;
                rp(k, kp, s, q, qp, l) =
                    expectation(adj_at(kd, s, l, qd), at(bank[sg], msg, ks, qs));
              }
    out.rho_pair[f] = rp;
  }

  if (req.triple) {
    const int ma = lay.spec(0).n_orbitals;
    const int mb = lay.spec(1).n_orbitals;
    const int mc = lay.spec(2).n_orbitals;
    Table<6> rt({ma, mb, mc, ma, mb, mc});
    for (int kpp = 1; kpp <= mc; ++kpp)
      for (int qpp = 1; qpp <= mc; ++qpp)
        for (int kp = 1; kp <= mb; ++kp)
          for (int qp = 1; qp <= mb; ++qp) {
            const CoeffTensor bc = apply_rho1(ms, 1, kp, qp, at(bank[2], mc, kpp, qpp));
            for (int k = 1; k <= ma; ++k)
              for (int q = 1; q <= ma; ++q)
                rt(k, kp, kpp, q, qp, qpp) = expectation(at(bank[0], ma, q, k), bc);
          }
    out.rho_triple = rt;
  }

  return out;
}

std::vector<double> natural_occupations(const Table<2>& rho1) {
  const int m = rho1.dim(0);
  Eigen::MatrixXcd r(m, m);
  for (int k = 1; k <= m; ++k)
    for (int q = 1; q <= m; ++q) r(k - 1, q - 1) = rho1(k, q);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(r);
  std::vector<double> occ(es.eigenvalues().size());
  for (int i = 0; i < m; ++i) occ[i] = es.eigenvalues()(m - 1 - i);
  return occ;
}

namespace {

cplx table_dot(std::span<const cplx> weights, std::span<const cplx> values) {
  require(weights.size() == values.size(), "table/RDM shape mismatch");
  cplx acc = 0.0;
  for (size_t i = 0; i < weights.size(); ++i) acc += weights[i] * values[i];
  return acc;
}

}  // namespace

cplx energy_functional(const IntegralTables& tables, const RdmSet& rdms) {
  cplx e = 0.0;
  for (int x = 0; x < tables.n_species; ++x) {
    e += table_dot(tables.h[x].data(), rdms.rho1[x].data());
    if (tables.w_intra[x]) e += 0.5 * table_dot(tables.w_intra[x]->data(), rdms.rho2[x]->data());
    if (tables.u_intra[x])
      e += (1.0 / 6.0) * table_dot(tables.u_intra[x]->data(), rdms.rho3[x]->data());
  }
  for (int p = 0; p < 3; ++p)
    if (tables.w_inter[p]) e += table_dot(tables.w_inter[p]->data(), rdms.rho_inter[p]->data());
  for (int f = 0; f < 6; ++f)
    if (tables.u_pair[f]) e += 0.5 * table_dot(tables.u_pair[f]->data(), rdms.rho_pair[f]->data());
  if (tables.u_triple) e += table_dot(tables.u_triple->data(), rdms.rho_triple->data());
  return e;
}

}  // namespace mctdh
