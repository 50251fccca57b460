#include "mctdh3mix/densops.hpp"

#include <cmath>

namespace mctdh {

namespace {

int recursion_sign(const SpeciesSpec& spec) {
  return spec.stat == Statistics::Fermion ? 1 : -1;
}

TransferTable build_transfer(const FockSpace& space, int k, int q) {
  const int64_t n = space.size();
  const Statistics stat = space.spec().stat;
  TransferTable t;
  t.src.assign(static_cast<size_t>(n), 0);
  t.factor.assign(static_cast<size_t>(n), 0.0);
#pragma omp parallel for schedule(static)
  for (int64_t dest = 0; dest < n; ++dest) {
    Occupation occ = space.unrank(dest + 1);
    if (k == q) {
      t.src[dest] = dest;
      t.factor[dest] = static_cast<double>(occ[k - 1]);
      continue;
    }
    if (stat == Statistics::Boson) {
      if (occ[k - 1] == 0) continue;
      const double f = std::sqrt(static_cast<double>(occ[k - 1])) *
                       std::sqrt(static_cast<double>(occ[q - 1] + 1));
      --occ[k - 1];
      ++occ[q - 1];
      t.src[dest] = space.rank(occ) - 1;
      t.factor[dest] = f;
    } else {
      // Destination must hold the moved particle at k and expose a hole at q.
      if (occ[k - 1] != 1 || occ[q - 1] != 0) continue;
      const int phase = transfer_phase(occ, k, q);
      occ[k - 1] = 0;
      occ[q - 1] = 1;
      t.src[dest] = space.rank(occ) - 1;
      t.factor[dest] = static_cast<double>(phase);
    }
  }
  return t;
}

struct Term {
  const TransferTable* tt;
  cplx w;
};

// One destination-indexed sweep accumulating every term; each output element
// is produced by exactly one iteration, so results do not depend on the
// thread count or schedule.
void sweep(const MixtureLayout& lay, int axis, const std::vector<Term>& terms,
           const CoeffTensor& in, CoeffTensor& out) {
  if (terms.empty()) return;
  const int64_t inner = lay.stride(axis);
  const int64_t dim = lay.dim(axis);
  const int64_t total = in.size();
  const cplx* pin = in.data();
  cplx* pout = out.data();
  const Term* pterms = terms.data();
  const int nterms = static_cast<int>(terms.size());
#pragma omp parallel for schedule(static)
  for (int64_t idx = 0; idx < total; ++idx) {
    const int64_t j = (idx / inner) % dim;
    cplx acc = pout[idx];
    for (int ti = 0; ti < nterms; ++ti) {
      const Term& t = pterms[ti];
      const double f = t.tt->factor[j];
      if (f != 0.0) acc += t.w * f * pin[idx + (t.tt->src[j] - j) * inner];
    }
    pout[idx] = acc;
  }
}

void axpy(cplx a, const CoeffTensor& x, CoeffTensor& y) {
  require(x.size() == y.size(), "axpy: size mismatch");
  const cplx* px = x.data();
  cplx* py = y.data();
  const int64_t n = x.size();
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i) py[i] += a * px[i];
}

void check_orbital(const MixtureSpace& ms, int axis, int idx) {
  require(axis >= 0 && axis < ms.n_species(), "density op: axis not a declared species");
  require(idx >= 1 && idx <= ms.layout().spec(axis).n_orbitals,
          "density op: orbital index out of range");
}

}  // namespace

SpeciesKernel::SpeciesKernel(SpeciesSpec spec) : space_(spec) {
  const int m = spec.n_orbitals;
  cache_.resize(static_cast<size_t>(m) * m);
}

const TransferTable& SpeciesKernel::table(int k, int q) const {
  const int m = space_.spec().n_orbitals;
  const size_t slot = static_cast<size_t>(k - 1) * m + (q - 1);
  std::lock_guard<std::mutex> lock(mu_);
  if (!cache_[slot]) cache_[slot] = std::make_unique<TransferTable>(build_transfer(space_, k, q));
  return *cache_[slot];
}

MixtureSpace::MixtureSpace(std::vector<SpeciesSpec> species) : layout_(species) {
  for (const auto& s : species) kernels_.push_back(std::make_unique<SpeciesKernel>(s));
}

void add_scaled_rho1(const MixtureSpace& ms, int axis, int k, int q, cplx w,
                     const CoeffTensor& c, CoeffTensor& out) {
  check_orbital(ms, axis, k);
  check_orbital(ms, axis, q);
  require(c.size() == out.size() && c.size() == ms.layout().total_dim(),
          "apply: tensor size mismatch");
  sweep(ms.layout(), axis, {{&ms.kernel(axis).table(k, q), w}}, c, out);
}

CoeffTensor apply_rho1(const MixtureSpace& ms, int axis, int k, int q,
                       const CoeffTensor& c) {
  CoeffTensor out = ms.make_tensor();
  add_scaled_rho1(ms, axis, k, q, 1.0, c, out);
  return out;
}

void add_one_body(const MixtureSpace& ms, int axis, const Table<2>& o, cplx scale,
                  const CoeffTensor& c, CoeffTensor& out) {
  require(axis >= 0 && axis < ms.n_species(), "add_one_body: axis not declared");
  const int m = ms.layout().spec(axis).n_orbitals;
  require(o.dim(0) == m && o.dim(1) == m, "add_one_body: table shape mismatch");
  require(c.size() == out.size() && c.size() == ms.layout().total_dim(),
          "apply: tensor size mismatch");
  std::vector<Term> terms;
  terms.reserve(static_cast<size_t>(m) * m);
  for (int k = 1; k <= m; ++k)
    for (int q = 1; q <= m; ++q) {
      const cplx w = scale * o(k, q);
      if (w != cplx{}) terms.push_back({&ms.kernel(axis).table(k, q), w});
    }
  sweep(ms.layout(), axis, terms, c, out);
}

CoeffTensor apply_one_body(const MixtureSpace& ms, int axis, const Table<2>& o,
                           const CoeffTensor& c) {
  CoeffTensor out = ms.make_tensor();
  add_one_body(ms, axis, o, 1.0, c, out);
  return out;
}

CoeffTensor apply_rho2_intra(const MixtureSpace& ms, int axis, int k, int s, int l, int q,
                             const CoeffTensor& c) {
  check_orbital(ms, axis, s);
  check_orbital(ms, axis, l);
  const int sf = recursion_sign(ms.layout().spec(axis));
  CoeffTensor out = ms.make_tensor();
  if (s == l) add_scaled_rho1(ms, axis, k, q, static_cast<double>(sf), c, out);
  const CoeffTensor t = apply_rho1(ms, axis, s, q, c);
  add_scaled_rho1(ms, axis, k, l, static_cast<double>(-sf), t, out);
  return out;
}

CoeffTensor apply_rho3_intra(const MixtureSpace& ms, int axis, int k, int s, int p, int r,
                             int l, int q, const CoeffTensor& c) {
  check_orbital(ms, axis, p);
  check_orbital(ms, axis, r);
  const int sf = recursion_sign(ms.layout().spec(axis));
  CoeffTensor out = ms.make_tensor();
  if (p == r) axpy(static_cast<double>(sf), apply_rho2_intra(ms, axis, k, s, l, q, c), out);
  if (p == l) axpy(-1.0, apply_rho2_intra(ms, axis, k, s, r, q, c), out);
  const CoeffTensor t = apply_rho1(ms, axis, p, q, c);
  axpy(1.0, apply_rho2_intra(ms, axis, k, s, r, l, t), out);
  return out;
}

void add_contracted_rho2(const MixtureSpace& ms, int axis, const Table<4>& t, cplx scale,
                         const CoeffTensor& c, CoeffTensor& out) {
  require(axis >= 0 && axis < ms.n_species(), "add_contracted_rho2: axis not declared");
  const int m = ms.layout().spec(axis).n_orbitals;
  for (int a = 0; a < 4; ++a)
    require(t.dim(a) == m, "add_contracted_rho2: table shape mismatch");
  const int sf = recursion_sign(ms.layout().spec(axis));

  Table<2> teff({m, m});
  for (int k = 1; k <= m; ++k)
    for (int q = 1; q <= m; ++q) {
      cplx acc{};
      for (int s = 1; s <= m; ++s) acc += t(k, s, q, s);
      teff(k, q) = acc;
    }
  add_one_body(ms, axis, teff, scale * static_cast<double>(sf), c, out);

  Table<2> block({m, m});
  for (int s = 1; s <= m; ++s)
    for (int q = 1; q <= m; ++q) {
      bool nonzero = false;
      for (int k = 1; k <= m; ++k)
        for (int l = 1; l <= m; ++l) {
          block(k, l) = t(k, s, q, l);
          nonzero = nonzero || block(k, l) != cplx{};
        }
      if (!nonzero) continue;
      const CoeffTensor tmp = apply_rho1(ms, axis, s, q, c);
      add_one_body(ms, axis, block, scale * static_cast<double>(-sf), tmp, out);
    }
}

void add_two_body(const MixtureSpace& ms, int axis, const Table<4>& w, cplx scale,
                  const CoeffTensor& c, CoeffTensor& out) {
  add_contracted_rho2(ms, axis, w, 0.5 * scale, c, out);
}

void add_three_body(const MixtureSpace& ms, int axis, const Table<6>& u, cplx scale,
                    const CoeffTensor& c, CoeffTensor& out) {
  require(axis >= 0 && axis < ms.n_species(), "add_three_body: axis not declared");
  const int m = ms.layout().spec(axis).n_orbitals;
  for (int a = 0; a < 6; ++a)
    require(u.dim(a) == m, "add_three_body: table shape mismatch");
  const int sf = recursion_sign(ms.layout().spec(axis));
  const cplx sixth = scale / 6.0;

  // delta_pr and delta_pl contractions of u(k,s,p,q,l,r)
  Table<4> t1({m, m, m, m}), t2({m, m, m, m});
  for (int k = 1; k <= m; ++k)
    for (int s = 1; s <= m; ++s)
      for (int q = 1; q <= m; ++q)
        for (int l = 1; l <= m; ++l) {
          cplx acc1{}, acc2{};
          for (int p = 1; p <= m; ++p) {
            acc1 += u(k, s, p, q, l, p);
            acc2 += u(k, s, p, q, p, l);
          }
          t1(k, s, q, l) = acc1;
          t2(k, s, q, l) = acc2;
        }
  add_contracted_rho2(ms, axis, t1, sixth * static_cast<double>(sf), c, out);
  add_contracted_rho2(ms, axis, t2, -sixth, c, out);

  Table<4> t3({m, m, m, m});
  for (int p = 1; p <= m; ++p)
    for (int q = 1; q <= m; ++q) {
      bool nonzero = false;
      for (int k = 1; k <= m; ++k)
        for (int s = 1; s <= m; ++s)
          for (int a = 1; a <= m; ++a)
            for (int b = 1; b <= m; ++b) {
              t3(k, s, a, b) = u(k, s, p, q, a, b);
              nonzero = nonzero || t3(k, s, a, b) != cplx{};
            }
      if (!nonzero) continue;
      const CoeffTensor tmp = apply_rho1(ms, axis, p, q, c);
      add_contracted_rho2(ms, axis, t3, sixth, tmp, out);
    }
}

void add_inter_two_body(const MixtureSpace& ms, int pair, const Table<4>& w, cplx scale,
                        const CoeffTensor& c, CoeffTensor& out) {
  require(pair >= 0 && pair < 3, "add_inter_two_body: bad pair index");
  const int x = kSpeciesPairs[pair][0], y = kSpeciesPairs[pair][1];
  require(y < ms.n_species(), "add_inter_two_body: pair references absent species");
  const int mx = ms.layout().spec(x).n_orbitals;
  const int my = ms.layout().spec(y).n_orbitals;
  require(w.dim(0) == mx && w.dim(1) == my && w.dim(2) == mx && w.dim(3) == my,
          "add_inter_two_body: table shape mismatch");

  Table<2> block({my, my});
  for (int k = 1; k <= mx; ++k)
    for (int q = 1; q <= mx; ++q) {
      bool nonzero = false;
      for (int kp = 1; kp <= my; ++kp)
        for (int qp = 1; qp <= my; ++qp) {
          block(kp, qp) = w(k, kp, q, qp);
          nonzero = nonzero || block(kp, qp) != cplx{};
        }
      if (!nonzero) continue;
      const CoeffTensor tmp = apply_rho1(ms, x, k, q, c);
      add_one_body(ms, y, block, scale, tmp, out);
    }
}

void add_inter_pair_triple(const MixtureSpace& ms, int family, const Table<6>& u,
                           cplx scale, const CoeffTensor& c, CoeffTensor& out) {
  require(family >= 0 && family < 6, "add_inter_pair_triple: bad family index");
  const auto& fam = kPairTriples[family];
  require(fam.a2 < ms.n_species(), "add_inter_pair_triple: family references absent species");
  const int dd = fam.doubled;
  const int sg = (dd == fam.a1) ? fam.a2 : fam.a1;
  const int md = ms.layout().spec(dd).n_orbitals;
  const int msg = ms.layout().spec(sg).n_orbitals;
  const int m1 = ms.layout().spec(fam.a1).n_orbitals;
  const int m2 = ms.layout().spec(fam.a2).n_orbitals;
  require(u.dim(0) == m1 && u.dim(1) == m2 && u.dim(2) == md && u.dim(3) == m1 &&
              u.dim(4) == m2 && u.dim(5) == md,
          "add_inter_pair_triple: table shape mismatch");

  // (1/2) sum over the single species' (k,q): rho1 on `sg` composed with a
  // contracted two-body recursion on the doubled species.
  Table<4> t4({md, md, md, md});
  for (int ks = 1; ks <= msg; ++ks)
    for (int qs = 1; qs <= msg; ++qs) {
      bool nonzero = false;
      for (int k = 1; k <= md; ++k)
        for (int s = 1; s <= md; ++s)
          for (int q = 1; q <= md; ++q)
            for (int l = 1; l <= md; ++l) {
              const cplx v = (dd == fam.a1) ? u(k, ks, s, q, qs, l) : u(ks, k, s, qs, q, l);
              t4(k, s, q, l) = v;
              nonzero = nonzero || v != cplx{};
            }
      if (!nonzero) continue;
      CoeffTensor tmp = ms.make_tensor();
      add_contracted_rho2(ms, dd, t4, 1.0, c, tmp);
      add_scaled_rho1(ms, sg, ks, qs, 0.5 * scale, tmp, out);
    }
}

void add_inter_triple(const MixtureSpace& ms, const Table<6>& u, cplx scale,
                      const CoeffTensor& c, CoeffTensor& out) {
  require(ms.n_species() == 3, "add_inter_triple: needs three species");
  const int m0 = ms.layout().spec(0).n_orbitals;
  const int m1 = ms.layout().spec(1).n_orbitals;
  const int m2 = ms.layout().spec(2).n_orbitals;
  require(u.dim(0) == m0 && u.dim(1) == m1 && u.dim(2) == m2 && u.dim(3) == m0 &&
              u.dim(4) == m1 && u.dim(5) == m2,
          "add_inter_triple: table shape mismatch");

  Table<2> block({m2, m2});
  for (int k = 1; k <= m0; ++k)
    for (int q = 1; q <= m0; ++q) {
      const CoeffTensor ta = apply_rho1(ms, 0, k, q, c);
      for (int kp = 1; kp <= m1; ++kp)
        for (int qp = 1; qp <= m1; ++qp) {
          bool nonzero = false;
          for (int kpp = 1; kpp <= m2; ++kpp)
            for (int qpp = 1; qpp <= m2; ++qpp) {
              block(kpp, qpp) = u(k, kp, kpp, q, qp, qpp);
              nonzero = nonzero || block(kpp, qpp) != cplx{};
            }
          if (!nonzero) continue;
          const CoeffTensor tb = apply_rho1(ms, 1, kp, qp, ta);
          add_one_body(ms, 2, block, scale, tb, out);
        }
    }
}

CoeffTensor apply_hamiltonian(const MixtureSpace& ms, const IntegralTables& tables,
                              const CoeffTensor& c) {
  require(tables.n_species == ms.n_species(), "apply_hamiltonian: species count mismatch");
  CoeffTensor out = ms.make_tensor();
  for (int x = 0; x < ms.n_species(); ++x) {
    require(!tables.h[x].empty(), "apply_hamiltonian: missing one-body table");
    add_one_body(ms, x, tables.h[x], 1.0, c, out);
    if (tables.w_intra[x]) add_two_body(ms, x, *tables.w_intra[x], 1.0, c, out);
    if (tables.u_intra[x]) add_three_body(ms, x, *tables.u_intra[x], 1.0, c, out);
  }
  for (int p = 0; p < 3; ++p)
    if (tables.w_inter[p]) add_inter_two_body(ms, p, *tables.w_inter[p], 1.0, c, out);
  for (int f = 0; f < 6; ++f)
    if (tables.u_pair[f]) add_inter_pair_triple(ms, f, *tables.u_pair[f], 1.0, c, out);
  if (tables.u_triple) add_inter_triple(ms, *tables.u_triple, 1.0, c, out);
  return out;
}

cplx expectation(const CoeffTensor& a, const CoeffTensor& b) {
  require(a.size() == b.size(), "expectation: size mismatch");
  return pairwise_dot(a.data(), b.data(), a.size());
}

double norm(const CoeffTensor& a) { return std::sqrt(pairwise_norm2(a.data(), a.size())); }

}  // namespace mctdh
