#include "mctdh3mix/oracle.hpp"

#include <algorithm>
#include <cmath>

namespace mctdh::oracle {

namespace {

struct Ket {
  Occupation occ;
  cplx amp;
};

// Position of orbital j in the ascending occupied list = number of creation
// operators a_j'† with j' < j that a_j (or a_j†) must hop over.
int hops_before(const Occupation& occ, int j) {
  int hops = 0;
  for (int i = 0; i < j - 1; ++i) hops += occ[i] > 0 ? 1 : 0;
  return hops;
}

bool annihilate(Statistics stat, Ket& ket, int q) {
  int& n = ket.occ[q - 1];
  if (n == 0) return false;
  if (stat == Statistics::Fermion) {
    if (hops_before(ket.occ, q) % 2 == 1) ket.amp = -ket.amp;
    n = 0;
  } else {
    ket.amp *= std::sqrt(static_cast<double>(n));
    --n;
  }
  return true;
}

bool create(Statistics stat, Ket& ket, int k) {
  int& n = ket.occ[k - 1];
  if (stat == Statistics::Fermion) {
    if (n == 1) return false;
    if (hops_before(ket.occ, k) % 2 == 1) ket.amp = -ket.amp;
    n = 1;
  } else {
    ket.amp *= std::sqrt(static_cast<double>(n + 1));
    ++n;
  }
  return true;
}

// Applies a normal-ordered string: `creators` left to right are a_k†...,
// `annihilators` left to right are a_l... (so the rightmost acts first).
bool apply_string(Statistics stat, Ket& ket, std::initializer_list<int> creators,
                  std::initializer_list<int> annihilators) {
  const std::vector<int> ann(annihilators);
  for (auto it = ann.rbegin(); it != ann.rend(); ++it)
    if (!annihilate(stat, ket, *it)) return false;
  const std::vector<int> cre(creators);
  for (auto it = cre.rbegin(); it != cre.rend(); ++it)
    if (!create(stat, ket, *it)) return false;
  return true;
}

Eigen::MatrixXcd dense_string(const SpeciesSpec& spec, std::initializer_list<int> creators,
                              std::initializer_list<int> annihilators) {
  const FockSpace space(spec);
  const auto d = space.size();
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(d, d);
  for (int64_t col = 1; col <= d; ++col) {
    Ket ket{space.unrank(col), cplx{1.0, 0.0}};
    if (!apply_string(spec.stat, ket, creators, annihilators)) continue;
    m(space.rank(ket.occ) - 1, col - 1) += ket.amp;
  }
  return m;
}

}  // namespace

Eigen::MatrixXcd dense_rho1(const SpeciesSpec& spec, int k, int q) {
  return dense_string(spec, {k}, {q});
}

Eigen::MatrixXcd dense_rho2(const SpeciesSpec& spec, int k, int s, int l, int q) {
  return dense_string(spec, {k, s}, {l, q});
}

Eigen::MatrixXcd dense_rho3(const SpeciesSpec& spec, int k, int s, int p, int r, int l,
                            int q) {
  return dense_string(spec, {k, s, p}, {r, l, q});
}

Eigen::MatrixXcd build_dense(const MixtureLayout& layout, const IntegralTables& tables) {
  const int64_t d = layout.total_dim();
  if (d > kDenseCap) throw capacity_error("oracle: configuration space exceeds dense cap");
  require(tables.n_species == layout.n_species(), "oracle: table/species count mismatch");

  const int ns = layout.n_species();
  std::array<std::vector<Occupation>, 3> configs;
  std::array<Statistics, 3> stat{};
  std::array<int, 3> morb{};
  for (int x = 0; x < ns; ++x) {
    configs[x] = layout.space(x).enumerate();
    stat[x] = layout.spec(x).stat;
    morb[x] = layout.spec(x).n_orbitals;
  }

  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(d, d);

  for (int64_t col = 0; col < d; ++col) {
    std::array<int64_t, 3> src{};  // 0-based per-axis addresses
    int64_t rest = col;
    for (int x = 0; x < 3; ++x) {
      src[x] = rest % layout.dim(x);
      rest /= layout.dim(x);
    }

    // Applies per-axis strings to the column's kets; accumulates into h.
    auto deposit = [&](const std::array<const Ket*, 3>& kets, cplx weight) {
      if (weight == cplx{}) return;
      int64_t row = 0;
      cplx amp = weight;
      for (int x = 2; x >= 0; --x) {
        if (x < ns && kets[x] != nullptr) {
          row = row * layout.dim(x) + (layout.space(x).rank(kets[x]->occ) - 1);
          amp *= kets[x]->amp;
        } else {
          row = row * layout.dim(x) + src[x];
        }
      }
      h(row, col) += amp;
    };

    for (int x = 0; x < ns; ++x) {
      const Occupation& occ = configs[x][src[x]];
      const int m = morb[x];

      for (int k = 1; k <= m; ++k)
        for (int q = 1; q <= m; ++q) {
          const cplx w = tables.h[x](k, q);
          if (w == cplx{}) continue;
          Ket ket{occ, 1.0};
          if (!apply_string(stat[x], ket, {k}, {q})) continue;
          deposit({x == 0 ? &ket : nullptr, x == 1 ? &ket : nullptr, x == 2 ? &ket : nullptr},
                  w);
        }

      if (tables.w_intra[x]) {
        const auto& tw = *tables.w_intra[x];
        for (int k = 1; k <= m; ++k)
          for (int s = 1; s <= m; ++s)
            for (int q = 1; q <= m; ++q)
              for (int l = 1; l <= m; ++l) {
                const cplx w = 0.5 * tw(k, s, q, l);
                if (w == cplx{}) continue;
                Ket ket{occ, 1.0};
                if (!apply_string(stat[x], ket, {k, s}, {l, q})) continue;
                deposit({x == 0 ? &ket : nullptr, x == 1 ? &ket : nullptr,
                         x == 2 ? &ket : nullptr},
                        w);
              }
      }

      if (tables.u_intra[x]) {
        const auto& tu = *tables.u_intra[x];
        for (int k = 1; k <= m; ++k)
          for (int s = 1; s <= m; ++s)
            for (int p = 1; p <= m; ++p)
              for (int q = 1; q <= m; ++q)
                for (int l = 1; l <= m; ++l)
                  for (int r = 1; r <= m; ++r) {
                    const cplx w = tu(k, s, p, q, l, r) / 6.0;
                    if (w == cplx{}) continue;
                    Ket ket{occ, 1.0};
                    if (!apply_string(stat[x], ket, {k, s, p}, {r, l, q})) continue;
                    deposit({x == 0 ? &ket : nullptr, x == 1 ? &ket : nullptr,
                             x == 2 ? &ket : nullptr},
                            w);
                  }
      }
    }

    for (int p = 0; p < 3; ++p) {
      if (!tables.w_inter[p]) continue;
      const int x = kSpeciesPairs[p][0], y = kSpeciesPairs[p][1];
      const auto& tw = *tables.w_inter[p];
      for (int k = 1; k <= morb[x]; ++k)
        for (int kp = 1; kp <= morb[y]; ++kp)
          for (int q = 1; q <= morb[x]; ++q)
            for (int qp = 1; qp <= morb[y]; ++qp) {
              const cplx w = tw(k, kp, q, qp);
              if (w == cplx{}) continue;
              Ket kx{configs[x][src[x]], 1.0};
              if (!apply_string(stat[x], kx, {k}, {q})) continue;
              Ket ky{configs[y][src[y]], 1.0};
              if (!apply_string(stat[y], ky, {kp}, {qp})) continue;
              std::array<const Ket*, 3> kets{nullptr, nullptr, nullptr};
              kets[x] = &kx;
              kets[y] = &ky;
              deposit(kets, w);
            }
    }

    for (int f = 0; f < 6; ++f) {
      if (!tables.u_pair[f]) continue;
      const auto& fam = kPairTriples[f];
      const int x = fam.a1, y = fam.a2, dd = fam.doubled;
      const int sg = (dd == x) ? y : x;  // the single-operator species
      const auto& tu = *tables.u_pair[f];
      for (int k = 1; k <= morb[x]; ++k)
        for (int kp = 1; kp <= morb[y]; ++kp)
          for (int s = 1; s <= morb[dd]; ++s)
            for (int q = 1; q <= morb[x]; ++q)
              for (int qp = 1; qp <= morb[y]; ++qp)
                for (int l = 1; l <= morb[dd]; ++l) {
                  const cplx w = 0.5 * tu(k, kp, s, q, qp, l);
                  if (w == cplx{}) continue;
                  // (k,q) on a1 and (k',q') on a2; the doubled species also
                  // carries (s,l) inside one normal-ordered string.
                  const int kd = (dd == x) ? k : kp;
                  const int qd = (dd == x) ? q : qp;
                  const int kss = (sg == x) ? k : kp;
                  const int qss = (sg == x) ? q : qp;
                  Ket kdd{configs[dd][src[dd]], 1.0};
                  if (!apply_string(stat[dd], kdd, {kd, s}, {l, qd})) continue;
                  Ket ksg{configs[sg][src[sg]], 1.0};
                  if (!apply_string(stat[sg], ksg, {kss}, {qss})) continue;
                  std::array<const Ket*, 3> kets{nullptr, nullptr, nullptr};
                  kets[dd] = &kdd;
                  kets[sg] = &ksg;
                  deposit(kets, w);
                }
    }

    if (tables.u_triple) {
      const auto& tu = *tables.u_triple;
      for (int k = 1; k <= morb[0]; ++k)
        for (int kp = 1; kp <= morb[1]; ++kp)
          for (int kpp = 1; kpp <= morb[2]; ++kpp)
            for (int q = 1; q <= morb[0]; ++q)
              for (int qp = 1; qp <= morb[1]; ++qp)
                for (int qpp = 1; qpp <= morb[2]; ++qpp) {
                  const cplx w = tu(k, kp, kpp, q, qp, qpp);
                  if (w == cplx{}) continue;
                  Ket ka{configs[0][src[0]], 1.0};
                  if (!apply_string(stat[0], ka, {k}, {q})) continue;
                  Ket kb{configs[1][src[1]], 1.0};
                  if (!apply_string(stat[1], kb, {kp}, {qp})) continue;
                  Ket kc{configs[2][src[2]], 1.0};
                  if (!apply_string(stat[2], kc, {kpp}, {qpp})) continue;
                  deposit({&ka, &kb, &kc}, w);
                }
    }
  }

  return h;
}

Eigen::VectorXcd exact_propagate(const Eigen::MatrixXcd& h, const Eigen::VectorXcd& c0,
                                 double t) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
  require(es.info() == Eigen::Success, "exact_propagate: eigensolver failed");
  const Eigen::VectorXcd phases =
      (es.eigenvalues().cast<cplx>().array() * cplx{0.0, -t}).exp().matrix();
  return es.eigenvectors() * phases.asDiagonal() * (es.eigenvectors().adjoint() * c0);
}

std::pair<double, Eigen::VectorXcd> exact_ground(const Eigen::MatrixXcd& h) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
  require(es.info() == Eigen::Success, "exact_ground: eigensolver failed");
  return {es.eigenvalues()(0), es.eigenvectors().col(0)};
}

}  // namespace mctdh::oracle
