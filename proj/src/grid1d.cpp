#include "mctdh3mix/grid1d.hpp"

#include <algorithm>
#include <cmath>

namespace mctdh {

namespace {

// Plain (unconjugated) product sum; callers bake conjugation into `a`.
cplx plain_dot(std::span<const cplx> a, std::span<const cplx> b) {
  cplx s{};
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

GridFn density_product(std::span<const cplx> bra, std::span<const cplx> ket) {
  GridFn f(bra.size());
  for (size_t i = 0; i < bra.size(); ++i) f[i] = std::conj(bra[i]) * ket[i];
  return f;
}

Eigen::MatrixXd gaussian_conv(const Grid& g, double sigma) {
  require(sigma > 0.0, "gaussian kernel: sigma must be positive");
  Eigen::MatrixXd m(g.n, g.n);
  const double len = g.length();
  const bool wrap = g.boundary == Boundary::Periodic;
  for (int i = 0; i < g.n; ++i)
    for (int j = 0; j < g.n; ++j) {
      double d = g.x(i) - g.x(j);
      if (wrap) d -= len * std::round(d / len);
      m(i, j) = std::exp(-d * d / (2.0 * sigma * sigma));
    }
  return m;
}

GridFn conv_apply(const Eigen::MatrixXd& m, double dx, std::span<const cplx> f) {
  const int n = static_cast<int>(f.size());
  GridFn out(static_cast<size_t>(n));
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    cplx s{};
    for (int j = 0; j < n; ++j) s += m(i, j) * f[j];
    out[i] = s * dx;
  }
  return out;
}

}  // namespace

void Grid::validate() const {
  require(n >= 4, "grid: need at least 4 points");
  require(x_max > x_min, "grid: x_max must exceed x_min");
}

cplx grid_dot(const Grid& g, std::span<const cplx> a, std::span<const cplx> b) {
  require(a.size() == b.size() && static_cast<int>(a.size()) == g.n,
          "grid_dot: size mismatch");
  return pairwise_dot(a, b) * g.dx();
}

void mgs_orthonormalize(const Grid& g, OrbitalSet& orbs) {
  for (int j = 1; j <= orbs.n_orbitals(); ++j) {
    auto pj = orbs.orbital(j);
    for (int i = 1; i < j; ++i) {
      auto pi = orbs.orbital(i);
      const cplx proj = grid_dot(g, pi, pj);
      for (int gidx = 0; gidx < g.n; ++gidx) pj[gidx] -= proj * pi[gidx];
    }
    const double nrm = std::sqrt(std::real(grid_dot(g, pj, pj)));
    require(nrm > 1e-14, "mgs: orbital set is numerically degenerate");
    for (int gidx = 0; gidx < g.n; ++gidx) pj[gidx] /= nrm;
  }
}

double gram_defect(const Grid& g, const OrbitalSet& orbs) {
  double worst = 0.0;
  for (int k = 1; k <= orbs.n_orbitals(); ++k)
    for (int j = 1; j <= orbs.n_orbitals(); ++j) {
      const cplx d = grid_dot(g, orbs.orbital(k), orbs.orbital(j)) - (k == j ? 1.0 : 0.0);
      worst = std::max(worst, std::abs(d));
    }
  return worst;
}

std::vector<double> trap_potential(const Grid& g, const TrapSpec& trap, double mass,
                                   double t) {
  std::vector<double> v(static_cast<size_t>(g.n), 0.0);
  for (int gi = 0; gi < g.n; ++gi) {
    const double x = g.x(gi);
    double val = 0.0;
    if (trap.kind == TrapSpec::Kind::Harmonic) {
      const double dxc = x - trap.center;
      val = 0.5 * mass * trap.omega * trap.omega * dxc * dxc;
    }
    if (trap.drive_amp != 0.0) val += trap.drive_amp * std::sin(trap.drive_omega * t) * x;
    v[gi] = val;
  }
  return v;
}

OneBodyOp::OneBodyOp(const Grid& g, double mass, std::vector<double> v)
    : grid_(g), kin_(0.0), v_(std::move(v)) {
  grid_.validate();
  require(mass > 0.0, "one-body operator: mass must be positive");
  require(static_cast<int>(v_.size()) == g.n, "one-body operator: potential size mismatch");
  kin_ = 1.0 / (2.0 * mass * g.dx() * g.dx());
}

void OneBodyOp::apply(std::span<const cplx> in, std::span<cplx> out) const {
  const int n = grid_.n;
  require(static_cast<int>(in.size()) == n && static_cast<int>(out.size()) == n,
          "one-body operator: vector size mismatch");
  const bool wrap = grid_.boundary == Boundary::Periodic;
  for (int g = 0; g < n; ++g) {
    const cplx left = g > 0 ? in[g - 1] : (wrap ? in[n - 1] : cplx{});
    const cplx right = g < n - 1 ? in[g + 1] : (wrap ? in[0] : cplx{});
    out[g] = kin_ * (2.0 * in[g] - left - right) + v_[g] * in[g];
  }
}

Eigen::MatrixXd OneBodyOp::dense() const {
  const int n = grid_.n;
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (int g = 0; g < n; ++g) {
    m(g, g) = 2.0 * kin_ + v_[g];
    if (g > 0) m(g, g - 1) = -kin_;
    if (g < n - 1) m(g, g + 1) = -kin_;
  }
  if (grid_.boundary == Boundary::Periodic) {
    m(0, n - 1) += -kin_;
    m(n - 1, 0) += -kin_;
  }
  return m;
}

OrbitalSet eigenstate_orbitals(const OneBodyOp& h, int n_orb) {
  const Grid& g = h.grid();
  require(n_orb >= 1 && n_orb <= g.n, "eigenstate orbitals: need 1 <= M <= n_points");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h.dense());
  require(es.info() == Eigen::Success, "eigenstate orbitals: eigensolver failed");
  OrbitalSet orbs(n_orb, g.n);
  const double scale = 1.0 / std::sqrt(g.dx());
  for (int j = 1; j <= n_orb; ++j) {
    Eigen::VectorXd v = es.eigenvectors().col(j - 1);
    int peak = 0;
    for (int gi = 1; gi < g.n; ++gi)
      if (std::abs(v(gi)) > std::abs(v(peak))) peak = gi;
    if (v(peak) < 0) v = -v;
    auto slot = orbs.orbital(j);
    for (int gi = 0; gi < g.n; ++gi) slot[gi] = v(gi) * scale;
  }
  return orbs;
}

double ramp_factor(RampKind ramp, double param, double t) {
  switch (ramp) {
    case RampKind::Constant:
      return 1.0;
    case RampKind::Linear:
      return param <= 0.0 ? 1.0 : std::clamp(t / param, 0.0, 1.0);
    case RampKind::Sinusoidal:
      return std::sin(param * t);
  }
  return 1.0;
}

PairKernel::PairKernel(const Grid& g, const InteractionSpec& spec) : grid_(g), spec_(spec) {
  require(spec.kind == KernelKind::Contact || spec.kind == KernelKind::Gaussian,
          "pair kernel: need a two-body kernel kind");
  if (spec.kind == KernelKind::Gaussian) conv_ = gaussian_conv(g, spec.sigma);
}

double PairKernel::strength(double t) const {
  return spec_.strength * ramp_factor(spec_.ramp, spec_.ramp_param, t);
}

GridFn PairKernel::image(double t, std::span<const cplx> f) const {
  const double lam = strength(t);
  if (spec_.kind == KernelKind::Contact) {
    GridFn out(f.size());
    for (size_t i = 0; i < f.size(); ++i) out[i] = lam * f[i];
    return out;
  }
  GridFn out = conv_apply(conv_, grid_.dx(), f);
  for (auto& v : out) v *= lam;
  return out;
}

TripleKernel::TripleKernel(const Grid& g, const InteractionSpec& spec)
    : grid_(g), spec_(spec) {
  require(spec.kind == KernelKind::ContactTriple || spec.kind == KernelKind::GaussianTriple,
          "triple kernel: need a three-body kernel kind");
  if (spec.kind == KernelKind::GaussianTriple) {
    require(g.n <= 1024, "triple gaussian kernel: grid capped at 1024 points");
    conv_ = gaussian_conv(g, spec.sigma);
  }
}

double TripleKernel::strength(double t) const {
  return spec_.strength * ramp_factor(spec_.ramp, spec_.ramp_param, t);
}

GridFn TripleKernel::convolve(std::span<const cplx> f) const {
  return conv_apply(conv_, grid_.dx(), f);
}

GridFn TripleKernel::image(double t, std::span<const cplx> f1,
                           std::span<const cplx> f2) const {
  const double lam = strength(t);
  const size_t n = f1.size();
  GridFn out(n);
  if (spec_.kind == KernelKind::ContactTriple) {
    for (size_t i = 0; i < n; ++i) out[i] = lam * f1[i] * f2[i];
    return out;
  }
  const GridFn p1 = convolve(f1);
  const GridFn p2 = convolve(f2);
  GridFn t2in(n), t3in(n);
  for (size_t i = 0; i < n; ++i) {
    t2in[i] = f1[i] * p2[i];
    t3in[i] = f2[i] * p1[i];
  }
  const GridFn t2 = convolve(t2in);
  const GridFn t3 = convolve(t3in);
  for (size_t i = 0; i < n; ++i) out[i] = (lam / 3.0) * (p1[i] * p2[i] + t2[i] + t3[i]);
  return out;
}

Table<2> build_h_table(const Grid& g, const OneBodyOp& h, const OrbitalSet& orbs) {
  const int m = orbs.n_orbitals();
  Table<2> tab({m, m});
  std::vector<GridFn> hphi(static_cast<size_t>(m), GridFn(static_cast<size_t>(g.n)));
  for (int q = 1; q <= m; ++q) h.apply(orbs.orbital(q), hphi[q - 1]);
  for (int k = 1; k <= m; ++k)
    for (int q = 1; q <= m; ++q)
      tab(k, q) = pairwise_dot(orbs.orbital(k), hphi[q - 1]) * g.dx();
  return tab;
}

IntraPairBuild build_intra_pair(const Grid& g, const PairKernel& kern, double t,
                                const OrbitalSet& orbs) {
  const int m = orbs.n_orbitals();
  IntraPairBuild out{Table<4>({m, m, m, m}), FnTable<2>({m, m}, g.n)};
  FnTable<2> dens({m, m}, g.n);
  for (int k = 1; k <= m; ++k)
    for (int q = 1; q <= m; ++q) {
      const GridFn f = density_product(orbs.orbital(k), orbs.orbital(q));
      std::copy(f.begin(), f.end(), dens.at(k, q).begin());
    }
  for (int s = 1; s <= m; ++s)
    for (int l = 1; l <= m; ++l) {
      const GridFn pot = kern.image(t, dens.at(s, l));
      std::copy(pot.begin(), pot.end(), out.pot.at(s, l).begin());
    }
  const double dx = g.dx();
#pragma omp parallel for collapse(2) schedule(static)
  for (int k = 1; k <= m; ++k)
    for (int s = 1; s <= m; ++s)
      for (int q = 1; q <= m; ++q)
        for (int l = 1; l <= m; ++l)
          out.w(k, s, q, l) = plain_dot(dens.at(k, q), out.pot.at(s, l)) * dx;
  return out;
}

IntraTripleBuild build_intra_triple(const Grid& g, const TripleKernel& kern, double t,
                                    const OrbitalSet& orbs) {
  const int m = orbs.n_orbitals();
  IntraTripleBuild out{Table<6>({m, m, m, m, m, m}), FnTable<4>({m, m, m, m}, g.n)};
  FnTable<2> dens({m, m}, g.n);
  for (int k = 1; k <= m; ++k)
    for (int q = 1; q <= m; ++q) {
      const GridFn f = density_product(orbs.orbital(k), orbs.orbital(q));
      std::copy(f.begin(), f.end(), dens.at(k, q).begin());
    }
  for (int s = 1; s <= m; ++s)
    for (int p = 1; p <= m; ++p)
      for (int l = 1; l <= m; ++l)
        for (int r = 1; r <= m; ++r) {
          const GridFn pot = kern.image(t, dens.at(s, l), dens.at(p, r));
          std::copy(pot.begin(), pot.end(), out.pot.at(s, p, l, r).begin());
        }
  const double dx = g.dx();
#pragma omp parallel for collapse(2) schedule(static)
  for (int k = 1; k <= m; ++k)
    for (int s = 1; s <= m; ++s)
      for (int p = 1; p <= m; ++p)
        for (int q = 1; q <= m; ++q)
          for (int l = 1; l <= m; ++l)
            for (int r = 1; r <= m; ++r)
              out.u(k, s, p, q, l, r) = plain_dot(dens.at(k, q), out.pot.at(s, p, l, r)) * dx;
  return out;
}

InterPairBuild build_inter_pair(const Grid& g, const PairKernel& kern, double t,
                                const OrbitalSet& first, const OrbitalSet& second) {
  const int mx = first.n_orbitals(), my = second.n_orbitals();
  InterPairBuild out{Table<4>({mx, my, mx, my}), FnTable<2>({my, my}, g.n),
                     FnTable<2>({mx, mx}, g.n)};
  FnTable<2> densx({mx, mx}, g.n), densy({my, my}, g.n);
  for (int k = 1; k <= mx; ++k)
    for (int q = 1; q <= mx; ++q) {
      const GridFn f = density_product(first.orbital(k), first.orbital(q));
      std::copy(f.begin(), f.end(), densx.at(k, q).begin());
      const GridFn pot = kern.image(t, f);
      std::copy(pot.begin(), pot.end(), out.pot_on_second.at(k, q).begin());
    }
  for (int kp = 1; kp <= my; ++kp)
    for (int qp = 1; qp <= my; ++qp) {
      const GridFn f = density_product(second.orbital(kp), second.orbital(qp));
      std::copy(f.begin(), f.end(), densy.at(kp, qp).begin());
      const GridFn pot = kern.image(t, f);
      std::copy(pot.begin(), pot.end(), out.pot_on_first.at(kp, qp).begin());
    }
  const double dx = g.dx();
#pragma omp parallel for collapse(2) schedule(static)
  for (int k = 1; k <= mx; ++k)
    for (int kp = 1; kp <= my; ++kp)
      for (int q = 1; q <= mx; ++q)
        for (int qp = 1; qp <= my; ++qp)
          out.w(k, kp, q, qp) = plain_dot(densx.at(k, q), out.pot_on_first.at(kp, qp)) * dx;
  return out;
}

PairTripleBuild build_pair_triple(const Grid& g, const TripleKernel& kern, double t,
                                  const OrbitalSet& a1, const OrbitalSet& a2,
                                  bool doubled_first) {
  const OrbitalSet& dd = doubled_first ? a1 : a2;
  const OrbitalSet& sg = doubled_first ? a2 : a1;
  const int m1 = a1.n_orbitals(), m2 = a2.n_orbitals();
  const int md = dd.n_orbitals(), ms = sg.n_orbitals();
  PairTripleBuild out{Table<6>({m1, m2, md, m1, m2, md}), FnTable<4>({md, ms, md, ms}, g.n),
                      FnTable<4>({md, md, md, md}, g.n)};
  FnTable<2> densd({md, md}, g.n), denss({ms, ms}, g.n);
  for (int k = 1; k <= md; ++k)
    for (int q = 1; q <= md; ++q) {
      const GridFn f = density_product(dd.orbital(k), dd.orbital(q));
      std::copy(f.begin(), f.end(), densd.at(k, q).begin());
    }
  for (int k = 1; k <= ms; ++k)
    for (int q = 1; q <= ms; ++q) {
      const GridFn f = density_product(sg.orbital(k), sg.orbital(q));
      std::copy(f.begin(), f.end(), denss.at(k, q).begin());
    }
  for (int s = 1; s <= md; ++s)
    for (int ks = 1; ks <= ms; ++ks)
      for (int l = 1; l <= md; ++l)
        for (int qs = 1; qs <= ms; ++qs) {
          const GridFn pot = kern.image(t, densd.at(s, l), denss.at(ks, qs));
          std::copy(pot.begin(), pot.end(), out.pot_on_doubled.at(s, ks, l, qs).begin());
        }
  for (int k = 1; k <= md; ++k)
    for (int s = 1; s <= md; ++s)
      for (int q = 1; q <= md; ++q)
        for (int l = 1; l <= md; ++l) {
          const GridFn pot = kern.image(t, densd.at(k, q), densd.at(s, l));
          std::copy(pot.begin(), pot.end(), out.pot_on_single.at(k, s, q, l).begin());
        }
  const double dx = g.dx();
#pragma omp parallel for collapse(2) schedule(static)
  for (int k = 1; k <= m1; ++k)
    for (int kp = 1; kp <= m2; ++kp)
      for (int s = 1; s <= md; ++s)
        for (int q = 1; q <= m1; ++q)
          for (int qp = 1; qp <= m2; ++qp)
            for (int l = 1; l <= md; ++l) {
              // The a1 pair (k,q) carries the free coordinate; the matching
              // effective potential lives on a1's side of the family.
              const auto pot = doubled_first ? out.pot_on_doubled.at(s, kp, l, qp)
                                             : out.pot_on_single.at(kp, s, qp, l);
              const auto f = doubled_first ? densd.at(k, q) : denss.at(k, q);
              out.u(k, kp, s, q, qp, l) = plain_dot(f, pot) * dx;
            }
  return out;
}

TripleBuild build_triple(const Grid& g, const TripleKernel& kern, double t,
                         const OrbitalSet& a, const OrbitalSet& b, const OrbitalSet& c) {
  const int ma = a.n_orbitals(), mb = b.n_orbitals(), mc = c.n_orbitals();
  TripleBuild out{Table<6>({ma, mb, mc, ma, mb, mc}),
                  {FnTable<4>({mb, mc, mb, mc}, g.n), FnTable<4>({ma, mc, ma, mc}, g.n),
                   FnTable<4>({ma, mb, ma, mb}, g.n)}};
  FnTable<2> densa({ma, ma}, g.n), densb({mb, mb}, g.n), densc({mc, mc}, g.n);
  auto fill = [&](const OrbitalSet& orbs, FnTable<2>& dens) {
    for (int k = 1; k <= orbs.n_orbitals(); ++k)
      for (int q = 1; q <= orbs.n_orbitals(); ++q) {
        const GridFn f = density_product(orbs.orbital(k), orbs.orbital(q));
        std::copy(f.begin(), f.end(), dens.at(k, q).begin());
      }
  };
  fill(a, densa);
  fill(b, densb);
  fill(c, densc);
  for (int kp = 1; kp <= mb; ++kp)
    for (int kpp = 1; kpp <= mc; ++kpp)
      for (int qp = 1; qp <= mb; ++qp)
        for (int qpp = 1; qpp <= mc; ++qpp) {
          const GridFn pot = kern.image(t, densb.at(kp, qp), densc.at(kpp, qpp));
          std::copy(pot.begin(), pot.end(), out.pot[0].at(kp, kpp, qp, qpp).begin());
        }
  for (int k = 1; k <= ma; ++k)
    for (int kpp = 1; kpp <= mc; ++kpp)
      for (int q = 1; q <= ma; ++q)
        for (int qpp = 1; qpp <= mc; ++qpp) {
          const GridFn pot = kern.image(t, densa.at(k, q), densc.at(kpp, qpp));
          std::copy(pot.begin(), pot.end(), out.pot[1].at(k, kpp, q, qpp).begin());
        }
  for (int k = 1; k <= ma; ++k)
    for (int kp = 1; kp <= mb; ++kp)
      for (int q = 1; q <= ma; ++q)
        for (int qp = 1; qp <= mb; ++qp) {
          const GridFn pot = kern.image(t, densa.at(k, q), densb.at(kp, qp));
          std::copy(pot.begin(), pot.end(), out.pot[2].at(k, kp, q, qp).begin());
        }
  const double dx = g.dx();
#pragma omp parallel for collapse(2) schedule(static)
  for (int k = 1; k <= ma; ++k)
    for (int kp = 1; kp <= mb; ++kp)
      for (int kpp = 1; kpp <= mc; ++kpp)
        for (int q = 1; q <= ma; ++q)
          for (int qp = 1; qp <= mb; ++qp)
            for (int qpp = 1; qpp <= mc; ++qpp)
              out.u(k, kp, kpp, q, qp, qpp) =
                  plain_dot(densa.at(k, q), out.pot[0].at(kp, kpp, qp, qpp)) * dx;
  return out;
}

}  // namespace mctdh
