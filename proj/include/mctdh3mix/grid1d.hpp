#pragma once

#include <Eigen/Dense>

#include "mctdh3mix/tables.hpp"

namespace mctdh {

enum class Boundary { HardWall, Periodic };

// Uniform 1D grid shared by all species; rectangle-rule quadrature weight dx.
struct Grid {
  int n = 0;
  double x_min = 0.0;
  double x_max = 0.0;
  Boundary boundary = Boundary::HardWall;

  double dx() const {
    return (x_max - x_min) / (boundary == Boundary::HardWall ? n - 1 : n);
  }
  double x(int g) const { return x_min + g * dx(); }
  double length() const { return x_max - x_min; }
  void validate() const;
};

using GridFn = std::vector<cplx>;

// Working orbitals of one species, stored contiguously per orbital.
class OrbitalSet {
 public:
  OrbitalSet() = default;
  OrbitalSet(int n_orbitals, int n_points)
      : n_orb_(n_orbitals), n_(n_points),
        v_(static_cast<size_t>(n_orbitals) * n_points, cplx{}) {}

  int n_orbitals() const { return n_orb_; }
  int n_points() const { return n_; }
  std::span<cplx> orbital(int j) {  // 1-based
    return {v_.data() + static_cast<size_t>(j - 1) * n_, static_cast<size_t>(n_)};
  }
  std::span<const cplx> orbital(int j) const {
    return {v_.data() + static_cast<size_t>(j - 1) * n_, static_cast<size_t>(n_)};
  }
  cplx* data() { return v_.data(); }
  const cplx* data() const { return v_.data(); }
  int64_t size() const { return static_cast<int64_t>(v_.size()); }

 private:
  int n_orb_ = 0;
  int n_ = 0;
  std::vector<cplx> v_;
};

cplx grid_dot(const Grid& g, std::span<const cplx> a, std::span<const cplx> b);
void mgs_orthonormalize(const Grid& g, OrbitalSet& orbs);
double gram_defect(const Grid& g, const OrbitalSet& orbs);  // max |<k|j> - delta|

struct TrapSpec {
  enum class Kind { None, Harmonic };
  Kind kind = Kind::None;
  double omega = 1.0;
  double center = 0.0;
  double drive_amp = 0.0;  // V += drive_amp * sin(drive_omega t) * x
  double drive_omega = 0.0;
};

std::vector<double> trap_potential(const Grid& g, const TrapSpec& trap, double mass,
                                   double t);

// h = -(1/2m) d^2/dx^2 (second-order central differences) + diag(v).
class OneBodyOp {
 public:
  OneBodyOp(const Grid& g, double mass, std::vector<double> v);
  void apply(std::span<const cplx> in, std::span<cplx> out) const;
  Eigen::MatrixXd dense() const;
  const Grid& grid() const { return grid_; }

 private:
  Grid grid_;
  double kin_;  // 1/(2 m dx^2)
  std::vector<double> v_;
};

// Lowest n_orb eigenfunctions of h, quadrature-normalized, deterministic sign.
OrbitalSet eigenstate_orbitals(const OneBodyOp& h, int n_orb);

enum class KernelKind { Contact, Gaussian, ContactTriple, GaussianTriple };
enum class RampKind { Constant, Linear, Sinusoidal };

struct InteractionSpec {
  KernelKind kind = KernelKind::Contact;
  double strength = 0.0;
  double sigma = 0.0;           // gaussian widths
  RampKind ramp = RampKind::Constant;
  double ramp_param = 0.0;      // Linear: ramp time; Sinusoidal: angular frequency
};

double ramp_factor(RampKind ramp, double param, double t);

// Two-body kernel with its time-independent convolution matrix prebuilt.
// Gaussian kernels on periodic grids use the minimum-image distance.
class PairKernel {
 public:
  PairKernel(const Grid& g, const InteractionSpec& spec);
  double strength(double t) const;
  // lambda(t) * \int W(x,x') f(x') dx'
  GridFn image(double t, std::span<const cplx> f) const;
  const InteractionSpec& spec() const { return spec_; }

 private:
  Grid grid_;
  InteractionSpec spec_;
  Eigen::MatrixXd conv_;  // unit-strength gaussian kernel; empty for contact
};

// Three-body kernel: contact-triple, or the exchange-symmetric hub sum
// (1/3)[g(x,x')g(x,x'') + g(x',x)g(x',x'') + g(x'',x)g(x'',x')].
class TripleKernel {
 public:
  TripleKernel(const Grid& g, const InteractionSpec& spec);
  double strength(double t) const;
  // lambda(t) * \int\int U(x,x',x'') f1(x') f2(x'') dx' dx''  (symmetric in f1,f2)
  GridFn image(double t, std::span<const cplx> f1, std::span<const cplx> f2) const;
  const InteractionSpec& spec() const { return spec_; }

 private:
  GridFn convolve(std::span<const cplx> f) const;  // unit-strength g * f * dx
  Grid grid_;
  InteractionSpec spec_;
  Eigen::MatrixXd conv_;
};

// Table of grid functions with 1-based orbital indices.
template <int R>
class FnTable {
 public:
  FnTable() = default;
  FnTable(std::array<int, R> dims, int npts) : dims_(dims), n_(npts) {
    int64_t cnt = 1;
    for (int d : dims_) cnt *= d;
    v_.assign(static_cast<size_t>(cnt) * n_, cplx{});
  }

  template <class... I>
  std::span<cplx> at(I... idx) {
    return {v_.data() + flat(idx...) * n_, static_cast<size_t>(n_)};
  }
  template <class... I>
  std::span<const cplx> at(I... idx) const {
    return {v_.data() + flat(idx...) * n_, static_cast<size_t>(n_)};
  }
  int dim(int a) const { return dims_[a]; }
  int npts() const { return n_; }
  bool empty() const { return v_.empty(); }

 private:
  template <class... I>
  int64_t flat(I... idx) const {
    static_assert(sizeof...(I) == R, "FnTable: wrong index arity");
    const std::array<int, R> ii{static_cast<int>(idx)...};
    int64_t f = 0;
    for (int a = 0; a < R; ++a) f = f * dims_[a] + (ii[a] - 1);
    return f;
  }

  std::array<int, R> dims_{};
  int n_ = 0;
  std::vector<cplx> v_;
};

Table<2> build_h_table(const Grid& g, const OneBodyOp& h, const OrbitalSet& orbs);

// Matrix elements plus the effective one-body potentials they share.
struct IntraPairBuild {
  Table<4> w;      // W_ksql, pairs (k,q) at x and (s,l) at x'
  FnTable<2> pot;  // Vhat_sl(x)
};
IntraPairBuild build_intra_pair(const Grid& g, const PairKernel& k, double t,
                                const OrbitalSet& orbs);

struct IntraTripleBuild {
  Table<6> u;      // U_kspqlr, pairs (k,q), (s,l), (p,r)
  FnTable<4> pot;  // Uhat_splr(x)
};
IntraTripleBuild build_intra_triple(const Grid& g, const TripleKernel& k, double t,
                                    const OrbitalSet& orbs);

struct InterPairBuild {
  Table<4> w;                // W(k,k',q,q'), (k,q) on the first species
  FnTable<2> pot_on_first;   // indexed by the second species' (k',q')
  FnTable<2> pot_on_second;  // indexed by the first species' (k,q)
};
InterPairBuild build_inter_pair(const Grid& g, const PairKernel& k, double t,
                                const OrbitalSet& first, const OrbitalSet& second);

struct PairTripleBuild {
  Table<6> u;                 // u(k,k',s,q,q',l), (s,l) on the doubled species
  FnTable<4> pot_on_doubled;  // (s, k_single, l, q_single)
  FnTable<4> pot_on_single;   // (k, s, q, l), all on the doubled species
};
PairTripleBuild build_pair_triple(const Grid& g, const TripleKernel& k, double t,
                                  const OrbitalSet& a1, const OrbitalSet& a2,
                                  bool doubled_first);

struct TripleBuild {
  Table<6> u;                    // u(k,k',k'',q,q',q'')
  std::array<FnTable<4>, 3> pot; // on A: (k',k'',q',q''); on B: (k,k'',q,q''); on C: (k,k',q,q')
};
TripleBuild build_triple(const Grid& g, const TripleKernel& k, double t,
                         const OrbitalSet& a, const OrbitalSet& b, const OrbitalSet& c);

}  // namespace mctdh
