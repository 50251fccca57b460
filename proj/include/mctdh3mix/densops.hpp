#pragma once

#include <memory>
#include <mutex>

#include "mctdh3mix/fock.hpp"
#include "mctdh3mix/tables.hpp"

namespace mctdh {

// Coefficient tensor over the mixture configuration space, shape
// (dim A, dim B, dim C) with species A fastest-varying. Absent species have
// an axis of length 1.
class CoeffTensor {
 public:
  CoeffTensor() = default;
  explicit CoeffTensor(std::array<int64_t, 3> shape)
      : shape_(shape),
        v_(static_cast<size_t>(shape[0] * shape[1] * shape[2]), cplx{}) {}

  const std::array<int64_t, 3>& shape() const { return shape_; }
  int64_t size() const { return static_cast<int64_t>(v_.size()); }
  cplx* data() { return v_.data(); }
  const cplx* data() const { return v_.data(); }
  cplx& operator[](int64_t i) { return v_[static_cast<size_t>(i)]; }
  const cplx& operator[](int64_t i) const { return v_[static_cast<size_t>(i)]; }
  void set_zero() { std::fill(v_.begin(), v_.end(), cplx{}); }

 private:
  std::array<int64_t, 3> shape_{1, 1, 1};
  std::vector<cplx> v_;
};

// Destination-indexed one-particle transfer map for a fixed (k,q):
// out[dest] = factor[dest] * in[src[dest]] along one species axis.
struct TransferTable {
  std::vector<int64_t> src;
  std::vector<double> factor;  // exactly 0 where no source configuration exists
};

// Per-species addressing plus lazily built transfer tables for every (k,q).
class SpeciesKernel {
 public:
  explicit SpeciesKernel(SpeciesSpec spec);
  const FockSpace& space() const { return space_; }
  const TransferTable& table(int k, int q) const;

 private:
  FockSpace space_;
  mutable std::mutex mu_;
  mutable std::vector<std::unique_ptr<TransferTable>> cache_;
};

class MixtureSpace {
 public:
  explicit MixtureSpace(std::vector<SpeciesSpec> species);

  const MixtureLayout& layout() const { return layout_; }
  int n_species() const { return layout_.n_species(); }
  const SpeciesKernel& kernel(int axis) const { return *kernels_.at(axis); }
  CoeffTensor make_tensor() const {
    return CoeffTensor({layout_.dim(0), layout_.dim(1), layout_.dim(2)});
  }

 private:
  MixtureLayout layout_;
  std::vector<std::unique_ptr<SpeciesKernel>> kernels_;
};

// All orbital indices below are 1-based; `axis` is 0 (A), 1 (B) or 2 (C).

// out += w * rho^axis_{kq} c
void add_scaled_rho1(const MixtureSpace& ms, int axis, int k, int q, cplx w,
                     const CoeffTensor& c, CoeffTensor& out);
CoeffTensor apply_rho1(const MixtureSpace& ms, int axis, int k, int q,
                       const CoeffTensor& c);

// out += scale * sum_{kq} o(k,q) rho^axis_{kq} c, one deterministic sweep
void add_one_body(const MixtureSpace& ms, int axis, const Table<2>& o, cplx scale,
                  const CoeffTensor& c, CoeffTensor& out);
CoeffTensor apply_one_body(const MixtureSpace& ms, int axis, const Table<2>& o,
                           const CoeffTensor& c);

// rho_kslq = a_k† a_s† a_l a_q via the one-body recursion
CoeffTensor apply_rho2_intra(const MixtureSpace& ms, int axis, int k, int s, int l, int q,
                             const CoeffTensor& c);
// rho_ksprlq = a_k† a_s† a_p† a_r a_l a_q
CoeffTensor apply_rho3_intra(const MixtureSpace& ms, int axis, int k, int s, int p, int r,
                             int l, int q, const CoeffTensor& c);

// out += scale * sum_{ksql} t(k,s,q,l) rho_kslq c  (no symmetry factor)
void add_contracted_rho2(const MixtureSpace& ms, int axis, const Table<4>& t, cplx scale,
                         const CoeffTensor& c, CoeffTensor& out);

// (1/2) sum W_ksql rho_kslq and (1/6) sum U_kspqlr rho_ksprlq
void add_two_body(const MixtureSpace& ms, int axis, const Table<4>& w, cplx scale,
                  const CoeffTensor& c, CoeffTensor& out);
void add_three_body(const MixtureSpace& ms, int axis, const Table<6>& u, cplx scale,
                    const CoeffTensor& c, CoeffTensor& out);

// sum w(k,k',q,q') rho^x_kq rho^y_k'q' over ordered pair `pair`
void add_inter_two_body(const MixtureSpace& ms, int pair, const Table<4>& w, cplx scale,
                        const CoeffTensor& c, CoeffTensor& out);
// (1/2) sum u(k,k',s,q,q',l) rho^dd_kslq rho^sg_k'q' for family `family`
void add_inter_pair_triple(const MixtureSpace& ms, int family, const Table<6>& u,
                           cplx scale, const CoeffTensor& c, CoeffTensor& out);
// sum u(k,k',k'',q,q',q'') rho^A rho^B rho^C
void add_inter_triple(const MixtureSpace& ms, const Table<6>& u, cplx scale,
                      const CoeffTensor& c, CoeffTensor& out);

// Full mixture Hamiltonian application from assembled integral tables.
CoeffTensor apply_hamiltonian(const MixtureSpace& ms, const IntegralTables& tables,
                              const CoeffTensor& c);

// <a|b> with a deterministic reduction.
cplx expectation(const CoeffTensor& a, const CoeffTensor& b);
double norm(const CoeffTensor& a);

}  // namespace mctdh
