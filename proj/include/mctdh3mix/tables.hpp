#pragma once

#include <array>
#include <optional>

#include "mctdh3mix/common.hpp"

namespace mctdh {

// Dense complex table with R axes and 1-based index access, so table reads
// match the index conventions used throughout the equations of motion.
template <int R>
class Table {
 public:
  Table() = default;
  explicit Table(std::array<int, R> dims) : dims_(dims) {
    int64_t n = 1;
    for (int d : dims_) {
      require(d >= 1, "Table: dimensions must be positive");
      n *= d;
    }
    v_.assign(static_cast<size_t>(n), cplx{});
  }

  template <class... I>
  cplx& operator()(I... idx) {
    return v_[flat(idx...)];
  }
  template <class... I>
  const cplx& operator()(I... idx) const {
    return v_[flat(idx...)];
  }

  int dim(int axis) const { return dims_[axis]; }
  std::span<const cplx> data() const { return v_; }
  std::span<cplx> data() { return v_; }
  bool empty() const { return v_.empty(); }

 private:
  template <class... I>
  int64_t flat(I... idx) const {
    static_assert(sizeof...(I) == R, "Table: wrong index arity");
    const std::array<int, R> ii{static_cast<int>(idx)...};
    int64_t f = 0;
    for (int a = 0; a < R; ++a) f = f * dims_[a] + (ii[a] - 1);
    return f;
  }

  std::array<int, R> dims_{};
  std::vector<cplx> v_;
};

// Species pairs in fixed order AB, AC, BC.
constexpr std::array<std::array<int, 2>, 3> kSpeciesPairs{{{0, 1}, {0, 2}, {1, 2}}};

inline int pair_index(int x, int y) {
  for (int p = 0; p < 3; ++p)
    if (kSpeciesPairs[p][0] == x && kSpeciesPairs[p][1] == y) return p;
  throw std::invalid_argument("pair_index: not an ordered species pair");
}

// Two-of-one-species + one-of-another interaction families, fixed order.
// a1 < a2 are the participating axes; `doubled` names the repeated species.
struct PairTripleFamily {
  int a1, a2, doubled;
};
constexpr std::array<PairTripleFamily, 6> kPairTriples{{
    {0, 1, 0},  // AAB
    {0, 1, 1},  // ABB
    {0, 2, 0},  // AAC
    {0, 2, 2},  // ACC
    {1, 2, 1},  // BBC
    {1, 2, 2},  // BCC
}};

// Orbital-basis matrix elements feeding both the matrix-free Hamiltonian
// application and the dense oracle. Index conventions:
//   h[X](k,q)                    one-body, creators left
//   w_intra[X](k,s,q,l)          pairs (k,q) at x and (s,l) at x'
//   u_intra[X](k,s,p,q,l,r)      pairs (k,q), (s,l), (p,r) at x, x', x''
//   w_inter[p](k,k',q,q')        (k,q) on the pair's first species, primes on the second
//   u_pair[f](k,k',s,q,q',l)     (k,q) on a1, (k',q') on a2, (s,l) on the doubled species
//   u_triple(k,k',k'',q,q',q'')  one (k,q) pair per species
// Missing optionals mean the interaction is absent and contributes zero.
struct IntegralTables {
  int n_species = 0;
  std::array<Table<2>, 3> h;
  std::array<std::optional<Table<4>>, 3> w_intra;
  std::array<std::optional<Table<6>>, 3> u_intra;
  std::array<std::optional<Table<4>>, 3> w_inter;
  std::array<std::optional<Table<6>>, 6> u_pair;
  std::optional<Table<6>> u_triple;
};

}  // namespace mctdh
