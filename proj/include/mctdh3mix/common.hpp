#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mctdh {

using cplx = std::complex<double>;
using std::int64_t;

// Thrown when a counting result or table size would overflow its integer type.
struct capacity_error : std::overflow_error {
  using std::overflow_error::overflow_error;
};

// Thrown when the adaptive integrator underflows its step size.
struct stiffness_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown when imaginary-time relaxation fails to converge within budget.
struct convergence_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

// Reductions below use a fixed-shape blocked pairwise scheme so results are
// bitwise independent of the number of threads: block partials are summed
// sequentially per block (blocks may run in parallel), then combined by a
// sequential pairwise tree whose shape depends only on the element count.
namespace detail {
constexpr int64_t kReduceBlock = 4096;

template <class T>
T combine_pairwise(std::vector<T>& partial) {
  int64_t m = static_cast<int64_t>(partial.size());
  if (m == 0) return T{};
  while (m > 1) {
    const int64_t half = m / 2;
    for (int64_t i = 0; i < half; ++i) partial[i] = partial[2 * i] + partial[2 * i + 1];
    if (m % 2 == 1) {
      partial[half] = partial[m - 1];
      m = half + 1;
    } else {
      m = half;
    }
  }
  return partial[0];
}
}  // namespace detail

// sum_i conj(a_i) * b_i, deterministic across thread counts.
cplx pairwise_dot(const cplx* a, const cplx* b, int64_t n);

inline cplx pairwise_dot(std::span<const cplx> a, std::span<const cplx> b) {
  require(a.size() == b.size(), "pairwise_dot: size mismatch");
  return pairwise_dot(a.data(), b.data(), static_cast<int64_t>(a.size()));
}

double pairwise_norm2(const cplx* a, int64_t n);  // sum |a_i|^2

inline double pairwise_norm2(std::span<const cplx> a) {
  return pairwise_norm2(a.data(), static_cast<int64_t>(a.size()));
}

}  // namespace mctdh
