#include "mctdh3mix/common.hpp"

#include <algorithm>

namespace mctdh {

namespace {

template <class T, class F>
T blocked_reduce(int64_t n, F&& block_sum) {
  using detail::kReduceBlock;
  if (n == 0) return T{};
  const int64_t nblocks = (n + kReduceBlock - 1) / kReduceBlock;
  std::vector<T> partial(static_cast<size_t>(nblocks));
#pragma omp parallel for schedule(static)
  for (int64_t blk = 0; blk < nblocks; ++blk) {
    const int64_t lo = blk * kReduceBlock;
    const int64_t hi = std::min(n, lo + kReduceBlock);
    partial[blk] = block_sum(lo, hi);
  }
  return detail::combine_pairwise(partial);
}

}  // namespace

cplx pairwise_dot(const cplx* a, const cplx* b, int64_t n) {
  return blocked_reduce<cplx>(n, [a, b](int64_t lo, int64_t hi) {
    cplx s{};
    for (int64_t i = lo; i < hi; ++i) s += std::conj(a[i]) * b[i];
    return s;
  });
}

double pairwise_norm2(const cplx* a, int64_t n) {
  return blocked_reduce<double>(n, [a](int64_t lo, int64_t hi) {
    double s = 0;
    for (int64_t i = lo; i < hi; ++i) s += std::norm(a[i]);
    return s;
  });
}

}  // namespace mctdh
