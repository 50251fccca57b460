#include "mctdh3mix/fock.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace mctdh {

BinomialTable::BinomialTable(int max_n) : max_n_(max_n) {
  require(max_n >= 0, "BinomialTable: max_n must be >= 0");
  const int w = max_n_ + 1;
  c_.assign(static_cast<size_t>(w) * w, 0);
  for (int n = 0; n <= max_n_; ++n) {
    c_[static_cast<size_t>(n) * w] = 1;
    for (int k = 1; k <= n; ++k) {
      const int64_t a = c_[static_cast<size_t>(n - 1) * w + (k - 1)];
      const int64_t b = (k <= n - 1) ? c_[static_cast<size_t>(n - 1) * w + k] : 0;
      int64_t sum = -1;
      if (a >= 0 && b >= 0 && a <= std::numeric_limits<int64_t>::max() - b) sum = a + b;
      c_[static_cast<size_t>(n) * w + k] = sum;
    }
  }
}

int64_t BinomialTable::operator()(int n, int k) const {
  if (k < 0 || k > n) return 0;
  require(n >= 0 && n <= max_n_, "BinomialTable: n out of range");
  const int64_t v = c_[static_cast<size_t>(n) * (max_n_ + 1) + k];
  if (v < 0) throw capacity_error("binomial coefficient overflows 64 bits");
  return v;
}

namespace {

void validate_spec(const SpeciesSpec& spec) {
  require(spec.n_particles >= 1, "species: need at least one particle");
  require(spec.n_orbitals >= 1, "species: need at least one orbital");
  if (spec.stat == Statistics::Fermion)
    require(spec.n_particles <= spec.n_orbitals, "fermions: need N <= M");
}

}  // namespace

int64_t FockSpace::count_configs(const SpeciesSpec& spec) {
  validate_spec(spec);
  const int n = spec.n_particles, m = spec.n_orbitals;
  BinomialTable binom(n + m);
  return spec.stat == Statistics::Boson ? binom(n + m - 1, n) : binom(m, n);
}

FockSpace::FockSpace(SpeciesSpec spec)
    : spec_(spec), binom_(spec.n_particles + spec.n_orbitals), size_(0) {
  validate_spec(spec_);
  size_ = spec_.stat == Statistics::Boson
              ? binom_(spec_.n_particles + spec_.n_orbitals - 1, spec_.n_particles)
              : binom_(spec_.n_orbitals, spec_.n_particles);
}

std::vector<int> FockSpace::holes(const Occupation& occ) {
  std::vector<int> h;
  for (int j = 0; j < static_cast<int>(occ.size()); ++j)
    if (occ[j] == 0) h.push_back(j + 1);
  return h;
}

int64_t FockSpace::rank(const Occupation& occ) const {
  const int n = spec_.n_particles, m = spec_.n_orbitals;
  require(static_cast<int>(occ.size()) == m, "rank: occupation length != M");
  int total = 0;
  for (int v : occ) {
    require(v >= 0, "rank: negative occupation");
    if (spec_.stat == Statistics::Fermion) require(v <= 1, "rank: fermionic occupation > 1");
    total += v;
  }
  require(total == n, "rank: occupation does not sum to N");

  if (spec_.stat == Statistics::Fermion) return rank_holes(holes(occ));

  // J = 1 + sum_{k=1}^{M-1} C(N + M - 1 - k - S_k, M - k), S_k cumulative.
  int64_t address = 1;
  int running = 0;
  for (int k = 1; k <= m - 1; ++k) {
    running += occ[k - 1];
    address += binom_(n + m - 1 - k - running, m - k);
  }
  return address;
}

int64_t FockSpace::rank_holes(const std::vector<int>& h) const {
  const int n = spec_.n_particles, m = spec_.n_orbitals;
  require(spec_.stat == Statistics::Fermion, "rank_holes: fermionic species only");
  const int nholes = m - n;
  require(static_cast<int>(h.size()) == nholes, "rank_holes: wrong hole count");
  // J = 1 + sum_{j} C(M - i_j, M - N + 1 - j), holes ascending.
  int64_t address = 1;
  for (int j = 1; j <= nholes; ++j) {
    const int ij = h[j - 1];
    require(ij >= 1 && ij <= m, "rank_holes: hole label out of range");
    if (j > 1) require(ij > h[j - 2], "rank_holes: holes must ascend");
    address += binom_(m - ij, nholes + 1 - j);
  }
  return address;
}

Occupation FockSpace::unrank(int64_t address) const {
  require(address >= 1 && address <= size_, "unrank: address out of range");
  const int n = spec_.n_particles, m = spec_.n_orbitals;
  int64_t rem = address - 1;

  // Both statistics reduce to a standard combinadic rem = sum_m C(b_m, m)
  // with b strictly increasing in m; decode greedily from the top term.
  if (spec_.stat == Statistics::Fermion) {
    const int nholes = m - n;
    std::vector<int> b(nholes + 1, 0);
    int start = m - 1;
    for (int mm = nholes; mm >= 1; --mm) {
      int v = start;
      while (binom_(v, mm) > rem) --v;
      b[mm] = v;
      rem -= binom_(v, mm);
      start = v - 1;
    }
    Occupation occ(m, 1);
    for (int j = 1; j <= nholes; ++j) occ[m - b[nholes + 1 - j] - 1] = 0;
    return occ;
  }

  // Bosons: b_{M-k} = N + (M-k) - 1 - S_k.
  std::vector<int> b(m, 0);
  int start = n + m - 2;
  for (int mm = m - 1; mm >= 1; --mm) {
    int v = start;
    while (binom_(v, mm) > rem) --v;
    b[mm] = v;
    rem -= binom_(v, mm);
    start = v - 1;
  }
  Occupation occ(m, 0);
  int prev_s = 0;
  for (int k = 1; k <= m - 1; ++k) {
    const int s_k = n + (m - k) - 1 - b[m - k];
    occ[k - 1] = s_k - prev_s;
    prev_s = s_k;
  }
  occ[m - 1] = n - prev_s;
  return occ;
}

std::vector<Occupation> FockSpace::enumerate() const {
  std::vector<Occupation> all;
  all.reserve(static_cast<size_t>(size_));
  for (int64_t j = 1; j <= size_; ++j) all.push_back(unrank(j));
  return all;
}

int transfer_phase(const Occupation& occ, int k, int q) {
  const int m = static_cast<int>(occ.size());
  require(k >= 1 && k <= m && q >= 1 && q <= m, "transfer_phase: orbital out of range");
  const int lo = std::min(k, q), hi = std::max(k, q);
  int d = 0;
  for (int j = lo + 1; j <= hi - 1; ++j) d += occ[j - 1];
  return (d % 2 == 0) ? 1 : -1;
}

MixtureLayout::MixtureLayout(std::vector<SpeciesSpec> species) : species_(std::move(species)) {
  require(!species_.empty() && species_.size() <= 3, "mixture: need 1 to 3 species");
  spaces_.reserve(species_.size());
  for (size_t s = 0; s < species_.size(); ++s) {
    spaces_.emplace_back(species_[s]);
    dims_[s] = spaces_[s].size();
  }
  strides_ = {1, dims_[0], dims_[0] * dims_[1]};
  for (int s = 0; s < 3; ++s) {
    if (total_ > std::numeric_limits<int64_t>::max() / dims_[s])
      throw capacity_error("mixture configuration space overflows 64 bits");
    total_ *= dims_[s];
  }
}

}  // namespace mctdh
