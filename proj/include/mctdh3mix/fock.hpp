#pragma once

#include <array>
#include <vector>

#include "mctdh3mix/common.hpp"

namespace mctdh {

enum class Statistics { Boson, Fermion };

struct SpeciesSpec {
  Statistics stat = Statistics::Boson;
  int n_particles = 1;  // N
  int n_orbitals = 1;   // M; fermions require N <= M
};

// Pascal-triangle binomial coefficients in 64-bit. Entries that would
// overflow are marked and touching them raises capacity_error.
class BinomialTable {
 public:
  explicit BinomialTable(int max_n);
  int64_t operator()(int n, int k) const;
  int max_n() const { return max_n_; }

 private:
  int max_n_;
  std::vector<int64_t> c_;  // row-major (max_n+1) x (max_n+1), -1 = overflow
};

// occ[j] = number of particles in orbital j+1 (orbital labels are 1-based).
using Occupation = std::vector<int>;

// Configuration addressing for one species. Addresses are 1..size().
// Bosons: combinadic over cumulative occupations; fermions: combinadic over
// the ascending list of empty orbitals (holes).
class FockSpace {
 public:
  explicit FockSpace(SpeciesSpec spec);

  const SpeciesSpec& spec() const { return spec_; }
  int64_t size() const { return size_; }

  int64_t rank(const Occupation& occ) const;
  Occupation unrank(int64_t address) const;

  // Fermions: ascending 1-based labels of empty orbitals.
  static std::vector<int> holes(const Occupation& occ);
  int64_t rank_holes(const std::vector<int>& holes) const;

  std::vector<Occupation> enumerate() const;

  static int64_t count_configs(const SpeciesSpec& spec);

 private:
  SpeciesSpec spec_;
  BinomialTable binom_;
  int64_t size_;
};

// (-1)^d for moving one fermion between orbitals k and q, where d counts the
// particles strictly between them (identical in source and destination).
int transfer_phase(const Occupation& occ, int k, int q);

// Flat layout of a 1-3 species mixture. Coefficient tensors have shape
// (dim(0), dim(1), dim(2)) with axis 0 (species A) fastest-varying; absent
// species occupy an axis of length 1.
class MixtureLayout {
 public:
  explicit MixtureLayout(std::vector<SpeciesSpec> species);

  int n_species() const { return static_cast<int>(species_.size()); }
  const SpeciesSpec& spec(int axis) const { return species_.at(axis); }
  const FockSpace& space(int axis) const { return spaces_.at(axis); }
  int64_t dim(int axis) const { return dims_[axis]; }
  int64_t stride(int axis) const { return strides_[axis]; }
  int64_t total_dim() const { return total_; }

 private:
  std::vector<SpeciesSpec> species_;
  std::vector<FockSpace> spaces_;
  std::array<int64_t, 3> dims_{1, 1, 1};
  std::array<int64_t, 3> strides_{1, 1, 1};
  int64_t total_ = 1;
};

}  // namespace mctdh
