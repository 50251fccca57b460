#pragma once

#include "mctdh3mix/grid1d.hpp"
#include "mctdh3mix/rdm.hpp"

namespace mctdh {

struct SpeciesPhys {
  SpeciesSpec spec;
  double mass = 1.0;
  TrapSpec trap;
};

// Integral tables plus the effective one-body potential banks they were
// built from; the banks feed the orbital mean fields.
struct TablesBundle {
  IntegralTables tables;
  std::array<std::optional<IntraPairBuild>, 3> intra_pair;
  std::array<std::optional<IntraTripleBuild>, 3> intra_triple;
  std::array<std::optional<InterPairBuild>, 3> inter_pair;
  std::array<std::optional<PairTripleBuild>, 6> pair_triple;
  std::optional<TripleBuild> triple;
};

// Static problem definition: grid, species, declared interactions.
class System {
 public:
  System(Grid grid, std::vector<SpeciesPhys> phys);

  void set_intra_pair(int x, const InteractionSpec& s);
  void set_intra_triple(int x, const InteractionSpec& s);
  void set_inter_pair(int pair, const InteractionSpec& s);
  void set_pair_triple(int family, const InteractionSpec& s);
  void set_triple(const InteractionSpec& s);

  const Grid& grid() const { return grid_; }
  const MixtureSpace& space() const { return *space_; }
  int n_species() const { return static_cast<int>(phys_.size()); }
  const SpeciesPhys& phys(int x) const { return phys_.at(x); }

  OneBodyOp one_body(int x, double t) const;
  TablesBundle build_bundle(const std::array<OrbitalSet, 3>& orbs, double t) const;
  IntegralTables build_tables(const std::array<OrbitalSet, 3>& orbs, double t) const;

  const std::optional<PairKernel>& intra_pair(int x) const { return intra_pair_[x]; }
  const std::optional<TripleKernel>& intra_triple(int x) const { return intra_triple_[x]; }
  const std::optional<PairKernel>& inter_pair(int p) const { return inter_pair_[p]; }
  const std::optional<TripleKernel>& pair_triple(int f) const { return pair_triple_[f]; }
  const std::optional<TripleKernel>& triple() const { return triple_; }

 private:
  Grid grid_;
  std::vector<SpeciesPhys> phys_;
  std::unique_ptr<MixtureSpace> space_;
  std::array<std::optional<PairKernel>, 3> intra_pair_;
  std::array<std::optional<TripleKernel>, 3> intra_triple_;
  std::array<std::optional<PairKernel>, 3> inter_pair_;
  std::array<std::optional<TripleKernel>, 6> pair_triple_;
  std::optional<TripleKernel> triple_;
};

struct SystemState {
  CoeffTensor c;
  std::array<OrbitalSet, 3> orbitals;
};

// Ground orbitals of each one-body operator; all particles in orbital 1.
SystemState initial_state(const System& sys, double t0 = 0.0);

enum class TimeMode { RealTime, ImaginaryTime };

// Interaction families contributing to each species' mean field.
struct MeanFieldCensus {
  std::array<int, 3> two_body{};
  std::array<int, 3> three_body{};
};

// Eigen-floor regularized inverse of a one-body RDM: eigenvalues below
// eps = 1e-8 * max(trace/M, 1) are raised to eps before inversion.
Table<2> regularized_inverse(const Table<2>& rho1);

// Mean-field potentials G_kq(x) of one species: every declared interaction
// contracted against its matching RDM block.
FnTable<2> assemble_mean_field(const System& sys, const TablesBundle& b, const RdmSet& rdms,
                               int x, MeanFieldCensus* census = nullptr);

// Coupled derivative of (C, orbitals) at time t. RealTime scales by -i,
// ImaginaryTime by -1. fixed_orbitals freezes the orbitals (pure CI motion).
SystemState eom_rhs(const System& sys, const SystemState& y, double t, TimeMode mode,
                    bool fixed_orbitals = false, MeanFieldCensus* census = nullptr);

// mu_kj = <phi_j| sum_q (rho_kq h + G_kq) |phi_q>; Hermitian at stationary points.
Table<2> lagrange_matrix(const System& sys, const SystemState& y, double t, int x);
double hermiticity_defect(const Table<2>& mu);

struct Observables {
  cplx energy;
  double norm = 0.0;
  std::array<std::vector<double>, 3> nat_occ;
  std::array<double, 3> mean_x{};  // per particle
};

Observables measure(const System& sys, const SystemState& y, double t);

// <phi_k| x |phi_q> over the grid.
Table<2> position_table(const Grid& g, const OrbitalSet& orbs);

}  // namespace mctdh
