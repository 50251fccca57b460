#pragma once

#include "mctdh3mix/densops.hpp"

namespace mctdh {

// Reduced density matrices contracted against the current coefficients.
// Storage orders mirror the integral tables, so energy contractions are
// plain elementwise dot products:
//   rho1[x](k,q)              = <rho_kq>
//   rho2[x](k,s,q,l)          = <rho_kslq>
//   rho3[x](k,s,p,q,l,r)      = <rho_ksprlq>
//   rho_inter[p](k,k',q,q')   = <rho^x_kq rho^y_k'q'>
//   rho_pair[f](k,k',s,q,q',l)= <rho^dd_kslq rho^sg_k'q'> (dd/sg per family)
//   rho_triple(k,k',k'',...)  = <rho^A rho^B rho^C>
struct RdmSet {
  std::array<Table<2>, 3> rho1;
  std::array<std::optional<Table<4>>, 3> rho2;
  std::array<std::optional<Table<6>>, 3> rho3;
  std::array<std::optional<Table<4>>, 3> rho_inter;
  std::array<std::optional<Table<6>>, 6> rho_pair;
  std::optional<Table<6>> rho_triple;
};

struct RdmRequest {
  std::array<bool, 3> intra2{};
  std::array<bool, 3> intra3{};
  std::array<bool, 3> inter{};
  std::array<bool, 6> pair{};
  bool triple = false;

  // Request exactly the blocks whose interaction tables are present.
  static RdmRequest for_tables(const IntegralTables& tables);
};

RdmSet build_rdms(const MixtureSpace& ms, const CoeffTensor& c, const RdmRequest& req);

// Eigenvalues of a one-body RDM, descending.
std::vector<double> natural_occupations(const Table<2>& rho1);

// Total energy as table/RDM contractions (the expectation-value functional).
cplx energy_functional(const IntegralTables& tables, const RdmSet& rdms);

}  // namespace mctdh
