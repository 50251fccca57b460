#pragma once

#include <Eigen/Dense>
#include <utility>

#include "mctdh3mix/fock.hpp"
#include "mctdh3mix/tables.hpp"

// Brute-force dense reference implementation. Everything here works by
// explicit second-quantized operator strings on occupation vectors, with
// fermionic signs from transposition counts in an ordered occupied-orbital
// list. It deliberately shares no application machinery with the matrix-free
// kernels it is used to check.
namespace mctdh::oracle {

// Dense matrix of a_k'† a_q (creators left), over the species' configuration
// space, column = source address - 1.
Eigen::MatrixXcd dense_rho1(const SpeciesSpec& spec, int k, int q);

// a_k† a_s† a_l a_q
Eigen::MatrixXcd dense_rho2(const SpeciesSpec& spec, int k, int s, int l, int q);

// a_k† a_s† a_p† a_r a_l a_q
Eigen::MatrixXcd dense_rho3(const SpeciesSpec& spec, int k, int s, int p, int r, int l,
                            int q);

// Full mixture Hamiltonian over the flattened configuration space (species A
// fastest-varying). Dimension is capped; beyond it a capacity_error is thrown.
Eigen::MatrixXcd build_dense(const MixtureLayout& layout, const IntegralTables& tables);

constexpr int64_t kDenseCap = 20000;

// c(t) = exp(-i H t) c0 via full eigendecomposition.
Eigen::VectorXcd exact_propagate(const Eigen::MatrixXcd& h, const Eigen::VectorXcd& c0,
                                 double t);

// Lowest eigenpair.
std::pair<double, Eigen::VectorXcd> exact_ground(const Eigen::MatrixXcd& h);

}  // namespace mctdh::oracle
