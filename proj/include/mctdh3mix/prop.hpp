#pragma once

#include <functional>

#include "mctdh3mix/eom.hpp"

namespace mctdh {

struct StepControl {
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
  double dt_init = 1e-3;
  double dt_min = 1e-14;
  double safety = 0.9;
  double shrink_limit = 0.2;  // smallest allowed step-size factor
  double grow_limit = 5.0;    // largest allowed step-size factor
};

enum class PropagatorKind { AdaptiveRk, Lanczos };

struct PropagationOptions {
  TimeMode mode = TimeMode::RealTime;
  PropagatorKind kind = PropagatorKind::AdaptiveRk;
  bool fixed_orbitals = false;
  StepControl control;
  int krylov_dim = 12;
  // Real time: corrective renormalization / re-orthonormalization trigger.
  double drift_threshold = 1e-8;
  // Imaginary time: stop once both hold between accepted steps.
  double relax_energy_tol = 1e-10;
  double relax_residual_tol = 1e-6;
  // If positive, start from this carried step size (checkpoint restore).
  double dt_start = 0.0;
  int64_t max_steps = 50'000'000;
};

struct StepEvents {
  int64_t n_accepted = 0;
  int64_t n_rejected = 0;
  int64_t n_rhs = 0;
  int64_t n_renorm = 0;
  int64_t n_mgs = 0;
};

struct PropagationResult {
  SystemState state;
  double t = 0.0;
  double dt_carry = 0.0;  // unclipped proposal, resumes bitwise on restore
  StepEvents events;
  bool converged = false;  // imaginary time only
  double energy = 0.0;     // last measured energy (imaginary time)
  double residual = 0.0;   // last eigen-residual (imaginary time)
};

using Observer = std::function<void(double t, const SystemState& y, const StepEvents& ev)>;

// Propagate from t0 to t_end, invoking the observer at t0, every out_stride,
// and at t_end. out_stride <= 0 reports only the endpoints. Imaginary time
// renormalizes and re-orthonormalizes after every accepted step and returns
// early once converged.
PropagationResult propagate(const System& sys, SystemState y, double t0, double t_end,
                            double out_stride, const PropagationOptions& opt,
                            const Observer& obs = {});

// Krylov approximation of exp(z H) c for Hermitian H given through hop.
CoeffTensor krylov_exp(const std::function<CoeffTensor(const CoeffTensor&)>& hop,
                       const CoeffTensor& c, cplx z, int krylov_dim);

// Flat complex view of (C, orbitals) used by the integrator.
std::vector<cplx> pack_state(const SystemState& y);
SystemState unpack_state(std::span<const cplx> v, const SystemState& shape);

}  // namespace mctdh
