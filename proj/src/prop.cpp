#include "mctdh3mix/prop.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

namespace mctdh {

namespace {

// Dormand-Prince 5(4) tableau; row 7 doubles as the 5th-order solution (FSAL).
constexpr double kA21 = 1.0 / 5.0;
constexpr double kA31 = 3.0 / 40.0, kA32 = 9.0 / 40.0;
constexpr double kA41 = 44.0 / 45.0, kA42 = -56.0 / 15.0, kA43 = 32.0 / 9.0;
constexpr double kA51 = 19372.0 / 6561.0, kA52 = -25360.0 / 2187.0, kA53 = 64448.0 / 6561.0,
                 kA54 = -212.0 / 729.0;
constexpr double kA61 = 9017.0 / 3168.0, kA62 = -355.0 / 33.0, kA63 = 46732.0 / 5247.0,
                 kA64 = 49.0 / 176.0, kA65 = -5103.0 / 18656.0;
constexpr double kA71 = 35.0 / 384.0, kA73 = 500.0 / 1113.0, kA74 = 125.0 / 192.0,
                 kA75 = -2187.0 / 6784.0, kA76 = 11.0 / 84.0;
constexpr double kE1 = 71.0 / 57600.0, kE3 = -71.0 / 16695.0, kE4 = 71.0 / 1920.0,
                 kE5 = -17253.0 / 339200.0, kE6 = 22.0 / 525.0, kE7 = -1.0 / 40.0;
constexpr double kC2 = 1.0 / 5.0, kC3 = 3.0 / 10.0, kC4 = 4.0 / 5.0, kC5 = 8.0 / 9.0;

void stage(std::vector<cplx>& out, const std::vector<cplx>& y, double dt,
           std::initializer_list<double> w, std::initializer_list<const std::vector<cplx>*> k) {
  const double* wp = w.begin();
  const std::vector<cplx>* const* kp = k.begin();
  const int64_t terms = static_cast<int64_t>(w.size());
  const int64_t n = static_cast<int64_t>(y.size());
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i) {
    cplx acc = 0.0;
    for (int64_t j = 0; j < terms; ++j) acc += wp[j] * (*kp[j])[i];
    out[i] = y[i] + dt * acc;
  }
}

double error_norm(const std::vector<cplx>& y, const std::vector<cplx>& ynew, double dt,
                  const std::array<const std::vector<cplx>*, 7>& k, double atol, double rtol) {
  const int64_t n = static_cast<int64_t>(y.size());
  const int64_t nb = (n + detail::kReduceBlock - 1) / detail::kReduceBlock;
  std::vector<double> partial(static_cast<size_t>(nb), 0.0);
#pragma omp parallel for schedule(static)
  for (int64_t b = 0; b < nb; ++b) {
    const int64_t lo = b * detail::kReduceBlock;
    const int64_t hi = std::min(n, lo + detail::kReduceBlock);
    double acc = 0.0;
    for (int64_t i = lo; i < hi; ++i) {
      const cplx e = dt * (kE1 * (*k[0])[i] + kE3 * (*k[2])[i] + kE4 * (*k[3])[i] +
                           kE5 * (*k[4])[i] + kE6 * (*k[5])[i] + kE7 * (*k[6])[i]);
      const double num = std::abs(e);
      const double sc = atol + rtol * std::max(std::abs(y[i]), std::abs(ynew[i]));
      const double r = num / sc;
      acc += r * r;
    }
    partial[static_cast<size_t>(b)] = acc;
  }
  return std::sqrt(detail::combine_pairwise(partial) / static_cast<double>(n));
}

double step_factor(double err, const StepControl& c) {
  const double f = err > 0.0 ? c.safety * std::pow(err, -0.2) : c.grow_limit;
  return std::clamp(f, c.shrink_limit, c.grow_limit);
}

void renormalize_coeffs(CoeffTensor& c) {
  const double nn = std::sqrt(pairwise_norm2(c.data(), c.size()));
  if (nn <= 0.0) return;
  const double s = 1.0 / nn;
  const int64_t n = c.size();
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i) c[i] *= s;
}

struct RelaxInfo {
  double energy = 0.0;
  double residual = 0.0;
};

RelaxInfo relax_measure(const System& sys, const SystemState& y, double t) {
  const IntegralTables tb = sys.build_tables(y.orbitals, t);
  const CoeffTensor hc = apply_hamiltonian(sys.space(), tb, y.c);
  const double n2 = pairwise_norm2(y.c.data(), y.c.size());
  const cplx e = n2 > 0.0 ? expectation(y.c, hc) / n2 : cplx{};
  CoeffTensor resid(y.c.shape());
  const int64_t n = y.c.size();
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i) resid[i] = hc[i] - e * y.c[i];
  const double rn = n2 > 0.0 ? std::sqrt(pairwise_norm2(resid.data(), n) / n2) : 0.0;
  return {e.real(), rn};
}

void axpy_tensor(cplx w, const CoeffTensor& src, CoeffTensor& dst) {
  const int64_t n = dst.size();
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i) dst[i] += w * src[i];
}

PropagationResult rk_drive(const System& sys, SystemState y0, double t0, double t_end,
                           double stride, const PropagationOptions& opt, const Observer& obs) {
  const StepControl& sc = opt.control;
  const bool imag = opt.mode == TimeMode::ImaginaryTime;

  PropagationResult res;
  res.state = std::move(y0);
  if (imag) {
    renormalize_coeffs(res.state.c);
    for (int x = 0; x < sys.n_species(); ++x)
      if (!opt.fixed_orbitals) mgs_orthonormalize(sys.grid(), res.state.orbitals[x]);
  }

  double last_fired = std::numeric_limits<double>::quiet_NaN();
  auto fire = [&](double t) {
    if (obs) obs(t, res.state, res.events);
    last_fired = t;
  };
  fire(t0);

  double dt_carry = opt.dt_start > 0.0 ? opt.dt_start : sc.dt_init;
  res.t = t0;
  res.dt_carry = dt_carry;
  if (t_end <= t0) return res;

  const SystemState shape = res.state;
  auto rhs = [&](const std::vector<cplx>& v, double t) {
    ++res.events.n_rhs;
    return pack_state(eom_rhs(sys, unpack_state(v, shape), t, opt.mode, opt.fixed_orbitals));
  };

  std::vector<cplx> yv = pack_state(res.state);
  const size_t nv = yv.size();
  std::vector<cplx> k1, k2, k3, k4, k5, k6, k7;
  std::vector<cplx> ytmp(nv), ynew(nv);
  bool k1_valid = false;

  double prev_energy = 0.0;
  bool have_prev = false;
  if (imag) {
    const RelaxInfo ri = relax_measure(sys, res.state, t0);
    prev_energy = ri.energy;
    have_prev = true;
    res.energy = ri.energy;
    res.residual = ri.residual;
  }

  double t = t0;
  int64_t k_out = 1;
  int64_t steps = 0;
  bool stop = false;

  while (t < t_end && !stop) {
    const double next_out =
        stride > 0.0 ? t0 + static_cast<double>(k_out) * stride
                     : std::numeric_limits<double>::infinity();
    const double boundary = std::min(t_end, next_out);
    if (boundary <= t) {
      ++k_out;
      continue;
    }
    if (++steps > opt.max_steps) throw stiffness_error("propagate: step budget exceeded");

    const bool clipped = (boundary - t) < dt_carry;
    const double dt = clipped ? boundary - t : dt_carry;

    if (!k1_valid) {
      k1 = rhs(yv, t);
      k1_valid = true;
    }
    stage(ytmp, yv, dt, {kA21}, {&k1});
    k2 = rhs(ytmp, t + kC2 * dt);
    stage(ytmp, yv, dt, {kA31, kA32}, {&k1, &k2});
    k3 = rhs(ytmp, t + kC3 * dt);
    stage(ytmp, yv, dt, {kA41, kA42, kA43}, {&k1, &k2, &k3});
    k4 = rhs(ytmp, t + kC4 * dt);
    stage(ytmp, yv, dt, {kA51, kA52, kA53, kA54}, {&k1, &k2, &k3, &k4});
    k5 = rhs(ytmp, t + kC5 * dt);
    stage(ytmp, yv, dt, {kA61, kA62, kA63, kA64, kA65}, {&k1, &k2, &k3, &k4, &k5});
    k6 = rhs(ytmp, t + dt);
    stage(ynew, yv, dt, {kA71, kA73, kA74, kA75, kA76}, {&k1, &k3, &k4, &k5, &k6});
    k7 = rhs(ynew, t + dt);
    const double err =
        error_norm(yv, ynew, dt, {&k1, &k2, &k3, &k4, &k5, &k6, &k7}, sc.abs_tol, sc.rel_tol);

    if (err <= 1.0) {
      ++res.events.n_accepted;
      yv.swap(ynew);
      k1.swap(k7);  // FSAL: the last stage was evaluated at the accepted state
      t = clipped ? boundary : t + dt;
      if (!clipped) dt_carry = dt * step_factor(err, sc);
      res.state = unpack_state(yv, shape);

      bool modified = false;
      if (imag) {
        renormalize_coeffs(res.state.c);
        if (!opt.fixed_orbitals)
          for (int x = 0; x < sys.n_species(); ++x)
            mgs_orthonormalize(sys.grid(), res.state.orbitals[x]);
        modified = true;
        const RelaxInfo ri = relax_measure(sys, res.state, t);
        res.energy = ri.energy;
        res.residual = ri.residual;
        if (have_prev && std::abs(ri.energy - prev_energy) <= opt.relax_energy_tol &&
            ri.residual <= opt.relax_residual_tol) {
          res.converged = true;
          stop = true;
        }
        prev_energy = ri.energy;
        have_prev = true;
      } else {
        const double nn = std::sqrt(pairwise_norm2(res.state.c.data(), res.state.c.size()));
        if (std::abs(nn - 1.0) > opt.drift_threshold) {
          renormalize_coeffs(res.state.c);
          ++res.events.n_renorm;
          modified = true;
        }
        if (!opt.fixed_orbitals) {
          double gd = 0.0;
          for (int x = 0; x < sys.n_species(); ++x)
            gd = std::max(gd, gram_defect(sys.grid(), res.state.orbitals[x]));
          if (gd > opt.drift_threshold) {
            for (int x = 0; x < sys.n_species(); ++x)
              mgs_orthonormalize(sys.grid(), res.state.orbitals[x]);
            ++res.events.n_mgs;
            modified = true;
          }
        }
      }
      if (modified) {
        yv = pack_state(res.state);
        k1_valid = false;
      }
      if (t == next_out) {
        fire(t);
        ++k_out;
      }
    } else {
      ++res.events.n_rejected;
      dt_carry = dt * step_factor(err, sc);
      if (dt_carry < sc.dt_min)
        throw stiffness_error("propagate: step size underflow at t=" + std::to_string(t));
    }
  }

  if (!(last_fired == t)) fire(t);
  res.t = t;
  res.dt_carry = dt_carry;
  return res;
}

PropagationResult lanczos_drive(const System& sys, SystemState y0, double t0, double t_end,
                                double stride, const PropagationOptions& opt,
                                const Observer& obs) {
  require(opt.fixed_orbitals,
          "Lanczos propagation moves coefficients only; set fixed_orbitals");
  const bool imag = opt.mode == TimeMode::ImaginaryTime;

  PropagationResult res;
  res.state = std::move(y0);
  if (imag) renormalize_coeffs(res.state.c);

  double last_fired = std::numeric_limits<double>::quiet_NaN();
  auto fire = [&](double t) {
    if (obs) obs(t, res.state, res.events);
    last_fired = t;
  };
  fire(t0);

  res.t = t0;
  res.dt_carry = opt.control.dt_init;
  if (t_end <= t0) return res;

  double prev_energy = 0.0;
  bool have_prev = false;
  if (imag) {
    const RelaxInfo ri = relax_measure(sys, res.state, t0);
    prev_energy = ri.energy;
    have_prev = true;
    res.energy = ri.energy;
    res.residual = ri.residual;
  }

  const cplx tau = imag ? cplx{-1.0, 0.0} : cplx{0.0, -1.0};
  double t = t0;
  int64_t k_out = 1;
  int64_t steps = 0;
  bool stop = false;

  while (t < t_end && !stop) {
    const double next_out =
        stride > 0.0 ? t0 + static_cast<double>(k_out) * stride
                     : std::numeric_limits<double>::infinity();
    const double boundary = std::min(t_end, next_out);
    if (boundary <= t) {
      ++k_out;
      continue;
    }
    if (++steps > opt.max_steps) throw stiffness_error("propagate: step budget exceeded");

    const bool hits = (boundary - t) <= opt.control.dt_init;
    const double dt = hits ? boundary - t : opt.control.dt_init;
    const IntegralTables tb = sys.build_tables(res.state.orbitals, t);
    auto hop = [&](const CoeffTensor& v) {
      ++res.events.n_rhs;
      return apply_hamiltonian(sys.space(), tb, v);
    };
    res.state.c = krylov_exp(hop, res.state.c, tau * dt, opt.krylov_dim);
    ++res.events.n_accepted;
    t = hits ? boundary : t + dt;

    if (imag) {
      renormalize_coeffs(res.state.c);
      const RelaxInfo ri = relax_measure(sys, res.state, t);
      res.energy = ri.energy;
      res.residual = ri.residual;
      if (have_prev && std::abs(ri.energy - prev_energy) <= opt.relax_energy_tol &&
          ri.residual <= opt.relax_residual_tol) {
        res.converged = true;
        stop = true;
      }
      prev_energy = ri.energy;
      have_prev = true;
    }
    if (t == next_out) {
      fire(t);
      ++k_out;
    }
  }

  if (!(last_fired == t)) fire(t);
  res.t = t;
  res.dt_carry = opt.control.dt_init;
  return res;
}

}  // namespace

PropagationResult propagate(const System& sys, SystemState y, double t0, double t_end,
                            double out_stride, const PropagationOptions& opt,
                            const Observer& obs) {
  require(t_end >= t0, "propagate: t_end must not precede t0");
  if (opt.kind == PropagatorKind::Lanczos)
    return lanczos_drive(sys, std::move(y), t0, t_end, out_stride, opt, obs);
  return rk_drive(sys, std::move(y), t0, t_end, out_stride, opt, obs);
}

CoeffTensor krylov_exp(const std::function<CoeffTensor(const CoeffTensor&)>& hop,
                       const CoeffTensor& c, cplx z, int krylov_dim) {
  require(krylov_dim >= 1, "krylov_exp: krylov_dim must be >= 1");
  const int64_t n = c.size();
  const double beta0 = std::sqrt(pairwise_norm2(c.data(), n));
  if (beta0 == 0.0) return c;

  std::vector<CoeffTensor> v;
  v.reserve(static_cast<size_t>(krylov_dim));
  {
    CoeffTensor v0 = c;
    const double s = 1.0 / beta0;
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n; ++i) v0[i] *= s;
    v.push_back(std::move(v0));
  }

  std::vector<double> alpha, beta;
  int keff = 0;
  for (int j = 0; j < krylov_dim; ++j) {
    CoeffTensor w = hop(v[static_cast<size_t>(j)]);
    if (j > 0) axpy_tensor(-beta[static_cast<size_t>(j - 1)], v[static_cast<size_t>(j - 1)], w);
    const double a = expectation(v[static_cast<size_t>(j)], w).real();
    alpha.push_back(a);
    axpy_tensor(-a, v[static_cast<size_t>(j)], w);
    // full re-orthogonalization keeps the small problem honestly tridiagonal
    for (int i = 0; i <= j; ++i) {
      const cplx o = expectation(v[static_cast<size_t>(i)], w);
      axpy_tensor(-o, v[static_cast<size_t>(i)], w);
    }
    keff = j + 1;
    if (j + 1 == krylov_dim) break;
    const double b = std::sqrt(pairwise_norm2(w.data(), n));
    if (b <= 1e-12 * std::max(1.0, beta0)) break;  // invariant subspace reached
    beta.push_back(b);
    const double s = 1.0 / b;
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n; ++i) w[i] *= s;
    v.push_back(std::move(w));
  }

  Eigen::MatrixXd tmat = Eigen::MatrixXd::Zero(keff, keff);
  for (int i = 0; i < keff; ++i) tmat(i, i) = alpha[static_cast<size_t>(i)];
  for (int i = 0; i + 1 < keff; ++i) {
    tmat(i, i + 1) = beta[static_cast<size_t>(i)];
    tmat(i + 1, i) = beta[static_cast<size_t>(i)];
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(tmat);
  const Eigen::VectorXcd w0 = es.eigenvectors().row(0).transpose().cast<cplx>();
  const Eigen::ArrayXcd ph = (es.eigenvalues().cast<cplx>().array() * z).exp();
  const Eigen::VectorXcd u = es.eigenvectors().cast<cplx>() * (ph * w0.array()).matrix();

  CoeffTensor out(c.shape());
  for (int j = 0; j < keff; ++j) axpy_tensor(beta0 * u(j), v[static_cast<size_t>(j)], out);
  return out;
}

std::vector<cplx> pack_state(const SystemState& y) {
  size_t total = static_cast<size_t>(y.c.size());
  for (const OrbitalSet& o : y.orbitals) total += static_cast<size_t>(o.size());
  std::vector<cplx> v(total);
  cplx* p = v.data();
  std::copy(y.c.data(), y.c.data() + y.c.size(), p);
  p += y.c.size();
  for (const OrbitalSet& o : y.orbitals) {
    std::copy(o.data(), o.data() + o.size(), p);
    p += o.size();
  }
  return v;
}

SystemState unpack_state(std::span<const cplx> v, const SystemState& shape) {
  SystemState y = shape;
  const cplx* p = v.data();
  std::copy(p, p + y.c.size(), y.c.data());
  p += y.c.size();
  for (OrbitalSet& o : y.orbitals) {
    std::copy(p, p + o.size(), o.data());
    p += o.size();
  }
  require(p == v.data() + v.size(), "unpack_state: size mismatch");
  return y;
}

}  // namespace mctdh
