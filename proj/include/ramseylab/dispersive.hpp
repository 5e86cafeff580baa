#pragma once

// Far-detuned atom crossing both cavities. Each basis state only picks up a
// phase: |e,n> is shifted by g^2 (n+1)/Delta and |g,n> by -g^2 n/Delta while
// the atom is inside a cavity, on top of the free energies.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <optional>

#include "ramseylab/errors.hpp"
#include "ramseylab/fock.hpp"
#include "ramseylab/multi_atom.hpp"

namespace ramseylab {

struct DispersiveConfig {
  double g1 = 1.0;
  double g2 = 1.0;
  double detuning = 0.0;  // must be nonzero
  double tau1 = 0.0;
  double tau2 = 0.0;
  double gap = 0.0;
  double omega_field = 0.0;
  double omega_atom = 0.0;
  std::optional<double> readout_time{};  // defaults to tau1 + gap + tau2
  bool free_evolution = true;            // false drops the (n + mu) omega tau phases

  double total_time() const { return readout_time.value_or(tau1 + gap + tau2); }

  // g^2 tau / Delta of each cavity.
  double shift1() const { return g1 * g1 * tau1 / detuning; }
  double shift2() const { return g2 * g2 * tau2 / detuning; }

  void validate() const {
    if (detuning == 0.0 || !std::isfinite(detuning)) throw InvalidArgument("dispersive detuning must be nonzero");
    for (double v : {g1, g2, tau1, tau2, gap}) {
      if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidArgument("couplings and times must be >= 0");
    }
    if (!std::isfinite(omega_field) || !std::isfinite(omega_atom)) throw InvalidArgument("frequencies must be finite");
    if (readout_time && !(*readout_time >= tau1 + gap + tau2)) {
      throw InvalidArgument("readout time must not precede the end of the second cavity");
    }
  }
};

// g^2 (n_max + 1) / Delta^2 for the larger coupling; the effective
// Hamiltonian needs this small.
inline double dispersive_validity(const DispersiveConfig& cfg, std::size_t max_photons) {
  const double g = std::max(cfg.g1, cfg.g2);
  return g * g * static_cast<double>(max_photons + 1) / (cfg.detuning * cfg.detuning);
}

// |e,n,mu> -> exp[-i((n+mu) w + w0/2) t - i g1^2 (n+1) tau1/Delta - i g2^2 (mu+1) tau2/Delta]
// |g,n,mu> -> exp[-i((n+mu) w - w0/2) t + i g1^2 n tau1/Delta + i g2^2 mu tau2/Delta]
inline JointState dispersive_propagate(const JointState& state, const DispersiveConfig& cfg) {
  cfg.validate();
  if (state.dim(0) != 2) throw InvalidArgument("joint state must have a two-level atom");
  const double t = cfg.total_time();
  const double w = cfg.free_evolution ? cfg.omega_field : 0.0;
  const double s1 = cfg.shift1(), s2 = cfg.shift2();
  Eigen::VectorXcd a = state.amplitudes();
  for (std::size_t f = 0; f < state.size(); ++f) {
    const auto idx = state.unflatten(f);
    const auto n = static_cast<double>(idx[1]), mu = static_cast<double>(idx[2]);
    double phase = 0.0;
    if (idx[0] == static_cast<std::size_t>(Level::excited)) {
      phase = -((n + mu) * w + 0.5 * cfg.omega_atom) * t - s1 * (n + 1.0) - s2 * (mu + 1.0);
    } else {
      phase = -((n + mu) * w - 0.5 * cfg.omega_atom) * t + s1 * n + s2 * mu;
    }
    a[static_cast<Eigen::Index>(f)] *= std::exp(kI * phase);
  }
  return JointState(state.dims(), std::move(a));
}

namespace detail {

// e^{-|a|^2/2} a^n / sqrt(n!) for n < dim, without renormalizing.
inline Eigen::VectorXcd coherent_coefficients(cplx a, std::size_t dim) {
  Eigen::VectorXcd c(static_cast<Eigen::Index>(dim));
  cplx term = std::exp(-0.5 * std::norm(a));
  for (std::size_t n = 0; n < dim; ++n) {
    c[static_cast<Eigen::Index>(n)] = term;
    term *= a / std::sqrt(static_cast<double>(n + 1));
  }
  return c;
}

inline Eigen::VectorXcd coherent_pair(cplx a, cplx b, std::size_t n1, std::size_t n2) {
  const Eigen::VectorXcd ca = coherent_coefficients(a, n1), cb = coherent_coefficients(b, n2);
  Eigen::VectorXcd v(static_cast<Eigen::Index>(n1 * n2));
  for (std::size_t i = 0; i < n1; ++i)
    for (std::size_t j = 0; j < n2; ++j)
      v[static_cast<Eigen::Index>(i * n2 + j)] = ca[static_cast<Eigen::Index>(i)] * cb[static_cast<Eigen::Index>(j)];
  return v;
}

}  // namespace detail

// <a|b> for untruncated coherent states.
inline cplx coherent_overlap(cplx a, cplx b) {
  return std::exp(-0.5 * std::norm(a) - 0.5 * std::norm(b) + std::conj(a) * b);
}

// Atom `atom_in` crosses cavities holding |alpha>|beta> and is detected in
// `detect`. Returns the branch probability and the normalized field.
inline Conditional<FieldState> prepare_cat(cplx alpha, cplx beta, const AtomAmplitudes& atom_in,
                                           const AtomAmplitudes& detect, const DispersiveConfig& cfg,
                                           std::size_t dim = 24) {
  atom_in.require_normalized();
  const FieldState field = tensor(make_coherent(alpha, dim).state, make_coherent(beta, dim).state);
  return detect_in_basis(dispersive_propagate(tensor(atom_in, field), cfg), detect);
}

// The same branch written with displaced coherent states instead of Fock
// phases (a0 = alpha e^{-i w t}, theta_i = g_i^2 tau_i / Delta):
//   c'_g* c_g e^{i w0 t} |a0 e^{i theta1}, b0 e^{i theta2}>
//   + c'_e* c_e e^{-i(theta1 + theta2)} |a0 e^{-i theta1}, b0 e^{-i theta2}>
// times the common factor e^{-i w0 t/2}, which is dropped.
struct CatBranch {
  cplx weight_g, weight_e;  // coefficients of the two coherent pairs
  cplx alpha_g, beta_g;     // coherent amplitudes on the |g> path
  cplx alpha_e, beta_e;     // and on the |e> path

  // Exact (untruncated) squared norm of the branch.
  double probability() const {
    const double a = std::norm(weight_g), b = std::norm(weight_e);
    const cplx ov = coherent_overlap(alpha_g, alpha_e) * coherent_overlap(beta_g, beta_e);
    return a + b + 2.0 * (std::conj(weight_g) * weight_e * ov).real();
  }

  FieldState state(std::size_t n1, std::size_t n2) const {
    Eigen::VectorXcd v = weight_g * detail::coherent_pair(alpha_g, beta_g, n1, n2) +
                         weight_e * detail::coherent_pair(alpha_e, beta_e, n1, n2);
    return FieldState::from_unnormalized({n1, n2}, v);
  }
};

inline CatBranch cat_branch(cplx alpha, cplx beta, const AtomAmplitudes& atom_in, const AtomAmplitudes& detect,
                            const DispersiveConfig& cfg) {
  cfg.validate();
  const double t = cfg.total_time();
  const cplx rot = std::exp(-kI * ((cfg.free_evolution ? cfg.omega_field : 0.0) * t));
  const cplx a0 = alpha * rot, b0 = beta * rot;
  const double t1 = cfg.shift1(), t2 = cfg.shift2();
  CatBranch c;
  c.weight_g = std::conj(detect.ground) * atom_in.ground * std::exp(kI * (cfg.omega_atom * t));
  c.weight_e = std::conj(detect.excited) * atom_in.excited * std::exp(-kI * (t1 + t2));
  c.alpha_g = a0 * std::exp(kI * t1);
  c.beta_g = b0 * std::exp(kI * t2);
  c.alpha_e = a0 * std::exp(-kI * t1);
  c.beta_e = b0 * std::exp(-kI * t2);
  return c;
}

// Normalized (|a,b> + sign e^{i phase} |-a,-b>) in an n1 x n2 truncation.
inline FieldState cat_state(cplx a, cplx b, int sign, double phase, std::size_t n1, std::size_t n2) {
  if (sign != 1 && sign != -1) throw InvalidArgument("cat sign must be +1 or -1");
  Eigen::VectorXcd v = detail::coherent_pair(a, b, n1, n2) +
                       static_cast<double>(sign) * std::exp(kI * phase) * detail::coherent_pair(-a, -b, n1, n2);
  if (v.squaredNorm() < kZeroBranch) throw ZeroProbability("cat superposition cancels to zero");
  return FieldState::from_unnormalized({n1, n2}, v);
}

inline double cat_fidelity(const FieldState& prepared, cplx a, cplx b, int sign, double phase) {
  return fidelity(prepared, cat_state(a, b, sign, phase, prepared.dim(0), prepared.dim(1)));
}

}  // namespace ramseylab
