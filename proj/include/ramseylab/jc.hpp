#pragma once

// Jaynes-Cummings dynamics of a two-level atom crossing a single-mode cavity.
//
// Everything here lives in the interaction picture with respect to the free
// atom and field Hamiltonians, where a zone with coupling g and detuning
// Delta = omega_atom - omega_field reads
//
//   H(t) = g ( |e><g| a e^{i Delta t} + a^dag |g><e| e^{-i Delta t} ).
//
// t is the clock of the atom's flight, starting at 0 when it enters the first
// zone, so a zone's action depends on its start time. Between zones H = 0 and
// only the externally imposed phases phi_e, phi_g act.

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdio>
#include <string>

#include "ramseylab/errors.hpp"
#include "ramseylab/fock.hpp"

namespace ramseylab {

struct ZoneConfig {
  double coupling = 1.0;  // vacuum Rabi coupling g (rad/time)
  double duration = 0.0;  // interaction time tau
  double detuning = 0.0;  // Delta = omega_0 - omega
  int mode = 1;           // 1 or 2

  void validate() const {
    if (!(duration >= 0.0) || !std::isfinite(duration)) throw InvalidArgument("zone duration must be >= 0");
    if (!(coupling >= 0.0) || !std::isfinite(coupling)) throw InvalidArgument("zone coupling must be >= 0");
    if (!std::isfinite(detuning)) throw InvalidArgument("zone detuning must be finite");
    if (mode != 1 && mode != 2) throw InvalidArgument("zone mode must be 1 or 2");
  }
};

struct GapConfig {
  double duration = 0.0;  // free flight T
  double phase_e = 0.0;   // |e> -> e^{-i phase_e} |e>
  double phase_g = 0.0;   // |g> -> e^{-i phase_g} |g>

  void validate() const {
    if (!(duration >= 0.0) || !std::isfinite(duration)) throw InvalidArgument("gap duration must be >= 0");
    if (!std::isfinite(phase_e) || !std::isfinite(phase_g)) throw InvalidArgument("gap phases must be finite");
  }
};

// Squared norm above which an |e, N-1> amplitude counts as a truncation overflow.
inline constexpr double kOverflowTolerance = 1e-12;

// Omega_k = sqrt(Delta^2 + 4 g^2 (k + 1)), the Rabi frequency of the
// {|e,k>, |g,k+1>} sector. k = -1 is the uncoupled |g,0> sector.
inline double rabi(int photons, double g, double detuning) {
  if (photons < -1) throw InvalidArgument("photon index must be >= -1");
  return std::sqrt(detuning * detuning + 4.0 * g * g * static_cast<double>(photons + 1));
}

// C_k(tau) = cos(Omega tau/2) + (i Delta/Omega) sin(Omega tau/2)
inline cplx amp_C(int photons, double g, double detuning, double tau) {
  if (photons == -1) return std::exp(kI * (0.5 * detuning * tau));
  const double om = rabi(photons, g, detuning);
  if (om == 0.0) return {1.0, 0.0};
  const double h = 0.5 * om * tau;
  return {std::cos(h), detuning / om * std::sin(h)};
}

// S_k(tau) = (2 i g sqrt(k+1) / Omega) sin(Omega tau/2)
inline cplx amp_S(int photons, double g, double detuning, double tau) {
  if (photons == -1) return {0.0, 0.0};
  const double om = rabi(photons, g, detuning);
  if (om == 0.0) return {0.0, 0.0};
  return {0.0, 2.0 * g * std::sqrt(static_cast<double>(photons + 1)) / om * std::sin(0.5 * om * tau)};
}

namespace detail {

// Visits the two-mode flat offsets of each sector {|e,k>, |g,k+1>} for the
// zone's mode. The callback receives (k, offset of (k, other)), with `stride`
// the offset step of one photon in that mode.
template <class F>
void for_each_mode_line(const JointState& s, int mode, F&& f) {
  const std::size_t n1 = s.dim(1), n2 = s.dim(2);
  const std::size_t nm = mode == 1 ? n1 : n2;
  const std::size_t other = mode == 1 ? n2 : n1;
  const std::size_t stride = mode == 1 ? n2 : 1;
  for (std::size_t o = 0; o < other; ++o) {
    const std::size_t base = mode == 1 ? o : o * n2;
    f(base, stride, nm);
  }
}

}  // namespace detail

// Exact propagation through one zone that starts at `start` on the flight clock.
//
// Within a sector the map is
//   c_e' = e^{i Delta tau/2} C* c_e - S e^{i Delta (2 t0 + tau)/2} c_g
//   c_g' = -S e^{-i Delta (2 t0 + tau)/2} c_e + e^{-i Delta tau/2} C c_g
// which composes into the two-zone state with the e^{+-i Delta(...)/2}
// factors written out literally.
inline JointState zone_propagate(const JointState& state, const ZoneConfig& zone, double start = 0.0) {
  zone.validate();
  if (state.dim(0) != 2) throw InvalidArgument("joint state must have a two-level atom");
  const double d = zone.detuning, tau = zone.duration, g = zone.coupling;
  const auto nf = static_cast<std::size_t>(state.dim(1) * state.dim(2));
  const Eigen::VectorXcd& in = state.amplitudes();
  Eigen::VectorXcd out = in;

  const cplx fe = std::exp(kI * (0.5 * d * tau));
  const cplx fx = std::exp(kI * (0.5 * d * (2.0 * start + tau)));
  const cplx fg = std::conj(fe);
  const cplx fxc = std::conj(fx);

  double overflow = 0.0;
  detail::for_each_mode_line(state, zone.mode, [&](std::size_t base, std::size_t stride, std::size_t nm) {
    for (std::size_t k = 0; k + 1 < nm; ++k) {
      const auto ie = static_cast<Eigen::Index>(nf + base + k * stride);
      const auto ig = static_cast<Eigen::Index>(base + (k + 1) * stride);
      const cplx C = amp_C(static_cast<int>(k), g, d, tau);
      const cplx S = amp_S(static_cast<int>(k), g, d, tau);
      const cplx ce = in[ie], cg = in[ig];
      out[ie] = fe * std::conj(C) * ce - S * fx * cg;
      out[ig] = -S * fxc * ce + fg * C * cg;
    }
    // |g,0> is dark: C_{-1} e^{-i Delta tau/2} = 1. |e,N-1> has no partner.
    if (g > 0.0 && tau > 0.0) overflow += std::norm(in[static_cast<Eigen::Index>(nf + base + (nm - 1) * stride)]);
  });
  if (overflow > kOverflowTolerance) {
    char weight[32];
    std::snprintf(weight, sizeof weight, "%.3g", overflow);
    throw TruncationOverflow("zone in mode " + std::to_string(zone.mode) + " needs a Fock level above the truncation " +
                             "(weight " + weight + " on |e, N-1>)");
  }
  return JointState(state.dims(), std::move(out));
}

inline JointState gap_propagate(const JointState& state, const GapConfig& gap) {
  gap.validate();
  const auto nf = static_cast<Eigen::Index>(state.dim(1) * state.dim(2));
  Eigen::VectorXcd a = state.amplitudes();
  a.head(nf) *= std::exp(-kI * gap.phase_g);
  a.tail(nf) *= std::exp(-kI * gap.phase_e);
  return JointState(state.dims(), std::move(a));
}

namespace detail {

// -i H(t) psi for the zone Hamiltonian, applied without any sector algebra.
inline void jc_rhs(const Eigen::VectorXcd& psi, Eigen::VectorXcd& out, const JointState& shape, const ZoneConfig& z,
                   double t) {
  out.setZero();
  const auto nf = static_cast<std::size_t>(shape.dim(1) * shape.dim(2));
  const cplx up = z.coupling * std::exp(kI * (z.detuning * t));  // |e><g| a coefficient
  const cplx down = std::conj(up);
  for_each_mode_line(shape, z.mode, [&](std::size_t base, std::size_t stride, std::size_t nm) {
    for (std::size_t k = 0; k + 1 < nm; ++k) {
      const auto ie = static_cast<Eigen::Index>(nf + base + k * stride);
      const auto ig = static_cast<Eigen::Index>(base + (k + 1) * stride);
      const double amp = std::sqrt(static_cast<double>(k + 1));
      out[ie] += -kI * up * amp * psi[ig];
      out[ig] += -kI * down * amp * psi[ie];
    }
  });
}

}  // namespace detail

// Fixed-step classical RK4 integration of the zone Hamiltonian. Serves as the
// independent check on zone_propagate; it performs no truncation checks.
inline JointState numeric_propagate(const JointState& state, const ZoneConfig& zone, int steps = 4096,
                                    double start = 0.0) {
  zone.validate();
  if (steps < 1) throw InvalidArgument("steps must be >= 1");
  const double h = zone.duration / steps;
  Eigen::VectorXcd psi = state.amplitudes();
  Eigen::VectorXcd k1(psi.size()), k2(psi.size()), k3(psi.size()), k4(psi.size()), tmp(psi.size());
  for (int i = 0; i < steps; ++i) {
    const double t = start + h * i;
    detail::jc_rhs(psi, k1, state, zone, t);
    tmp = psi + 0.5 * h * k1;
    detail::jc_rhs(tmp, k2, state, zone, t + 0.5 * h);
    tmp = psi + 0.5 * h * k2;
    detail::jc_rhs(tmp, k3, state, zone, t + 0.5 * h);
    tmp = psi + h * k3;
    detail::jc_rhs(tmp, k4, state, zone, t + h);
    psi += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return JointState(state.dims(), std::move(psi));
}

}  // namespace ramseylab
