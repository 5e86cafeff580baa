#pragma once

// Zero-temperature photon loss from the cavities between atomic transits:
//   d rho/dt = -sum_i kappa_i (a_i^dag a_i rho - 2 a_i rho a_i^dag + rho a_i^dag a_i)
// 2 kappa_i is the photon loss rate of cavity i.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "ramseylab/errors.hpp"
#include "ramseylab/fock.hpp"

namespace ramseylab {

struct DecayConfig {
  double kappa1 = 0.0;
  double kappa2 = 0.0;
  double time = 0.0;

  void validate() const {
    if (!(kappa1 >= 0.0) || !(kappa2 >= 0.0) || !std::isfinite(kappa1) || !std::isfinite(kappa2)) {
      throw InvalidArgument("decay rates must be >= 0");
    }
    if (!(time >= 0.0) || !std::isfinite(time)) throw InvalidArgument("decay time must be >= 0");
  }
};

// ceil(200 max(kappa) t), at least 100.
inline int default_decay_steps(const DecayConfig& cfg) {
  const double k = std::max(cfg.kappa1, cfg.kappa2);
  return std::max(100, static_cast<int>(std::ceil(200.0 * k * cfg.time)));
}

namespace detail {

// Annihilation operator of mode `which` on the full product space `dims`.
inline Eigen::MatrixXcd mode_lowering(const std::vector<std::size_t>& dims, std::size_t which) {
  Eigen::MatrixXcd op = Eigen::MatrixXcd::Identity(1, 1);
  for (std::size_t k = 0; k < dims.size(); ++k) {
    const auto n = static_cast<Eigen::Index>(dims[k]);
    Eigen::MatrixXcd f = Eigen::MatrixXcd::Identity(n, n);
    if (k == which) {
      f.setZero();
      for (Eigen::Index m = 1; m < n; ++m) f(m - 1, m) = std::sqrt(static_cast<double>(m));
    }
    Eigen::MatrixXcd next(op.rows() * n, op.cols() * n);
    for (Eigen::Index i = 0; i < op.rows(); ++i)
      for (Eigen::Index j = 0; j < op.cols(); ++j) next.block(i * n, j * n, n, n) = op(i, j) * f;
    op = std::move(next);
  }
  return op;
}

struct Dissipator {
  std::vector<double> kappa;
  std::vector<Eigen::MatrixXcd> a, adag, number;

  Eigen::MatrixXcd operator()(const Eigen::MatrixXcd& rho) const {
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(rho.rows(), rho.cols());
    for (std::size_t i = 0; i < kappa.size(); ++i) {
      if (kappa[i] == 0.0) continue;
      out -= kappa[i] * (number[i] * rho - 2.0 * a[i] * rho * adag[i] + rho * number[i]);
    }
    return out;
  }
};

}  // namespace detail

// Fixed-step RK4 integration of the master equation on a one- or two-mode
// density matrix. Mode 1 decays with kappa1, mode 2 with kappa2.
inline DensityMatrix lindblad_evolve(const DensityMatrix& rho0, const DecayConfig& cfg,
                                     std::optional<int> steps = std::nullopt) {
  cfg.validate();
  rho0.validate();
  const auto& dims = rho0.dims();
  if (dims.empty() || dims.size() > 2) throw InvalidArgument("lindblad_evolve handles one or two modes");
  const int n = steps.value_or(default_decay_steps(cfg));
  if (n < 1) throw InvalidArgument("steps must be >= 1");

  detail::Dissipator L;
  const double rates[2] = {cfg.kappa1, cfg.kappa2};
  for (std::size_t k = 0; k < dims.size(); ++k) {
    Eigen::MatrixXcd a = detail::mode_lowering(dims, k);
    L.kappa.push_back(rates[k]);
    L.adag.push_back(a.adjoint());
    L.number.push_back(a.adjoint() * a);
    L.a.push_back(std::move(a));
  }

  const double h = cfg.time / n;
  Eigen::MatrixXcd rho = rho0.matrix();
  for (int i = 0; i < n; ++i) {
    const Eigen::MatrixXcd k1 = L(rho);
    const Eigen::MatrixXcd k2 = L(rho + 0.5 * h * k1);
    const Eigen::MatrixXcd k3 = L(rho + 0.5 * h * k2);
    const Eigen::MatrixXcd k4 = L(rho + h * k3);
    rho += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  // Remove the O(eps) anti-Hermitian part left by round-off.
  rho = 0.5 * (rho + rho.adjoint()).eval();
  if (!rho.allFinite()) throw NumericalError("master equation integration diverged");
  return DensityMatrix(dims, std::move(rho));
}

// The field left by one atom: -(i/sqrt2)(|1,0> + |0,1>).
inline FieldState bell_field(std::size_t n1 = 2, std::size_t n2 = 2) {
  const cplx c = -kI / std::sqrt(2.0);
  return field_from_amplitudes(n1, n2, {{{1, 0}, c}, {{0, 1}, c}});
}

// Exact decay of bell_field():
//   |psi_t><psi_t| + (1 - (e^{-2 kappa1 t} + e^{-2 kappa2 t})/2) |0,0><0,0|
// with psi_t = -(i/sqrt2)(e^{-kappa1 t}|1,0> + e^{-kappa2 t}|0,1>).
inline DensityMatrix analytic_decay(const DecayConfig& cfg, std::size_t n1 = 2, std::size_t n2 = 2) {
  cfg.validate();
  const double d1 = std::exp(-cfg.kappa1 * cfg.time), d2 = std::exp(-cfg.kappa2 * cfg.time);
  const cplx c = -kI / std::sqrt(2.0);
  const FieldState psi = field_from_amplitudes(n1, n2, {{{1, 0}, c * d1}, {{0, 1}, c * d2}});
  Eigen::MatrixXcd m = psi.amplitudes() * psi.amplitudes().adjoint();
  m(0, 0) += 1.0 - 0.5 * (d1 * d1 + d2 * d2);
  return DensityMatrix({n1, n2}, std::move(m));
}

// Overlap of the decayed Bell field with the ideal one after waiting cfg.time:
// (e^{-kappa1 t} + e^{-kappa2 t})^2 / 4.
inline double protocol_fidelity_under_decay(const DecayConfig& cfg) {
  return fidelity(analytic_decay(cfg), bell_field());
}

}  // namespace ramseylab
