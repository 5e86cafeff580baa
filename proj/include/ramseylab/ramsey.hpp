#pragma once

// Two-zone Ramsey sequences with quantized fields: simulation, closed-form
// detection probabilities, classical-field limits and fringe scans.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ramseylab/detail/parallel.hpp"
#include "ramseylab/errors.hpp"
#include "ramseylab/fock.hpp"
#include "ramseylab/jc.hpp"

namespace ramseylab {

struct SequenceConfig {
  ZoneConfig zone1{1.0, 0.0, 0.0, 1};
  GapConfig gap{};
  ZoneConfig zone2{1.0, 0.0, 0.0, 2};

  double detuning() const { return zone1.detuning; }
  double zone2_start() const { return zone1.duration + gap.duration; }
  double phase() const { return gap.phase_e - gap.phase_g; }

  void validate() const {
    zone1.validate();
    gap.validate();
    zone2.validate();
    if (zone1.mode != 1 || zone2.mode != 2) throw InvalidArgument("sequence needs zone1 in mode 1 and zone2 in mode 2");
    if (zone1.detuning != zone2.detuning) throw InvalidArgument("both zones must share one detuning");
  }
};

// Resonant-style helper: couplings and interaction times for a two-cavity
// sequence with one shared detuning.
inline SequenceConfig make_sequence(double g1, double tau1, double g2, double tau2, double detuning = 0.0,
                                    GapConfig gap = {}) {
  return SequenceConfig{{g1, tau1, detuning, 1}, gap, {g2, tau2, detuning, 2}};
}

inline JointState run_sequence(const JointState& state, const SequenceConfig& seq) {
  seq.validate();
  JointState s = zone_propagate(state, seq.zone1, 0.0);
  s = gap_propagate(s, seq.gap);
  return zone_propagate(s, seq.zone2, seq.zone2_start());
}

inline JointState run_sequence(const AtomAmplitudes& atom, const FieldState& field, const SequenceConfig& seq) {
  atom.require_normalized();
  return run_sequence(tensor(atom, field), seq);
}

inline double level_probability(const JointState& s, Level l) { return field_component(s, l).norm_squared(); }

// Probability of finding the atom in |e>.
inline double prob_excite(const JointState& s) { return level_probability(s, Level::excited); }
// Probability of finding the atom in |g>.
inline double prob_deexcite(const JointState& s) { return level_probability(s, Level::ground); }

namespace detail {

struct ZoneAmps {
  double g, d, tau;
  // Indices below -1 only occur on paths whose field amplitude is zero.
  cplx C(long k) const { return k < -1 ? cplx{} : amp_C(static_cast<int>(k), g, d, tau); }
  cplx S(long k) const { return k < -1 ? cplx{} : amp_S(static_cast<int>(k), g, d, tau); }
};

inline cplx F(const FieldState& f, long n, long mu) { return f.amplitude_or_zero({n, mu}); }

}  // namespace detail

// Excitation probability of an atom entering in |g>, summed path by path:
//   sum_{n,mu} | F_{n+1,mu} X_{n+1,mu} + e^{i(Delta T + phi)} F_{n,mu+1} Y_{n,mu+1} |^2
// with X_{n+1,mu} = S_n*(tau1) C_mu*(tau2), Y_{n,mu+1} = C_{n-1}(tau1) S_mu*(tau2).
inline double closed_form_p_eg(const FieldState& field, const SequenceConfig& seq) {
  seq.validate();
  const detail::ZoneAmps z1{seq.zone1.coupling, seq.detuning(), seq.zone1.duration};
  const detail::ZoneAmps z2{seq.zone2.coupling, seq.detuning(), seq.zone2.duration};
  const cplx rel = std::exp(kI * (seq.detuning() * seq.gap.duration + seq.phase()));
  double p = 0.0;
  for (long n = 0; n <= static_cast<long>(field.dim(0)); ++n)
    for (long mu = 0; mu <= static_cast<long>(field.dim(1)); ++mu) {
      const cplx x = std::conj(z1.S(n)) * std::conj(z2.C(mu));
      const cplx y = z1.C(n - 1) * std::conj(z2.S(mu));
      p += std::norm(detail::F(field, n + 1, mu) * x + rel * detail::F(field, n, mu + 1) * y);
    }
  return p;
}

// De-excitation probability of an atom entering in |e>:
//   sum_{n,mu} | F_{n-1,mu} S_{n-1}(tau1) C_{mu-1}(tau2)
//               + e^{-i(Delta T + phi)} F_{n,mu-1} C_n*(tau1) S_{mu-1}(tau2) |^2
inline double closed_form_p_ge(const FieldState& field, const SequenceConfig& seq) {
  seq.validate();
  const detail::ZoneAmps z1{seq.zone1.coupling, seq.detuning(), seq.zone1.duration};
  const detail::ZoneAmps z2{seq.zone2.coupling, seq.detuning(), seq.zone2.duration};
  const cplx rel = std::exp(-kI * (seq.detuning() * seq.gap.duration + seq.phase()));
  double p = 0.0;
  for (long n = 0; n <= static_cast<long>(field.dim(0)); ++n)
    for (long mu = 0; mu <= static_cast<long>(field.dim(1)); ++mu) {
      const cplx a = detail::F(field, n - 1, mu) * z1.S(n - 1) * z2.C(mu - 1);
      const cplx b = detail::F(field, n, mu - 1) * std::conj(z1.C(n)) * z2.S(mu - 1);
      p += std::norm(a + rel * b);
    }
  return p;
}

struct InterferenceTerm {
  cplx value;
  bool fringes;  // |value| > 1e-12
};

// sum_{n,mu} F_{n+1,mu} F*_{n,mu+1} X_{n+1,mu} Y*_{n,mu+1}; fringes in the
// excitation probability need this to be nonzero.
inline InterferenceTerm interference_functional(const FieldState& field, const SequenceConfig& seq) {
  seq.validate();
  const detail::ZoneAmps z1{seq.zone1.coupling, seq.detuning(), seq.zone1.duration};
  const detail::ZoneAmps z2{seq.zone2.coupling, seq.detuning(), seq.zone2.duration};
  cplx acc{0.0, 0.0};
  for (long n = 0; n <= static_cast<long>(field.dim(0)); ++n)
    for (long mu = 0; mu <= static_cast<long>(field.dim(1)); ++mu) {
      const cplx f = detail::F(field, n + 1, mu) * std::conj(detail::F(field, n, mu + 1));
      if (f == cplx{0.0, 0.0}) continue;
      const cplx x = std::conj(z1.S(n)) * std::conj(z2.C(mu));
      const cplx y = z1.C(n - 1) * std::conj(z2.S(mu));
      acc += f * x * std::conj(y);
    }
  return {acc, std::abs(acc) > 1e-12};
}

// Classical-field Ramsey probability. Zone 2's field carries the relative
// phase theta; each zone is a classical drive of Rabi frequency `rabi`.
// Starting in |g> this returns P(e); starting in |e>, P(g).
inline double classical_prob(double rabi_frequency, double tau1, double tau2, double theta, double phi,
                             double detuning = 0.0, double gap = 0.0, Level initial = Level::ground) {
  const double om = std::sqrt(detuning * detuning + rabi_frequency * rabi_frequency);
  auto C = [&](double tau) -> cplx {
    if (om == 0.0) return {1.0, 0.0};
    return {std::cos(0.5 * om * tau), detuning / om * std::sin(0.5 * om * tau)};
  };
  auto S = [&](double tau) -> cplx {
    if (om == 0.0) return {0.0, 0.0};
    return {0.0, rabi_frequency / om * std::sin(0.5 * om * tau)};
  };
  const double psi = detuning * gap + theta + phi;
  if (initial == Level::ground) {
    return std::norm(std::conj(S(tau1)) * std::conj(C(tau2)) + std::exp(kI * psi) * C(tau1) * std::conj(S(tau2)));
  }
  return std::norm(S(tau1) * C(tau2) + std::exp(-kI * psi) * S(tau2) * std::conj(C(tau1)));
}

// Classical drive equivalent of a coherent field: Omega_R = factor * g |alpha|.
inline double classical_rabi(double g, double alpha_magnitude, double factor = 2.0) {
  return factor * g * alpha_magnitude;
}

// Resonant excitation probability for the product field
// (|0> + alpha|1>)(|0> + alpha|1>) / (1 + |alpha|^2).
inline double nonclassical_fringe(cplx alpha, double g1tau1, double g2tau2, double phi) {
  const double a2 = std::norm(alpha);
  const double norm = 1.0 / ((1.0 + a2) * (1.0 + a2));
  const double s1 = std::sin(g1tau1), c1 = std::cos(g1tau1);
  const double s2 = std::sin(g2tau2), c2 = std::cos(g2tau2);
  const double c2r = std::cos(std::sqrt(2.0) * g2tau2);
  return a2 * norm * std::norm(s1 * c2 + s2 * std::exp(kI * phi)) +
         a2 * a2 * norm * (s1 * s1 * c2r * c2r + c1 * c1 * s2 * s2);
}

// Both zones inside one cavity; the atom enters in |e>, |g> picks up e^{-i phi}
// between them, and this returns P(g):
//   sum_n | F_n S_n(tau1) C_n(tau2) e^{-i phi} + F_n C_n*(tau1) S_n(tau2) |^2
inline double single_cavity_prob(const ModeState& field, double g, double tau1, double tau2, double phi,
                                 double detuning = 0.0) {
  double p = 0.0;
  const cplx ph = std::exp(-kI * phi);
  for (std::size_t n = 0; n < field.dim(0); ++n) {
    const int k = static_cast<int>(n);
    const cplx f = field(n);
    p += std::norm(f * amp_S(k, g, detuning, tau1) * amp_C(k, g, detuning, tau2) * ph +
                   f * std::conj(amp_C(k, g, detuning, tau1)) * amp_S(k, g, detuning, tau2));
  }
  return p;
}

// Same quantity by propagating the atom through both zones of one mode.
inline double single_cavity_simulate(const ModeState& field, double g, double tau1, double tau2, double phi,
                                     double detuning = 0.0) {
  // One spare level so the top occupied |e,n> always has its |g,n+1> partner.
  Eigen::VectorXcd padded = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(field.dim(0) + 1));
  padded.head(static_cast<Eigen::Index>(field.dim(0))) = field.amplitudes();
  JointState s = tensor(AtomAmplitudes::in(Level::excited), ModeState({field.dim(0) + 1}, padded), make_fock(0, 1));
  s = zone_propagate(s, {g, tau1, detuning, 1}, 0.0);
  s = gap_propagate(s, {0.0, 0.0, phi});
  s = zone_propagate(s, {g, tau2, detuning, 1}, tau1);
  return prob_deexcite(s);
}

// Coherent field, tau1 = tau2, resonance:
//   sum_n p_n sin^2(2 g sqrt(n+1) tau) cos^2(phi/2),  p_n Poisson(nbar).
inline double single_cavity_coherent_prob(double mean_photons, double gtau, double phi, std::size_t levels = 200) {
  double p = 0.0;
  double pn = std::exp(-mean_photons);
  for (std::size_t n = 0; n < levels; ++n) {
    const double s = std::sin(2.0 * gtau * std::sqrt(static_cast<double>(n + 1)));
    p += pn * s * s;
    pn *= mean_photons / static_cast<double>(n + 1);
  }
  const double c = std::cos(0.5 * phi);
  return p * c * c;
}

// ---------------------------------------------------------------------------
// Fringes

struct FringeCurve {
  std::string variable;  // "phi", "delta_T" or "theta"
  std::string quantity;  // e.g. "P_e"
  std::vector<double> x;
  std::vector<double> p;
};

// (max - min) / (max + min) over the samples; 0 for flat or all-zero curves.
inline double visibility(std::span<const double> samples) {
  if (samples.empty()) throw InvalidArgument("visibility of an empty curve");
  const auto [lo, hi] = std::minmax_element(samples.begin(), samples.end());
  if (*hi - *lo <= 1e-15 || *hi + *lo == 0.0) return 0.0;
  return (*hi - *lo) / (*hi + *lo);
}

inline double visibility(const FringeCurve& curve) { return visibility(std::span<const double>(curve.p)); }

// `points` samples from start toward stop. Closed-open by default, so a
// full period never repeats its first sample.
inline std::vector<double> uniform_grid(double start, double stop, std::size_t points, bool include_stop = false) {
  if (points < 2) throw InvalidArgument("a scan grid needs at least 2 points");
  std::vector<double> g(points);
  const double div = include_stop ? static_cast<double>(points - 1) : static_cast<double>(points);
  for (std::size_t i = 0; i < points; ++i) g[i] = start + (stop - start) * static_cast<double>(i) / div;
  return g;
}

enum class ScanVariable { phase, detuning_gap, field_phase };

inline const char* to_string(ScanVariable v) {
  switch (v) {
    case ScanVariable::phase: return "phi";
    case ScanVariable::detuning_gap: return "delta_T";
    case ScanVariable::field_phase: return "theta";
  }
  return "?";
}

struct RamseyScenario {
  AtomAmplitudes atom = AtomAmplitudes::in(Level::ground);
  // Field factory; the argument is the relative phase theta of mode 2.
  std::function<FieldState(double theta)> field;
  double theta = 0.0;
  SequenceConfig sequence{};
  Level detect = Level::excited;
};

inline double evaluate(const RamseyScenario& sc, ScanVariable var, double value) {
  SequenceConfig seq = sc.sequence;
  double theta = sc.theta;
  switch (var) {
    case ScanVariable::phase:
      seq.gap.phase_e = seq.gap.phase_g + value;
      break;
    case ScanVariable::detuning_gap:
      if (seq.detuning() == 0.0) throw InvalidArgument("scanning Delta*T needs a nonzero detuning");
      seq.gap.duration = value / seq.detuning();
      if (seq.gap.duration < 0.0) throw InvalidArgument("Delta*T scan implies a negative gap duration");
      break;
    case ScanVariable::field_phase:
      theta = value;
      break;
  }
  return level_probability(run_sequence(sc.atom, sc.field(theta), seq), sc.detect);
}

inline FringeCurve fringe_scan(const RamseyScenario& sc, ScanVariable var, std::span<const double> grid,
                               unsigned threads = 1) {
  if (grid.size() < 2) throw InvalidArgument("a scan grid needs at least 2 points");
  if (!sc.field) throw InvalidArgument("scenario has no field factory");
  FringeCurve c;
  c.variable = to_string(var);
  c.quantity = std::string("P_") + to_string(sc.detect);
  c.x.assign(grid.begin(), grid.end());
  c.p = detail::parallel_map<double>(grid.size(), threads, [&](std::size_t i) { return evaluate(sc, var, grid[i]); });
  return c;
}

}  // namespace ramseylab
