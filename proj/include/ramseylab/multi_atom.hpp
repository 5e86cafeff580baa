#pragma once

// Sequential atoms through the same pair of cavities: conditional collapse of
// the field on detection, joint detection probabilities, entangled-field
// preparation and transfer of field entanglement onto atom pairs.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <optional>
#include <variant>

#include "ramseylab/errors.hpp"
#include "ramseylab/fock.hpp"
#include "ramseylab/jc.hpp"
#include "ramseylab/ramsey.hpp"

namespace ramseylab {

// Branch probabilities below this are treated as impossible outcomes.
inline constexpr double kZeroBranch = 1e-14;

struct AtomRecord {
  AtomAmplitudes input = AtomAmplitudes::in(Level::ground);
  SequenceConfig sequence{};
  std::optional<Level> outcome{};
};

template <class State>
struct Conditional {
  double probability = 0.0;
  std::optional<State> state{};  // empty when probability < kZeroBranch

  bool possible() const { return state.has_value(); }
};

// Projects the atom onto `basis` (not necessarily a level) and renormalizes.
inline Conditional<FieldState> detect_in_basis(const JointState& s, const AtomAmplitudes& basis) {
  basis.require_normalized("detection basis");
  const auto nf = static_cast<Eigen::Index>(s.dim(1) * s.dim(2));
  const Eigen::VectorXcd branch =
      std::conj(basis.ground) * s.amplitudes().head(nf) + std::conj(basis.excited) * s.amplitudes().tail(nf);
  const double p = branch.squaredNorm();
  Conditional<FieldState> out;
  out.probability = p;
  if (p >= kZeroBranch) out.state = FieldState::from_unnormalized({s.dim(1), s.dim(2)}, branch);
  return out;
}

inline Conditional<FieldState> detect(const JointState& s, Level level) {
  return detect_in_basis(s, AtomAmplitudes::in(level));
}

// Runs one atom through the field. With an outcome the result is the
// conditional field; without one, the full atom-field state.
inline std::variant<Conditional<FieldState>, JointState> send_and_measure(const FieldState& field,
                                                                           const AtomRecord& atom) {
  JointState s = run_sequence(atom.input, field, atom.sequence);
  if (!atom.outcome) return s;
  return detect(s, *atom.outcome);
}

inline Conditional<FieldState> send_and_detect(const FieldState& field, const AtomRecord& atom) {
  if (!atom.outcome) throw InvalidArgument("atom record has no measured outcome");
  return std::get<Conditional<FieldState>>(send_and_measure(field, atom));
}

// Probability that both atoms, sent one after the other, give their recorded
// outcomes. The field is left undisturbed between transits.
inline double joint_probability(const FieldState& field, const std::array<AtomRecord, 2>& atoms) {
  const Conditional<FieldState> first = send_and_detect(field, atoms[0]);
  if (!first.possible()) return 0.0;
  const Conditional<FieldState> second = send_and_detect(*first.state, atoms[1]);
  return first.probability * second.probability;
}

// Both atoms enter |g> and are detected in |e>, cavities start in |n, mu>:
//   |S_{n-1}(t1) S_{n-2}(t1') C*_mu(t2) C*_mu(t2')|^2
//   + |C_{n-1}(t1) C_{n-1}(t1') S_{mu-1}(t2) S_{mu-2}(t2')|^2
//   + |S_{n-1}(t1') C_{n-1}(t1) S_{mu-1}(t2) C*_{mu-1}(t2')
//      + S_{n-1}(t1) C_{n-2}(t1') S_{mu-1}(t2') C*_mu(t2) e^{i(Delta(T'-T) + phi' - phi)}|^2
inline double fock_joint_closed_form(std::size_t n, std::size_t mu, const SequenceConfig& first,
                                     const SequenceConfig& second) {
  first.validate();
  second.validate();
  if (first.detuning() != second.detuning()) throw InvalidArgument("both atoms must share one detuning");
  const double d = first.detuning();
  const detail::ZoneAmps a1{first.zone1.coupling, d, first.zone1.duration};
  const detail::ZoneAmps a2{first.zone2.coupling, d, first.zone2.duration};
  const detail::ZoneAmps b1{second.zone1.coupling, d, second.zone1.duration};
  const detail::ZoneAmps b2{second.zone2.coupling, d, second.zone2.duration};
  const long N = static_cast<long>(n), M = static_cast<long>(mu);
  const cplx rel = std::exp(kI * (d * (second.gap.duration - first.gap.duration) + second.phase() - first.phase()));
  const double both1 = std::norm(a1.S(N - 1) * b1.S(N - 2) * std::conj(a2.C(M)) * std::conj(b2.C(M)));
  const double both2 = std::norm(a1.C(N - 1) * b1.C(N - 1) * a2.S(M - 1) * b2.S(M - 2));
  const cplx cross = b1.S(N - 1) * a1.C(N - 1) * a2.S(M - 1) * std::conj(b2.C(M - 1)) +
                     a1.S(N - 1) * b1.C(N - 2) * b2.S(M - 1) * std::conj(a2.C(M)) * rel;
  return both1 + both2 + std::norm(cross);
}

// Both atoms enter |e> through empty cavities and are detected in |g>; Delta = 0.
//   s1^2 sin^2(sqrt2 g1 t1') + s2^2 sin^2(sqrt2 g2 t2') c1^2 cos^2(g1 t1')
//   + |c1 sin(g1 t1') s2 cos(g2 t2') + s1 cos(sqrt2 g1 t1') sin(g2 t2') e^{i(phi - phi')}|^2
// with s_i = sin(g_i t_i), c_i = cos(g_i t_i) for the first atom.
inline double both_excited_closed_form(const SequenceConfig& first, const SequenceConfig& second) {
  first.validate();
  second.validate();
  if (first.detuning() != 0.0 || second.detuning() != 0.0) {
    throw InvalidArgument("the both-excited closed form holds on resonance only");
  }
  const double r2 = std::sqrt(2.0);
  const double x1 = first.zone1.coupling * first.zone1.duration;
  const double x2 = first.zone2.coupling * first.zone2.duration;
  const double y1 = second.zone1.coupling * second.zone1.duration;
  const double y2 = second.zone2.coupling * second.zone2.duration;
  const double s1 = std::sin(x1), c1 = std::cos(x1), s2 = std::sin(x2);
  const double a = s1 * std::sin(r2 * y1);
  const double b = s2 * std::sin(r2 * y2) * c1 * std::cos(y1);
  const cplx cross = c1 * std::sin(y1) * s2 * std::cos(y2) +
                     s1 * std::cos(r2 * y1) * std::sin(y2) * std::exp(kI * (first.phase() - second.phase()));
  return a * a + b * b + std::norm(cross);
}

// ---------------------------------------------------------------------------
// Entangled-field preparation

struct Couplings {
  double g1 = 1.0;
  double g2 = 1.0;
};

struct PreparedField {
  double probability = 0.0;  // of the detection record that produced `field`
  FieldState field;
  double relative_phase = 0.0;  // Theta of the target superposition
};

namespace detail {

inline AtomRecord excited_to_ground(double g1tau1, double g2tau2, const GapConfig& gap, const Couplings& c) {
  if (c.g1 <= 0.0 || c.g2 <= 0.0) throw InvalidArgument("preparation needs positive couplings");
  AtomRecord r;
  r.input = AtomAmplitudes::in(Level::excited);
  r.sequence = make_sequence(c.g1, g1tau1 / c.g1, c.g2, g2tau2 / c.g2, 0.0, gap);
  r.outcome = Level::ground;
  return r;
}

inline FieldState pad_field(const FieldState& f, std::size_t n1, std::size_t n2) {
  if (f.dim(0) > n1 || f.dim(1) > n2) return f;
  Eigen::VectorXcd a = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(n1 * n2));
  for (std::size_t i = 0; i < f.dim(0); ++i)
    for (std::size_t j = 0; j < f.dim(1); ++j) a[static_cast<Eigen::Index>(i * n2 + j)] = f(i, j);
  return FieldState({n1, n2}, std::move(a));
}

}  // namespace detail

// Two atoms enter |e> through empty cavities and both are detected in |g>.
// The second atom's pulse areas are fixed to g1 t1' = g2 t2' = pi, which
// removes |1,1> and leaves
//   sin(g1 t1)|2,0> e^{-i(phi_g + phi_g')} - cos(g1 t1) sin(g2 t2)|0,2> e^{-i(phi_e + phi_e')}
// up to the common factor sin(pi sqrt2). Returns the joint probability of the
// two detections and the normalized field; relative_phase is
// phi_g + phi_g' - phi_e - phi_e', so the (pi/4, pi/2) output is
// (|2,0> - e^{i Theta}|0,2>)/sqrt2 up to a global phase.
inline PreparedField prepare_20_02(double g1tau1, double g2tau2, const GapConfig& gap1 = {},
                                   const GapConfig& gap2 = {}, const Couplings& couplings = {}) {
  const FieldState vacuum = tensor(make_fock(0, 3), make_fock(0, 3));
  const AtomRecord a1 = detail::excited_to_ground(g1tau1, g2tau2, gap1, couplings);
  const AtomRecord a2 = detail::excited_to_ground(kPi, kPi, gap2, couplings);
  const Conditional<FieldState> c1 = send_and_detect(vacuum, a1);
  if (!c1.possible()) throw ZeroProbability("first atom is never detected in |g> for these pulse areas");
  const Conditional<FieldState> c2 = send_and_detect(*c1.state, a2);
  if (!c2.possible()) throw ZeroProbability("second atom is never detected in |g> for these pulse areas");
  return {c1.probability * c2.probability, *c2.state,
          gap1.phase_g + gap2.phase_g - gap1.phase_e - gap2.phase_e};
}

// A third atom, |e> in and |g> out, with pulse areas defaulting to pi in both
// cavities: a|2,0> + b|0,2> -> proportional to a e^{-i phi_g''}|3,0> - b e^{-i phi_e''}|0,3>.
// `probability` is conditional on `input` (normalized).
inline PreparedField prepare_303(const FieldState& input, const GapConfig& gap3 = {}, double g1tau1 = kPi,
                                 double g2tau2 = kPi, const Couplings& couplings = {}) {
  if (std::abs(input.norm_squared() - 1.0) > 1e-9) throw InvalidArgument("prepare_303 needs a normalized input field");
  const FieldState field = detail::pad_field(input, std::max<std::size_t>(4, input.dim(0) + 1),
                                             std::max<std::size_t>(4, input.dim(1) + 1));
  const AtomRecord a3 = detail::excited_to_ground(g1tau1, g2tau2, gap3, couplings);
  const Conditional<FieldState> c = send_and_detect(field, a3);
  if (!c.possible()) throw ZeroProbability("third atom is never detected in |g> for these pulse areas");
  const cplx a30 = c.state->at({3, 0}), a03 = c.state->at({0, 3});
  double theta = 0.0;
  if (std::abs(a30) > 1e-12 && std::abs(a03) > 1e-12) theta = std::arg(a03 / a30);
  return {c.probability, *c.state, theta};
}

// Target state (|k,0> + e^{i theta}|0,k>)/sqrt2 in an n1 x n2 truncation.
inline FieldState noon_state(std::size_t photons, double theta, std::size_t n1, std::size_t n2) {
  if (photons == 0) throw InvalidArgument("noon_state needs at least one photon");
  const double h = 1.0 / std::sqrt(2.0);
  return field_from_amplitudes(n1, n2, {{{photons, 0}, h}, {{0, photons}, h * std::exp(kI * theta)}});
}

// ---------------------------------------------------------------------------
// Entanglement transfer

// Two atoms, both entering |g>, cross cavities holding alpha|0,1> + beta|1,0>.
// The first atom's sequence and then the second's act on the joint state; no
// atom is measured. Result indices: (atom1, atom2, n, mu).
inline TwoAtomState transfer_entanglement(cplx alpha, cplx beta, const SequenceConfig& first,
                                          const SequenceConfig& second) {
  if (std::abs(std::norm(alpha) + std::norm(beta) - 1.0) > 1e-12) {
    throw InvalidArgument("transfer input needs |alpha|^2 + |beta|^2 = 1");
  }
  first.validate();
  second.validate();
  // One photon in total; the third level is headroom and stays empty.
  const FieldState field = field_from_amplitudes(3, 3, {{{0, 1}, alpha}, {{1, 0}, beta}});
  const JointState after1 = run_sequence(tensor(AtomAmplitudes::in(Level::ground), field), first);

  const std::size_t nf = 9;
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(4 * nf));
  for (Level l1 : {Level::ground, Level::excited}) {
    const FieldState branch = field_component(after1, l1);
    const JointState after2 = run_sequence(tensor(AtomAmplitudes::in(Level::ground), branch), second);
    const std::size_t a1 = static_cast<std::size_t>(l1);
    out.segment(static_cast<Eigen::Index>(a1 * 2 * nf), static_cast<Eigen::Index>(2 * nf)) = after2.amplitudes();
  }
  return TwoAtomState({2, 2, 3, 3}, std::move(out));
}

// Reduced state of the atom pair (indices (atom1, atom2)).
inline DensityMatrix atom_pair_state(const TwoAtomState& s) { return partial_trace(s, {0, 1}); }

}  // namespace ramseylab
