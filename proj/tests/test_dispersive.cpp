#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "oracle.hpp"
#include "ramseylab/dispersive.hpp"

using namespace ramseylab;

namespace {

const double kHalf = std::sqrt(0.5);

// g^2 tau / Delta = pi/2 in both cavities.
DispersiveConfig quarter_turn(double omega_atom = 0.0) {
  DispersiveConfig c;
  c.g1 = 1.0;
  c.g2 = 1.0;
  c.detuning = 20.0;
  c.tau1 = 10.0 * kPi;
  c.tau2 = 10.0 * kPi;
  c.gap = 3.0;
  c.omega_field = 0.0;
  c.omega_atom = omega_atom;
  return c;
}

}  // namespace

TEST(Dispersive, ground_atom_rotates_coherent_fields) {
  const DispersiveConfig cfg = quarter_turn();
  const cplx a{0.8, 0.3}, b{-0.5, 0.6};
  const FieldState f = tensor(make_coherent(a, 20).state, make_coherent(b, 20).state);
  const JointState out = dispersive_propagate(tensor(AtomAmplitudes::in(Level::ground), f), cfg);
  const FieldState want = tensor(make_coherent(kI * a, 20).state, make_coherent(kI * b, 20).state);
  EXPECT_GT(fidelity(field_component(out, Level::ground), want), 1.0 - 1e-12);
}

TEST(Dispersive, excited_atom_rotates_the_other_way) {
  const DispersiveConfig cfg = quarter_turn();
  const cplx a{0.8, 0.3}, b{-0.5, 0.6};
  const FieldState f = tensor(make_coherent(a, 20).state, make_coherent(b, 20).state);
  const JointState out = dispersive_propagate(tensor(AtomAmplitudes::in(Level::excited), f), cfg);
  const FieldState want = tensor(make_coherent(-kI * a, 20).state, make_coherent(-kI * b, 20).state);
  EXPECT_GT(fidelity(field_component(out, Level::excited), want), 1.0 - 1e-12);
}

TEST(Dispersive, no_interaction_leaves_free_phases) {
  DispersiveConfig cfg;
  cfg.detuning = 5.0;
  cfg.gap = 2.0;
  cfg.omega_field = 0.7;
  cfg.omega_atom = 1.9;
  const JointState in = tensor(AtomAmplitudes::in(Level::excited), make_fock(2, 4), make_fock(1, 4));
  const JointState out = dispersive_propagate(in, cfg);
  EXPECT_NEAR(std::abs(out(1, 2, 1) - std::exp(-kI * (3.0 * 0.7 + 0.5 * 1.9) * 2.0)), 0.0, 1e-15);
  cfg.free_evolution = false;
  EXPECT_NEAR(std::abs(dispersive_propagate(in, cfg)(1, 2, 1) - std::exp(-kI * (0.5 * 1.9) * 2.0)), 0.0, 1e-15);
}

TEST(Dispersive, fock_phase_pattern) {
  DispersiveConfig cfg;
  cfg.g1 = 0.3;
  cfg.g2 = 0.5;
  cfg.detuning = 4.0;
  cfg.tau1 = 1.2;
  cfg.tau2 = 0.7;
  const double s1 = 0.09 * 1.2 / 4.0, s2 = 0.25 * 0.7 / 4.0;
  const JointState e = dispersive_propagate(tensor(AtomAmplitudes::in(Level::excited), make_fock(3, 5), make_fock(2, 5)), cfg);
  EXPECT_NEAR(std::abs(e(1, 3, 2) - std::exp(-kI * (4.0 * s1 + 3.0 * s2))), 0.0, 1e-15);
  const JointState g = dispersive_propagate(tensor(AtomAmplitudes::in(Level::ground), make_fock(3, 5), make_fock(2, 5)), cfg);
  EXPECT_NEAR(std::abs(g(0, 3, 2) - std::exp(kI * (3.0 * s1 + 2.0 * s2))), 0.0, 1e-15);
}

TEST(Dispersive, preserves_magnitudes_property) {
  std::mt19937_64 rng(103);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const JointState in = oracle::random_joint(rng, 5, 5);
    DispersiveConfig cfg;
    cfg.g1 = u(rng);
    cfg.g2 = u(rng);
    cfg.detuning = (trial % 2 ? 1.0 : -1.0) * (5.0 + 10.0 * u(rng));
    cfg.tau1 = 10.0 * u(rng);
    cfg.tau2 = 10.0 * u(rng);
    cfg.gap = u(rng);
    cfg.omega_field = 3.0 * u(rng);
    cfg.omega_atom = 3.0 * u(rng);
    const JointState out = dispersive_propagate(in, cfg);
    EXPECT_LT((out.amplitudes().cwiseAbs() - in.amplitudes().cwiseAbs()).cwiseAbs().maxCoeff(), 1e-15);
  }
}

TEST(Dispersive, coherent_covariance_property) {
  std::mt19937_64 rng(107);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    DispersiveConfig cfg;
    cfg.detuning = 8.0;
    cfg.tau1 = 5.0 * u(rng);
    cfg.tau2 = 5.0 * u(rng);
    cfg.gap = u(rng);
    cfg.omega_field = u(rng);
    const double t = cfg.total_time();
    const cplx a = std::polar(1.2 * u(rng), 6.0 * u(rng)), b = std::polar(1.2 * u(rng), 6.0 * u(rng));
    const auto ca = make_coherent(a, 24), cb = make_coherent(b, 24);
    const JointState out = dispersive_propagate(tensor(AtomAmplitudes::in(Level::ground), tensor(ca.state, cb.state)), cfg);
    const cplx rot = std::exp(-kI * cfg.omega_field * t);
    const FieldState want = tensor(make_coherent(a * rot * std::exp(kI * cfg.shift1()), 24).state,
                                   make_coherent(b * rot * std::exp(kI * cfg.shift2()), 24).state);
    EXPECT_GT(fidelity(field_component(out, Level::ground), want), 1.0 - 1e-10);
  }
}

TEST(Dispersive, photon_distribution_invariant) {
  const FieldState f = tensor(make_coherent({0.9, -0.4}, 16).state, make_coherent(1.1, 16).state);
  const JointState out = dispersive_propagate(tensor(AtomAmplitudes{kHalf, kHalf}, f), quarter_turn(0.3));
  for (Level l : {Level::ground, Level::excited}) {
    const FieldState branch = field_component(out, l).normalized();
    for (std::size_t mode : {0u, 1u}) {
      const auto p = photon_distribution(branch, mode), q = photon_distribution(f, mode);
      for (std::size_t n = 0; n < p.size(); ++n) EXPECT_NEAR(p[n], q[n], 1e-14);
    }
  }
}

TEST(Dispersive, validity_and_config_errors) {
  DispersiveConfig cfg = quarter_turn();
  EXPECT_NEAR(dispersive_validity(cfg, 9), 10.0 / 400.0, 1e-16);
  cfg.detuning = 0.0;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  cfg = quarter_turn();
  cfg.readout_time = 1.0;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  cfg = quarter_turn();
  cfg.tau2 = -1.0;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
}

TEST(Cat, ground_detection_gives_product_state) {
  const auto r = prepare_cat(1.0, 1.0, {kHalf, kHalf}, AtomAmplitudes::in(Level::ground), quarter_turn(0.4));
  ASSERT_TRUE(r.possible());
  EXPECT_NEAR(r.probability, 0.5, 1e-12);
  const FieldState want = tensor(make_coherent(kI, 24).state, make_coherent(kI, 24).state);
  EXPECT_GT(fidelity(*r.state, want), 1.0 - 1e-12);
}

TEST(Cat, symmetric_detection_probability_includes_overlap) {
  for (double w0t : {0.0, 0.9, kPi}) {
    for (double amp : {0.5, 1.0}) {
      const DispersiveConfig cfg = quarter_turn(w0t / quarter_turn().total_time());
      const auto r = prepare_cat(amp, amp, {kHalf, kHalf}, {kHalf, kHalf}, cfg);
      const double overlap = std::exp(-2.0 * (2.0 * amp * amp));
      const double want = 0.5 * (1.0 - std::cos(w0t) * overlap);
      EXPECT_NEAR(r.probability, want, 1e-10);
      EXPECT_NEAR(cat_branch(amp, amp, {kHalf, kHalf}, {kHalf, kHalf}, cfg).probability(), want, 1e-15);
    }
  }
  EXPECT_NEAR(std::abs(coherent_overlap(kI, -kI) * coherent_overlap(kI, -kI)), std::exp(-4.0), 1e-16);
  EXPECT_NEAR(std::exp(-4.0), 0.01831563888873418, 1e-17);
}

TEST(Cat, pipeline_reproduces_entangled_coherent_state) {
  const double w0t = 0.7;
  const DispersiveConfig cfg = quarter_turn(w0t / quarter_turn().total_time());
  const cplx a{0.6, 0.8}, b{1.0, 0.0};
  const auto r = prepare_cat(a, b, {kHalf, kHalf}, {kHalf, kHalf}, cfg);
  ASSERT_TRUE(r.possible());
  // e^{i w0 t}|ia, ib> - |-ia, -ib>, i.e. sign -1 with relative phase -w0 t.
  EXPECT_GT(cat_fidelity(*r.state, kI * a, kI * b, -1, -w0t), 1.0 - 1e-9);
  EXPECT_LT(cat_fidelity(*r.state, kI * a, kI * b, +1, -w0t), 0.9);
  const FieldState analytic = cat_branch(a, b, {kHalf, kHalf}, {kHalf, kHalf}, cfg).state(24, 24);
  EXPECT_GT(fidelity(*r.state, analytic), 1.0 - 1e-12);
}

TEST(Cat, branch_probabilities_sum_to_one_property) {
  std::mt19937_64 rng(109);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    DispersiveConfig cfg = quarter_turn(u(rng));
    cfg.tau1 = 30.0 * u(rng);
    const double c = u(rng), x = u(rng), ph = 6.0 * u(rng);
    const AtomAmplitudes in{std::sqrt(c), std::polar(std::sqrt(1 - c), 1.0)};
    const AtomAmplitudes d1{std::sqrt(x), std::polar(std::sqrt(1 - x), ph)};
    const AtomAmplitudes d2{-std::polar(std::sqrt(1 - x), -ph), std::sqrt(x)};
    const cplx a = std::polar(1.2 * u(rng), 6.0 * u(rng)), b = std::polar(1.2 * u(rng), 6.0 * u(rng));
    const double p1 = prepare_cat(a, b, in, d1, cfg).probability, p2 = prepare_cat(a, b, in, d2, cfg).probability;
    EXPECT_NEAR(p1 + p2, 1.0, 1e-10);
    EXPECT_NEAR(p1, cat_branch(a, b, in, d1, cfg).probability(), 1e-10);
  }
}

TEST(Cat, parity_signature) {
  // |a,a> - |-a,-a> keeps only odd total photon number.
  const FieldState odd = cat_state(0.9, 0.9, -1, 0.0, 20, 20);
  const FieldState even = cat_state(0.9, 0.9, +1, 0.0, 20, 20);
  for (std::size_t n = 0; n < 20; ++n)
    for (std::size_t mu = 0; mu < 20; ++mu) {
      if ((n + mu) % 2 == 0) {
        EXPECT_LT(std::abs(odd(n, mu)), 1e-16);
      } else {
        EXPECT_LT(std::abs(even(n, mu)), 1e-16);
      }
    }
  // The prepared state at w0 t = 0 is the odd one, up to the i rotation.
  const auto r = prepare_cat(0.9, 0.9, {kHalf, kHalf}, {kHalf, kHalf}, quarter_turn(0.0), 20);
  for (std::size_t n = 0; n < 20; ++n)
    for (std::size_t mu = 0; mu < 20; ++mu) {
      if ((n + mu) % 2 == 0) {
        EXPECT_LT(std::abs(r.state->at({n, mu})), 1e-15);
      }
    }
}

TEST(Cat, degenerate_and_impossible_cases) {
  const auto r = prepare_cat(0.0, 0.0, {kHalf, kHalf}, {kHalf, -kHalf}, quarter_turn(0.0), 6);
  // Both paths are the vacuum; the pi phase on the |e> path turns the minus
  // detection into constructive interference.
  ASSERT_TRUE(r.possible());
  EXPECT_NEAR(r.probability, 1.0, 1e-15);
  EXPECT_GT(fidelity(*r.state, tensor(make_fock(0, 6), make_fock(0, 6))), 1.0 - 1e-15);
  EXPECT_NEAR(cat_fidelity(tensor(make_fock(0, 6), make_fock(0, 6)), 0.0, 0.0, 1, 0.0), 1.0, 1e-15);
  EXPECT_THROW(cat_state(0.0, 0.0, -1, 0.0, 4, 4), ZeroProbability);
  EXPECT_THROW(cat_state(1.0, 1.0, 0, 0.0, 4, 4), InvalidArgument);
}
