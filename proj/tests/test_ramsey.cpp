#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "oracle.hpp"
#include "ramseylab/ramsey.hpp"

using namespace ramseylab;

namespace {

const double kRoot2 = std::sqrt(2.0);

SequenceConfig random_sequence(std::mt19937_64& rng, double detuning_ratio) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double g1 = 0.3 + u(rng), g2 = 0.3 + u(rng);
  GapConfig gap{2.0 * u(rng), 6.0 * u(rng), 6.0 * u(rng)};
  return make_sequence(g1, kPi * u(rng) / g1, g2, kPi * u(rng) / g2, detuning_ratio * g1, gap);
}

FieldState zero_one_pair(cplx alpha, double theta) {
  return tensor(make_zero_one(alpha, 3), make_zero_one(alpha * std::polar(1.0, theta), 3));
}

double phase_visibility(const AtomAmplitudes& atom, const FieldState& field, SequenceConfig seq, Level detect) {
  RamseyScenario sc;
  sc.atom = atom;
  sc.field = [field](double) { return field; };
  sc.sequence = seq;
  sc.detect = detect;
  const auto grid = uniform_grid(0.0, 2.0 * kPi, 64);
  return visibility(fringe_scan(sc, ScanVariable::phase, grid));
}

}  // namespace

TEST(Sequence, matches_expm_oracle_property) {
  std::mt19937_64 rng(37);
  const double ratios[] = {0.0, 1.0, -1.0, 10.0, -10.0};
  for (int trial = 0; trial < 40; ++trial) {
    const JointState in = oracle::random_joint(rng, 4, 4);
    const SequenceConfig seq = random_sequence(rng, ratios[trial % 5]);
    const JointState a = run_sequence(in, seq);
    const JointState b = oracle::sequence(in, seq);
    EXPECT_LT((a.amplitudes() - b.amplitudes()).cwiseAbs().maxCoeff(), 1e-12) << "trial " << trial;
  }
}

TEST(Sequence, examples) {
  const FieldState vac = tensor(make_fock(0, 2), make_fock(0, 2));
  const JointState s = run_sequence(AtomAmplitudes::in(Level::ground), vac, make_sequence(1.0, 0.7, 1.3, 0.4, 0.5));
  EXPECT_NEAR(std::abs(s(0, 0, 0)), 1.0, 1e-15);

  const FieldState one = tensor(make_fock(1, 2), make_fock(0, 2));
  const JointState after1 = zone_propagate(tensor(AtomAmplitudes::in(Level::ground), one), {1.0, kPi / 2, 0.0, 1});
  EXPECT_NEAR(std::norm(after1(1, 0, 0)), 1.0, 1e-15);

  EXPECT_THROW(run_sequence(AtomAmplitudes{1.0, 1.0}, vac, SequenceConfig{}), InvalidArgument);
  SequenceConfig bad = make_sequence(1.0, 1.0, 1.0, 1.0, 0.5);
  bad.zone2.detuning = 0.6;
  EXPECT_THROW(run_sequence(AtomAmplitudes::in(Level::ground), vac, bad), InvalidArgument);
  bad = make_sequence(1.0, 1.0, 1.0, 1.0);
  bad.zone2.mode = 1;
  EXPECT_THROW(run_sequence(AtomAmplitudes::in(Level::ground), vac, bad), InvalidArgument);
}

TEST(Sequence, vacuum_deexcitation) {
  // Equal zones, resonance: P_ge = sin^2(g tau) (1 + cos^2(g tau)).
  const FieldState vac = tensor(make_fock(0, 2), make_fock(0, 2));
  for (double gt : {0.1, kPi / 4, 1.0, 2.5}) {
    for (double phi : {0.0, 1.0, 3.0}) {
      const SequenceConfig seq = make_sequence(1.0, gt, 1.0, gt, 0.0, {0.3, phi, 0.0});
      const double p = prob_deexcite(run_sequence(AtomAmplitudes::in(Level::excited), vac, seq));
      const double s2 = std::pow(std::sin(gt), 2), c2 = std::pow(std::cos(gt), 2);
      EXPECT_NEAR(p, s2 * (1.0 + c2), 1e-14);
      EXPECT_NEAR(closed_form_p_ge(vac, seq), p, 1e-14);
    }
  }
  const SequenceConfig quarter = make_sequence(1.0, kPi / 4, 1.0, kPi / 4);
  EXPECT_NEAR(closed_form_p_ge(vac, quarter), 0.75, 1e-15);
}

TEST(Sequence, closed_forms_match_simulation_property) {
  std::mt19937_64 rng(41);
  const double ratios[] = {0.0, 1.0, -1.0, 10.0, -10.0};
  for (int trial = 0; trial < 60; ++trial) {
    const FieldState f = oracle::random_field(rng, 4, 4);
    const SequenceConfig seq = random_sequence(rng, ratios[trial % 5]);
    const JointState from_g = run_sequence(AtomAmplitudes::in(Level::ground), f, seq);
    const JointState from_e = run_sequence(AtomAmplitudes::in(Level::excited), f, seq);
    EXPECT_NEAR(closed_form_p_eg(f, seq), prob_excite(from_g), 1e-10) << "trial " << trial;
    EXPECT_NEAR(closed_form_p_ge(f, seq), prob_deexcite(from_e), 1e-10) << "trial " << trial;
    EXPECT_NEAR(prob_excite(from_g) + prob_deexcite(from_g), 1.0, 1e-12);
  }
}

TEST(Sequence, fock_fields_never_fringe_property) {
  std::mt19937_64 rng(43);
  std::uniform_int_distribution<int> photons(0, 4);
  for (int trial = 0; trial < 20; ++trial) {
    const auto n = static_cast<std::size_t>(photons(rng)), mu = static_cast<std::size_t>(photons(rng));
    const FieldState f = tensor(make_fock(n, 6), make_fock(mu, 6));
    const SequenceConfig seq = random_sequence(rng, static_cast<double>(trial % 5) - 2.0);
    EXPECT_LT(phase_visibility(AtomAmplitudes::in(Level::ground), f, seq, Level::excited), 1e-10);
    EXPECT_FALSE(interference_functional(f, seq).fringes);
    EXPECT_EQ(interference_functional(f, seq).value, cplx(0.0));
  }
}

TEST(Sequence, interference_functional_examples) {
  const SequenceConfig seq = make_sequence(1.0, 0.6, 1.0, 0.9);
  const FieldState fock_coh = tensor(make_fock(2, 5), make_coherent(0.8, 5).state);
  EXPECT_FALSE(interference_functional(fock_coh, seq).fringes);
  const FieldState bell = field_from_amplitudes(3, 3, {{{1, 0}, 1.0 / kRoot2}, {{0, 1}, 1.0 / kRoot2}});
  const InterferenceTerm t = interference_functional(bell, seq);
  EXPECT_TRUE(t.fringes);
  // F_{1,0} F*_{0,1} X_{1,0} Y*_{0,1} = (1/2) S_0*(t1) C_0*(t2) C_{-1}*(t1) S_0(t2)
  EXPECT_NEAR(std::abs(t.value), 0.5 * std::sin(0.6) * std::cos(0.9) * std::sin(0.9), 1e-15);
}

TEST(Sequence, interference_functional_predicts_fringes_property) {
  std::mt19937_64 rng(47);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    FieldState f = oracle::random_field(rng, 4, 4);
    if (trial % 3 == 0) f = tensor(make_fock(trial % 4 == 0 ? 1 : 2, 14), make_coherent(0.5, 14).state);
    const SequenceConfig seq = make_sequence(1.0, 0.2 + 2.0 * u(rng), 1.0, 0.2 + 2.0 * u(rng), 0.0);
    const bool predicted = interference_functional(f, seq).fringes;
    const double v = phase_visibility(AtomAmplitudes::in(Level::ground), f, seq, Level::excited);
    EXPECT_EQ(predicted, v > 1e-8) << "trial " << trial << " visibility " << v;
  }
}

TEST(Sequence, weak_coherent_fringe_law) {
  // Zero-one pair: P_eg = |a|^2/(1+|a|^2)^2 (1 + sin(pi/sqrt2) cos(theta + phi)).
  for (double a : {0.05, 0.3, 1.0}) {
    for (double theta : {0.0, 0.7}) {
      for (double phi : {0.0, 0.4, 2.0, kPi}) {
        const SequenceConfig seq = make_sequence(1.0, kPi / 2, 1.0, kPi / (2.0 * kRoot2), 0.0, {0.0, phi, 0.0});
        const double p = prob_excite(run_sequence(AtomAmplitudes::in(Level::ground), zero_one_pair(a, theta), seq));
        const double law = a * a / std::pow(1.0 + a * a, 2) * (1.0 + std::sin(kPi / kRoot2) * std::cos(theta + phi));
        EXPECT_NEAR(p, law, 1e-14);
      }
    }
  }
}

TEST(Sequence, weak_coherent_visibility) {
  RamseyScenario sc;
  sc.field = [](double theta) { return zero_one_pair(0.1, theta); };
  sc.sequence = make_sequence(1.0, kPi / 2, 1.0, kPi / (2.0 * kRoot2));
  const auto grid = uniform_grid(0.0, 2.0 * kPi, 64);
  EXPECT_NEAR(visibility(fringe_scan(sc, ScanVariable::phase, grid)), 0.7956932015674809, 1e-12);
  EXPECT_NEAR(visibility(fringe_scan(sc, ScanVariable::field_phase, grid)), 0.7956932015674809, 1e-12);
  // A genuinely coherent field with small amplitude sits just below the ideal.
  sc.field = [](double theta) {
    return tensor(make_coherent(0.05, 8).state, make_coherent(std::polar(0.05, theta), 8).state);
  };
  const double v = visibility(fringe_scan(sc, ScanVariable::phase, grid));
  EXPECT_NEAR(v, std::sin(kPi / kRoot2), 5e-3);
}

TEST(Classical, examples) {
  const double alpha = 1e-6, g = 1.0;
  const double om = classical_rabi(g, alpha);
  std::vector<double> p;
  for (double phi : uniform_grid(0.0, 2.0 * kPi, 64)) p.push_back(classical_prob(om, kPi / 2, kPi / (2.0 * kRoot2), 0.0, phi));
  EXPECT_NEAR(visibility(p), kRoot2 / 1.5, 1e-9);
  // (|a|^2 pi^2/4)(3/2 + sqrt2 cos(theta + phi)) at small |a|
  EXPECT_NEAR(classical_prob(om, kPi / 2, kPi / (2.0 * kRoot2), 0.3, 0.2) / (alpha * alpha * kPi * kPi / 4),
              1.5 + kRoot2 * std::cos(0.5), 1e-9);

  p.clear();
  for (double phi : uniform_grid(0.0, 2.0 * kPi, 64)) p.push_back(classical_prob(0.8, 0.9, 0.9, 0.0, phi));
  EXPECT_NEAR(visibility(p), 1.0, 1e-9);
  EXPECT_EQ(classical_prob(0.0, 1.0, 1.0, 0.0, 0.3), 0.0);
  EXPECT_DOUBLE_EQ(classical_rabi(2.0, 3.0), 12.0);
  EXPECT_DOUBLE_EQ(classical_rabi(2.0, 3.0, 1.0), 6.0);
}

TEST(Classical, unitarity_of_both_initial_levels) {
  // For a classical drive P(e | g) = P(g | e) at mirrored phases.
  for (double d : {0.0, 0.7, -2.0}) {
    const double a = classical_prob(1.3, 0.8, 1.1, 0.4, 0.9, d, 0.6, Level::ground);
    const double b = classical_prob(1.3, 0.8, 1.1, 0.4, 0.9, d, 0.6, Level::excited);
    EXPECT_GE(a, 0.0);
    EXPECT_LE(a, 1.0);
    EXPECT_NEAR(a, b, 1e-14);
  }
}

TEST(Classical, coherent_field_converges_to_classical_limit) {
  // Fixed pulse areas Omega_R tau = pi/2 and pi/3 with Omega_R = 2 g |alpha|.
  auto deviation = [](double nbar, std::size_t dim) {
    const double a = std::sqrt(nbar), g = 1.0, om = classical_rabi(g, a);
    const double tau1 = kPi / 2 / om, tau2 = kPi / 3 / om;
    double worst = 0.0;
    for (double phi : {0.0, 1.0, 2.0, 3.0}) {
      const FieldState f = tensor(make_coherent(a, dim).state, make_coherent(a, dim).state);
      const SequenceConfig seq = make_sequence(g, tau1, g, tau2, 0.0, {0.0, phi, 0.0});
      const double quantum = closed_form_p_eg(f, seq);
      worst = std::max(worst, std::abs(quantum - classical_prob(om, tau1, tau2, 0.0, phi)));
    }
    return worst;
  };
  const double d25 = deviation(25.0, 70), d100 = deviation(100.0, 170);
  EXPECT_LT(d100, d25);
  EXPECT_LT(d25, 0.05);
  EXPECT_LT(d100, 0.02);
}

TEST(Nonclassical, formula_matches_simulation_property) {
  std::mt19937_64 rng(53);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    const double a = 3.0 * u(rng), t1 = kPi * u(rng), t2 = kPi * u(rng), phi = 2.0 * kPi * u(rng);
    const SequenceConfig seq = make_sequence(1.0, t1, 1.0, t2, 0.0, {0.0, phi, 0.0});
    const double p = prob_excite(run_sequence(AtomAmplitudes::in(Level::ground), zero_one_pair(a, 0.0), seq));
    EXPECT_NEAR(nonclassical_fringe(a, t1, t2, phi), p, 1e-13) << "trial " << trial;
  }
}

TEST(Nonclassical, examples) {
  const double t2 = kPi / (2.0 * kRoot2);
  for (double phi : {0.0, 1.0, 2.5}) {
    const double law = 0.25 * (1.0 + std::sin(kPi / kRoot2) * std::cos(phi));
    EXPECT_NEAR(nonclassical_fringe(1.0, kPi / 2, t2, phi), law, 1e-14);
  }
  EXPECT_NEAR(nonclassical_fringe(1e-9, 1.0, 2.0, 0.3), 0.0, 1e-15);
  auto vis = [](double a) {
    std::vector<double> p;
    for (double phi : uniform_grid(0.0, 2.0 * kPi, 64)) p.push_back(nonclassical_fringe(a, kPi / 2, kPi / (2.0 * std::sqrt(2.0)), phi));
    return visibility(p);
  };
  EXPECT_NEAR(vis(0.3), vis(3.0), 1e-10);
  EXPECT_NEAR(vis(0.3), 0.7956932015674809, 1e-12);
}

TEST(SingleCavity, examples) {
  const ModeState vac = make_fock(0, 2);
  for (double phi : {0.0, 0.5, 2.0, kPi}) {
    EXPECT_NEAR(single_cavity_prob(vac, 1.0, kPi / 4, kPi / 4, phi), std::pow(std::cos(phi / 2), 2), 1e-15);
  }
  std::mt19937_64 rng(59);
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::VectorXcd a(5);
    for (auto& x : a) x = {std::normal_distribution<double>()(rng), std::normal_distribution<double>()(rng)};
    const ModeState f = ModeState::from_unnormalized({5}, a);
    EXPECT_NEAR(single_cavity_prob(f, 1.0, 0.7, 0.7, kPi), 0.0, 1e-15);
  }
  std::vector<double> p;
  for (double phi : uniform_grid(0.0, 2.0 * kPi, 64)) p.push_back(single_cavity_prob(make_fock(2, 4), 1.0, 0.5, 0.5, phi));
  EXPECT_GT(visibility(p), 0.99);
}

TEST(SingleCavity, formula_matches_simulation_property) {
  std::mt19937_64 rng(61);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    Eigen::VectorXcd a(6);
    for (auto& x : a) x = {u(rng) - 0.5, u(rng) - 0.5};
    const ModeState f = ModeState::from_unnormalized({6}, a);
    const double t1 = 2.0 * u(rng), t2 = 2.0 * u(rng), phi = 6.0 * u(rng), d = (trial % 3) * 1.5;
    EXPECT_NEAR(single_cavity_prob(f, 1.0, t1, t2, phi, d), single_cavity_simulate(f, 1.0, t1, t2, phi, d), 1e-12)
        << "trial " << trial;
  }
}

TEST(SingleCavity, coherent_reduced_form) {
  for (double phi : {0.0, 1.0, 2.0}) {
    const ModeState c = make_coherent(1.5, 40).state;
    EXPECT_NEAR(single_cavity_coherent_prob(2.25, 0.6, phi), single_cavity_prob(c, 1.0, 0.6, 0.6, phi), 1e-12);
  }
}

TEST(Fringes, visibility_examples) {
  EXPECT_EQ(visibility(std::vector<double>{0.3, 0.3, 0.3}), 0.0);
  EXPECT_EQ(visibility(std::vector<double>{0.0, 0.0}), 0.0);
  std::vector<double> p;
  for (double phi : uniform_grid(0.0, 2.0 * kPi, 64)) p.push_back(2.0 + std::cos(phi));
  EXPECT_NEAR(visibility(p), 0.5, 1e-15);
  EXPECT_THROW(visibility(std::vector<double>{}), InvalidArgument);
}

TEST(Fringes, grid_shapes) {
  const auto open = uniform_grid(0.0, 2.0 * kPi, 64);
  EXPECT_EQ(open.size(), 64u);
  EXPECT_EQ(open.front(), 0.0);
  EXPECT_NEAR(open[32], kPi, 1e-15);
  EXPECT_LT(open.back(), 2.0 * kPi);
  const auto closed = uniform_grid(0.0, 1.0, 11, true);
  EXPECT_DOUBLE_EQ(closed.back(), 1.0);
  EXPECT_THROW(uniform_grid(0.0, 1.0, 1), InvalidArgument);
}

TEST(Fringes, scans_are_thread_independent) {
  RamseyScenario sc;
  sc.field = [](double theta) {
    return tensor(make_coherent(0.6, 14).state, make_coherent(std::polar(0.6, theta), 14).state);
  };
  sc.sequence = make_sequence(1.0, 0.9, 1.2, 0.7, 0.8, {1.0, 0.0, 0.0});
  const auto grid = uniform_grid(0.0, 2.0 * kPi, 37);
  for (auto var : {ScanVariable::phase, ScanVariable::detuning_gap, ScanVariable::field_phase}) {
    const FringeCurve a = fringe_scan(sc, var, grid, 1);
    const FringeCurve b = fringe_scan(sc, var, grid, 4);
    EXPECT_EQ(a.p, b.p);
    EXPECT_EQ(a.variable, to_string(var));
  }
  EXPECT_EQ(fringe_scan(sc, ScanVariable::phase, grid).quantity, "P_e");
}

TEST(Fringes, detuning_gap_scan_matches_phase_scan) {
  // Only Delta T + phi enters the single-atom probabilities.
  RamseyScenario sc;
  sc.field = [](double) { return zero_one_pair(0.4, 0.0); };
  sc.sequence = make_sequence(1.0, 0.8, 1.0, 0.6, 2.0);
  const auto grid = uniform_grid(0.0, 2.0 * kPi, 16);
  const FringeCurve a = fringe_scan(sc, ScanVariable::phase, grid);
  const FringeCurve b = fringe_scan(sc, ScanVariable::detuning_gap, grid);
  for (std::size_t i = 0; i < grid.size(); ++i) EXPECT_NEAR(a.p[i], b.p[i], 1e-12);
}

TEST(Fringes, errors) {
  RamseyScenario sc;
  const auto grid = uniform_grid(0.0, 1.0, 4);
  EXPECT_THROW(fringe_scan(sc, ScanVariable::phase, grid), InvalidArgument);
  sc.field = [](double) { return tensor(make_fock(0, 2), make_fock(0, 2)); };
  EXPECT_THROW(fringe_scan(sc, ScanVariable::detuning_gap, grid), InvalidArgument);
  sc.field = [](double) { return tensor(make_fock(1, 2), make_fock(0, 2)); };
  sc.sequence = make_sequence(1.0, 1.0, 1.0, 1.0);
  sc.atom = AtomAmplitudes::in(Level::excited);
  EXPECT_THROW(fringe_scan(sc, ScanVariable::phase, grid, 3), TruncationOverflow);
}
