#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "qkdlab/bounds.hpp"
#include "qkdlab/random.hpp"

namespace qkdlab {
namespace {

constexpr double kPi = std::numbers::pi;

ProtocolConfig config(double threshold = 0.0) {
  ProtocolConfig cfg;
  cfg.n = 4;
  cfg.m_out = 1;
  cfg.qber_threshold = threshold;
  cfg.seed = 1;
  return cfg;
}

BlockState classical_eve(int value) {
  BlockState e;
  e.accumulate("copy", DensityMatrix::basis_state(2, value).matrix());
  return e;
}

// Eve holds an orthogonal copy of a uniform one-bit key.
QkdRunRecord perfect_copy_record() {
  QkdRunRecord rec;
  rec.length_dist = {{1, 1.0}};
  for (int v = 0; v < 2; ++v) {
    const std::string k(1, static_cast<char>('0' + v));
    rec.key_table[{k, k}] = 0.5;
    rec.eve_states.emplace(KeyPair{k, k}, classical_eve(v));
  }
  return rec;
}

// Keys agree but are always "0"; Eve learns nothing.
QkdRunRecord constant_key_record(double p_key) {
  QkdRunRecord rec;
  rec.length_dist = {{0, 1.0 - p_key}, {1, p_key}};
  BlockState abort;
  abort.accumulate("abort", Matrix::Identity(1, 1));
  BlockState blank;
  blank.accumulate("x", Matrix::Identity(1, 1));
  rec.key_table = {{{"", ""}, 1.0 - p_key}, {{"0", "0"}, p_key}};
  rec.eve_states = {{{"", ""}, abort}, {{"0", "0"}, blank}};
  return rec;
}

QkdRunRecord always_abort_record() {
  QkdRunRecord rec;
  rec.length_dist = {{0, 1.0}};
  BlockState abort;
  abort.accumulate("abort", Matrix::Identity(1, 1));
  rec.key_table = {{{"", ""}, 1.0}};
  rec.eve_states = {{{"", ""}, abort}};
  return rec;
}

TEST(Mu1, Examples) {
  EXPECT_NEAR(mu1_uniformity(run_protocol(config(), EveStrategy::none())), 0.0, 1e-9);
  EXPECT_NEAR(mu1_uniformity(constant_key_record(0.3)), 0.3, 1e-15);
  EXPECT_NEAR(mu1_uniformity(constant_key_record(1.0)), 1.0, 1e-15);
  EXPECT_EQ(mu1_uniformity(always_abort_record()), 0.0);
}

TEST(Mu2, Examples) {
  const auto none = run_protocol(config(), EveStrategy::none());
  EXPECT_NEAR(mu2_privacy(none, PrivacyMeasure::kChi), 0.0, 1e-9);
  EXPECT_NEAR(mu2_privacy(none, PrivacyMeasure::kFamilyAccessible), 0.0, 1e-9);
  const auto copy = perfect_copy_record();
  EXPECT_NEAR(mu2_privacy(copy, PrivacyMeasure::kChi), 1.0, 1e-12);
  EXPECT_NEAR(mu2_privacy(copy, PrivacyMeasure::kFamilyAccessible), 1.0, 1e-9);
}

TEST(Mu2, FamilyNeverExceedsChi) {
  MeasurementFamilyConfig info;
  info.refinement_rounds = 1;
  for (double p : {0.1, 0.5, 0.9}) {
    const auto rec = run_protocol(config(0.5), EveStrategy::intercept_resend(p));
    EXPECT_LE(mu2_privacy(rec, PrivacyMeasure::kFamilyAccessible, info), mu2_privacy(rec, PrivacyMeasure::kChi) + 1e-8);
  }
  for (double t : {0.3, 0.9, 1.4}) {
    const auto rec = run_protocol(config(0.5), EveStrategy::entangling_probe(t));
    EXPECT_LE(mu2_privacy(rec, PrivacyMeasure::kFamilyAccessible, info), mu2_privacy(rec, PrivacyMeasure::kChi) + 1e-8);
  }
}

TEST(EpsComposable, Examples) {
  const auto gs = build_game_states(run_protocol(config(), EveStrategy::none()));
  EXPECT_NEAR(eps_composable(gs), 0.0, 1e-9);
  GameStates self = gs;
  self.rho_qkd = self.rho_ideal;
  EXPECT_EQ(eps_composable(self), 0.0);
}

TEST(EpsPrivacy, Examples) {
  const auto none = run_protocol(config(), EveStrategy::none());
  EXPECT_NEAR(eps_privacy(none, build_game_states(none)).value, 0.0, 1e-12);
  const auto copy = perfect_copy_record();
  const auto priv = eps_privacy(copy, build_game_states(copy));
  EXPECT_NEAR(priv.keywise, 0.5, 1e-12);
  EXPECT_NEAR(priv.value, 0.5, 1e-12);
}

TEST(Triangle, Examples) {
  const auto none = run_protocol(config(), EveStrategy::none());
  for (double t : triangle_decomposition(none, build_game_states(none))) EXPECT_NEAR(t, 0.0, 1e-9);
  const auto copy = perfect_copy_record();
  const auto terms = triangle_decomposition(copy, build_game_states(copy));
  EXPECT_NEAR(terms[0], 0.0, 1e-12);
  EXPECT_NEAR(terms[1], 0.5, 1e-12);
  EXPECT_NEAR(terms[2], 0.0, 1e-12);
}

TEST(AlwaysAbort, EverythingVanishes) {
  const auto rec = always_abort_record();
  const auto gs = build_game_states(rec);
  EXPECT_EQ(mu1_uniformity(rec), 0.0);
  EXPECT_EQ(mu2_privacy(rec, gs, PrivacyMeasure::kChi), 0.0);
  EXPECT_EQ(mu2_fidelity(rec), 0.0);
  EXPECT_NEAR(eps_privacy(rec, gs).value, 0.0, 1e-15);
  EXPECT_NEAR(eps_composable(gs), 0.0, 1e-15);
  const auto report = certify(rec, gs);
  EXPECT_EQ(report.max_m, 0);
  EXPECT_TRUE(report.all_pass());
}

TEST(Certify, NoAttackAllRowsPassWithZeroLhs) {
  const auto report = certify(run_protocol(config(), EveStrategy::none()));
  ASSERT_EQ(report.bound_rows.size(), 4u);
  for (const auto& row : report.bound_rows) {
    EXPECT_TRUE(row.pass) << row.name;
    EXPECT_LE(row.lhs, 1e-7) << row.name;
  }
  EXPECT_TRUE(report.ordering_holds);
}

TEST(Certify, RowFormulas) {
  EXPECT_NEAR(bound1_rhs(1, 0.5), 9.0 * std::sqrt(std::numbers::ln2), 1e-14);
  EXPECT_NEAR(bound2_rhs(2, 0.25), 2.0, 1e-14);
  EXPECT_NEAR(holevo_rhs(0.5), std::sqrt(std::numbers::ln2), 1e-15);
  for (int m = 0; m <= 40; ++m) EXPECT_LE(bound2_rhs(m, 0.3), bound1_rhs(m, 0.3)) << m;
  EXPECT_TRUE(make_row("x", 1.0, 1.0 - 0.5e-7).pass);
  EXPECT_FALSE(make_row("x", 1.0, 1.0 - 2e-7).pass);
}

TEST(Certify, FamilyRowsAreInformational) {
  CertifyConfig cfg;
  cfg.family_rows = true;
  const auto report = certify(run_protocol(config(), EveStrategy::entangling_probe(kPi / 4)), cfg);
  ASSERT_EQ(report.bound_rows.size(), 6u);
  EXPECT_TRUE(report.row("B1_acc").informational);
  EXPECT_TRUE(report.row("B2_acc").informational);
  EXPECT_FALSE(report.row("FID").informational);
  EXPECT_THROW(report.row("nope"), ValidationError);
}

// Values frozen from the brute-force transcript enumerator in
// oracle_record.hpp (full n=4 transcript, no sufficient-statistic reduction;
// about five minutes, so it is not rerun here).
TEST(Pinned, InterceptResendFull) {
  const auto report = certify(run_protocol(config(), EveStrategy::intercept_resend(1.0)));
  EXPECT_NEAR(report.mu1, 0.228515625, 1e-10);
  EXPECT_NEAR(report.mu2_chi, 0.3046875, 1e-10);
  EXPECT_NEAR(report.eps_composable, 0.228515625, 1e-10);
  EXPECT_TRUE(report.all_pass());
}

TEST(Pinned, ProbeQuarterPi) {
  const auto rec = run_protocol(config(), EveStrategy::entangling_probe(kPi / 4));
  const auto priv = eps_privacy(rec, build_game_states(rec));
  EXPECT_NEAR(priv.value, 0.117488923696, 1e-10);
  EXPECT_NEAR(priv.keywise, 0.117488923696, 1e-10);
}

struct Scenario {
  EveStrategy eve;
  double threshold;
};

class AttackScenarios : public ::testing::TestWithParam<Scenario> {};

TEST_P(AttackScenarios, RowsPassAndOrderingHolds) {
  const auto& s = GetParam();
  const auto report = certify(run_protocol(config(s.threshold), s.eve));
  for (const auto& row : report.bound_rows) EXPECT_TRUE(row.pass) << row.name << " " << row.lhs << " > " << row.rhs;
  EXPECT_TRUE(report.ordering_holds);
  EXPECT_GT(report.eps_composable, 0.0);
  EXPECT_LE(report.mu2_acc_lower, report.mu2_chi + 1e-8);
  EXPECT_LE(report.triangle_terms[0] + report.triangle_terms[2], report.mu1 + 1e-7);
  for (double x : {report.mu1, report.mu2_chi, report.mu2_acc_lower, report.mu2_fid, report.eps_privacy}) EXPECT_GE(x, 0.0);
}

INSTANTIATE_TEST_SUITE_P(
    Strategies, AttackScenarios,
    ::testing::Values(Scenario{EveStrategy::intercept_resend(0.25), 0.0}, Scenario{EveStrategy::intercept_resend(0.5), 0.0},
                      Scenario{EveStrategy::intercept_resend(1.0), 0.0}, Scenario{EveStrategy::entangling_probe(kPi / 8), 0.0},
                      Scenario{EveStrategy::entangling_probe(kPi / 4), 0.0},
                      Scenario{EveStrategy::entangling_probe(3 * kPi / 8), 0.0},
                      Scenario{EveStrategy::intercept_resend(0.75), 0.5},
                      Scenario{EveStrategy::entangling_probe(1.2), 0.25}));

TEST(Sweeps, CompositeDistanceGrowsWithProbeAngle) {
  for (double threshold : {0.0, 0.5}) {
    double prev = -1.0;
    for (int i = 0; i < 9; ++i) {
      const auto rec = run_protocol(config(threshold), EveStrategy::entangling_probe(i * kPi / 16));
      const double eps = eps_composable(build_game_states(rec));
      if (i == 0) EXPECT_NEAR(eps, 0.0, 1e-9);
      EXPECT_GE(eps, prev - 1e-9) << "step " << i;
      prev = eps;
    }
  }
}

TEST(Sweeps, CompositeDistanceGrowsWithInterceptProbability) {
  double prev = -1.0;
  for (int i = 0; i <= 10; ++i) {
    const auto rec = run_protocol(config(0.5), EveStrategy::intercept_resend(i / 10.0));
    const double eps = eps_composable(build_game_states(rec));
    EXPECT_GE(eps, prev - 1e-9) << "p=" << i / 10.0;
    prev = eps;
  }
}

}  // namespace
}  // namespace qkdlab
