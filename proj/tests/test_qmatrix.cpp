#include <gtest/gtest.h>

#include "qkdlab/qmatrix.hpp"
#include "random_states.hpp"

namespace qkdlab {
namespace {

using testing::ket_state;
using testing::random_density;

double max_abs_diff(const Matrix& a, const Matrix& b) { return (a - b).cwiseAbs().maxCoeff(); }

DensityMatrix zero_state() { return ket_state(qubit::zero()); }
DensityMatrix plus_state() { return ket_state(qubit::plus()); }
DensityMatrix phi_state() { return DensityMatrix(qubit::epr() * qubit::epr().adjoint(), {2, 2}); }

TEST(DensityMatrix, RejectsNonHermitian) {
  Matrix m(2, 2);
  m << 0.5, 0.1, 0.0, 0.5;
  EXPECT_THROW(DensityMatrix{m}, ValidationError);
}

TEST(DensityMatrix, RejectsWrongTrace) {
  EXPECT_THROW(DensityMatrix(Matrix::Identity(2, 2)), ValidationError);
}

TEST(DensityMatrix, RejectsNegativeEigenvalue) {
  Matrix m(2, 2);
  m << 1.1, 0.0, 0.0, -0.1;
  EXPECT_THROW(DensityMatrix{m}, ValidationError);
}

TEST(DensityMatrix, ClampsTinyNegativeEigenvalues) {
  Matrix m(2, 2);
  m << 1.0 + 5e-10, 0.0, 0.0, -5e-10;
  const DensityMatrix rho(m);
  EXPECT_GE(rho.eigenvalues().minCoeff(), 0.0);
  EXPECT_NEAR(rho.matrix().trace().real(), 1.0, 1e-12);
}

TEST(DensityMatrix, RejectsBadSubsystemFactorization) {
  EXPECT_THROW(DensityMatrix(Matrix::Identity(4, 4) / 4.0, {2, 3}), ValidationError);
  EXPECT_THROW(DensityMatrix(Matrix::Identity(4, 4) / 4.0, {1, 4}), ValidationError);
}

TEST(Tensor, BasisProduct) {
  const auto out = tensor(zero_state(), zero_state());
  EXPECT_LT(max_abs_diff(out.matrix(), DensityMatrix::basis_state(4, 0).matrix()), 1e-15);
  EXPECT_EQ(out.subsystem_dims(), (std::vector<std::size_t>{2, 2}));
}

TEST(Tensor, MaximallyMixedFactors) {
  const auto out = tensor(DensityMatrix::maximally_mixed(2), DensityMatrix::maximally_mixed(2));
  EXPECT_LT(max_abs_diff(out.matrix(), Matrix::Identity(4, 4) / 4.0), 1e-15);
}

TEST(Tensor, TraceMultiplicative) {
  const auto out = tensor(phi_state(), zero_state());
  EXPECT_EQ(out.dim(), 8u);
  EXPECT_NEAR(out.matrix().trace().real(), 1.0, 1e-12);
  EXPECT_EQ(out.subsystem_dims(), (std::vector<std::size_t>{2, 2, 2}));
}

TEST(Tensor, CapacityGuard) {
  const auto big = DensityMatrix::maximally_mixed(64);
  const auto bigger = tensor(big, big);  // 4096 is allowed
  EXPECT_EQ(bigger.dim(), 4096u);
  EXPECT_THROW(tensor(bigger, zero_state()), CapacityError);
}

TEST(PartialTrace, MaximallyEntangledReduction) {
  const auto reduced = partial_trace(phi_state(), {0});
  EXPECT_LT(max_abs_diff(reduced.matrix(), Matrix::Identity(2, 2) / 2.0), 1e-15);
}

TEST(PartialTrace, ProductFactorRecovery) {
  Rng rng(11);
  const auto rho = random_density(rng, 2);
  const auto sigma = random_density(rng, 3);
  const auto joint = tensor(rho, sigma);
  EXPECT_LT(max_abs_diff(partial_trace(joint, {0}).matrix(), rho.matrix()), 1e-13);
  EXPECT_LT(max_abs_diff(partial_trace(joint, {1}).matrix(), sigma.matrix()), 1e-13);
}

TEST(PartialTrace, BasisProductSecondFactor) {
  const auto reduced = partial_trace(tensor(zero_state(), zero_state()), {1});
  EXPECT_LT(max_abs_diff(reduced.matrix(), zero_state().matrix()), 1e-15);
}

TEST(PartialTrace, MiddleSubsystemOfThree) {
  Rng rng(12);
  const auto a = random_density(rng, 2);
  const auto b = random_density(rng, 3);
  const auto c = random_density(rng, 2);
  const auto abc = tensor(tensor(a, b), c);
  EXPECT_LT(max_abs_diff(partial_trace(abc, {1}).matrix(), b.matrix()), 1e-13);
  EXPECT_LT(max_abs_diff(partial_trace(abc, {0, 2}).matrix(), tensor(a, c).matrix()), 1e-13);
}

TEST(PartialTrace, IndexErrors) {
  EXPECT_THROW(partial_trace(phi_state(), {2}), DimensionError);
  EXPECT_THROW(partial_trace(phi_state(), {}), DimensionError);
}

TEST(Purify, PureInput) {
  const auto psi = purify(zero_state());
  const auto reduced = partial_trace(DensityMatrix::from_pure(psi), {0});
  EXPECT_LT(max_abs_diff(reduced.matrix(), zero_state().matrix()), 1e-12);
}

TEST(Purify, MaximallyMixedGivesMaximallyEntangled) {
  const auto psi = purify(DensityMatrix::maximally_mixed(2));
  const auto joint = DensityMatrix::from_pure(psi);
  EXPECT_LT(max_abs_diff(partial_trace(joint, {0}).matrix(), Matrix::Identity(2, 2) / 2.0), 1e-12);
  EXPECT_LT(max_abs_diff(partial_trace(joint, {1}).matrix(), Matrix::Identity(2, 2) / 2.0), 1e-12);
}

TEST(Purify, DiagonalSpectrumRecovered) {
  const std::vector<double> probs{0.9, 0.1};
  const auto psi = purify(DensityMatrix::diagonal(probs));
  const auto ev = partial_trace(DensityMatrix::from_pure(psi), {0}).eigenvalues();
  EXPECT_NEAR(ev[0], 0.1, 1e-12);
  EXPECT_NEAR(ev[1], 0.9, 1e-12);
}

TEST(Purify, RandomStatesRoundTrip) {
  Rng rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    const auto dim = 1 + static_cast<Eigen::Index>(rng.below(8));
    const auto rank = 1 + static_cast<Eigen::Index>(rng.below(dim));
    const auto rho = random_density(rng, dim, rank);
    const auto psi = purify(rho);
    ASSERT_EQ(psi.dim(), rho.dim() * rho.dim());
    if (dim == 1) continue;
    const auto reduced = partial_trace(DensityMatrix::from_pure(psi), {0});
    ASSERT_LT(max_abs_diff(reduced.matrix(), rho.matrix()), 1e-9) << "trial " << trial;
  }
}

TEST(ApplyChannel, Identity) {
  Rng rng(5);
  const auto rho = random_density(rng, 3);
  const auto out = apply_channel(rho, KrausChannel::identity(3));
  EXPECT_LT(max_abs_diff(out.matrix(), rho.matrix()), 1e-15);
}

TEST(ApplyChannel, PauliTwirlDepolarizes) {
  const KrausChannel twirl({0.5 * Matrix::Identity(2, 2), 0.5 * qubit::pauli_x(), 0.5 * qubit::pauli_y(),
                            0.5 * qubit::pauli_z()});
  Rng rng(6);
  for (int i = 0; i < 10; ++i) {
    const auto out = apply_channel(random_density(rng, 2), twirl);
    EXPECT_LT(max_abs_diff(out.matrix(), Matrix::Identity(2, 2) / 2.0), 1e-14);
  }
}

TEST(ApplyChannel, ZDephasingOfPlus) {
  const KrausChannel dephase({zero_state().matrix(), ket_state(qubit::one()).matrix()});
  const auto out = apply_channel(plus_state(), dephase);
  EXPECT_LT(max_abs_diff(out.matrix(), Matrix::Identity(2, 2) / 2.0), 1e-15);
}

TEST(ApplyChannel, DimensionMismatch) {
  EXPECT_THROW(apply_channel(phi_state(), KrausChannel::identity(2)), DimensionError);
}

TEST(KrausChannel, RejectsNonTracePreserving) {
  EXPECT_THROW(KrausChannel({0.5 * Matrix::Identity(2, 2)}), ValidationError);
}

TEST(ApplyChannel, RandomChannelsPreserveTraceAndPositivity) {
  Rng rng(7);
  for (int i = 0; i < 50; ++i) {
    const auto dim = 2 + static_cast<Eigen::Index>(rng.below(3));
    const auto ch = testing::random_channel(rng, dim, 1 + static_cast<Eigen::Index>(rng.below(4)));
    const auto out = apply_channel(random_density(rng, dim), ch);
    EXPECT_NEAR(out.matrix().trace().real(), 1.0, 1e-10);
    EXPECT_GE(out.eigenvalues().minCoeff(), -1e-12);
  }
}

TEST(Measure, MaximallyMixedComputational) {
  const auto out = measure(DensityMatrix::maximally_mixed(2), Povm::computational(2));
  ASSERT_EQ(out.size(), 2u);
  EXPECT_NEAR(out[0].probability, 0.5, 1e-15);
  EXPECT_NEAR(out[1].probability, 0.5, 1e-15);
  EXPECT_LT(max_abs_diff(out[0].post_state->matrix(), zero_state().matrix()), 1e-14);
  EXPECT_LT(max_abs_diff(out[1].post_state->matrix(), ket_state(qubit::one()).matrix()), 1e-14);
}

TEST(Measure, ZeroProbabilityOutcomeHasNoPostState) {
  const auto out = measure(zero_state(), Povm::computational(2));
  EXPECT_NEAR(out[0].probability, 1.0, 1e-15);
  EXPECT_NEAR(out[1].probability, 0.0, 1e-15);
  EXPECT_FALSE(out[1].post_state.has_value());
}

TEST(Measure, PlusInComputationalBasis) {
  const auto out = measure(plus_state(), Povm::computational(2));
  EXPECT_NEAR(out[0].probability, 0.5, 1e-15);
  EXPECT_LT(max_abs_diff(out[0].post_state->matrix(), zero_state().matrix()), 1e-14);
  EXPECT_LT(max_abs_diff(out[1].post_state->matrix(), ket_state(qubit::one()).matrix()), 1e-14);
}

TEST(Measure, DimensionMismatch) {
  EXPECT_THROW(measure(phi_state(), Povm::computational(2)), DimensionError);
}

TEST(Measure, RandomPovmProbabilitiesSumToOne) {
  Rng rng(8);
  for (int i = 0; i < 100; ++i) {
    const auto dim = 2 + static_cast<Eigen::Index>(rng.below(3));
    const auto povm = testing::random_povm(rng, dim, 2 + static_cast<Eigen::Index>(rng.below(4)));
    const auto out = measure(random_density(rng, dim), povm);
    double total = 0.0;
    for (const auto& o : out) {
      EXPECT_GE(o.probability, 0.0);
      total += o.probability;
    }
    EXPECT_NEAR(total, 1.0, 1e-9);
  }
}

TEST(BlockState, DenseMatchesBlocks) {
  BlockState s;
  s.accumulate("b", Matrix::Identity(2, 2) * 0.25);
  s.accumulate("a", Matrix::Identity(1, 1) * 0.5);
  EXPECT_NEAR(s.trace(), 1.0, 1e-15);
  EXPECT_EQ(s.dim(), 3u);
  const Matrix dense = s.to_matrix();
  EXPECT_NEAR(dense(0, 0).real(), 0.5, 1e-15);  // label "a" sorts first
  EXPECT_NEAR(dense(2, 2).real(), 0.25, 1e-15);
  EXPECT_NO_THROW(s.validate());
  EXPECT_THROW(s.accumulate("a", Matrix::Identity(2, 2)), DimensionError);
}

}  // namespace
}  // namespace qkdlab
