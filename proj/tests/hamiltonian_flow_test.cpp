#include "covsteer/hamiltonian_flow.hpp"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "covsteer/errors.hpp"
#include "covsteer/spd.hpp"
#include "fixtures.hpp"

namespace covsteer {
namespace {

using testing::eye;
using testing::mat;

TEST(HamiltonianMatrixTest, ScalarAssembly) {
  EXPECT_EQ(hamiltonian_matrix(testing::scalar_system(), 0.5), mat({{0, -1}, {0, 0}}));
}

TEST(HamiltonianMatrixTest, InertialAssembly) {
  const Eigen::MatrixXd expected =
      mat({{0, 1, 0, 0}, {0, 0, 0, -1}, {-1, 0, 0, 0}, {0, -1, -1, 0}});
  EXPECT_EQ(hamiltonian_matrix(testing::inertial_system(1.0), 0.0), expected);
}

TEST(HamiltonianMatrixTest, WeightedInput) {
  EXPECT_LT((hamiltonian_matrix(testing::scalar_system(1.0, 4.0), 0.3) -
             mat({{0, -0.25}, {-1, 0}})).norm(), 1e-15);
}

TEST(PropagateTest, SingleCheckpointAtStartIsIdentity) {
  const auto out = propagate(testing::inertial_system(1.0), 0.2, 0.2, {0.2});
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].full(), eye(4));
  EXPECT_EQ(symplectic_residual(out[0]), 0.0);
  EXPECT_EQ(ratio_T(out[0]), Eigen::MatrixXd::Zero(2, 2));
}

TEST(PropagateTest, NilpotentScalar) {
  const BlockTransition bt = transition(testing::scalar_system(), 0.0, 1.0);
  EXPECT_NEAR(bt.phi11(0, 0), 1.0, 1e-14);
  EXPECT_NEAR(bt.phi12(0, 0), -1.0, 1e-14);
  EXPECT_NEAR(bt.phi21(0, 0), 0.0, 1e-14);
  EXPECT_NEAR(bt.phi22(0, 0), 1.0, 1e-14);
  EXPECT_NEAR(ratio_T(bt)(0, 0), -1.0, 1e-14);
}

TEST(PropagateTest, HyperbolicScalar) {
  const BlockTransition bt = transition(testing::scalar_system(1.0), 0.0, 1.0);
  EXPECT_NEAR(bt.phi11(0, 0), std::cosh(1.0), 1e-12);
  EXPECT_NEAR(bt.phi12(0, 0), -std::sinh(1.0), 1e-12);
  EXPECT_NEAR(bt.phi21(0, 0), -std::sinh(1.0), 1e-12);
  EXPECT_NEAR(bt.phi22(0, 0), std::cosh(1.0), 1e-12);
  EXPECT_NEAR(ratio_T(bt)(0, 0), -std::tanh(1.0), 1e-12);
  EXPECT_LT(symplectic_residual(bt), 1e-12);
}

TEST(PropagateTest, ExactHyperbolicBlocksHaveNoResidual) {
  const double c = std::cosh(1.0), s = std::sinh(1.0);
  const auto bt = BlockTransition::from_full(0.0, 1.0, mat({{c, -s}, {-s, c}}));
  EXPECT_LT(symplectic_residual(bt), 1e-15);
}

TEST(PropagateTest, MatchesMatrixExponential) {
  const auto sys = testing::inertial_system(1.0);
  const Eigen::MatrixXd M = hamiltonian_matrix(sys, 0.0);
  const auto out = propagate(sys, 0.0, 1.0, {0.25, 0.5, 1.0});
  ASSERT_EQ(out.size(), 3u);
  for (const auto& bt : out)
    EXPECT_LT(relative_error(bt.full(), testing::expm(M, bt.t)), 1e-12) << bt.t;
}

TEST(PropagateTest, AppendsFinalTime) {
  const auto out = propagate(testing::scalar_system(), 0.0, 1.0, {0.5});
  ASSERT_EQ(out.size(), 2u);
  EXPECT_DOUBLE_EQ(out.back().t, 1.0);
}

TEST(PropagateTest, RejectsUnsortedCheckpoints) {
  EXPECT_THROW(propagate(testing::scalar_system(), 0.0, 1.0, {0.5, 0.2}), DomainError);
  EXPECT_THROW(propagate(testing::scalar_system(), 0.1, 1.0, {0.0}), DomainError);
}

TEST(RatioTest, SingularBlockIsReported) {
  const auto bt = BlockTransition::from_full(0.0, 1.0, mat({{0, -1}, {1, 0}}));
  EXPECT_THROW(ratio_T(bt), SingularityError);
}

TEST(TransitionStructureTest, InertialResidualBelowTolerance) {
  const auto out = propagate(testing::inertial_system(1.0), 0.0, 1.0,
                             {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0});
  for (const auto& bt : out) {
    EXPECT_LT(symplectic_residual(bt), 1e-9);
    EXPECT_LT(std::abs(transition_determinant(bt) - 1.0), 1e-9);
  }
}

// Random smooth systems with Q positive semidefinite: symplectic, unit
// determinant, T negative definite and nonincreasing.
TEST(TransitionStructureTest, RandomSystemProperties) {
  std::mt19937_64 rng(77);
  std::normal_distribution<double> normal;
  std::vector<double> grid;
  for (int k = 1; k <= 10; ++k) grid.push_back(0.1 * k);
  for (int trial = 0; trial < 12; ++trial) {
    const Eigen::Index n = 1 + trial % 4;
    Eigen::MatrixXd A(n, n), B(n, n), G(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) {
        A(i, j) = normal(rng);
        B(i, j) = normal(rng);
        G(i, j) = normal(rng);
      }
    B += 2.0 * eye(n);
    const Eigen::MatrixXd a1 = A.transpose();
    auto Amap = CoefficientMap::closed_form(
        [A, a1](double t) -> Eigen::MatrixXd { return A + t * a1; }, n, n);
    const TimeVaryingLinearSystem sys(Amap, CoefficientMap::constant(B),
                                      CoefficientMap::constant(G * G.transpose()));
    const auto out = propagate(sys, 0.0, 1.0, grid, {2000});
    Eigen::MatrixXd prev;
    for (const auto& bt : out) {
      // round-off in the identities grows with the size of the blocks
      const double scale = std::max(1.0, bt.full().squaredNorm());
      EXPECT_LT(symplectic_residual(bt), 1e-12 * scale);
      EXPECT_LT(std::abs(transition_determinant(bt) - 1.0), 1e-12 * scale);
      const Eigen::MatrixXd T = ratio_T(bt);
      EXPECT_LT(max_eigenvalue(T), 0.0) << "trial " << trial << " t=" << bt.t;
      if (prev.size() != 0) EXPECT_LE(max_eigenvalue(T - prev), 1e-10);
      prev = T;
    }
  }
}

TEST(TransitionStructureTest, TimeVaryingMatchesFineIntegration) {
  std::mt19937_64 rng(3);
  const auto sys = testing::random_time_varying_system(rng, 3);
  const BlockTransition coarse = transition(sys, 0.1, 0.9, {500});
  const BlockTransition fine = transition(sys, 0.1, 0.9, {8000});
  EXPECT_LT(relative_error(coarse.full(), fine.full()), 1e-9);
  EXPECT_LT(symplectic_residual(coarse), 1e-9);
}

}  // namespace
}  // namespace covsteer
