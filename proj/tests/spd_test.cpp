#include "covsteer/spd.hpp"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "covsteer/bridge_solver.hpp"
#include "covsteer/errors.hpp"
#include "fixtures.hpp"

namespace covsteer {
namespace {

using testing::eye;
using testing::mat;

TEST(SqrtSpdTest, Diagonal) {
  EXPECT_LT((sqrt_spd(mat({{4, 0}, {0, 9}})) - mat({{2, 0}, {0, 3}})).norm(), 1e-15);
}

TEST(SqrtSpdTest, SquaresBack) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::MatrixXd S = random_spd(rng, 1 + trial % 8, 1e4);
    const Eigen::MatrixXd R = sqrt_spd(S);
    EXPECT_LT(relative_error(R * R, S), 1e-12);
    EXPECT_LT(asymmetry(R), 1e-15 * (1.0 + R.norm()));
    EXPECT_LT(relative_error(inv_sqrt_spd(S) * R, eye(S.rows())), 1e-10);
  }
}

TEST(SqrtSpdTest, RejectsIndefinite) {
  EXPECT_THROW(sqrt_spd(mat({{1, 0}, {0, -1}})), DefinitenessError);
}

TEST(RandomSpdTest, RespectsConditionBound) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::MatrixXd S = random_spd(rng, 1 + trial % 8, 1e4);
    EXPECT_GT(min_eigenvalue(S), 0.0);
    EXPECT_LE(condition_number(S), 1e4 * (1.0 + 1e-8));
  }
}

TEST(CheckedInverseTest, IllConditionedThrows) {
  EXPECT_THROW(checked_inverse(mat({{1, 0}, {0, 1e-14}}), 1e12, "M"), ConditioningError);
  EXPECT_LT((checked_inverse(mat({{2, 0}, {0, 4}}), 1e12, "M") - mat({{0.5, 0}, {0, 0.25}})).norm(),
            1e-15);
}

TEST(RelativeErrorTest, ZeroReferenceIsAbsolute) {
  EXPECT_DOUBLE_EQ(relative_error(mat({{3, 4}}), mat({{0, 0}})), 5.0);
  EXPECT_DOUBLE_EQ(relative_error(mat({{2}}), mat({{1}})), 1.0);
}

TEST(SquareRootIdentityTest, ScalarIdentityOne) {
  const auto sides = lemma1_sides(mat({{1}}), mat({{1}}));
  EXPECT_NEAR(sides.lhs(0, 0), std::sqrt(5.0) / 2.0, 1e-14);
  EXPECT_NEAR(sides.rhs(0, 0), std::sqrt(5.0) / 2.0, 1e-14);
}

TEST(SquareRootIdentityTest, ScalarFourAndOne) {
  const auto sides = lemma1_sides(mat({{4}}), mat({{1}}));
  EXPECT_NEAR(sides.lhs(0, 0), std::sqrt(17.0) / 8.0, 1e-14);
  EXPECT_NEAR(sides.rhs(0, 0), std::sqrt(17.0) / 8.0, 1e-14);
}

TEST(SquareRootIdentityTest, RandomPairs) {
  std::mt19937_64 rng(2016);
  std::uniform_real_distribution<double> exponent(0.0, 4.0);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index n = 1 + trial % 8;
    const Eigen::MatrixXd X = random_spd(rng, n, std::pow(10.0, exponent(rng)));
    const Eigen::MatrixXd Y = random_spd(rng, n, std::pow(10.0, exponent(rng)));
    EXPECT_LT(lemma1_residual(X, Y), 1e-10) << "trial " << trial;
  }
}

TEST(SquareRootIdentityTest, RejectsNonSpd) {
  EXPECT_THROW(lemma1_sides(mat({{-1}}), mat({{1}})), DefinitenessError);
}

}  // namespace
}  // namespace covsteer
