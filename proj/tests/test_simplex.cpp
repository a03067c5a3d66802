#include "spidr/simplex.hpp"

#include <gtest/gtest.h>

using namespace spidr;

TEST(Simplex, TextbookMaximization) {
  // max 3x + 5y s.t. x <= 4, 2y <= 12, 3x + 2y <= 18  -> (2, 6), 36
  LinearProgram lp;
  lp.A = Eigen::MatrixXd(3, 2);
  lp.A << 1, 0, 0, 2, 3, 2;
  lp.b = Eigen::Vector3d(4, 12, 18);
  lp.c = Eigen::Vector2d(3, 5);
  lp.sense.assign(3, RowSense::less_equal);
  const auto sol = solve_lp(lp);
  ASSERT_EQ(sol.status, LpStatus::optimal);
  EXPECT_NEAR(sol.objective, 36.0, 1e-10);
  EXPECT_NEAR(sol.x(0), 2.0, 1e-10);
  EXPECT_NEAR(sol.x(1), 6.0, 1e-10);
}

TEST(Simplex, EqualityAndGreaterEqualRows) {
  // max -x - y s.t. x + y = 3, x >= 1 -> objective -3
  LinearProgram lp;
  lp.A = Eigen::MatrixXd(2, 2);
  lp.A << 1, 1, 1, 0;
  lp.b = Eigen::Vector2d(3, 1);
  lp.c = Eigen::Vector2d(-1, -1);
  lp.sense = {RowSense::equal, RowSense::greater_equal};
  const auto sol = solve_lp(lp);
  ASSERT_EQ(sol.status, LpStatus::optimal);
  EXPECT_NEAR(sol.objective, -3.0, 1e-10);
  EXPECT_GE(sol.x(0), 1.0 - 1e-10);
}

TEST(Simplex, DetectsInfeasibility) {
  LinearProgram lp;
  lp.A = Eigen::MatrixXd(2, 1);
  lp.A << 1, 1;
  lp.b = Eigen::Vector2d(1, 2);
  lp.c = Eigen::VectorXd::Ones(1);
  lp.sense = {RowSense::less_equal, RowSense::greater_equal};
  EXPECT_EQ(solve_lp(lp).status, LpStatus::infeasible);
}

TEST(Simplex, DetectsUnboundedness) {
  LinearProgram lp;
  lp.A = Eigen::MatrixXd(1, 2);
  lp.A << 1, -1;
  lp.b = Eigen::VectorXd::Ones(1);
  lp.c = Eigen::Vector2d(1, 0);
  lp.sense = {RowSense::less_equal};
  EXPECT_EQ(solve_lp(lp).status, LpStatus::unbounded);
}

TEST(Simplex, NegativeRightHandSideAndRedundantEqualities) {
  // -x - y = -2 twice (redundant), max x -> x = 2
  LinearProgram lp;
  lp.A = Eigen::MatrixXd(2, 2);
  lp.A << -1, -1, -1, -1;
  lp.b = Eigen::Vector2d(-2, -2);
  lp.c = Eigen::Vector2d(1, 0);
  lp.sense = {RowSense::equal, RowSense::equal};
  const auto sol = solve_lp(lp);
  ASSERT_EQ(sol.status, LpStatus::optimal);
  EXPECT_NEAR(sol.x(0), 2.0, 1e-10);
}

TEST(Simplex, DeterministicAcrossCalls) {
  LinearProgram lp;
  lp.A = Eigen::MatrixXd::Ones(1, 3);
  lp.b = Eigen::VectorXd::Ones(1);
  lp.c = Eigen::VectorXd::Ones(3);
  lp.sense = {RowSense::less_equal};
  const auto a = solve_lp(lp);
  const auto b = solve_lp(lp);
  EXPECT_EQ(a.x, b.x);
  EXPECT_EQ(a.x(0), 1.0);  // lowest index wins the tie
}
