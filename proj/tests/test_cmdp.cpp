#include "spidr/cmdp.hpp"
#include "spidr/cmdp_lp.hpp"
#include "spidr/envs/chain.hpp"
#include "spidr/envs/random_cmdp.hpp"

#include <gtest/gtest.h>

using namespace spidr;

namespace {

TabularCMDP absorbing(double reward, double gamma) {
  TabularCMDP m(1, 1);
  m.transition(0, 0) = 1.0;
  m.reward(0, 0) = reward;
  m.initial(0) = 1.0;
  m.discount = gamma;
  return m;
}

envs::Example1 chain() { return envs::build_example1({0.25, 0.9}); }

TabularPolicy choose_at_start(int action) {
  return TabularPolicy::deterministic({action, 0, 0}, 2);
}

/// Truncated power series (1-gamma) sum_t gamma^t rho' P^t, spread over pi.
Matrix series_occupancy(const TabularCMDP& m, const TabularPolicy& pi, int terms) {
  const Matrix kernel = policy_kernel(m, pi);
  Eigen::RowVectorXd dist = m.initial.transpose();
  Vector state_occ = Vector::Zero(m.num_states);
  double weight = 1.0 - m.discount;
  for (int t = 0; t < terms; ++t) {
    state_occ += weight * dist.transpose();
    dist = dist * kernel;
    weight *= m.discount;
  }
  Matrix out(m.num_states, m.num_actions);
  for (int s = 0; s < m.num_states; ++s) out.row(s) = state_occ(s) * pi.probs.row(s);
  return out;
}

}  // namespace

TEST(EvaluatePolicy, RealChainCautiousAction) {
  const auto ex = chain();
  const auto e = evaluate_policy(ex.real_env, choose_at_start(envs::kChainCautiousAction));
  EXPECT_NEAR(e.objective, 6.75, 1e-12);
  EXPECT_NEAR(e.constraint, 6.75, 1e-12);
}

TEST(EvaluatePolicy, ZeroRewardGivesZeroObjective) {
  Rng rng(3);
  auto m = envs::random_cmdp(5, 2, 1, 0.9, rng);
  m.reward.setZero();
  EXPECT_EQ(evaluate_policy(m, TabularPolicy::uniform(5, 2)).objective, 0.0);
}

TEST(EvaluatePolicy, AbsorbingGeometricSeries) {
  const auto e = evaluate_policy(absorbing(1.0, 0.9), TabularPolicy::uniform(1, 1));
  EXPECT_NEAR(e.values.v_reward(0), 10.0, 1e-12);
}

TEST(EvaluatePolicy, RejectsShapeMismatch) {
  EXPECT_THROW(evaluate_policy(chain().real_env, TabularPolicy::uniform(2, 2)), std::invalid_argument);
}

TEST(EvaluatePolicy, BellmanResidualAndBoundsOnRandomInstances) {
  Rng rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    const auto m = envs::random_cmdp(7, 3, 2, 0.95, rng);
    const auto pi = envs::random_policy(7, 3, rng);
    const auto e = evaluate_policy(m, pi);
    EXPECT_LT(bellman_residual(m, pi, e.values), 1e-10);
    EXPECT_GE(e.values.v_reward.minCoeff(), -1e-12);
    EXPECT_LE(e.values.v_reward.maxCoeff(), m.r_max / (1 - m.discount) + 1e-9);
    EXPECT_LE(e.values.v_cost.maxCoeff(), m.c_max / (1 - m.discount) + 1e-9);
  }
}

TEST(Occupancy, SingleAbsorbingPair) {
  const auto d = occupancy(absorbing(0.0, 0.5), TabularPolicy::uniform(1, 1));
  EXPECT_NEAR(d.weights(0, 0), 1.0, 1e-14);
}

TEST(Occupancy, StartStateCarriesOneMinusGamma) {
  const auto ex = chain();
  Rng rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    const auto d = occupancy(ex.real_env, envs::random_policy(3, 2, rng));
    EXPECT_NEAR(d.weights.row(envs::kChainStart).sum(), 0.1, 1e-12);
    EXPECT_NEAR(d.weights.sum(), 1.0, 1e-10);
  }
}

TEST(Occupancy, MatchesTruncatedSeriesAndValueDuality) {
  Rng rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    const auto m = envs::random_cmdp(5, 3, 1, 0.9, rng);
    const auto pi = envs::random_policy(5, 3, rng);
    const auto d = occupancy(m, pi);
    EXPECT_LT((d.weights - series_occupancy(m, pi, 200)).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_NEAR(evaluate_policy(m, pi).constraint, d.expect(m.cost) / (1 - m.discount), 1e-8);
  }
}

TEST(CmdpLp, AveragedSimChainPicksGreedyAction) {
  const auto ex = chain();
  const auto sim = ex.sim_family.build({});
  const auto result = solve_cmdp_lp(sim);
  ASSERT_TRUE(result.feasible());
  EXPECT_NEAR(result.policy.probs(envs::kChainStart, envs::kChainGreedyAction), 1.0, 1e-9);
  EXPECT_NEAR(result.objective, 6.75, 1e-9);
  EXPECT_NEAR(result.constraint, 6.75, 1e-9);
}

TEST(CmdpLp, SlackBudgetGivesUnconstrainedOptimum) {
  Rng rng(23);
  for (int trial = 0; trial < 10; ++trial) {
    auto m = envs::random_cmdp(5, 3, 1, 0.9, rng);
    m.budget = m.c_max / (1 - m.discount);
    const auto lp = solve_cmdp_lp(m);
    ASSERT_TRUE(lp.feasible());
    // Value iteration oracle for the unconstrained optimum.
    Vector v = Vector::Zero(5);
    for (int it = 0; it < 2000; ++it) v = action_values(m, m.reward, v).rowwise().maxCoeff();
    EXPECT_NEAR(lp.objective, m.initial.dot(v), 1e-7);
  }
}

TEST(CmdpLp, ForcedAbstention) {
  // Two states: action 0 earns (and costs) 1 in place, action 1 jumps to a zero-reward sink.
  TabularCMDP m(2, 2);
  m.discount = 0.9;
  m.initial << 1.0, 0.0;
  m.transition(m.index(0, 0), 0) = 1.0;
  m.transition(m.index(0, 1), 1) = 1.0;
  m.transition(m.index(1, 0), 1) = 1.0;
  m.transition(m.index(1, 1), 1) = 1.0;
  m.reward(0, 0) = 1.0;
  m.cost = m.reward;
  m.budget = 0.0;
  const auto lp = solve_cmdp_lp(m);
  ASSERT_TRUE(lp.feasible());
  EXPECT_NEAR(lp.objective, 0.0, 1e-10);
}

TEST(CmdpLp, InfeasibleIsAResultNotAnException) {
  auto m = absorbing(1.0, 0.9);
  m.cost(0, 0) = 1.0;
  m.budget = 1.0;
  const auto lp = solve_cmdp_lp(m);
  EXPECT_EQ(lp.status, LpStatus::infeasible);
  EXPECT_FALSE(lp.feasible());
}

TEST(CmdpLp, PolicyValuesMatchAndPerturbationsDoNotImprove) {
  Rng rng(29);
  for (int trial = 0; trial < 15; ++trial) {
    auto m = envs::random_cmdp(5, 3, 1, 0.9, rng);
    m.budget = evaluate_policy(m, TabularPolicy::uniform(5, 3)).constraint;
    const auto lp = solve_cmdp_lp(m);
    ASSERT_TRUE(lp.feasible());
    const auto e = evaluate_policy(m, lp.policy);
    EXPECT_NEAR(e.objective, lp.objective, 1e-7);
    EXPECT_NEAR(e.constraint, lp.constraint, 1e-7);
    EXPECT_LE(lp.constraint, m.budget + 1e-7);
    for (int s = 0; s < 5; ++s)
      for (int a = 0; a < 3; ++a) {
        TabularPolicy mixed = lp.policy;
        mixed.probs.row(s) *= 0.99;
        mixed.probs(s, a) += 0.01;
        const auto pe = evaluate_policy(m, mixed);
        if (pe.constraint <= m.budget) EXPECT_LE(pe.objective, lp.objective + 1e-9);
      }
  }
}

TEST(CmdpLp, OptimumIsMonotoneInBudget) {
  Rng rng(31);
  for (int trial = 0; trial < 8; ++trial) {
    auto m = envs::random_cmdp(5, 3, 1, 0.9, rng);
    double previous = -1.0;
    for (int k = 0; k <= 10; ++k) {
      m.budget = k;
      const auto lp = solve_cmdp_lp(m);
      if (!lp.feasible()) continue;
      EXPECT_GE(lp.objective, previous - 1e-9);
      previous = lp.objective;
    }
  }
}

TEST(CmdpLp, PolicyRecoveryUsesUniformOnUnvisitedStates) {
  Matrix w(2, 2);
  w << 0.3, 0.1, 0.0, 0.0;
  const auto pi = policy_from_occupancy(w);
  EXPECT_NEAR(pi.probs(0, 0), 0.75, 1e-15);
  EXPECT_NEAR(pi.probs(1, 1), 0.5, 1e-15);
}

TEST(Telescoping, IdenticalDynamicsGiveZero) {
  Rng rng(37);
  const auto m = envs::random_cmdp(6, 3, 1, 0.9, rng);
  EXPECT_NEAR(telescoping_residual(m, m, envs::random_policy(6, 3, rng)), 0.0, 1e-12);
}

TEST(Telescoping, ChainSimToRealGap) {
  const auto ex = chain();
  const auto sim = ex.sim_family.build({});
  const auto pi = choose_at_start(envs::kChainGreedyAction);
  EXPECT_LT(telescoping_residual(sim, ex.real_env, pi), 1e-8);
  EXPECT_NEAR(evaluate_policy(ex.real_env, pi).constraint - evaluate_policy(sim, pi).constraint, 2.25, 1e-12);
}

TEST(Telescoping, RandomPairs) {
  Rng rng(41);
  for (int trial = 0; trial < 50; ++trial) {
    const auto p = envs::random_cmdp(6, 3, 1, 0.9, rng);
    const auto q = envs::resample_kernel(p, rng);
    EXPECT_LT(telescoping_residual(p, q, envs::random_policy(6, 3, rng)), 1e-8);
  }
}

TEST(Telescoping, RejectsDifferentRewards) {
  Rng rng(43);
  const auto p = envs::random_cmdp(4, 2, 1, 0.9, rng);
  auto q = p;
  q.reward(0, 0) += 0.1;
  EXPECT_THROW(telescoping_residual(p, q, TabularPolicy::uniform(4, 2)), std::invalid_argument);
}

TEST(TabularCMDPValidate, FlagsBrokenRows) {
  auto m = chain().real_env;
  EXPECT_NO_THROW(m.validate());
  m.transition(0, 0) += 0.01;
  EXPECT_THROW(m.validate(), std::invalid_argument);
}
