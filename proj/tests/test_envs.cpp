#include "spidr/envs/cartpole.hpp"
#include "spidr/envs/chain.hpp"
#include "spidr/envs/heatmap.hpp"
#include "spidr/envs/point_goal.hpp"
#include "spidr/envs/random_pair.hpp"

#include <gtest/gtest.h>

#include <numbers>

using namespace spidr;
using namespace spidr::envs;

TEST(WorstCaseChain, BudgetAndKernels) {
  const auto ex = build_example1({0.25, 0.9});
  EXPECT_NEAR(ex.budget, 6.75, 1e-12);
  const auto sim = ex.sim_family.build({});
  EXPECT_EQ(ex.real_env.transition(ex.real_env.index(kChainStart, kChainGreedyAction), kChainCostly), 1.0);
  EXPECT_EQ(sim.transition(sim.index(kChainStart, kChainGreedyAction), kChainCostly), 0.75);
  EXPECT_EQ(sim.transition(sim.index(kChainStart, kChainCautiousAction), kChainCostly), 0.5);
  EXPECT_EQ(ex.real_env.transition(ex.real_env.index(kChainStart, kChainCautiousAction), kChainCostly), 0.75);
  EXPECT_NO_THROW(sim.validate());
  EXPECT_NO_THROW(ex.real_env.validate());
}

TEST(WorstCaseChain, AbsorbingRowsAndGapLocation) {
  for (double eps : {0.05, 0.1, 0.25}) {
    const auto ex = build_example1({eps, 0.8});
    const auto sim = ex.sim_family.build({});
    for (int a = 0; a < 2; ++a) {
      EXPECT_EQ(sim.transition(sim.index(kChainCostly, a), kChainCostly), 1.0);
      EXPECT_EQ(sim.transition(sim.index(kChainSafe, a), kChainSafe), 1.0);
    }
    const Matrix diff = (ex.real_env.transition - sim.transition).cwiseAbs();
    EXPECT_NEAR(diff.maxCoeff(), eps, 1e-15);
    EXPECT_EQ(diff.bottomRows(4).maxCoeff(), 0.0);
  }
}

TEST(WorstCaseChain, RejectsOutOfRangeEpsilon) {
  EXPECT_THROW(build_example1({0.3, 0.9}), std::invalid_argument);
  EXPECT_THROW(build_example1({0.1, 1.0}), std::invalid_argument);
}

TEST(RandomPair, ZeroRadiusCollapsesToBase) {
  RandomCmdpSpec spec;
  spec.kl_radius = 0.0;
  const auto pair = build_random_pair(spec);
  EXPECT_EQ(pair.real_env.transition, pair.base.transition);
  for (const auto& env : pair.family.build_all(pair.domains)) EXPECT_EQ(env.transition, pair.base.transition);
}

TEST(RandomPair, Deterministic) {
  RandomCmdpSpec spec;
  spec.seed = 42;
  const auto a = build_random_pair(spec);
  const auto b = build_random_pair(spec);
  EXPECT_EQ(a.real_env.transition, b.real_env.transition);
  EXPECT_EQ(a.domains, b.domains);
}

TEST(RandomPair, KlCertificateHolds) {
  RandomCmdpSpec spec;
  spec.num_states = 8;
  spec.num_actions = 3;
  spec.kl_radius = 0.05;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    spec.seed = seed;
    const auto pair = build_random_pair(spec);
    const auto envs = pair.family.build_all(pair.domains);
    const auto mix = mixture_cmdp(std::span<const TabularCMDP>(envs));
    for (Eigen::Index row = 0; row < mix.transition.rows(); ++row) {
      const Vector q = mix.transition.row(row).transpose();
      for (const auto& env : envs) EXPECT_LE(kl_divergence(env.transition.row(row).transpose(), q), 0.05 + 1e-9);
      EXPECT_LE(kl_divergence(pair.real_env.transition.row(row).transpose(), q), 0.05 + 1e-9);
    }
    EXPECT_GT(pair.probe.measured_diameter, 0.0);
    EXPECT_LE(pair.probe.measured_diameter, std::sqrt(2.0) + 1e-12);
    EXPECT_GT(pair.perturbation_scale, 0.0);
    EXPECT_NO_THROW(pair.real_env.validate());
  }
}

TEST(PointGoal, AtGoalAtRest) {
  PointGoalSpec spec;
  PointGoalState s = PointGoalState::Zero();
  s.head<2>() = spec.goal;
  const auto out = step_pointgoal(spec, spec.nominal, s, PointGoalAction::Zero());
  EXPECT_DOUBLE_EQ(out.reward, 1.0);
  EXPECT_EQ(out.cost, 0.0);
}

TEST(PointGoal, HazardCostUsesKineticEnergy) {
  PointGoalSpec spec;
  spec.hazards.push_back({Eigen::Vector2d(0.0, 0.0), 0.5});
  EXPECT_EQ(pointgoal_cost(spec, spec.nominal, PointGoalState::Zero()), 0.0);
  PointGoalState moving = PointGoalState::Zero();
  moving(2) = 1.0;
  EXPECT_DOUBLE_EQ(pointgoal_cost(spec, spec.nominal, moving), 0.5);
  moving.head<2>() << 10.0, 0.0;
  EXPECT_DOUBLE_EQ(pointgoal_cost(spec, spec.nominal, moving), 1.0);
}

TEST(PointGoal, DeterministicAndRejectsNonFinite) {
  PointGoalSpec spec;
  PointGoalState s = PointGoalState::Zero();
  s(2) = 0.3;
  const PointGoalAction a(0.4, -2.0);
  EXPECT_EQ(step_pointgoal(spec, spec.nominal, s, a).next, step_pointgoal(spec, spec.nominal, s, a).next);
  EXPECT_EQ(step_pointgoal(spec, spec.nominal, s, a).next.tail<2>(), PointGoalAction(0.4, -1.0));
  s(0) = std::nan("");
  EXPECT_THROW(step_pointgoal(spec, spec.nominal, s, a), std::domain_error);
}

TEST(PointGoal, ProgressRewardTelescopes) {
  PointGoalSpec spec;
  spec.goal_radius = 1e-9;
  Rng rng(3);
  PointGoalEnv env{spec, spec.nominal};
  PointGoalState s = env.reset(rng);
  const double d0 = (s.head<2>() - spec.goal).norm();
  double total = 0.0;
  for (int t = 0; t < 200; ++t) {
    const PointGoalAction a(2 * uniform01(rng) - 1, 2 * uniform01(rng) - 1);
    const auto out = env.step(s, a);
    total += out.reward;
    s = out.next;
  }
  EXPECT_NEAR(total, d0 - (s.head<2>() - spec.goal).norm(), 1e-9);
}

TEST(PointGoal, FamilyAppliesModes) {
  PointGoalSpec spec;
  const auto family = pointgoal_family(spec, {{"mass", {0.5, 2.0}, {3.0, 4.0}, Perturbation::multiplicative},
                                              {"damping", {-0.2, 0.2}, {0.5, 0.6}, Perturbation::additive}});
  const auto env = family.build({2.0, 0.1});
  EXPECT_DOUBLE_EQ(env.params.mass, 2.0);
  EXPECT_DOUBLE_EQ(env.params.damping, 1.1);
  EXPECT_THROW(pointgoal_family(spec, {{"color", {0, 1}, {0, 1}, Perturbation::additive}}), std::invalid_argument);
}

TEST(Cartpole, RewardAndCostExamples) {
  CartpoleSpec spec;
  const auto upright = step_cartpole(spec, {}, CartpoleState::Zero(), 0.0);
  EXPECT_NEAR(upright.reward, 1.0, 1e-12);
  EXPECT_EQ(upright.cost, 0.0);
  CartpoleState hanging(0.0, 0.0, std::numbers::pi, 0.0);
  EXPECT_NEAR(step_cartpole(spec, {}, hanging, 0.0).reward, 0.0, 1e-12);
  CartpoleState outside(spec.x_max + 0.01, 0.0, std::numbers::pi, 0.0);
  EXPECT_EQ(step_cartpole(spec, {}, outside, 0.0).cost, 1.0);
}

TEST(Cartpole, EnergyConservedWithoutForce) {
  CartpoleSpec spec;
  CartpoleState s(0.0, 0.3, 2.0, 1.5);
  const double e0 = cartpole_energy(spec, {}, s);
  for (int t = 0; t < 1000; ++t) s = step_cartpole(spec, {}, s, 0.0).next;
  EXPECT_NEAR(cartpole_energy(spec, {}, s), e0, 1e-4);
}

TEST(Cartpole, DeterministicAndRejectsNonFinite) {
  CartpoleSpec spec;
  CartpoleState s(0.1, 0.0, 1.0, 0.0);
  EXPECT_EQ(step_cartpole(spec, {}, s, 0.5).next, step_cartpole(spec, {}, s, 0.5).next);
  s(3) = std::numeric_limits<double>::infinity();
  EXPECT_THROW(step_cartpole(spec, {}, s, 0.5), std::domain_error);
}

TEST(Cartpole, FamilyIsAdditive) {
  CartpoleSpec spec;
  EXPECT_THROW(cartpole_family(spec, {{"gear", {0.5, 1}, {0.5, 1}, Perturbation::multiplicative}}),
               std::invalid_argument);
  const auto family = cartpole_family(spec, {{"pole_length", {0, 0}, {0.1, 0.2}, Perturbation::additive},
                                             {"gear", {-2, 2}, {-2, 2}, Perturbation::additive}});
  const auto env = family.build({0.1, -1.0});
  EXPECT_DOUBLE_EQ(env.params.pole_length_offset, 0.1);
  EXPECT_DOUBLE_EQ(env.params.gear_offset, -1.0);
}

namespace {

DomainFamily<CartpoleEnv> heatmap_family(double gear_halfwidth, double length_halfwidth) {
  return cartpole_family(CartpoleSpec{},
                         {{"pole_length", {-length_halfwidth, length_halfwidth}, {0, 0}, Perturbation::additive},
                          {"gear", {-gear_halfwidth, gear_halfwidth}, {0, 0}, Perturbation::additive}});
}

}  // namespace

TEST(Heatmap, DegenerateFamilyIsAllZero) {
  const auto grid = upsilon_heatmap(heatmap_family(0, 0), 9, 7, 4.0, 8, 1);
  for (std::size_t a = 0; a < grid.actions.size(); ++a) EXPECT_EQ(grid.mean_for_action(a), 0.0);
}

TEST(Heatmap, RankPropertiesAndCsv) {
  const auto grid = upsilon_heatmap(heatmap_family(3.0, 0.1), 25, 11, 4.0, 16, 7);
  for (std::size_t a = 1; a < grid.actions.size(); ++a)
    EXPECT_GE(grid.mean_for_action(a), grid.mean_for_action(a - 1));
  EXPECT_GT(grid.mean_near_angle(3, std::numbers::pi), grid.mean_near_angle(3, 0.0));
  std::ostringstream os;
  write_csv(os, grid);
  const std::string text = os.str();
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 1 + 4 * 25 * 11);
  EXPECT_THROW(upsilon_heatmap(heatmap_family(1, 0), 3, 3, 1.0, 4, 1), std::invalid_argument);
}
