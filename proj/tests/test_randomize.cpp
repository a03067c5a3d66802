#include "spidr/envs/chain.hpp"
#include "spidr/envs/random_cmdp.hpp"
#include "spidr/randomize.hpp"

#include <gtest/gtest.h>

using namespace spidr;

namespace {

DomainDistribution unit_box(int dims, Phase phase = Phase::train) {
  DomainDistribution dist;
  dist.phase = phase;
  for (int k = 0; k < dims; ++k)
    dist.params.push_back({"p" + std::to_string(k), {0.0, 1.0}, {2.0, 3.0}, Perturbation::additive});
  return dist;
}

}  // namespace

TEST(SampleDomains, PointRange) {
  DomainDistribution dist;
  dist.params.push_back({"fixed", {0.7, 0.7}, {0.7, 0.7}, Perturbation::additive});
  const auto sample = sample_domains(dist, {5, 3, 9});
  for (const auto& xi : sample.rollout) EXPECT_EQ(xi[0], 0.7);
  for (const auto& set : sample.siblings)
    for (const auto& xi : set) EXPECT_EQ(xi[0], 0.7);
}

TEST(SampleDomains, SameSeedSameOutput) {
  const auto a = sample_domains(unit_box(2), {10, 4, 123});
  const auto b = sample_domains(unit_box(2), {10, 4, 123});
  EXPECT_EQ(a.rollout, b.rollout);
  EXPECT_EQ(a.siblings, b.siblings);
}

TEST(SampleDomains, EmpiricalMeanNearCenter) {
  const auto sample = sample_domains(unit_box(3), {1000, 2, 7});
  for (int k = 0; k < 3; ++k) {
    double mean = 0.0;
    for (const auto& xi : sample.rollout) mean += xi[k];
    EXPECT_NEAR(mean / 1000.0, 0.5, 0.02);
  }
}

TEST(SampleDomains, PrefixStableWhenNGrows) {
  const auto small = sample_domains(unit_box(2), {4, 3, 99});
  const auto large = sample_domains(unit_box(2), {16, 3, 99});
  for (int i = 0; i < 4; ++i) {
    EXPECT_EQ(small.rollout[i], large.rollout[i]);
    EXPECT_EQ(small.siblings[i], large.siblings[i]);
  }
}

TEST(SampleDomains, PhasesStayInTheirRanges) {
  const auto train = sample_domains(unit_box(2, Phase::train), {50, 4, 1});
  const auto eval = sample_domains(unit_box(2, Phase::eval), {50, 4, 1});
  for (const auto& xi : train.rollout) EXPECT_LE(xi[0], 1.0);
  for (const auto& xi : eval.rollout) EXPECT_GE(xi[0], 2.0);
}

TEST(SampleDomains, SiblingCountChecks) {
  EXPECT_THROW(sample_domains(unit_box(1), {3, 1, 0}), std::invalid_argument);
  EXPECT_NO_THROW(sample_domains(unit_box(1), {3, 1, 0}, UpsilonMode::exact));
  EXPECT_THROW(sample_domains(unit_box(1), {0, 2, 0}), std::invalid_argument);
}

TEST(DomainParamSpec, RejectsBadIntervals) {
  DomainParamSpec p{"m", {1.0, 0.5}, {1.0, 1.0}, Perturbation::additive};
  EXPECT_THROW(p.validate(), std::invalid_argument);
  DomainParamSpec q{"m", {0.0, 1.0}, {0.5, 1.0}, Perturbation::multiplicative};
  EXPECT_THROW(q.validate(), std::invalid_argument);
}

TEST(DrObjective, SingleDomainEqualsEvaluation) {
  Rng rng(2);
  const auto m = envs::random_cmdp(5, 2, 1, 0.9, rng);
  const auto pi = envs::random_policy(5, 2, rng);
  const auto avg = dr_objective(std::span<const TabularCMDP>(&m, 1), pi);
  const auto e = evaluate_policy(m, pi);
  EXPECT_EQ(avg.objective, e.objective);
  EXPECT_EQ(avg.constraint, e.constraint);
}

TEST(DrObjective, ChainSimFamily) {
  const auto ex = envs::build_example1({0.25, 0.9});
  const std::vector<DomainParams> domains(4);
  const auto avg = dr_objective(ex.sim_family, domains, TabularPolicy::deterministic({0, 0, 0}, 2));
  EXPECT_NEAR(avg.objective, 6.75, 1e-12);
  EXPECT_NEAR(avg.constraint, 6.75, 1e-12);
}

TEST(DrObjective, TwoDomainAverageAndRewardScaling) {
  Rng rng(4);
  const auto a = envs::random_cmdp(5, 2, 1, 0.9, rng);
  const auto b = envs::resample_kernel(a, rng);
  const auto pi = envs::random_policy(5, 2, rng);
  const std::vector<TabularCMDP> pair{a, b};
  const auto avg = dr_objective(std::span<const TabularCMDP>(pair), pi);
  EXPECT_NEAR(avg.constraint, 0.5 * (evaluate_policy(a, pi).constraint + evaluate_policy(b, pi).constraint), 1e-12);

  std::vector<TabularCMDP> scaled = pair;
  for (auto& m : scaled) {
    m.reward *= 0.5;
    m.r_max *= 0.5;
  }
  EXPECT_NEAR(dr_objective(std::span<const TabularCMDP>(scaled), pi).objective, 0.5 * avg.objective, 1e-12);
}

TEST(MixtureKernel, IdenticalDomains) {
  Rng rng(6);
  const auto m = envs::random_cmdp(4, 2, 1, 0.9, rng);
  const std::vector<TabularCMDP> envs(3, m);
  EXPECT_LT((mixture_kernel(std::span<const TabularCMDP>(envs), 1, 1) - m.next_row(1, 1).transpose()).norm(), 1e-15);
}

TEST(MixtureKernel, TwoDeterministicDomains) {
  TabularCMDP a(3, 1);
  a.transition.setZero();
  for (int s = 0; s < 3; ++s) a.transition(s, 1) = 1.0;
  TabularCMDP b = a;
  b.transition.setZero();
  for (int s = 0; s < 3; ++s) b.transition(s, 2) = 1.0;
  const std::vector<TabularCMDP> envs{a, b};
  const Vector row = mixture_kernel(std::span<const TabularCMDP>(envs), 0, 0);
  EXPECT_EQ(row(1), 0.5);
  EXPECT_EQ(row(2), 0.5);
}

TEST(MixtureKernel, SixteenRandomDomainsMatchColumnMean) {
  Rng rng(8);
  const auto base = envs::random_cmdp(6, 3, 1, 0.9, rng);
  std::vector<TabularCMDP> envs;
  for (int k = 0; k < 16; ++k) envs.push_back(envs::resample_kernel(base, rng));
  for (int s = 0; s < 6; ++s)
    for (int a = 0; a < 3; ++a) {
      Vector expected = Vector::Zero(6);
      for (const auto& m : envs) expected += m.next_row(s, a).transpose() / 16.0;
      const Vector row = mixture_kernel(std::span<const TabularCMDP>(envs), s, a);
      EXPECT_LT((row - expected).cwiseAbs().maxCoeff(), 1e-12);
      EXPECT_NEAR(row.sum(), 1.0, 1e-12);
    }
}

TEST(MixtureKernel, EmptyListRejected) {
  EXPECT_THROW(mixture_kernel(std::span<const TabularCMDP>(), 0, 0), std::invalid_argument);
}

TEST(DomainFamily, BuilderIsDeterministic) {
  TabularFamily family;
  family.params.push_back({"x", {0.0, 1.0}, {0.0, 1.0}, Perturbation::additive});
  family.builder = [](const DomainParams& xi) {
    TabularCMDP m(2, 1);
    m.transition << 1 - xi[0], xi[0], 0.0, 1.0;
    return m;
  };
  EXPECT_EQ(family.build({0.3}).transition, family.build({0.3}).transition);
  EXPECT_EQ(family.nominal().transition(0, 1), 0.5);
}
