#include "spidr/envs/chain.hpp"
#include "spidr/envs/random_cmdp.hpp"
#include "spidr/envs/random_pair.hpp"
#include "spidr/pessimize.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

using namespace spidr;

namespace {

envs::Example1 chain() { return envs::build_example1({0.25, 0.9}); }
TabularCMDP chain_sim() { return chain().sim_family.build({}); }
TabularPolicy at_start(int action) { return TabularPolicy::deterministic({action, 0, 0}, 2); }

Matrix rows(std::initializer_list<std::initializer_list<double>> values) {
  Matrix m(static_cast<Eigen::Index>(values.size()), static_cast<Eigen::Index>(values.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& r : values) {
    Eigen::Index j = 0;
    for (double v : r) m(i, j++) = v;
    ++i;
  }
  return m;
}

}  // namespace

TEST(UpsilonSampled, Examples) {
  EXPECT_EQ(upsilon_sampled(rows({{1.0, 2.0}, {1.0, 2.0}, {1.0, 2.0}})), 0.0);
  EXPECT_DOUBLE_EQ(upsilon_sampled(rows({{0.0}, {2.0}})), 1.0);
  EXPECT_DOUBLE_EQ(upsilon_sampled(rows({{0.0, 0.0}, {1.0, 0.0}, {2.0, 0.0}})), 2.0 / 3.0);
  EXPECT_THROW(upsilon_sampled(rows({{1.0}})), std::invalid_argument);
}

TEST(UpsilonSampled, PermutationAndTranslationInvariance) {
  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    Matrix x(4, 3);  // four rows keep the means dyadic
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = std::floor(8 * uniform01(rng));
    const double base = upsilon_sampled(x);
    EXPECT_GE(base, 0.0);
    Matrix flipped = x.colwise().reverse();
    EXPECT_NEAR(upsilon_sampled(flipped), base, 1e-12);
    Matrix shifted = x.rowwise() + Eigen::RowVector3d(4.0, -2.0, 8.0);
    EXPECT_EQ(upsilon_sampled(shifted), base);
  }
}

TEST(UpsilonExact, ChainValues) {
  const std::vector<TabularCMDP> envs{chain_sim()};
  const std::span<const TabularCMDP> view(envs);
  const Matrix& x = envs.front().embedding;
  EXPECT_NEAR(upsilon_exact_tabular(view, envs::kChainStart, envs::kChainGreedyAction, x), 0.1875, 1e-15);
  EXPECT_NEAR(upsilon_exact_tabular(view, envs::kChainStart, envs::kChainCautiousAction, x), 0.25, 1e-15);
  EXPECT_EQ(upsilon_exact_tabular(view, envs::kChainCostly, 0, x), 0.0);
}

TEST(UpsilonExact, SharedDeterministicKernelIsZero) {
  TabularCMDP m(3, 1, 2);
  m.transition.setZero();
  m.transition(0, 2) = m.transition(1, 0) = m.transition(2, 1) = 1.0;
  m.embedding.setRandom();
  const std::vector<TabularCMDP> envs(4, m);
  EXPECT_EQ(upsilon_exact_matrix(std::span<const TabularCMDP>(envs), m.embedding).maxCoeff(), 0.0);
}

TEST(UpsilonSampled, MatchesScaledExactInExpectation) {
  Rng rng(77);
  const auto base = envs::random_cmdp(6, 2, 3, 0.9, rng);
  std::vector<TabularCMDP> domains;
  for (int k = 0; k < 4; ++k) domains.push_back(envs::resample_kernel(base, rng));
  const std::span<const TabularCMDP> view(domains);
  const double exact = upsilon_exact_tabular(view, 2, 1, base.embedding);
  std::uniform_int_distribution<int> pick(0, 3);
  for (int n : {2, 8, 32}) {
    double total = 0.0;
    const int reps = 40000;
    for (int r = 0; r < reps; ++r) {
      std::vector<TabularCMDP> siblings;
      for (int j = 0; j < n; ++j) siblings.push_back(domains[pick(rng)]);
      total += upsilon_sampled_tabular(std::span<const TabularCMDP>(siblings), 2, 1, rng);
    }
    EXPECT_NEAR(total / reps, (n - 1.0) / n * exact, 0.02 * (n - 1.0) / n * exact) << "n=" << n;
  }
}

TEST(PenalizeCost, Examples) {
  EXPECT_EQ(penalize_cost(0.5, 0.0, 3.0), 0.5);
  EXPECT_EQ(penalize_cost(0.0, 0.25, 4.0), 1.0);
  EXPECT_EQ(penalize_cost(1.0, 0.1875, 8.0), 2.5);
}

TEST(PenalizeCost, PenalizedConstraintNondecreasingInLambda) {
  Rng rng(5);
  const auto m = envs::random_cmdp(5, 2, 2, 0.9, rng);
  const std::vector<TabularCMDP> envs{m, envs::resample_kernel(m, rng)};
  const Matrix ups = upsilon_exact_matrix(std::span<const TabularCMDP>(envs), m.embedding);
  const auto pi = envs::random_policy(5, 2, rng);
  double previous = -1.0;
  for (double lambda : {0.0, 0.5, 1.0, 2.0, 4.0, 8.0}) {
    std::vector<TabularCMDP> penalized;
    for (const auto& e : envs) penalized.push_back(with_cost(e, penalize_cost(e.cost, ups, lambda)));
    const double c = mean_constraint(std::span<const TabularCMDP>(penalized), pi);
    EXPECT_GE(c, previous);
    previous = c;
  }
}

TEST(Wasserstein1d, Examples) {
  const Vector support = Eigen::Vector3d(0.0, 1.0, 2.0);
  EXPECT_DOUBLE_EQ(wasserstein_1d(Eigen::Vector3d(1, 0, 0), Eigen::Vector3d(0, 0, 1), support), 2.0);
  EXPECT_EQ(wasserstein_1d(Eigen::Vector3d(0.2, 0.3, 0.5), Eigen::Vector3d(0.2, 0.3, 0.5), support), 0.0);
  EXPECT_DOUBLE_EQ(wasserstein_1d(Eigen::Vector3d(0.5, 0.5, 0), Eigen::Vector3d(1, 0, 0), support), 0.5);
  EXPECT_THROW(wasserstein_1d(Eigen::Vector3d(1, 0, 0), Eigen::Vector3d(1, 0, 0), Eigen::Vector3d(0, 2, 1)),
               std::invalid_argument);
  EXPECT_THROW(wasserstein_1d(Eigen::Vector2d(1, 0), Eigen::Vector3d(1, 0, 0), support), std::invalid_argument);
}

TEST(WassersteinLp, Examples) {
  Matrix x(2, 2);
  x << 0.0, 0.0, 3.0, 4.0;
  const Matrix ground = ground_cost_matrix(x);
  EXPECT_NEAR(wasserstein_lp(Eigen::Vector2d(0.3, 0.7), Eigen::Vector2d(0.3, 0.7), ground), 0.0, 1e-12);
  EXPECT_NEAR(wasserstein_lp(Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 1), ground), 5.0, 1e-12);
}

TEST(WassersteinLp, AgreesWithCdfMethodOnTheLine) {
  Rng rng(9);
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<double> pts(8);
    for (double& v : pts) v = 4.0 * uniform01(rng);
    std::sort(pts.begin(), pts.end());
    const Vector support = Eigen::Map<Vector>(pts.data(), 8);
    const Vector p = envs::random_distribution(8, rng);
    const Vector q = envs::random_distribution(8, rng);
    EXPECT_NEAR(wasserstein_lp(p, q, ground_cost_matrix(support)), wasserstein_1d(p, q, support), 1e-8);
  }
}

TEST(WassersteinLp, MetricAxioms) {
  Rng rng(10);
  Matrix x(7, 2);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = uniform01(rng);
  const Matrix ground = ground_cost_matrix(x);
  for (int trial = 0; trial < 30; ++trial) {
    const Vector p = envs::random_distribution(7, rng);
    const Vector q = envs::random_distribution(7, rng);
    const Vector r = envs::random_distribution(7, rng);
    const double pq = wasserstein_lp(p, q, ground);
    EXPECT_GE(pq, 0.0);
    EXPECT_NEAR(pq, wasserstein_lp(q, p, ground), 1e-8);
    EXPECT_NEAR(wasserstein_lp(p, p, ground), 0.0, 1e-8);
    EXPECT_LE(pq, wasserstein_lp(p, r, ground) + wasserstein_lp(r, q, ground) + 1e-8);
  }
}

TEST(TransportBound, ZeroGapHasZeroSlack) {
  Rng rng(12);
  const auto m = envs::random_cmdp(5, 2, 2, 0.9, rng);
  const std::vector<TabularCMDP> domains{m};
  const auto report = lemma1_report(m, std::span<const TabularCMDP>(domains), envs::random_policy(5, 2, rng));
  EXPECT_NEAR(report.slack, 0.0, 1e-12);
  EXPECT_EQ(report.per_state_wasserstein.maxCoeff(), 0.0);
}

TEST(TransportBound, ChainBoundIsTight) {
  const auto ex = chain();
  const std::vector<TabularCMDP> domains{chain_sim()};
  const auto report = lemma1_report(ex.real_env, std::span<const TabularCMDP>(domains), at_start(0));
  EXPECT_NEAR(report.lhs, 9.0, 1e-12);
  EXPECT_NEAR(report.lipschitz_cost, 10.0, 1e-12);
  EXPECT_NEAR(report.lipschitz_cost_l1, 10.0, 1e-12);
  EXPECT_NEAR(report.per_state_wasserstein(0, 0), 0.25, 1e-12);
  EXPECT_GE(report.rhs, 9.0 - 1e-8);
  EXPECT_GE(report.slack, -1e-8);
}

TEST(TransportBound, HoldsOnCertifiedRandomPairs) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    envs::RandomCmdpSpec spec;
    spec.seed = seed;
    const auto pair = envs::build_random_pair(spec);
    const auto domains = pair.family.build_all(pair.domains);
    Rng rng(seed);
    const auto report = lemma1_report(pair.real_env, std::span<const TabularCMDP>(domains),
                                      envs::random_policy(spec.num_states, spec.num_actions, rng));
    EXPECT_GE(report.slack, -1e-8) << "seed " << seed;
    EXPECT_GE(report.per_state_wasserstein.minCoeff(), 0.0);
  }
}

TEST(TransportBound, CsvHasOneRowPerPairAndSummary) {
  const std::vector<TabularCMDP> domains{chain_sim()};
  std::ostringstream os;
  write_csv(os, lemma1_report(chain().real_env, std::span<const TabularCMDP>(domains), at_start(0)));
  const std::string text = os.str();
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 1 + 6 + 1);
  EXPECT_NE(text.find("# summary"), std::string::npos);
}

TEST(OraclePenalty, ZeroGapIsZero) {
  Rng rng(13);
  const auto m = envs::random_cmdp(4, 2, 1, 0.9, rng);
  const std::vector<TabularCMDP> domains{m, m};
  EXPECT_EQ(oracle_penalty(m, std::span<const TabularCMDP>(domains)).maxCoeff(), 0.0);
}

TEST(OraclePenalty, ChainEntry) {
  const std::vector<TabularCMDP> domains{chain_sim()};
  const Matrix pen = oracle_penalty(chain().real_env, std::span<const TabularCMDP>(domains));
  EXPECT_NEAR(pen(envs::kChainStart, envs::kChainCautiousAction), 22.5, 1e-9);
  EXPECT_NEAR(pen(envs::kChainStart, envs::kChainGreedyAction), 22.5, 1e-9);
  EXPECT_EQ(pen(envs::kChainCostly, 0), 0.0);
}

TEST(OraclePenalty, DefinitionalRecomputation) {
  envs::RandomCmdpSpec spec;
  spec.seed = 3;
  const auto pair = envs::build_random_pair(spec);
  const auto domains = pair.family.build_all(pair.domains);
  const Matrix pen = oracle_penalty(pair.real_env, std::span<const TabularCMDP>(domains));
  const Matrix ground = ground_cost_matrix(pair.real_env.embedding);
  const double scale = spec.gamma * uniform_cost_lipschitz(pair.real_env) / (1 - spec.gamma);
  for (int s = 0; s < spec.num_states; ++s)
    for (int a = 0; a < spec.num_actions; ++a) {
      double worst = 0.0;
      for (const auto& d : domains)
        worst = std::max(worst, wasserstein_lp(d.next_row(s, a).transpose(), pair.real_env.next_row(s, a).transpose(), ground));
      EXPECT_NEAR(pen(s, a), scale * worst, 1e-9);
    }
}

TEST(OraclePenalty, PenalizedSimCostDominatesRealCost) {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    envs::RandomCmdpSpec spec;
    spec.seed = 100 + seed;
    const auto pair = envs::build_random_pair(spec);
    const auto domains = pair.family.build_all(pair.domains);
    const std::span<const TabularCMDP> view(domains);
    const Matrix pen = oracle_penalty(pair.real_env, view);
    std::vector<TabularCMDP> penalized;
    for (const auto& d : domains) penalized.push_back(with_cost(d, d.cost + pen));
    Rng rng(seed);
    for (int k = 0; k < 25; ++k) {
      const auto pi = envs::random_policy(spec.num_states, spec.num_actions, rng);
      EXPECT_GE(mean_constraint(std::span<const TabularCMDP>(penalized), pi),
                evaluate_policy(pair.real_env, pi).constraint - 1e-8);
    }
  }
}

TEST(CalibrateLambda, Examples) {
  const auto a = calibrate_lambda({0.1, 0.3, 10}, 1.0);
  EXPECT_NEAR(a.suggested, 10.0, 1e-12);
  EXPECT_NEAR(a.range.lo, 1.0, 1e-12);
  EXPECT_NEAR(a.range.hi, 100.0, 1e-12);
  const auto b = calibrate_lambda({0.0, 0.0, 10}, 1.0);
  EXPECT_TRUE(b.no_signal);
  EXPECT_EQ(b.suggested, 0.0);
  EXPECT_NEAR(calibrate_lambda({1.0, 1.0, 1}, 1.0).suggested, 1.0, 1e-15);
  const auto grid = a.candidates(3);
  ASSERT_EQ(grid.size(), 3u);
  EXPECT_NEAR(grid.front(), 100.0, 1e-9);
  EXPECT_NEAR(grid.back(), 1.0, 1e-9);
}

TEST(Diagnostics, UnderestimationGap) {
  const std::vector<TabularCMDP> train{chain_sim()};
  const std::vector<TabularCMDP> real{chain().real_env};
  EXPECT_EQ(underestimation_gap(at_start(0), train, train), 0.0);
  EXPECT_NEAR(underestimation_gap(at_start(0), train, real), 2.25, 1e-12);
  EXPECT_NEAR(underestimation_gap(at_start(1), train, real), 2.25, 1e-12);
}

TEST(Diagnostics, PenaltySufficiency) {
  const std::vector<TabularCMDP> train{chain_sim()};
  const std::vector<TabularCMDP> real{chain().real_env};
  const Matrix ups = upsilon_exact_matrix(std::span<const TabularCMDP>(train), train.front().embedding);
  EXPECT_EQ(penalty_sufficiency(at_start(1), 0.0, ups, train, train), 0.0);
  EXPECT_NEAR(penalty_sufficiency(at_start(1), 9.0, ups, train, real), 0.0, 1e-12);
  EXPECT_NEAR(penalty_sufficiency(at_start(1), 12.0, ups, train, real), 0.75, 1e-12);
}

TEST(PenaltyConfig, Validation) {
  EXPECT_THROW((PenaltyConfig{-1.0, 4, UpsilonMode::sampled}.validate()), std::invalid_argument);
  EXPECT_THROW((PenaltyConfig{1.0, 1, UpsilonMode::sampled}.validate()), std::invalid_argument);
  EXPECT_NO_THROW((PenaltyConfig{1.0, 1, UpsilonMode::exact}.validate()));
}
