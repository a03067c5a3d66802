#pragma once

// Exact-gradient training on tabular families: the sample-average objective
// over rollout domains with the penalized cost c + lambda * upsilon, where
// upsilon comes from each rollout domain's own sibling set.

#include "spidr/cmdp_lp.hpp"
#include "spidr/pessimize.hpp"
#include "spidr/randomize.hpp"
#include "spidr/solve/softmax_policy.hpp"
#include "spidr/solve/updates.hpp"

#include <chrono>
#include <span>
#include <stdexcept>
#include <vector>

namespace spidr {

struct TabularProblem {
  std::vector<TabularCMDP> train_envs;                 // p_xi_i
  std::vector<std::vector<TabularCMDP>> siblings;      // p_xi_ij
  std::vector<TabularCMDP> eval_envs;                  // real env or eval-range domains
  double budget = 0.0;
};

inline TabularProblem make_tabular_problem(const TabularFamily& family, const DomainSample& sample,
                                           std::vector<TabularCMDP> eval_envs, double budget) {
  TabularProblem out;
  out.train_envs = family.build_all(sample.rollout);
  for (const auto& set : sample.siblings) out.siblings.push_back(family.build_all(set));
  out.eval_envs = std::move(eval_envs);
  out.budget = budget;
  for (auto& env : out.train_envs) env.budget = budget;
  return out;
}

struct TabularRun {
  TabularPolicy policy;          // last iterate
  SoftmaxTabularPolicy logits;   // empty for the LP solver
  std::vector<MetricsRecord> metrics;
  TrainState state;
  bool infeasible = false;
  std::vector<Matrix> upsilon;   // per rollout domain, from the last iteration
};

namespace detail {

inline std::vector<Matrix> tabular_upsilon(const TabularProblem& problem, const PenaltyConfig& penalty, Rng& rng) {
  std::vector<Matrix> out;
  for (std::size_t i = 0; i < problem.train_envs.size(); ++i) {
    const auto& siblings = problem.siblings[i];
    const TabularCMDP& env = problem.train_envs[i];
    if (penalty.mode == UpsilonMode::exact) {
      out.push_back(upsilon_exact_matrix(std::span<const TabularCMDP>(siblings), env.embedding));
      continue;
    }
    Matrix u(env.num_states, env.num_actions);
    for (int s = 0; s < env.num_states; ++s)
      for (int a = 0; a < env.num_actions; ++a)
        u(s, a) = upsilon_sampled_tabular(std::span<const TabularCMDP>(siblings), s, a, rng);
    out.push_back(u);
  }
  return out;
}

inline std::vector<TabularCMDP> penalized_envs(const TabularProblem& problem, const std::vector<Matrix>& upsilon,
                                               double lambda) {
  std::vector<TabularCMDP> out;
  for (std::size_t i = 0; i < problem.train_envs.size(); ++i) {
    const auto& env = problem.train_envs[i];
    out.push_back(with_cost(env, penalize_cost(env.cost, upsilon[i], lambda)));
  }
  return out;
}

/// Occupancy-weighted mean and max of upsilon over visited pairs, across rollout domains.
inline UpsilonStats visited_upsilon(const TabularProblem& problem, const std::vector<Matrix>& upsilon,
                                    const TabularPolicy& pi) {
  UpsilonStats stats;
  for (std::size_t i = 0; i < problem.train_envs.size(); ++i) {
    const OccupancyMeasure d = occupancy(problem.train_envs[i], pi);
    stats.mean += d.expect(upsilon[i]);
    for (Eigen::Index k = 0; k < d.weights.size(); ++k)
      if (d.weights.data()[k] > 1e-12) {
        stats.max = std::max(stats.max, upsilon[i].data()[k]);
        ++stats.count;
      }
  }
  stats.mean /= static_cast<double>(problem.train_envs.size());
  return stats;
}

inline MetricsRecord tabular_metrics(const TabularProblem& problem, const std::vector<TabularCMDP>& penalized,
                                     const std::vector<Matrix>& upsilon, const TabularPolicy& pi, int iteration,
                                     double dual) {
  const DrObjective raw = dr_objective(std::span<const TabularCMDP>(problem.train_envs), pi);
  const DrObjective eval = dr_objective(std::span<const TabularCMDP>(problem.eval_envs), pi);
  const UpsilonStats stats = visited_upsilon(problem, upsilon, pi);
  MetricsRecord rec;
  rec.iteration = iteration;
  rec.j_train = raw.objective;
  rec.c_train_raw = raw.constraint;
  rec.c_train_penalized = mean_constraint(std::span<const TabularCMDP>(penalized), pi);
  rec.j_eval = eval.objective;
  rec.c_eval = eval.constraint;
  rec.dual = dual;
  rec.mean_upsilon = stats.mean;
  rec.max_upsilon = stats.max;
  return rec;
}

/// Occupancy LP on a single kernel; when the penalized constraint cannot be met
/// the minimum-penalized-cost policy is returned instead.
inline TabularRun train_tabular_lp(const TabularProblem& problem, const PenaltyConfig& penalty,
                                   const std::vector<Matrix>& upsilon) {
  if (!kernels_coincide(std::span<const TabularCMDP>(problem.train_envs)))
    throw std::invalid_argument("lp solver requires identical rollout kernels");
  for (const auto& u : upsilon)
    if (u != upsilon.front()) throw std::invalid_argument("lp solver requires identical penalties across domains");
  const auto penalized = penalized_envs(problem, upsilon, penalty.lambda);
  TabularCMDP target = penalized.front();
  target.budget = problem.budget;
  TabularRun run;
  run.upsilon = upsilon;
  const CmdpLpResult lp = solve_cmdp_lp(target);
  if (lp.feasible()) {
    run.policy = lp.policy;
  } else if (lp.status == LpStatus::infeasible) {
    run.infeasible = true;
    TabularCMDP min_cost = target;
    min_cost.reward = Matrix::Constant(target.num_states, target.num_actions, target.cost.maxCoeff()) - target.cost;
    min_cost.r_max = std::max(1.0, min_cost.reward.maxCoeff());
    min_cost.budget = target.c_max / (1.0 - target.discount);
    const CmdpLpResult fallback = solve_cmdp_lp(min_cost);
    if (!fallback.feasible()) throw std::runtime_error("lp solver: minimum-cost program failed");
    run.policy = fallback.policy;
  } else {
    throw std::runtime_error(std::string("lp solver: ") + to_string(lp.status));
  }
  run.metrics.push_back(tabular_metrics(problem, penalized, upsilon, run.policy, 0, 0.0));
  return run;
}

}  // namespace detail

/// Runs CRPO or primal-dual with exact gradients (or the occupancy LP when every
/// rollout kernel coincides). The returned policy is the last iterate.
inline TabularRun train_tabular(const SolverConfig& config, const TabularProblem& problem,
                                const PenaltyConfig& penalty,
                                SoftmaxTabularPolicy init = SoftmaxTabularPolicy{}) {
  config.validate();
  penalty.validate();
  if (problem.train_envs.empty() || problem.siblings.size() != problem.train_envs.size())
    throw std::invalid_argument("train_tabular: sibling table does not match the rollout domains");
  if (problem.eval_envs.empty()) throw std::invalid_argument("train_tabular: no evaluation environment");
  Rng upsilon_rng = make_stream(config.seed, "tabular/upsilon");
  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); };

  std::vector<Matrix> upsilon = detail::tabular_upsilon(problem, penalty, upsilon_rng);
  if (config.algorithm == SolverAlgorithm::lp) {
    TabularRun run = detail::train_tabular_lp(problem, penalty, upsilon);
    run.metrics.back().wall_clock = elapsed();
    return run;
  }

  const TabularCMDP& ref = problem.train_envs.front();
  TabularRun run;
  run.logits = init.logits.size() == 0 ? SoftmaxTabularPolicy::uniform(ref.num_states, ref.num_actions) : init;
  for (int it = 0; it < config.iterations; ++it) {
    if (it > 0 && penalty.mode == UpsilonMode::sampled) upsilon = detail::tabular_upsilon(problem, penalty, upsilon_rng);
    const auto penalized = detail::penalized_envs(problem, upsilon, penalty.lambda);
    const TabularPolicy pi = run.logits.policy();
    MetricsRecord rec = detail::tabular_metrics(problem, penalized, upsilon, pi, it, run.state.dual);
    const Matrix grad_reward = exact_gradient(run.logits, std::span<const TabularCMDP>(problem.train_envs), Signal::reward);
    const Matrix grad_cost = exact_gradient(run.logits, std::span<const TabularCMDP>(penalized), Signal::cost);
    const PolicyUpdate<Matrix> update =
        config.algorithm == SolverAlgorithm::crpo
            ? crpo_update(run.state, grad_reward, grad_cost, rec.c_train_penalized, problem.budget, config.step_size,
                          config.crpo_tolerance)
            : primal_dual_update(run.state, grad_reward, grad_cost, rec.c_train_penalized, problem.budget,
                                 config.step_size, config.dual_step_size);
    run.logits.logits += update.delta;
    rec.branch = update.branch;
    rec.wall_clock = elapsed();
    run.metrics.push_back(rec);
  }
  run.policy = run.logits.policy();
  run.upsilon = upsilon;
  // Persistent violation of the penalized constraint marks the run infeasible.
  const int window = std::max(10, config.iterations / 10);
  run.infeasible = run.state.violation_streak >= window;
  return run;
}

}  // namespace spidr
