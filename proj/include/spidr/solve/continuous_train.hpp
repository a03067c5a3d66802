#pragma once

// Monte-Carlo policy-gradient training of feature-linear Gaussian policies on
// continuous families, with SPiDR rollouts and CRPO or primal-dual updates.
// Reward and penalized-cost returns each get a ridge-regression baseline.

#include "spidr/randomize.hpp"
#include "spidr/solve/rollouts.hpp"
#include "spidr/solve/updates.hpp"

#include <chrono>
#include <span>
#include <stdexcept>
#include <vector>

namespace spidr {

struct ContinuousTask {
  double budget = 0.0;
  double discount = 0.99;
  int horizon = 400;
  int num_rollout_domains = 8;  // N
  bool track_upsilon = true;    // probe siblings even when lambda = 0
};

struct ContinuousRun {
  LinearGaussianPolicy policy;  // last iterate
  std::vector<MetricsRecord> metrics;
  TrainState state;
  bool infeasible = false;
  UpsilonStats upsilon;  // over every visited transition of the run
};

namespace detail {

struct ReturnsToGo {
  std::vector<std::vector<double>> reward;
  std::vector<std::vector<double>> cost;
};

inline std::vector<double> returns_to_go(const std::vector<double>& signal, double gamma) {
  std::vector<double> out(signal.size());
  double running = 0.0;
  for (std::size_t t = signal.size(); t-- > 0;) {
    running = signal[t] + gamma * running;
    out[t] = running;
  }
  return out;
}

inline Eigen::VectorXd baseline_features(const Eigen::VectorXd& phi, std::size_t t, int horizon) {
  Eigen::VectorXd x(phi.size() + 2);
  const double tau = static_cast<double>(t) / horizon;
  x << phi, tau, tau * tau;
  return x;
}

/// Ridge regression of returns-to-go on (features, time).
inline Eigen::VectorXd fit_baseline(const RolloutBatch& batch, const std::vector<std::vector<double>>& targets,
                                    int horizon, double ridge) {
  const Eigen::Index dim = batch.episodes.front().features.front().size() + 2;
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dim);
  for (std::size_t e = 0; e < batch.episodes.size(); ++e)
    for (std::size_t t = 0; t < batch.episodes[e].length(); ++t) {
      const Eigen::VectorXd x = baseline_features(batch.episodes[e].features[t], t, horizon);
      gram.selfadjointView<Eigen::Lower>().rankUpdate(x);
      rhs += targets[e][t] * x;
    }
  gram = gram.selfadjointView<Eigen::Lower>();
  gram.diagonal().array() += ridge * std::max(1.0, gram.diagonal().mean());
  return gram.ldlt().solve(rhs);
}

/// sum_t gamma^t grad log pi(a_t|s_t) (G_t - b(s_t, t)), averaged over episodes.
inline Eigen::VectorXd policy_gradient(const RolloutBatch& batch, const LinearGaussianPolicy& policy,
                                       const std::vector<std::vector<double>>& targets, const Eigen::VectorXd& baseline,
                                       double gamma, int horizon) {
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(policy.num_params());
  for (std::size_t e = 0; e < batch.episodes.size(); ++e) {
    const Episode& ep = batch.episodes[e];
    double weight = 1.0;
    for (std::size_t t = 0; t < ep.length(); ++t) {
      const double advantage = targets[e][t] - baseline.dot(baseline_features(ep.features[t], t, horizon));
      policy.accumulate_score(ep.features[t], ep.actions[t], weight * advantage, grad);
      weight *= gamma;
    }
  }
  return grad / static_cast<double>(batch.episodes.size());
}

}  // namespace detail

/// Rollout domains and their sibling sets are drawn once; every eval round draws
/// fresh eval-range domains from its own stream.
template <class Env>
ContinuousRun train_continuous(const SolverConfig& config, const DomainFamily<Env>& family, const ContinuousTask& task,
                               const PenaltyConfig& penalty, LinearGaussianPolicy policy) {
  config.validate();
  penalty.validate();
  if (config.algorithm == SolverAlgorithm::lp)
    throw std::invalid_argument("train_continuous: the lp solver is tabular-only");
  const bool probe = task.track_upsilon || penalty.lambda > 0.0;
  const EnsembleSpec ensemble{task.num_rollout_domains, probe ? penalty.ensemble_size : 2, config.seed};
  const DomainSample sample = sample_domains(family.distribution(Phase::train), ensemble);
  const std::vector<Env> rollout_envs = family.build_all(sample.rollout);
  std::vector<std::vector<Env>> sibling_envs;
  for (const auto& set : sample.siblings) sibling_envs.push_back(family.build_all(set));

  const auto start = std::chrono::steady_clock::now();
  ContinuousRun run;
  Adam adam;
  double upsilon_total = 0.0;
  const double min_log_std = std::log(config.min_std);

  for (int it = 0; it < config.iterations; ++it) {
    RolloutOptions options;
    options.episodes_per_domain = config.batch;
    options.horizon = task.horizon;
    options.seed = config.seed;
    options.round = static_cast<std::uint64_t>(it);
    options.probe_siblings = probe;
    options.threads = config.threads;
    const RolloutBatch batch =
        collect_rollouts_spidr(std::span<const Env>(rollout_envs), sibling_envs, policy, penalty, options);

    detail::ReturnsToGo targets;
    MetricsRecord rec;
    rec.iteration = it;
    rec.dual = run.state.dual;
    double visited = 0.0;
    double batch_upsilon = 0.0;
    for (const Episode& ep : batch.episodes) {
      targets.reward.push_back(detail::returns_to_go(ep.reward, task.discount));
      targets.cost.push_back(detail::returns_to_go(ep.penalized, task.discount));
      rec.j_train += discounted_sum(ep.reward, task.discount);
      rec.c_train_raw += discounted_sum(ep.cost, task.discount);
      rec.c_train_penalized += discounted_sum(ep.penalized, task.discount);
      for (double u : ep.upsilon) {
        batch_upsilon += u;
        rec.max_upsilon = std::max(rec.max_upsilon, u);
      }
      visited += static_cast<double>(ep.length());
    }
    const auto episodes = static_cast<double>(batch.episodes.size());
    rec.j_train /= episodes;
    rec.c_train_raw /= episodes;
    rec.c_train_penalized /= episodes;
    rec.mean_upsilon = batch_upsilon / visited;
    upsilon_total += batch_upsilon;
    run.upsilon.count += static_cast<long>(visited);
    run.upsilon.max = std::max(run.upsilon.max, rec.max_upsilon);

    if (it % config.eval_every == 0 || it + 1 == config.iterations) {
      const EnsembleSpec eval_spec{config.eval_domains, 2, derive_seed(config.seed, "eval/round", static_cast<std::uint64_t>(it))};
      const auto eval_domains = sample_domains(family.distribution(Phase::eval), eval_spec).rollout;
      const auto eval_envs = family.build_all(eval_domains);
      const EvalResult eval =
          evaluate_deterministic(std::span<const Env>(eval_envs), policy, config.eval_episodes, task.horizon,
                                 task.discount, derive_seed(config.seed, "eval/episodes", static_cast<std::uint64_t>(it)),
                                 config.threads);
      rec.j_eval = eval.objective;
      rec.c_eval = eval.constraint;
    }

    const Eigen::VectorXd base_r = detail::fit_baseline(batch, targets.reward, task.horizon, config.baseline_ridge);
    const Eigen::VectorXd base_c = detail::fit_baseline(batch, targets.cost, task.horizon, config.baseline_ridge);
    const Eigen::VectorXd grad_r =
        detail::policy_gradient(batch, policy, targets.reward, base_r, task.discount, task.horizon);
    const Eigen::VectorXd grad_c =
        detail::policy_gradient(batch, policy, targets.cost, base_c, task.discount, task.horizon);
    const PolicyUpdate<Eigen::VectorXd> update =
        config.algorithm == SolverAlgorithm::crpo
            ? crpo_update(run.state, grad_r, grad_c, rec.c_train_penalized, task.budget, 1.0, config.crpo_tolerance)
            : primal_dual_update(run.state, grad_r, grad_c, rec.c_train_penalized, task.budget, 1.0,
                                 config.dual_step_size);
    policy.add_flat(adam.step(update.delta, config.step_size), min_log_std, config.learn_std);
    rec.branch = update.branch;
    rec.wall_clock = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    run.metrics.push_back(rec);
  }
  run.policy = std::move(policy);
  run.upsilon.mean = run.upsilon.count > 0 ? upsilon_total / static_cast<double>(run.upsilon.count) : 0.0;
  const int window = std::max(10, config.iterations / 10);
  run.infeasible = run.state.violation_streak >= window;
  return run;
}

}  // namespace spidr
