#pragma once

// Penalized rollout collection for continuous families. Each rollout domain
// steps its own environment; at every visited (s, a) the domain's siblings
// take one probe step from the same pair, and the spread of their predictions
// penalizes the cost. Domains run on worker threads and merge by index.

#include "spidr/pessimize.hpp"
#include "spidr/solve/gaussian_policy.hpp"

#include <algorithm>
#include <exception>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace spidr {

struct Episode {
  int domain = 0;
  std::vector<Eigen::VectorXd> features;
  std::vector<Eigen::VectorXd> actions;
  std::vector<double> reward;
  std::vector<double> cost;       // raw c
  std::vector<double> upsilon;
  std::vector<double> penalized;  // c + lambda * upsilon

  [[nodiscard]] std::size_t length() const { return reward.size(); }
};

struct RolloutBatch {
  std::vector<Episode> episodes;  // domain-major, then episode index
};

struct RolloutOptions {
  int episodes_per_domain = 1;
  int horizon = 400;
  std::uint64_t seed = 0;
  std::uint64_t round = 0;  // iteration index, salts the episode streams
  bool probe_siblings = true;
  int threads = 0;
};

inline double discounted_sum(const std::vector<double>& values, double gamma) {
  double total = 0.0;
  double weight = 1.0;
  for (double v : values) {
    total += weight * v;
    weight *= gamma;
  }
  return total;
}

namespace detail {

inline int worker_count(int requested, std::size_t jobs) {
  const int hw = std::max(1u, std::thread::hardware_concurrency());
  const int want = requested > 0 ? requested : hw;
  return std::max(1, std::min<int>(want, static_cast<int>(jobs)));
}

/// Runs job(i) for i < count on a fixed pool; the first exception is rethrown.
template <class Job>
void parallel_for(std::size_t count, int threads, Job job) {
  const int workers = worker_count(threads, count);
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) job(i);
    return;
  }
  std::vector<std::exception_ptr> errors(count);
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (std::size_t i = static_cast<std::size_t>(w); i < count; i += static_cast<std::size_t>(workers)) {
        try {
          job(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace detail

template <class Env>
RolloutBatch collect_rollouts_spidr(std::span<const Env> rollout_envs,
                                    const std::vector<std::vector<Env>>& sibling_envs,
                                    const LinearGaussianPolicy& policy, const PenaltyConfig& penalty,
                                    const RolloutOptions& options) {
  penalty.validate();
  if (penalty.mode != UpsilonMode::sampled)
    throw std::invalid_argument("collect_rollouts_spidr: continuous families support sampled upsilon only");
  if (sibling_envs.size() != rollout_envs.size())
    throw std::invalid_argument("collect_rollouts_spidr: sibling table does not match the rollout domains");
  const bool probe = options.probe_siblings || penalty.lambda > 0.0;
  std::vector<std::vector<Episode>> per_domain(rollout_envs.size());

  detail::parallel_for(rollout_envs.size(), options.threads, [&](std::size_t i) {
    const Env& env = rollout_envs[i];
    const std::span<const Env> siblings(sibling_envs[i]);
    if (probe && siblings.size() < 2)
      throw std::invalid_argument("collect_rollouts_spidr: sampled upsilon needs at least two siblings");
    for (int e = 0; e < options.episodes_per_domain; ++e) {
      Rng rng = make_stream(options.seed, "rollout/episode",
                            (options.round << 32) ^ (static_cast<std::uint64_t>(i) << 12) ^ static_cast<std::uint64_t>(e));
      Episode ep;
      ep.domain = static_cast<int>(i);
      typename Env::State state = env.reset(rng);
      for (int t = 0; t < options.horizon; ++t) {
        const Eigen::VectorXd phi = policy.features(state);
        const Eigen::VectorXd raw_action = policy.sample(phi, rng);
        typename Env::Action action = raw_action;
        try {
          const auto out = env.step(state, action);
          const double ups = probe ? upsilon_one_step(siblings, state, action) : 0.0;
          ep.features.push_back(phi);
          ep.actions.push_back(raw_action);
          ep.reward.push_back(out.reward);
          ep.cost.push_back(out.cost);
          ep.upsilon.push_back(ups);
          ep.penalized.push_back(penalize_cost(out.cost, ups, penalty.lambda));
          state = out.next;
        } catch (const std::exception& err) {
          throw std::runtime_error("rollout failed in domain " + std::to_string(i) + " at step " +
                                   std::to_string(t) + ": " + err.what());
        }
      }
      per_domain[i].push_back(std::move(ep));
    }
  });

  RolloutBatch batch;
  for (auto& episodes : per_domain)
    for (auto& ep : episodes) batch.episodes.push_back(std::move(ep));
  return batch;
}

struct EvalResult {
  double objective = 0.0;
  double constraint = 0.0;
};

/// Discounted returns of the deterministic policy, averaged over domains and episodes.
template <class Env>
EvalResult evaluate_deterministic(std::span<const Env> envs, const LinearGaussianPolicy& policy, int episodes,
                                  int horizon, double gamma, std::uint64_t seed, int threads = 0) {
  std::vector<EvalResult> per_domain(envs.size());
  detail::parallel_for(envs.size(), threads, [&](std::size_t i) {
    for (int e = 0; e < episodes; ++e) {
      Rng rng = make_stream(seed, "eval/episode", (static_cast<std::uint64_t>(i) << 12) ^ static_cast<std::uint64_t>(e));
      typename Env::State state = envs[i].reset(rng);
      double weight = 1.0;
      for (int t = 0; t < horizon; ++t) {
        typename Env::Action action = policy.act_deterministic(state);
        const auto out = envs[i].step(state, action);
        per_domain[i].objective += weight * out.reward;
        per_domain[i].constraint += weight * out.cost;
        weight *= gamma;
        state = out.next;
      }
    }
  });
  EvalResult total;
  for (const auto& r : per_domain) {
    total.objective += r.objective;
    total.constraint += r.constraint;
  }
  const double count = static_cast<double>(envs.size()) * episodes;
  total.objective /= count;
  total.constraint /= count;
  return total;
}

}  // namespace spidr
