#pragma once

// Solver configuration, per-iteration metrics and the two constrained update
// rules: CRPO's switch between reward ascent and cost descent, and projected
// primal-dual ascent-descent on the Lagrangian.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace spidr {

enum class SolverAlgorithm { crpo, primal_dual, lp };

inline const char* to_string(SolverAlgorithm a) {
  switch (a) {
    case SolverAlgorithm::crpo: return "crpo";
    case SolverAlgorithm::primal_dual: return "primal-dual";
    case SolverAlgorithm::lp: return "lp";
  }
  return "unknown";
}

struct SolverConfig {
  SolverAlgorithm algorithm = SolverAlgorithm::crpo;
  double step_size = 1.0;
  double dual_step_size = 0.1;  // eta
  int iterations = 500;
  int batch = 1;                 // episodes per rollout domain per iteration
  double crpo_tolerance = 0.0;   // slack added to the budget before switching
  std::uint64_t seed = 0;
  // Continuous runs only.
  int eval_every = 10;
  int eval_domains = 8;
  int eval_episodes = 2;
  int threads = 0;               // 0 = hardware concurrency
  double initial_std = 0.5;
  double min_std = 0.05;
  bool learn_std = true;
  double baseline_ridge = 1e-3;

  void validate() const {
    if (!(step_size > 0.0) || !(dual_step_size > 0.0)) throw std::invalid_argument("solver: step sizes must be > 0");
    if (iterations < 1) throw std::invalid_argument("solver: iterations must be >= 1");
    if (batch < 1) throw std::invalid_argument("solver: batch must be >= 1");
    if (!(crpo_tolerance >= 0.0)) throw std::invalid_argument("solver: crpo tolerance must be >= 0");
    if (eval_every < 1 || eval_domains < 1 || eval_episodes < 1)
      throw std::invalid_argument("solver: evaluation cadence and sizes must be >= 1");
    if (!(initial_std > 0.0) || !(min_std > 0.0)) throw std::invalid_argument("solver: std must be > 0");
  }
};

enum class UpdateBranch { reward, cost, lagrangian, none };

inline const char* to_string(UpdateBranch b) {
  switch (b) {
    case UpdateBranch::reward: return "reward";
    case UpdateBranch::cost: return "cost";
    case UpdateBranch::lagrangian: return "lagrangian";
    case UpdateBranch::none: return "none";
  }
  return "unknown";
}

struct TrainState {
  int iteration = 0;
  double dual = 0.0;  // lambda_PD
  UpdateBranch last_branch = UpdateBranch::none;
  int violation_streak = 0;  // consecutive iterations with the constraint estimate above budget
};

struct MetricsRecord {
  int iteration = 0;
  double j_train = 0.0;
  double c_train_raw = 0.0;
  double c_train_penalized = 0.0;
  double j_eval = std::numeric_limits<double>::quiet_NaN();
  double c_eval = std::numeric_limits<double>::quiet_NaN();
  double dual = 0.0;
  double mean_upsilon = 0.0;
  double max_upsilon = 0.0;
  double wall_clock = 0.0;  // seconds since training began
  UpdateBranch branch = UpdateBranch::none;
};

template <class G>
struct PolicyUpdate {
  G delta;
  UpdateBranch branch = UpdateBranch::none;
};

namespace detail {

template <class G>
void require_finite(const G& g, const char* what, const TrainState& state) {
  if (!g.allFinite())
    throw std::domain_error(std::string(what) + " is not finite at iteration " + std::to_string(state.iteration));
}

inline void require_finite(double x, const char* what, const TrainState& state) {
  if (!std::isfinite(x))
    throw std::domain_error(std::string(what) + " is not finite at iteration " + std::to_string(state.iteration));
}

inline void track_violation(TrainState& state, double constraint, double budget, double tolerance) {
  state.violation_streak = constraint > budget + tolerance ? state.violation_streak + 1 : 0;
}

}  // namespace detail

/// Cost descent when the estimate strictly exceeds budget + tolerance, reward ascent otherwise.
template <class G>
PolicyUpdate<G> crpo_update(TrainState& state, const G& grad_reward, const G& grad_cost, double constraint,
                            double budget, double step, double tolerance = 0.0) {
  detail::require_finite(constraint, "constraint estimate", state);
  const bool violated = constraint > budget + tolerance;
  PolicyUpdate<G> out;
  if (violated) {
    detail::require_finite(grad_cost, "cost gradient", state);
    out.delta = -step * grad_cost;
    out.branch = UpdateBranch::cost;
  } else {
    detail::require_finite(grad_reward, "reward gradient", state);
    out.delta = step * grad_reward;
    out.branch = UpdateBranch::reward;
  }
  detail::track_violation(state, constraint, budget, tolerance);
  state.last_branch = out.branch;
  ++state.iteration;
  return out;
}

/// Policy step on J - dual (C - d) with the current dual, then dual <- [dual + eta (C - d)]_+.
template <class G>
PolicyUpdate<G> primal_dual_update(TrainState& state, const G& grad_reward, const G& grad_cost, double constraint,
                                   double budget, double step, double dual_step) {
  detail::require_finite(constraint, "constraint estimate", state);
  detail::require_finite(grad_reward, "reward gradient", state);
  detail::require_finite(grad_cost, "cost gradient", state);
  PolicyUpdate<G> out;
  out.delta = step * (grad_reward - state.dual * grad_cost);
  out.branch = UpdateBranch::lagrangian;
  state.dual = std::max(0.0, state.dual + dual_step * (constraint - budget));
  detail::track_violation(state, constraint, budget, 0.0);
  state.last_branch = out.branch;
  ++state.iteration;
  return out;
}

/// Adam ascent on a flat parameter vector.
struct Adam {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  int t = 0;

  Eigen::VectorXd step(const Eigen::VectorXd& direction, double rate) {
    if (m.size() != direction.size()) {
      m = Eigen::VectorXd::Zero(direction.size());
      v = Eigen::VectorXd::Zero(direction.size());
    }
    ++t;
    m = beta1 * m + (1.0 - beta1) * direction;
    v = beta2 * v + (1.0 - beta2) * direction.cwiseProduct(direction);
    const double c1 = 1.0 - std::pow(beta1, t);
    const double c2 = 1.0 - std::pow(beta2, t);
    return rate * ((m / c1).array() / ((v / c2).array().sqrt() + epsilon)).matrix();
  }
};

}  // namespace spidr
