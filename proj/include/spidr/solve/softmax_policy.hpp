#pragma once

// Softmax-parameterized tabular policies and their exact policy gradients.

#include "spidr/cmdp.hpp"

#include <span>
#include <stdexcept>

namespace spidr {

struct SoftmaxTabularPolicy {
  Matrix logits;  // S x A

  static SoftmaxTabularPolicy uniform(int states, int actions) { return {Matrix::Zero(states, actions)}; }

  [[nodiscard]] TabularPolicy policy() const {
    TabularPolicy pi{Matrix(logits.rows(), logits.cols())};
    for (Eigen::Index s = 0; s < logits.rows(); ++s) {
      const Eigen::RowVectorXd e = (logits.row(s).array() - logits.row(s).maxCoeff()).exp().matrix();
      pi.probs.row(s) = e / e.sum();
    }
    return pi;
  }
};

enum class Signal { reward, cost };

/// d J / d logits averaged over `envs`, with J the reward or cost value.
/// Per domain: (1/(1-gamma)) d(s) pi(a|s) (Q(s,a) - V(s)).
inline Matrix exact_gradient(const SoftmaxTabularPolicy& policy, std::span<const TabularCMDP> envs, Signal which) {
  if (envs.empty()) throw std::invalid_argument("exact_gradient: empty domain list");
  const TabularPolicy pi = policy.policy();
  Matrix grad = Matrix::Zero(policy.logits.rows(), policy.logits.cols());
  for (const auto& env : envs) {
    check_compatible(env, pi);
    const PolicyEvaluation e = evaluate_policy(env, pi);
    const Matrix& signal = which == Signal::reward ? env.reward : env.cost;
    const Vector& v = which == Signal::reward ? e.values.v_reward : e.values.v_cost;
    const Matrix advantage = action_values(env, signal, v).colwise() - v;
    const Vector state_occ = occupancy(env, pi).state_marginal();
    grad += (state_occ.asDiagonal() * (pi.probs.array() * advantage.array()).matrix()) / (1.0 - env.discount);
  }
  return grad / static_cast<double>(envs.size());
}

}  // namespace spidr
