#pragma once

// Three-state worst-case chain: domain randomization picks the action that is
// budget-tight in simulation and violates the budget on the real kernel.

#include "spidr/cmdp.hpp"
#include "spidr/randomize.hpp"

#include <stdexcept>

namespace spidr::envs {

struct ChainExampleSpec {
  double epsilon = 0.25;
  double gamma = 0.9;

  void validate() const {
    if (!(epsilon > 0.0 && epsilon <= 0.25)) throw std::invalid_argument("ChainExampleSpec: epsilon must lie in (0, 1/4]");
    if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("ChainExampleSpec: gamma must lie in (0, 1)");
  }

  /// gamma/(1-gamma) * (1/2 + epsilon)
  [[nodiscard]] double budget() const { return gamma / (1.0 - gamma) * (0.5 + epsilon); }
};

inline constexpr int kChainStart = 0;
inline constexpr int kChainCostly = 1;
inline constexpr int kChainSafe = 2;
inline constexpr int kChainGreedyAction = 0;    // a1
inline constexpr int kChainCautiousAction = 1;  // a2

/// Chain whose start state reaches s1 with probability 1/2 + shift of the chosen action.
inline TabularCMDP chain_cmdp(const ChainExampleSpec& spec, double shift_a1, double shift_a2) {
  TabularCMDP m(3, 2, 1);
  m.embedding << 0.0, 1.0, 2.0;
  m.discount = spec.gamma;
  m.budget = spec.budget();
  m.initial << 1.0, 0.0, 0.0;
  m.r_max = 1.0;
  m.c_max = 1.0;
  for (int a = 0; a < 2; ++a) {
    m.reward(kChainCostly, a) = 1.0;
    m.cost(kChainCostly, a) = 1.0;
    const double shift = a == kChainGreedyAction ? shift_a1 : shift_a2;
    m.transition(m.index(kChainStart, a), kChainCostly) = 0.5 + shift;
    m.transition(m.index(kChainStart, a), kChainSafe) = 0.5 - shift;
    m.transition(m.index(kChainCostly, a), kChainCostly) = 1.0;
    m.transition(m.index(kChainSafe, a), kChainSafe) = 1.0;
  }
  return m;
}

struct Example1 {
  TabularFamily sim_family;
  TabularCMDP real_env;
  double budget = 0.0;
};

/// Every simulated domain is identical: p(s1|s0,a) = 1/2 + eps 1[a=a1];
/// real: p*(s1|s0,a) = 1/2 + eps (1 + 1[a=a1]).
inline Example1 build_example1(const ChainExampleSpec& spec) {
  spec.validate();
  Example1 out;
  out.budget = spec.budget();
  const TabularCMDP sim = chain_cmdp(spec, spec.epsilon, 0.0);
  out.sim_family.builder = [sim](const DomainParams&) { return sim; };
  out.real_env = chain_cmdp(spec, 2.0 * spec.epsilon, spec.epsilon);
  return out;
}

}  // namespace spidr::envs
