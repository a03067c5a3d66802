#pragma once

// Exact single-kernel CMDP solver through the occupancy-measure LP:
//   max  sum d(s,a) r(s,a)
//   s.t. sum_a d(s',a) - gamma sum_{s,a} p(s'|s,a) d(s,a) = (1-gamma) rho(s')
//        sum d(s,a) c(s,a) <= (1-gamma) budget,   d >= 0.

#include "spidr/cmdp.hpp"
#include "spidr/simplex.hpp"

namespace spidr {

struct CmdpLpResult {
  LpStatus status = LpStatus::numerical_failure;
  TabularPolicy policy;
  double objective = 0.0;   // J*
  double constraint = 0.0;  // C*
  OccupancyMeasure occupancy;

  [[nodiscard]] bool feasible() const { return status == LpStatus::optimal; }
};

/// pi(a|s) = d(s,a) / sum_a d(s,a); states without occupancy get the uniform policy.
inline TabularPolicy policy_from_occupancy(const Matrix& weights, double zero_tol = 1e-14) {
  TabularPolicy pi{Matrix(weights.rows(), weights.cols())};
  for (Eigen::Index s = 0; s < weights.rows(); ++s) {
    const double mass = weights.row(s).sum();
    if (mass > zero_tol) pi.probs.row(s) = weights.row(s) / mass;
    else pi.probs.row(s).setConstant(1.0 / static_cast<double>(weights.cols()));
  }
  return pi;
}

inline CmdpLpResult solve_cmdp_lp(const TabularCMDP& m) {
  m.validate();
  const int states = m.num_states;
  const int pairs = states * m.num_actions;
  LinearProgram lp;
  lp.A = Matrix::Zero(states + 1, pairs);
  lp.b = Vector::Zero(states + 1);
  lp.c = Vector::Zero(pairs);
  lp.sense.assign(states, RowSense::equal);
  lp.sense.push_back(RowSense::less_equal);
  for (int s = 0; s < states; ++s) {
    for (int a = 0; a < m.num_actions; ++a) {
      const int col = m.index(s, a);
      lp.A(s, col) += 1.0;
      for (int next = 0; next < states; ++next) lp.A(next, col) -= m.discount * m.transition(col, next);
      lp.A(states, col) = m.cost(s, a);
      lp.c(col) = m.reward(s, a);
    }
    lp.b(s) = (1.0 - m.discount) * m.initial(s);
  }
  lp.b(states) = (1.0 - m.discount) * m.budget;

  const LpSolution sol = solve_lp(lp);
  CmdpLpResult out;
  out.status = sol.status;
  if (sol.status != LpStatus::optimal) return out;
  out.occupancy.weights = Matrix(states, m.num_actions);
  for (int s = 0; s < states; ++s)
    for (int a = 0; a < m.num_actions; ++a) out.occupancy.weights(s, a) = sol.x(m.index(s, a));
  out.policy = policy_from_occupancy(out.occupancy.weights);
  out.objective = out.occupancy.expect(m.reward) / (1.0 - m.discount);
  out.constraint = out.occupancy.expect(m.cost) / (1.0 - m.discount);
  return out;
}

}  // namespace spidr
