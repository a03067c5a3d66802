#pragma once

// Finite-state constrained MDPs: representation, exact policy evaluation,
// discounted occupancy measures and the telescoping identity between two
// transition kernels.

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace spidr {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kRowSumTolerance = 1e-12;

/// Finite-state CMDP. Transitions are stored as an (S*A) x S matrix whose row
/// `index(s, a)` is the next-state distribution p(.|s, a).
struct TabularCMDP {
  int num_states = 0;
  int num_actions = 0;
  Matrix transition;  // (S*A) x S
  Matrix reward;      // S x A, entries in [0, r_max]
  Matrix cost;        // S x A, entries in [0, c_max]
  double discount = 0.9;
  Vector initial;     // rho
  double budget = 1.0;
  Matrix embedding;   // S x k, per-state coordinates
  double r_max = 1.0;
  double c_max = 1.0;

  TabularCMDP() = default;
  TabularCMDP(int states, int actions, int embedding_dim = 1)
      : num_states(states),
        num_actions(actions),
        transition(Matrix::Zero(states * actions, states)),
        reward(Matrix::Zero(states, actions)),
        cost(Matrix::Zero(states, actions)),
        initial(Vector::Zero(states)),
        embedding(Matrix::Zero(states, embedding_dim)) {}

  [[nodiscard]] int index(int s, int a) const { return s * num_actions + a; }
  [[nodiscard]] int embedding_dim() const { return static_cast<int>(embedding.cols()); }

  [[nodiscard]] auto next_row(int s, int a) const { return transition.row(index(s, a)); }

  /// Throws std::invalid_argument naming the first violated invariant.
  void validate() const {
    auto fail = [](const std::string& what) { throw std::invalid_argument("TabularCMDP: " + what); };
    if (num_states <= 0 || num_actions <= 0) fail("state and action counts must be positive");
    if (transition.rows() != num_states * num_actions || transition.cols() != num_states)
      fail("transition tensor has wrong shape");
    if (reward.rows() != num_states || reward.cols() != num_actions) fail("reward has wrong shape");
    if (cost.rows() != num_states || cost.cols() != num_actions) fail("cost has wrong shape");
    if (initial.size() != num_states) fail("initial distribution has wrong size");
    if (embedding.rows() != num_states || embedding.cols() < 1) fail("embedding has wrong shape");
    if (!(discount >= 0.0 && discount < 1.0)) fail("discount must lie in [0, 1)");
    if (!(budget >= 0.0)) fail("budget must be nonnegative");
    for (Eigen::Index row = 0; row < transition.rows(); ++row) {
      if ((transition.row(row).array() < 0.0).any() || !transition.row(row).allFinite())
        fail("transition row " + std::to_string(row) + " has a negative or non-finite entry");
      if (std::abs(transition.row(row).sum() - 1.0) > kRowSumTolerance)
        fail("transition row " + std::to_string(row) + " does not sum to 1");
    }
    if ((initial.array() < 0.0).any() || std::abs(initial.sum() - 1.0) > kRowSumTolerance)
      fail("initial distribution is not a probability vector");
    if (!reward.allFinite() || reward.minCoeff() < 0.0 || reward.maxCoeff() > r_max)
      fail("reward entries must lie in [0, r_max]");
    if (!cost.allFinite() || cost.minCoeff() < 0.0 || cost.maxCoeff() > c_max)
      fail("cost entries must lie in [0, c_max]");
    if (!embedding.allFinite()) fail("embedding must be finite");
  }
};

/// Stationary stochastic policy pi(a|s).
struct TabularPolicy {
  Matrix probs;  // S x A

  [[nodiscard]] int num_states() const { return static_cast<int>(probs.rows()); }
  [[nodiscard]] int num_actions() const { return static_cast<int>(probs.cols()); }

  static TabularPolicy uniform(int states, int actions) {
    return {Matrix::Constant(states, actions, 1.0 / actions)};
  }

  static TabularPolicy deterministic(const std::vector<int>& choice, int actions) {
    TabularPolicy pi{Matrix::Zero(static_cast<Eigen::Index>(choice.size()), actions)};
    for (std::size_t s = 0; s < choice.size(); ++s) pi.probs(static_cast<Eigen::Index>(s), choice[s]) = 1.0;
    return pi;
  }

  void validate() const {
    for (Eigen::Index s = 0; s < probs.rows(); ++s) {
      if ((probs.row(s).array() < 0.0).any() || std::abs(probs.row(s).sum() - 1.0) > kRowSumTolerance)
        throw std::invalid_argument("TabularPolicy: row " + std::to_string(s) + " is not a distribution");
    }
  }
};

inline void check_compatible(const TabularCMDP& m, const TabularPolicy& pi) {
  if (pi.num_states() != m.num_states || pi.num_actions() != m.num_actions)
    throw std::invalid_argument("policy shape does not match the CMDP");
}

struct ValueFunctions {
  Vector v_reward;
  Vector v_cost;
};

struct PolicyEvaluation {
  double objective = 0.0;   // J = rho' V_r
  double constraint = 0.0;  // C = rho' V_c
  ValueFunctions values;
};

/// State-to-state kernel P_pi(s, s') = sum_a pi(a|s) p(s'|s,a).
inline Matrix policy_kernel(const TabularCMDP& m, const TabularPolicy& pi) {
  Matrix kernel = Matrix::Zero(m.num_states, m.num_states);
  for (int s = 0; s < m.num_states; ++s)
    for (int a = 0; a < m.num_actions; ++a)
      if (pi.probs(s, a) != 0.0) kernel.row(s) += pi.probs(s, a) * m.next_row(s, a);
  return kernel;
}

/// Expected one-step signal under pi: f_pi(s) = sum_a pi(a|s) f(s,a).
inline Vector policy_average(const Matrix& per_action, const TabularPolicy& pi) {
  return (per_action.array() * pi.probs.array()).rowwise().sum();
}

/// Solves V = f_pi + gamma P_pi V for reward and cost by dense LU.
inline PolicyEvaluation evaluate_policy(const TabularCMDP& m, const TabularPolicy& pi) {
  check_compatible(m, pi);
  const Matrix system = Matrix::Identity(m.num_states, m.num_states) - m.discount * policy_kernel(m, pi);
  Eigen::PartialPivLU<Matrix> lu(system);
  Matrix rhs(m.num_states, 2);
  rhs.col(0) = policy_average(m.reward, pi);
  rhs.col(1) = policy_average(m.cost, pi);
  const Matrix v = lu.solve(rhs);
  PolicyEvaluation out;
  out.values.v_reward = v.col(0);
  out.values.v_cost = v.col(1);
  out.objective = m.initial.dot(out.values.v_reward);
  out.constraint = m.initial.dot(out.values.v_cost);
  return out;
}

/// Max-norm residual of the Bellman linear system for both value functions.
inline double bellman_residual(const TabularCMDP& m, const TabularPolicy& pi, const ValueFunctions& values) {
  const Matrix kernel = policy_kernel(m, pi);
  const Vector res_r = policy_average(m.reward, pi) + m.discount * kernel * values.v_reward - values.v_reward;
  const Vector res_c = policy_average(m.cost, pi) + m.discount * kernel * values.v_cost - values.v_cost;
  return std::max(res_r.cwiseAbs().maxCoeff(), res_c.cwiseAbs().maxCoeff());
}

/// Normalized discounted occupancy d(s,a) = (1-gamma) sum_t gamma^t P_t(s) pi(a|s), S x A.
struct OccupancyMeasure {
  Matrix weights;

  [[nodiscard]] Vector state_marginal() const { return weights.rowwise().sum(); }
  [[nodiscard]] double expect(const Matrix& per_pair) const { return (weights.array() * per_pair.array()).sum(); }
};

inline OccupancyMeasure occupancy(const TabularCMDP& m, const TabularPolicy& pi) {
  check_compatible(m, pi);
  const Matrix system =
      Matrix::Identity(m.num_states, m.num_states) - m.discount * policy_kernel(m, pi).transpose();
  const Vector state_occ = (1.0 - m.discount) * Eigen::PartialPivLU<Matrix>(system).solve(m.initial);
  OccupancyMeasure d{Matrix(m.num_states, m.num_actions)};
  for (int s = 0; s < m.num_states; ++s) d.weights.row(s) = state_occ(s) * pi.probs.row(s);
  return d;
}

/// Q_f(s,a) = f(s,a) + gamma sum_s' p(s'|s,a) V_f(s').
inline Matrix action_values(const TabularCMDP& m, const Matrix& per_action, const Vector& values) {
  Matrix q(m.num_states, m.num_actions);
  const Vector next = m.transition * values;
  for (int s = 0; s < m.num_states; ++s)
    for (int a = 0; a < m.num_actions; ++a) q(s, a) = per_action(s, a) + m.discount * next(m.index(s, a));
  return q;
}

inline void check_same_structure(const TabularCMDP& p, const TabularCMDP& q) {
  if (p.num_states != q.num_states || p.num_actions != q.num_actions)
    throw std::invalid_argument("CMDPs have different state/action spaces");
  if (p.discount != q.discount || p.reward != q.reward || p.cost != q.cost || p.initial != q.initial)
    throw std::invalid_argument("CMDPs differ outside their transition kernels");
}

/// |C_q - C_p - gamma/(1-gamma) E_{d_q}[g]| where
/// g(s,a) = E_{q(.|s,a)} V_c^p - E_{p(.|s,a)} V_c^p.
inline double telescoping_residual(const TabularCMDP& mp, const TabularCMDP& mq, const TabularPolicy& pi) {
  check_same_structure(mp, mq);
  const PolicyEvaluation on_p = evaluate_policy(mp, pi);
  const PolicyEvaluation on_q = evaluate_policy(mq, pi);
  const Vector shift = (mq.transition - mp.transition) * on_p.values.v_cost;
  Matrix g(mp.num_states, mp.num_actions);
  for (int s = 0; s < mp.num_states; ++s)
    for (int a = 0; a < mp.num_actions; ++a) g(s, a) = shift(mp.index(s, a));
  const double predicted = mp.discount / (1.0 - mp.discount) * occupancy(mq, pi).expect(g);
  return std::abs(on_q.constraint - on_p.constraint - predicted);
}

/// Copy of `m` with its cost replaced by `cost`; c_max grows to cover it.
inline TabularCMDP with_cost(TabularCMDP m, const Matrix& cost) {
  m.cost = cost;
  m.c_max = std::max(m.c_max, cost.maxCoeff());
  return m;
}

}  // namespace spidr
