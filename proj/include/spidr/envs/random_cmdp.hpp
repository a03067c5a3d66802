#pragma once

// Random tabular instances for property sweeps and verification suites.

#include "spidr/cmdp.hpp"
#include "spidr/rng.hpp"

#include <random>

namespace spidr::envs {

inline Vector random_distribution(int size, Rng& rng) {
  std::exponential_distribution<double> draw(1.0);
  Vector v(size);
  for (int k = 0; k < size; ++k) v(k) = draw(rng);
  return v / v.sum();
}

/// Dense random kernel, uniform rewards/costs in [0,1], embedding in [0,1]^k.
inline TabularCMDP random_cmdp(int states, int actions, int embedding_dim, double gamma, Rng& rng) {
  TabularCMDP m(states, actions, embedding_dim);
  m.discount = gamma;
  for (int row = 0; row < states * actions; ++row) m.transition.row(row) = random_distribution(states, rng).transpose();
  for (int s = 0; s < states; ++s)
    for (int a = 0; a < actions; ++a) {
      m.reward(s, a) = uniform01(rng);
      m.cost(s, a) = uniform01(rng);
    }
  for (int s = 0; s < states; ++s)
    for (int k = 0; k < embedding_dim; ++k) m.embedding(s, k) = uniform01(rng);
  m.initial = random_distribution(states, rng);
  m.budget = 0.5 / (1.0 - gamma);
  return m;
}

/// Same rewards, costs, rho and embedding; fresh kernel.
inline TabularCMDP resample_kernel(TabularCMDP m, Rng& rng) {
  for (Eigen::Index row = 0; row < m.transition.rows(); ++row)
    m.transition.row(row) = random_distribution(m.num_states, rng).transpose();
  return m;
}

inline TabularPolicy random_policy(int states, int actions, Rng& rng) {
  TabularPolicy pi{Matrix(states, actions)};
  for (int s = 0; s < states; ++s) pi.probs.row(s) = random_distribution(actions, rng).transpose();
  return pi;
}

}  // namespace spidr::envs
