#pragma once

namespace spidr::envs {

template <class State>
struct StepResult {
  State next;
  double reward = 0.0;
  double cost = 0.0;
};

}  // namespace spidr::envs
