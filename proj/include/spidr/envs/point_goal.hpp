#pragma once

// Planar point mass that must reach a goal; kinetic energy inside hazard
// circles and leaving the arena are costly. Semi-implicit Euler integration.

#include "spidr/envs/step_result.hpp"
#include "spidr/randomize.hpp"
#include "spidr/rng.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace spidr::envs {

struct PointGoalParams {
  double mass = 1.0;
  double damping = 1.0;  // linear drag coefficient
  double gear = 1.0;     // force per unit action
};

struct Circle {
  Eigen::Vector2d center = Eigen::Vector2d::Zero();
  double radius = 0.0;
};

struct PointGoalSpec {
  PointGoalParams nominal;
  Eigen::Vector2d goal{1.5, 0.0};
  double goal_radius = 0.3;
  std::vector<Circle> hazards;
  Eigen::Vector2d arena_lo{-2.5, -2.5};
  Eigen::Vector2d arena_hi{2.5, 2.5};
  Eigen::Vector2d start{-1.5, 0.0};
  double start_noise = 0.1;
  double control_penalty = 0.0;     // lambda_c
  double smoothness_penalty = 0.0;  // lambda_l
  double dt = 0.05;
  int horizon = 400;

  void validate() const {
    if (!(goal_radius > 0.0)) throw std::invalid_argument("PointGoalSpec: goal radius must be > 0");
    if (!(dt > 0.0)) throw std::invalid_argument("PointGoalSpec: dt must be > 0");
    if (horizon < 1) throw std::invalid_argument("PointGoalSpec: horizon must be >= 1");
    for (const auto& h : hazards) {
      if (!(h.radius > 0.0)) throw std::invalid_argument("PointGoalSpec: hazard radius must be > 0");
      if ((h.center.array() - h.radius < arena_lo.array()).any() || (h.center.array() + h.radius > arena_hi.array()).any())
        throw std::invalid_argument("PointGoalSpec: hazard must lie inside the arena");
    }
  }
};

/// (x, y, vx, vy, previous ax, previous ay)
using PointGoalState = Eigen::Matrix<double, 6, 1>;
using PointGoalAction = Eigen::Vector2d;

inline double kinetic_energy(const PointGoalState& s, double mass) { return 0.5 * mass * s.segment<2>(2).squaredNorm(); }

inline bool inside_arena(const PointGoalSpec& spec, const Eigen::Vector2d& pos) {
  return (pos.array() >= spec.arena_lo.array()).all() && (pos.array() <= spec.arena_hi.array()).all();
}

/// Hazard and arena cost of a state.
inline double pointgoal_cost(const PointGoalSpec& spec, const PointGoalParams& params, const PointGoalState& s) {
  const Eigen::Vector2d pos = s.head<2>();
  double cost = 0.0;
  const double energy = kinetic_energy(s, params.mass);
  for (const auto& h : spec.hazards)
    if ((pos - h.center).norm() <= h.radius) cost += energy;
  if (!inside_arena(spec, pos)) cost += 1.0;
  return cost;
}

/// Reward: d_{t-1} - d_t + 1[d_t <= eps] - lambda_c |a| - lambda_l |a - a_prev|^2.
inline StepResult<PointGoalState> step_pointgoal(const PointGoalSpec& spec, const PointGoalParams& params,
                                                 const PointGoalState& state, const PointGoalAction& raw_action) {
  if (!state.allFinite() || !raw_action.allFinite()) throw std::domain_error("step_pointgoal: non-finite input");
  const PointGoalAction action = raw_action.cwiseMax(-1.0).cwiseMin(1.0);
  const Eigen::Vector2d pos = state.head<2>();
  const Eigen::Vector2d vel = state.segment<2>(2);
  const Eigen::Vector2d prev_action = state.tail<2>();

  const Eigen::Vector2d accel = (params.gear * action - params.damping * vel) / params.mass;
  const Eigen::Vector2d next_vel = vel + spec.dt * accel;
  const Eigen::Vector2d next_pos = pos + spec.dt * next_vel;

  StepResult<PointGoalState> out;
  out.next << next_pos, next_vel, action;
  const double dist_before = (pos - spec.goal).norm();
  const double dist_after = (next_pos - spec.goal).norm();
  out.reward = dist_before - dist_after + (dist_after <= spec.goal_radius ? 1.0 : 0.0) -
               spec.control_penalty * action.norm() - spec.smoothness_penalty * (action - prev_action).squaredNorm();
  out.cost = pointgoal_cost(spec, params, out.next);
  return out;
}

/// One environment instance: task geometry plus sampled physics.
struct PointGoalEnv {
  static constexpr int state_dim = 6;
  static constexpr int action_dim = 2;
  using State = PointGoalState;
  using Action = PointGoalAction;

  PointGoalSpec spec;
  PointGoalParams params;

  [[nodiscard]] int horizon() const { return spec.horizon; }

  [[nodiscard]] State reset(Rng& rng) const {
    State s = State::Zero();
    s(0) = spec.start(0) + spec.start_noise * (2.0 * uniform01(rng) - 1.0);
    s(1) = spec.start(1) + spec.start_noise * (2.0 * uniform01(rng) - 1.0);
    return s;
  }

  [[nodiscard]] StepResult<State> step(const State& s, const Action& a) const { return step_pointgoal(spec, params, s, a); }
};

/// Physics randomization: mass and damping factors, additive gear offset.
inline DomainFamily<PointGoalEnv> pointgoal_family(const PointGoalSpec& spec, std::vector<DomainParamSpec> params) {
  spec.validate();
  for (const auto& p : params) {
    p.validate();
    if (p.name != "mass" && p.name != "damping" && p.name != "gear")
      throw std::invalid_argument("pointgoal: unknown domain parameter '" + p.name + "'");
  }
  DomainFamily<PointGoalEnv> family;
  family.params = params;
  family.builder = [spec, params](const DomainParams& xi) {
    PointGoalEnv env{spec, spec.nominal};
    for (std::size_t k = 0; k < params.size(); ++k) {
      double* target = params[k].name == "mass"      ? &env.params.mass
                       : params[k].name == "damping" ? &env.params.damping
                                                     : &env.params.gear;
      if (params[k].mode == Perturbation::multiplicative) *target *= xi[k];
      else *target += xi[k];
    }
    if (!(env.params.mass > 0.0) || !(env.params.damping >= 0.0))
      throw std::invalid_argument("pointgoal: perturbed mass/damping out of range");
    return env;
  };
  return family;
}

}  // namespace spidr::envs
