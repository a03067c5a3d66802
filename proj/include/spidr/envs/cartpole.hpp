#pragma once

// Frictionless cart-pole (uniform rod, theta = 0 upright) integrated with RK4.
// Swing-up reward (1 + cos theta)/2; cost 1 when the cart leaves the slider range.

#include "spidr/envs/step_result.hpp"
#include "spidr/randomize.hpp"
#include "spidr/rng.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <algorithm>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace spidr::envs {

struct CartpoleParams {
  double pole_length_offset = 0.0;  // added to the half-length
  double gear_offset = 0.0;         // added to the force gear
};

struct CartpoleSpec {
  double cart_mass = 1.0;
  double pole_mass = 0.1;
  double half_length = 0.5;
  double gear = 10.0;
  double gravity = 9.81;
  double x_max = 1.0;
  double dt = 0.01;
  int horizon = 400;
  double start_noise = 0.05;

  void validate() const {
    if (!(cart_mass > 0.0 && pole_mass > 0.0 && half_length > 0.0 && dt > 0.0 && x_max > 0.0))
      throw std::invalid_argument("CartpoleSpec: physical constants must be positive");
    if (horizon < 1) throw std::invalid_argument("CartpoleSpec: horizon must be >= 1");
  }
};

/// (x, x_dot, theta, theta_dot)
using CartpoleState = Eigen::Vector4d;
using CartpoleAction = Eigen::Matrix<double, 1, 1>;

namespace detail {

struct CartpolePhysics {
  double cart_mass, pole_mass, half_length, gravity;

  [[nodiscard]] CartpoleState derivative(const CartpoleState& s, double force) const {
    const double total = cart_mass + pole_mass;
    const double sin_t = std::sin(s(2));
    const double cos_t = std::cos(s(2));
    const double ml = pole_mass * half_length;
    // [total, ml cos; ml cos, 4/3 m l^2] [x_dd; th_dd] = [F + ml th_d^2 sin; m g l sin]
    const double a11 = total;
    const double a12 = ml * cos_t;
    const double a22 = 4.0 / 3.0 * pole_mass * half_length * half_length;
    const double b1 = force + ml * s(3) * s(3) * sin_t;
    const double b2 = ml * gravity * sin_t;
    const double det = a11 * a22 - a12 * a12;
    CartpoleState d;
    d << s(1), (a22 * b1 - a12 * b2) / det, s(3), (a11 * b2 - a12 * b1) / det;
    return d;
  }

  [[nodiscard]] double energy(const CartpoleState& s) const {
    const double ml = pole_mass * half_length;
    return 0.5 * (cart_mass + pole_mass) * s(1) * s(1) + ml * s(1) * s(3) * std::cos(s(2)) +
           0.5 * (4.0 / 3.0) * pole_mass * half_length * half_length * s(3) * s(3) +
           ml * gravity * std::cos(s(2));
  }
};

}  // namespace detail

inline detail::CartpolePhysics cartpole_physics(const CartpoleSpec& spec, const CartpoleParams& params) {
  const double length = spec.half_length + params.pole_length_offset;
  if (!(length > 0.0)) throw std::invalid_argument("cartpole: pole length must stay positive");
  return {spec.cart_mass, spec.pole_mass, length, spec.gravity};
}

inline double cartpole_energy(const CartpoleSpec& spec, const CartpoleParams& params, const CartpoleState& s) {
  return cartpole_physics(spec, params).energy(s);
}

inline StepResult<CartpoleState> step_cartpole(const CartpoleSpec& spec, const CartpoleParams& params,
                                               const CartpoleState& state, double action) {
  if (!state.allFinite() || !std::isfinite(action)) throw std::domain_error("step_cartpole: non-finite input");
  const double gear = spec.gear + params.gear_offset;
  if (!(gear >= 0.0)) throw std::invalid_argument("cartpole: gear must stay nonnegative");
  const auto physics = cartpole_physics(spec, params);
  const double force = gear * std::clamp(action, -1.0, 1.0);
  const double h = spec.dt;
  const CartpoleState k1 = physics.derivative(state, force);
  const CartpoleState k2 = physics.derivative(state + 0.5 * h * k1, force);
  const CartpoleState k3 = physics.derivative(state + 0.5 * h * k2, force);
  const CartpoleState k4 = physics.derivative(state + h * k3, force);
  StepResult<CartpoleState> out;
  out.next = state + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  out.reward = 0.5 * (1.0 + std::cos(out.next(2)));
  out.cost = std::abs(out.next(0)) > spec.x_max ? 1.0 : 0.0;
  return out;
}

struct CartpoleEnv {
  static constexpr int state_dim = 4;
  static constexpr int action_dim = 1;
  using State = CartpoleState;
  using Action = CartpoleAction;

  CartpoleSpec spec;
  CartpoleParams params;

  [[nodiscard]] int horizon() const { return spec.horizon; }

  /// Starts hanging down near rest.
  [[nodiscard]] State reset(Rng& rng) const {
    State s;
    s << spec.start_noise * (2.0 * uniform01(rng) - 1.0), 0.0,
        std::numbers::pi + spec.start_noise * (2.0 * uniform01(rng) - 1.0), 0.0;
    return s;
  }

  [[nodiscard]] StepResult<State> step(const State& s, const Action& a) const {
    return step_cartpole(spec, params, s, a(0));
  }
};

/// Additive pole-length and gear offsets.
inline DomainFamily<CartpoleEnv> cartpole_family(const CartpoleSpec& spec, std::vector<DomainParamSpec> params) {
  spec.validate();
  for (const auto& p : params) {
    p.validate();
    if (p.name != "pole_length" && p.name != "gear")
      throw std::invalid_argument("cartpole: unknown domain parameter '" + p.name + "'");
    if (p.mode != Perturbation::additive) throw std::invalid_argument("cartpole: parameters are additive offsets");
  }
  DomainFamily<CartpoleEnv> family;
  family.params = params;
  family.builder = [spec, params](const DomainParams& xi) {
    CartpoleEnv env{spec, {}};
    for (std::size_t k = 0; k < params.size(); ++k) {
      if (params[k].name == "pole_length") env.params.pole_length_offset = xi[k];
      else env.params.gear_offset = xi[k];
    }
    cartpole_physics(spec, env.params);
    return env;
  };
  return family;
}

}  // namespace spidr::envs
