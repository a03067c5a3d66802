#pragma once

// Feature-linear Gaussian policies for the continuous tasks. Means are linear
// in a fixed feature map; the deterministic mode acts with the clamped mean.

#include "spidr/rng.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace spidr {

struct FeatureMap {
  std::string id;
  int size = 0;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> compute;

  [[nodiscard]] Eigen::VectorXd operator()(const Eigen::VectorXd& state) const { return compute(state); }
};

namespace detail {

/// Gaussian bumps on a regular grid over two coordinates.
inline void append_rbf_grid(Eigen::VectorXd& out, int& at, double u, double v, double lo_u, double hi_u, double lo_v,
                            double hi_v, int cells, double width) {
  for (int i = 0; i < cells; ++i)
    for (int j = 0; j < cells; ++j) {
      const double cu = lo_u + (hi_u - lo_u) * i / (cells - 1);
      const double cv = lo_v + (hi_v - lo_v) * j / (cells - 1);
      const double du = (u - cu) / width;
      const double dv = (v - cv) / width;
      out(at++) = std::exp(-0.5 * (du * du + dv * dv));
    }
}

}  // namespace detail

/// Point-goal: goal offset, saturated heading, velocity, bias and a 4x4 position grid.
inline FeatureMap pointgoal_features(Eigen::Vector2d goal, double arena_half_width) {
  constexpr int kCells = 4;
  FeatureMap map;
  map.id = "pointgoal-v1";
  map.size = 7 + kCells * kCells;
  map.compute = [goal, arena_half_width](const Eigen::VectorXd& s) {
    Eigen::VectorXd f(7 + kCells * kCells);
    const Eigen::Vector2d offset = goal - s.head<2>();
    // heading saturates to a unit vector beyond half a unit from the goal
    const Eigen::Vector2d heading = offset / std::max(offset.norm(), 0.5);
    f << offset, heading, s(2), s(3), 1.0, Eigen::VectorXd::Zero(kCells * kCells);
    int at = 7;
    const double h = arena_half_width;
    detail::append_rbf_grid(f, at, s(0), s(1), -h, h, -h, h, kCells, 2.0 * h / (kCells - 1));
    return f;
  };
  return map;
}

/// Cart-pole: raw and trigonometric coordinates, bias and a 5x5 grid over (angle, angular velocity).
inline FeatureMap cartpole_features() {
  constexpr int kCells = 5;
  FeatureMap map;
  map.id = "cartpole-v1";
  map.size = 6 + kCells * kCells;
  map.compute = [](const Eigen::VectorXd& s) {
    Eigen::VectorXd f(6 + kCells * kCells);
    f << s(0), s(1), std::cos(s(2)), std::sin(s(2)), s(3), 1.0, Eigen::VectorXd::Zero(kCells * kCells);
    int at = 6;
    const double wrapped = std::remainder(s(2), 2.0 * 3.141592653589793);
    detail::append_rbf_grid(f, at, wrapped, s(3), -3.0, 3.0, -8.0, 8.0, kCells, 2.0);
    return f;
  };
  return map;
}

struct LinearGaussianPolicy {
  FeatureMap features;
  Eigen::MatrixXd weights;  // action_dim x feature size
  Eigen::VectorXd log_std;  // per action dimension
  double action_bound = 1.0;

  static LinearGaussianPolicy zeros(FeatureMap features, int action_dim, double initial_std) {
    if (!(initial_std > 0.0)) throw std::invalid_argument("LinearGaussianPolicy: std must be > 0");
    LinearGaussianPolicy p;
    p.weights = Eigen::MatrixXd::Zero(action_dim, features.size);
    p.log_std = Eigen::VectorXd::Constant(action_dim, std::log(initial_std));
    p.features = std::move(features);
    return p;
  }

  [[nodiscard]] int action_dim() const { return static_cast<int>(weights.rows()); }
  [[nodiscard]] Eigen::Index num_params() const { return weights.size() + log_std.size(); }

  [[nodiscard]] Eigen::VectorXd mean(const Eigen::VectorXd& phi) const { return weights * phi; }

  /// Clamped mean: the deterministic evaluation action.
  [[nodiscard]] Eigen::VectorXd act_deterministic(const Eigen::VectorXd& state) const {
    return mean(features(state)).cwiseMax(-action_bound).cwiseMin(action_bound);
  }

  [[nodiscard]] Eigen::VectorXd sample(const Eigen::VectorXd& phi, Rng& rng) const {
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd a = mean(phi);
    for (Eigen::Index k = 0; k < a.size(); ++k) a(k) += std::exp(log_std(k)) * normal(rng);
    return a;
  }

  /// Gradient of log N(a; W phi, diag sigma^2) flattened as [vec(W) column-major, log_std].
  void accumulate_score(const Eigen::VectorXd& phi, const Eigen::VectorXd& action, double weight,
                        Eigen::VectorXd& grad) const {
    const Eigen::VectorXd z = (action - mean(phi)).cwiseQuotient(log_std.array().exp().matrix());
    const Eigen::Index rows = weights.rows();
    for (Eigen::Index j = 0; j < phi.size(); ++j)
      for (Eigen::Index i = 0; i < rows; ++i)
        grad(j * rows + i) += weight * z(i) / std::exp(log_std(i)) * phi(j);
    for (Eigen::Index i = 0; i < rows; ++i) grad(weights.size() + i) += weight * (z(i) * z(i) - 1.0);
  }

  [[nodiscard]] Eigen::VectorXd flat() const {
    Eigen::VectorXd out(num_params());
    out << Eigen::Map<const Eigen::VectorXd>(weights.data(), weights.size()), log_std;
    return out;
  }

  void add_flat(const Eigen::VectorXd& delta, double min_log_std, bool learn_std) {
    weights += Eigen::Map<const Eigen::MatrixXd>(delta.data(), weights.rows(), weights.cols());
    if (learn_std) log_std = (log_std + delta.tail(log_std.size())).cwiseMax(min_log_std);
  }
};

}  // namespace spidr
