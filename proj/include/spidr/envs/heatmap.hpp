#pragma once

// Sampled upsilon over a cart-pole (angle, angular velocity) grid for a set of
// push magnitudes. The angle axis is measured from the hanging position, so
// pi on that axis is the upright pole.

#include "spidr/envs/cartpole.hpp"
#include "spidr/pessimize.hpp"
#include "spidr/randomize.hpp"

#include <numbers>
#include <ostream>
#include <stdexcept>
#include <vector>

namespace spidr::envs {

struct HeatmapGrid {
  std::vector<double> angles_from_bottom;
  std::vector<double> angular_velocities;
  std::vector<double> actions{0.0, 0.3, 0.7, 1.0};
  /// values[action][angle][velocity]
  std::vector<std::vector<std::vector<double>>> values;

  [[nodiscard]] double mean_for_action(std::size_t action) const {
    double total = 0.0;
    std::size_t count = 0;
    for (const auto& row : values[action])
      for (double v : row) {
        total += v;
        ++count;
      }
    return count == 0 ? 0.0 : total / static_cast<double>(count);
  }

  /// Mean over angular velocities at the grid angle closest to `angle`.
  [[nodiscard]] double mean_near_angle(std::size_t action, double angle) const {
    std::size_t best = 0;
    for (std::size_t k = 1; k < angles_from_bottom.size(); ++k)
      if (std::abs(angles_from_bottom[k] - angle) < std::abs(angles_from_bottom[best] - angle)) best = k;
    double total = 0.0;
    for (double v : values[action][best]) total += v;
    return total / static_cast<double>(values[action][best].size());
  }
};

inline std::vector<double> linspace(double lo, double hi, int count) {
  std::vector<double> out;
  for (int k = 0; k < count; ++k) out.push_back(count == 1 ? lo : lo + (hi - lo) * k / (count - 1));
  return out;
}

/// One fixed sibling ensemble of size n (training range) is probed at every cell.
inline HeatmapGrid upsilon_heatmap(const DomainFamily<CartpoleEnv>& family, int angle_cells, int velocity_cells,
                                   double max_velocity, int n, std::uint64_t seed) {
  if (n < 8) throw std::invalid_argument("upsilon_heatmap: ensemble size must be >= 8");
  HeatmapGrid grid;
  grid.angles_from_bottom = linspace(0.0, 2.0 * std::numbers::pi, angle_cells);
  grid.angular_velocities = linspace(-max_velocity, max_velocity, velocity_cells);
  const EnsembleSpec ensemble{1, n, seed};
  const auto sample = sample_domains(family.distribution(Phase::train), ensemble);
  const auto siblings = family.build_all(sample.siblings.front());
  grid.values.assign(grid.actions.size(),
                     std::vector<std::vector<double>>(grid.angles_from_bottom.size(),
                                                      std::vector<double>(grid.angular_velocities.size())));
  for (std::size_t a = 0; a < grid.actions.size(); ++a) {
    CartpoleAction action;
    action << grid.actions[a];
    for (std::size_t i = 0; i < grid.angles_from_bottom.size(); ++i)
      for (std::size_t j = 0; j < grid.angular_velocities.size(); ++j) {
        CartpoleState state;
        state << 0.0, 0.0, grid.angles_from_bottom[i] - std::numbers::pi, grid.angular_velocities[j];
        grid.values[a][i][j] = upsilon_one_step(std::span<const CartpoleEnv>(siblings), state, action);
      }
  }
  return grid;
}

inline void write_csv(std::ostream& os, const HeatmapGrid& grid) {
  os.precision(17);
  os << "action,angle_from_bottom,angular_velocity,upsilon\n";
  for (std::size_t a = 0; a < grid.actions.size(); ++a)
    for (std::size_t i = 0; i < grid.angles_from_bottom.size(); ++i)
      for (std::size_t j = 0; j < grid.angular_velocities.size(); ++j)
        os << grid.actions[a] << ',' << grid.angles_from_bottom[i] << ',' << grid.angular_velocities[j] << ','
           << grid.values[a][i][j] << '\n';
}

}  // namespace spidr::envs
