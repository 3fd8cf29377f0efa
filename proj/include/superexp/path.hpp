#pragma once

// Discretized d-dimensional Brownian driver paths on uniform time grids.

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "superexp/rng.hpp"

namespace superexp {

struct TimeGrid {
  double horizon = 1.0;  // T
  int n_steps = 1;
  double dt = 1.0;

  // t_i = i*dt for i < n_steps; the last node is pinned to T exactly.
  double time(int i) const { return i == n_steps ? horizon : i * dt; }

  // Maps t to its grid index; t must lie on the grid.
  int index_of(double t) const {
    const int i = static_cast<int>(std::llround(t / dt));
    if (i < 0 || i > n_steps || std::abs(time(i) - t) > 1e-9 * (horizon > 1.0 ? horizon : 1.0))
      throw std::invalid_argument("time " + std::to_string(t) + " is not a grid point");
    return i;
  }
};

inline TimeGrid make_grid(double horizon, int n_steps) {
  if (!(horizon > 0.0)) throw std::invalid_argument("horizon must be positive");
  if (n_steps < 1) throw std::invalid_argument("n_steps must be positive");
  return TimeGrid{horizon, n_steps, horizon / n_steps};
}

// One Brownian path: increments dW_i ~ N(0, dt) per component and the
// running values W_i (prefix sums, W_0 = 0). Both are laid out step-major.
// (seed, path_index) fully determines the path.
struct DriverPath {
  TimeGrid grid;
  int dim = 1;
  std::uint64_t seed = 0;
  std::uint64_t path_index = 0;
  std::vector<double> increments;  // n_steps * dim
  std::vector<double> values;      // (n_steps + 1) * dim

  double increment(int step, int component) const {
    return increments[static_cast<std::size_t>(step) * dim + component];
  }
  std::span<const double> value_at(int i) const {
    return {values.data() + static_cast<std::size_t>(i) * dim, static_cast<std::size_t>(dim)};
  }
  std::span<const double> increment_at(int step) const {
    return {increments.data() + static_cast<std::size_t>(step) * dim, static_cast<std::size_t>(dim)};
  }
};

inline void sample_driver_into(DriverPath& out, const TimeGrid& grid, int dim,
                               std::uint64_t seed, std::uint64_t path_index) {
  if (dim < 1) throw std::invalid_argument("dimension must be positive");
  out.grid = grid;
  out.dim = dim;
  out.seed = seed;
  out.path_index = path_index;
  const std::size_t n = static_cast<std::size_t>(grid.n_steps);
  const std::size_t d = static_cast<std::size_t>(dim);
  out.increments.resize(n * d);
  out.values.resize((n + 1) * d);
  const double scale = std::sqrt(grid.dt);
  for (std::size_t j = 0; j < d; ++j) out.values[j] = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      const double dw = scale * normal_draw(seed, path_index,
                                            static_cast<std::uint32_t>(i),
                                            static_cast<std::uint32_t>(j));
      out.increments[i * d + j] = dw;
      out.values[(i + 1) * d + j] = out.values[i * d + j] + dw;
    }
  }
}

inline DriverPath sample_driver(const TimeGrid& grid, int dim, std::uint64_t seed,
                                std::uint64_t path_index) {
  DriverPath p;
  sample_driver_into(p, grid, dim, seed, path_index);
  return p;
}

// Restriction of the same Brownian path to a grid with half the steps:
// adjacent increments are summed pairwise. Used for step-halving studies
// where both resolutions must see the same underlying path.
inline DriverPath coarsen(const DriverPath& fine) {
  if (fine.grid.n_steps % 2 != 0)
    throw std::invalid_argument("coarsen requires an even number of steps");
  DriverPath out;
  out.grid = TimeGrid{fine.grid.horizon, fine.grid.n_steps / 2, fine.grid.dt * 2.0};
  out.dim = fine.dim;
  out.seed = fine.seed;
  out.path_index = fine.path_index;
  const std::size_t n = static_cast<std::size_t>(out.grid.n_steps);
  const std::size_t d = static_cast<std::size_t>(out.dim);
  out.increments.resize(n * d);
  out.values.resize((n + 1) * d);
  for (std::size_t j = 0; j < d; ++j) out.values[j] = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      const double dw =
          fine.increments[(2 * i) * d + j] + fine.increments[(2 * i + 1) * d + j];
      out.increments[i * d + j] = dw;
      out.values[(i + 1) * d + j] = out.values[i * d + j] + dw;
    }
  }
  return out;
}

}  // namespace superexp
