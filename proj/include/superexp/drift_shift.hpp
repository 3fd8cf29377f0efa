#pragma once

// Drift-shifted process and explosion detection.
//
// Given a Markov-functional generator X(t) = f(t, W(t)), the shifted process
// X'(t) = f(t, W(t) + B(t)) is built by forward recursion, with the drift
// accumulator B fed back one step later:
//
//   X'_i = f(t_i, W_i + B_i)
//   logZ'_{i+1} = logZ'_i + X'_i . dW_i - (1/2) |X'_i|^2 dt
//   M_{i+1}     = M_i + |X'_i|^2 exp(logZ'_i) dt
//   Y'_i        = exp(logZ'_i) / (1/y - M_i/2)
//   B_{i+1}     = B_i + Y'_i X'_i dt
//
// The recursion lives while M_i < 2/y; the first index where M reaches 2/y
// (the denominator of Y' hits zero) is the explosion index. The overshoot
// step is attributed to the explosion. A step whose denominator is nominally
// positive but below 1e-12 is treated as exploded as well, since Y' is then
// dominated by cancellation noise.
//
// For a generator with no w-dependence the shift is invisible to f, so X' == X
// and M accumulates bitwise identically to the time integral A.

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "superexp/exponent.hpp"
#include "superexp/expr.hpp"
#include "superexp/path.hpp"

namespace superexp {

struct DriftShiftPaths {
  TimeGrid grid;
  int dim = 1;
  double y = 1.0;
  std::vector<double> x_prime;      // (n+1) x d, frozen after explosion
  std::vector<double> drift;        // (n+1) x d, accumulator B
  std::vector<double> log_z_prime;  // n+1
  std::vector<double> m;            // n+1, integral of |X'|^2 Z_{X'}
  std::vector<double> y_prime;      // n+1, NaN from the explosion index on
  int explosion_index = 0;          // n_steps + 1 when no explosion
  bool failed = false;              // numerical failure (overflow / non-finite)
  int fail_index = -1;

  // Diagnostic variant of the integral using Z_X of the unshifted process
  // (tracked only when requested, and only up to the explosion index).
  std::vector<double> m_zx;
  int explosion_index_zx = 0;

  bool exploded_by(double t) const {
    return explosion_index <= grid.n_steps && grid.time(explosion_index) <= t;
  }
};

inline void drift_shift_paths_into(DriftShiftPaths& out, const ProcessSpec& spec,
                                   const DriverPath& path, double y,
                                   bool with_zx_variant = false) {
  if (!(y > 0.0)) throw std::invalid_argument("y must be positive");
  if (spec.dim != path.dim)
    throw std::invalid_argument("process dimension does not match path dimension");
  const int n = path.grid.n_steps;
  const std::size_t d = static_cast<std::size_t>(spec.dim);
  const double dt = path.grid.dt;

  out.grid = path.grid;
  out.dim = spec.dim;
  out.y = y;
  out.x_prime.assign(static_cast<std::size_t>(n + 1) * d, 0.0);
  out.drift.assign(static_cast<std::size_t>(n + 1) * d, 0.0);
  out.log_z_prime.assign(static_cast<std::size_t>(n + 1), 0.0);
  out.m.assign(static_cast<std::size_t>(n + 1), 0.0);
  out.y_prime.assign(static_cast<std::size_t>(n + 1),
                     std::numeric_limits<double>::quiet_NaN());
  out.explosion_index = n + 1;
  out.failed = false;
  out.fail_index = -1;
  if (with_zx_variant) {
    out.m_zx.assign(static_cast<std::size_t>(n + 1), 0.0);
    out.explosion_index_zx = n + 1;
  } else {
    out.m_zx.clear();
    out.explosion_index_zx = n + 1;
  }

  std::vector<double> w_shifted(d);
  std::vector<double> x_plain(d);
  double log_z = 0.0;    // plain exponential of X, for the variant integral
  double m_zx = 0.0;
  double log_zp = 0.0;
  double m = 0.0;

  auto freeze_from = [&](int i) {
    for (int k = i; k <= n; ++k) {
      const int prev = k > 0 ? k - 1 : 0;
      for (std::size_t j = 0; j < d; ++j) {
        out.x_prime[static_cast<std::size_t>(k) * d + j] =
            out.x_prime[static_cast<std::size_t>(prev) * d + j];
        out.drift[static_cast<std::size_t>(k) * d + j] =
            out.drift[static_cast<std::size_t>(prev) * d + j];
      }
      out.log_z_prime[static_cast<std::size_t>(k)] = log_zp;
      out.m[static_cast<std::size_t>(k)] = m;
      if (with_zx_variant) out.m_zx[static_cast<std::size_t>(k)] = m_zx;
    }
  };

  for (int i = 0; i <= n; ++i) {
    out.log_z_prime[static_cast<std::size_t>(i)] = log_zp;
    out.m[static_cast<std::size_t>(i)] = m;
    if (with_zx_variant) {
      out.m_zx[static_cast<std::size_t>(i)] = m_zx;
      if (out.explosion_index_zx > n && 0.5 * y * m_zx >= 1.0)
        out.explosion_index_zx = i;
    }

    const double zp = std::exp(log_zp);
    if (!std::isfinite(zp) || !std::isfinite(m)) {
      out.failed = true;
      out.fail_index = i;
      freeze_from(i);
      return;
    }

    // Explosion: denominator of Y' reaches (or numerically grazes) zero.
    const double q = 0.5 * y * m;  // M_i relative to 2/y
    if (q >= 1.0 || (1.0 - q) < y * 1e-12) {
      out.explosion_index = i;
      freeze_from(i);
      return;
    }

    const double t_i = path.grid.time(i);
    const auto w = path.value_at(i);
    for (std::size_t j = 0; j < d; ++j)
      w_shifted[j] = w[j] + out.drift[static_cast<std::size_t>(i) * d + j];
    std::span<double> xp_row{out.x_prime.data() + static_cast<std::size_t>(i) * d, d};
    try {
      spec.eval(t_i, w_shifted, xp_row);
    } catch (const EvalError& e) {
      throw PathEvalError(e, path.path_index, i);
    }

    const double yp = zp * y / (1.0 - q);
    out.y_prime[static_cast<std::size_t>(i)] = yp;

    if (i < n) {
      const auto dw = path.increment_at(i);
      const double ns = detail::norm_sq(xp_row);
      for (std::size_t j = 0; j < d; ++j)
        out.drift[static_cast<std::size_t>(i + 1) * d + j] =
            out.drift[static_cast<std::size_t>(i) * d + j] + yp * xp_row[j] * dt;
      log_zp += detail::dot(xp_row, dw) - 0.5 * ns * dt;
      m += ns * zp * dt;
      if (with_zx_variant) {
        const double z = std::exp(log_z);
        m_zx += ns * z * dt;
        // Z_X uses the unshifted generator on the same path.
        std::span<double> x_row{x_plain.data(), d};
        try {
          spec.eval(t_i, w, x_row);
        } catch (const EvalError& e) {
          throw PathEvalError(e, path.path_index, i);
        }
        log_z += detail::dot(x_row, dw) - 0.5 * detail::norm_sq(x_row) * dt;
      }
    }
  }
}

inline DriftShiftPaths drift_shift_paths(const ProcessSpec& spec, const DriverPath& path,
                                         double y, bool with_zx_variant = false) {
  DriftShiftPaths out;
  drift_shift_paths_into(out, spec, path, y, with_zx_variant);
  return out;
}

}  // namespace superexp
