#pragma once

// Per-path transforms along a Brownian driver path, all with the left-point
// (Ito) rule on the grid:
//
//   logZ_{i+1} = logZ_i + X_i . dW_i - (1/2) |X_i|^2 dt        (stochastic exponential)
//   A_{i+1}    = A_i + |X_i|^2 exp(logZ_i) dt                  (time integral)
//   Y_i        = Z_i / (1/y + A_i/2)                           (super-exponent, closed form)
//
// plus the Euler solution of the super-exponent SDE
//
//   dY = Y X . dW - (1/2) |X|^2 Y^2 dt,   Y(0) = y,
//
// the stochastic exponential generated by the product process Y(t)X(t)
// (which should match exp(Y - y) as dt -> 0), and barrier stopping.
//
// Z is kept in the log domain: it is lognormal-like and overflows linearly.
// Y is evaluated as Z*y/(1 + y*A/2), which gives Y_0 == y exactly.

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "superexp/expr.hpp"
#include "superexp/path.hpp"

namespace superexp {

class PathEvalError : public std::runtime_error {
 public:
  PathEvalError(const EvalError& cause, std::uint64_t path_index, int step)
      : std::runtime_error(std::string(cause.what()) + " [path " +
                           std::to_string(path_index) + ", step " +
                           std::to_string(step) + "]"),
        path_index_(path_index),
        step_(step) {}

  std::uint64_t path_index() const { return path_index_; }
  int step() const { return step_; }

 private:
  std::uint64_t path_index_;
  int step_;
};

// X(t_i) for every grid node, row-major (n_steps+1) x dim.
struct PathValues {
  int dim = 1;
  std::vector<double> data;

  std::span<const double> at(int i) const {
    return {data.data() + static_cast<std::size_t>(i) * dim, static_cast<std::size_t>(dim)};
  }
};

inline void eval_on_path_into(PathValues& out, const ProcessSpec& spec,
                              const DriverPath& path) {
  if (spec.dim != path.dim)
    throw std::invalid_argument("process dimension does not match path dimension");
  const int n = path.grid.n_steps;
  out.dim = spec.dim;
  out.data.resize(static_cast<std::size_t>(n + 1) * spec.dim);
  for (int i = 0; i <= n; ++i) {
    std::span<double> row{out.data.data() + static_cast<std::size_t>(i) * spec.dim,
                          static_cast<std::size_t>(spec.dim)};
    try {
      spec.eval(path.grid.time(i), path.value_at(i), row);
    } catch (const EvalError& e) {
      throw PathEvalError(e, path.path_index, i);
    }
  }
}

inline PathValues eval_on_path(const ProcessSpec& spec, const DriverPath& path) {
  PathValues v;
  eval_on_path_into(v, spec, path);
  return v;
}

struct ExponentPaths {
  TimeGrid grid;
  double y = 1.0;
  std::vector<double> log_z;         // n+1
  std::vector<double> z;             // n+1, exp(log_z)
  std::vector<double> time_integral; // n+1, A
  std::vector<double> super;         // n+1, Y
  bool failed = false;               // exp overflowed / non-finite value hit
  int fail_index = -1;
};

namespace detail {

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) s += a[j] * b[j];
  return s;
}

inline double norm_sq(std::span<const double> a) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) s += a[j] * a[j];
  return s;
}

}  // namespace detail

inline void exponent_paths_into(ExponentPaths& out, const PathValues& xvals,
                                const DriverPath& path, double y) {
  if (!(y > 0.0)) throw std::invalid_argument("y must be positive");
  const int n = path.grid.n_steps;
  out.grid = path.grid;
  out.y = y;
  out.log_z.resize(static_cast<std::size_t>(n + 1));
  out.z.resize(static_cast<std::size_t>(n + 1));
  out.time_integral.resize(static_cast<std::size_t>(n + 1));
  out.super.resize(static_cast<std::size_t>(n + 1));
  out.failed = false;
  out.fail_index = -1;

  const double dt = path.grid.dt;
  double log_z = 0.0;
  double a = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double z = std::exp(log_z);
    if (!std::isfinite(z) || !std::isfinite(a)) {
      out.failed = true;
      out.fail_index = i;
      // Leave the remaining entries at the last finite state.
      for (int k = i; k <= n; ++k) {
        out.log_z[k] = log_z;
        out.z[k] = out.z[k > 0 ? k - 1 : 0];
        out.time_integral[k] = a;
        out.super[k] = out.super[k > 0 ? k - 1 : 0];
      }
      return;
    }
    out.log_z[i] = log_z;
    out.z[i] = z;
    out.time_integral[i] = a;
    out.super[i] = z * y / (1.0 + 0.5 * y * a);
    if (i < n) {
      const auto x = xvals.at(i);
      const double ns = detail::norm_sq(x);
      log_z += detail::dot(x, path.increment_at(i)) - 0.5 * ns * dt;
      a += ns * z * dt;
    }
  }
}

inline ExponentPaths exponent_paths(const PathValues& xvals, const DriverPath& path,
                                    double y) {
  ExponentPaths e;
  exponent_paths_into(e, xvals, path, y);
  return e;
}

// Euler-Maruyama solution of the super-exponent SDE on the same increments.
// Not clamped at zero: negative excursions are possible at coarse dt and are
// recorded rather than hidden.
struct EulerSolution {
  std::vector<double> values;  // n+1
  bool went_negative = false;
};

inline EulerSolution euler_super_sde(const PathValues& xvals, const DriverPath& path,
                                     double y) {
  if (!(y > 0.0)) throw std::invalid_argument("y must be positive");
  const int n = path.grid.n_steps;
  const double dt = path.grid.dt;
  EulerSolution sol;
  sol.values.resize(static_cast<std::size_t>(n + 1));
  double v = y;
  sol.values[0] = v;
  for (int i = 0; i < n; ++i) {
    const auto x = xvals.at(i);
    v += v * detail::dot(x, path.increment_at(i)) -
         0.5 * detail::norm_sq(x) * v * v * dt;
    sol.values[static_cast<std::size_t>(i + 1)] = v;
    if (v < 0.0) sol.went_negative = true;
  }
  return sol;
}

// Stochastic exponential generated by the product process V(t) = Y(t)X(t).
struct TransformedExponential {
  std::vector<double> values;  // n+1
  bool failed = false;
  int fail_index = -1;
};

inline TransformedExponential transformed_exponential(const PathValues& xvals,
                                                      const ExponentPaths& expo,
                                                      const DriverPath& path) {
  const int n = path.grid.n_steps;
  const double dt = path.grid.dt;
  TransformedExponential out;
  out.values.resize(static_cast<std::size_t>(n + 1));
  double log_zt = 0.0;
  std::vector<double> v(static_cast<std::size_t>(path.dim));
  for (int i = 0; i <= n; ++i) {
    const double zt = std::exp(log_zt);
    if (!std::isfinite(zt)) {
      out.failed = true;
      out.fail_index = i;
      for (int k = i; k <= n; ++k) out.values[k] = out.values[k > 0 ? k - 1 : 0];
      return out;
    }
    out.values[i] = zt;
    if (i < n) {
      const auto x = xvals.at(i);
      const double yi = expo.super[static_cast<std::size_t>(i)];
      for (std::size_t j = 0; j < v.size(); ++j) v[j] = yi * x[j];
      log_zt += detail::dot(v, path.increment_at(i)) - 0.5 * detail::norm_sq(v) * dt;
    }
  }
  return out;
}

// First grid index where Y reaches the barrier, and the stopped exponential
// exp(Y(min(i, tau)) - y). The barrier is resolved at grid resolution.
struct StoppedExponent {
  double barrier = std::numeric_limits<double>::infinity();
  int stop_index = 0;           // n_steps + 1 when the barrier is never hit
  std::vector<double> stopped;  // n+1
};

inline StoppedExponent stop_at_barrier(const ExponentPaths& expo, double barrier) {
  if (!(barrier > expo.y))
    throw std::invalid_argument("barrier must exceed the initial value y");
  const int n = expo.grid.n_steps;
  StoppedExponent out;
  out.barrier = barrier;
  out.stop_index = n + 1;
  out.stopped.resize(static_cast<std::size_t>(n + 1));
  for (int i = 0; i <= n; ++i) {
    if (out.stop_index > n && expo.super[static_cast<std::size_t>(i)] >= barrier)
      out.stop_index = i;
    const int k = i < out.stop_index ? i : out.stop_index;
    out.stopped[static_cast<std::size_t>(i)] =
        std::exp(expo.super[static_cast<std::size_t>(k)] - expo.y);
  }
  return out;
}

}  // namespace superexp
