#pragma once

// Monte Carlo estimation with deterministic parallel reduction.
//
// Paths are processed in contiguous fixed-size chunks. Workers pull chunk
// indices from a shared counter, accumulate per-chunk partial sums in path
// order, and the partials are folded in chunk order afterwards. The result
// is bitwise identical for any worker count.
//
// A path may be excluded (expression domain error, exp overflow); exclusions
// are counted and the run fails when they exceed 0.1% of the requested
// paths, which guards against silently biased estimates.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "superexp/exponent.hpp"

namespace superexp {

inline constexpr double kExclusionQuota = 1e-3;
inline constexpr std::int64_t kChunkPaths = 512;

struct McConfig {
  std::int64_t n_paths = 10000;
  std::uint64_t seed = 1;
  int workers = 0;  // <= 0: hardware concurrency

  int resolved_workers() const {
    if (workers > 0) return workers;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
  }
};

class McError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Estimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::int64_t n_paths = 0;    // requested
  std::int64_t n_excluded = 0;

  double ci95_lo() const { return mean - 1.96 * std_error; }
  double ci95_hi() const { return mean + 1.96 * std_error; }
};

struct McTotals {
  std::vector<double> sum;
  std::vector<double> sum_sq;
  std::int64_t n_ok = 0;
  std::int64_t n_excluded = 0;
  std::int64_t n_paths = 0;

  Estimate estimate(std::size_t k) const {
    Estimate e;
    e.n_paths = n_paths;
    e.n_excluded = n_excluded;
    if (n_ok > 0) e.mean = sum[k] / static_cast<double>(n_ok);
    if (n_ok > 1) {
      double var = (sum_sq[k] - static_cast<double>(n_ok) * e.mean * e.mean) /
                   static_cast<double>(n_ok - 1);
      if (var < 0.0) var = 0.0;  // roundoff on constant samples
      e.std_error = std::sqrt(var / static_cast<double>(n_ok));
    }
    return e;
  }
};

// Runs per_path over path_index = 0..n_paths-1 and accumulates n_outputs
// values per path.
//
//   make_ctx: () -> Ctx                          worker-local workspace
//   per_path: (uint64_t idx, Ctx&, span<double>) -> bool   false = exclude
//
// Expression domain errors and per-path overflow reported by throwing
// PathEvalError are also counted as exclusions.
template <class MakeCtx, class PerPath>
McTotals mc_run(const McConfig& cfg, std::size_t n_outputs, MakeCtx&& make_ctx,
                PerPath&& per_path) {
  if (cfg.n_paths < 1) throw McError("n_paths must be positive");
  const std::int64_t n_chunks = (cfg.n_paths + kChunkPaths - 1) / kChunkPaths;

  struct ChunkPartial {
    std::vector<double> sum, sum_sq;
    std::int64_t n_ok = 0, n_excluded = 0;
  };
  std::vector<ChunkPartial> partials(static_cast<std::size_t>(n_chunks));

  std::atomic<std::int64_t> next_chunk{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;

  auto worker_body = [&]() {
    auto ctx = make_ctx();
    std::vector<double> out(n_outputs);
    try {
      for (;;) {
        const std::int64_t c = next_chunk.fetch_add(1);
        if (c >= n_chunks) break;
        ChunkPartial& part = partials[static_cast<std::size_t>(c)];
        part.sum.assign(n_outputs, 0.0);
        part.sum_sq.assign(n_outputs, 0.0);
        const std::int64_t begin = c * kChunkPaths;
        const std::int64_t end = std::min(cfg.n_paths, begin + kChunkPaths);
        for (std::int64_t p = begin; p < end; ++p) {
          bool ok;
          try {
            ok = per_path(static_cast<std::uint64_t>(p), ctx,
                          std::span<double>(out));
          } catch (const PathEvalError&) {
            ok = false;
          } catch (const EvalError&) {
            ok = false;
          }
          if (!ok) {
            ++part.n_excluded;
            continue;
          }
          ++part.n_ok;
          for (std::size_t k = 0; k < n_outputs; ++k) {
            part.sum[k] += out[k];
            part.sum_sq[k] += out[k] * out[k];
          }
        }
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(error_mutex);
      if (!first_error) first_error = std::current_exception();
    }
  };

  const int n_workers = cfg.resolved_workers();
  if (n_workers <= 1) {
    worker_body();
  } else {
    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(n_workers));
    for (int i = 0; i < n_workers; ++i) threads.emplace_back(worker_body);
    for (auto& t : threads) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  McTotals totals;
  totals.sum.assign(n_outputs, 0.0);
  totals.sum_sq.assign(n_outputs, 0.0);
  totals.n_paths = cfg.n_paths;
  for (const auto& part : partials) {
    for (std::size_t k = 0; k < n_outputs; ++k) {
      totals.sum[k] += part.sum[k];
      totals.sum_sq[k] += part.sum_sq[k];
    }
    totals.n_ok += part.n_ok;
    totals.n_excluded += part.n_excluded;
  }
  if (static_cast<double>(totals.n_excluded) >
      kExclusionQuota * static_cast<double>(cfg.n_paths)) {
    throw McError("excluded-path quota exceeded: " +
                  std::to_string(totals.n_excluded) + " of " +
                  std::to_string(cfg.n_paths) + " paths failed");
  }
  return totals;
}

// Worker context holding every reusable per-path buffer.
struct PathContext {
  DriverPath path;
  PathValues xvals;
  ExponentPaths expo;
};

// X evaluated on the grid nodes of a deterministic generator (w is ignored).
inline PathValues grid_values(const ProcessSpec& spec, const TimeGrid& grid) {
  DriverPath zero;
  zero.grid = grid;
  zero.dim = spec.dim;
  zero.values.assign(static_cast<std::size_t>(grid.n_steps + 1) * spec.dim, 0.0);
  zero.increments.assign(static_cast<std::size_t>(grid.n_steps) * spec.dim, 0.0);
  return eval_on_path(spec, zero);
}

// Runs the exponent transform on every path and hands it to fn.
//
//   fn: (const ExponentPaths&, const DriverPath&, span<double> out) -> bool
//
// Paths whose transform overflows, whose expressions hit a domain error, or
// whose outputs are non-finite are excluded and counted. For deterministic
// generators X is evaluated once on the grid and shared across paths.
template <class Fn>
McTotals exponent_run(const ProcessSpec& spec, const TimeGrid& grid, double y,
                      const McConfig& cfg, std::size_t n_outputs, Fn&& fn) {
  const bool det = spec.deterministic();
  PathValues shared_x;
  if (det) shared_x = grid_values(spec, grid);
  return mc_run(
      cfg, n_outputs, [] { return PathContext{}; },
      [&](std::uint64_t idx, PathContext& ctx, std::span<double> out) {
        sample_driver_into(ctx.path, grid, spec.dim, cfg.seed, idx);
        const PathValues* xv = &shared_x;
        if (!det) {
          eval_on_path_into(ctx.xvals, spec, ctx.path);
          xv = &ctx.xvals;
        }
        exponent_paths_into(ctx.expo, *xv, ctx.path, y);
        if (ctx.expo.failed) return false;
        if (!fn(ctx.expo, ctx.path, out)) return false;
        for (const double v : out)
          if (!std::isfinite(v)) return false;
        return true;
      });
}

// Mean of a scalar per-path functional of the exponent transform.
template <class Functional>
Estimate mc_estimate(const ProcessSpec& spec, const TimeGrid& grid, double y,
                     const McConfig& cfg, Functional&& functional) {
  auto totals = exponent_run(
      spec, grid, y, cfg, 1,
      [&](const ExponentPaths& expo, const DriverPath& path, std::span<double> out) {
        out[0] = functional(expo, path);
        return true;
      });
  return totals.estimate(0);
}

}  // namespace superexp
