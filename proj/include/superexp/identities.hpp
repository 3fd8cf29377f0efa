#pragma once

// The distribution identities as paired Monte Carlo checks.
//
// For a deterministic generator X and every non-negative G the two sides of
//
//   E[ G(Y(t)) exp(Y(t) - y) ] = E[ G( Z(t) / (1/y - A(t)/2) ) ; A(t) < 2/y ]
//
// are estimated on independent seed streams by default (a shared-paths mode
// exists for variance reduction) and compared by z-score. Setting G == 1
// gives E[exp(Y(t))] = e^y P{A(t) < 2/y}, which also yields the tail
// factorization P{A(t) < a} = exp(-2/a) E[exp(Y_{2/a}(t))] after y = 2/a.
//
// The drift-shift check estimates E[exp(Y(t) - y)] against P{M(t) < 2/y}
// where M is the integral carried by the shifted process X'.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "superexp/drift_shift.hpp"
#include "superexp/estimate.hpp"
#include "superexp/expr.hpp"

namespace superexp {

// ---------------------------------------------------------------------------
// G(u) choices for the distribution identity.

struct GSpec {
  enum class Kind { one, identity, indicator, capped, expression };

  Kind kind = Kind::one;
  double c = 0.0;       // indicator / capped parameter
  NodePtr expr;         // expression in u
  std::string source = "one";

  double operator()(double u) const {
    switch (kind) {
      case Kind::one: return 1.0;
      case Kind::identity: return u;
      case Kind::indicator: return u <= c ? 1.0 : 0.0;
      case Kind::capped: return u < c ? u : c;
      case Kind::expression: return eval_scalar(*expr, u);
    }
    return 1.0;
  }

  bool needs_sign_check() const { return kind == Kind::expression; }

  static GSpec one() { return GSpec{}; }
  static GSpec capped(double c) {
    GSpec g;
    g.kind = Kind::capped;
    g.c = c;
    g.source = "cap:" + format_double(c);
    return g;
  }
  static GSpec indicator(double c) {
    GSpec g;
    g.kind = Kind::indicator;
    g.c = c;
    g.source = "ind:" + format_double(c);
    return g;
  }
  static GSpec identity_fn() {
    GSpec g;
    g.kind = Kind::identity;
    g.source = "id";
    return g;
  }

  // Accepts: one | id | ind:<c> | cap:<c> | expr:<expression in u>
  static GSpec parse(const std::string& text) {
    if (text == "one") return one();
    if (text == "id" || text == "identity") return identity_fn();
    if (text.rfind("ind:", 0) == 0) return indicator(parse_param(text, 4));
    if (text.rfind("cap:", 0) == 0) return capped(parse_param(text, 4));
    if (text.rfind("expr:", 0) == 0) {
      GSpec g;
      g.kind = Kind::expression;
      g.expr = parse_scalar_expr(text.substr(5), 'u');
      g.source = text;
      return g;
    }
    throw std::invalid_argument("unknown G choice: " + text);
  }

 private:
  static std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
  }
  static double parse_param(const std::string& text, std::size_t off) {
    std::size_t used = 0;
    const double v = std::stod(text.substr(off), &used);
    if (off + used != text.size())
      throw std::invalid_argument("malformed G parameter: " + text);
    return v;
  }
};

// ---------------------------------------------------------------------------
// Reports.

struct IdentityReport {
  Estimate lhs;
  Estimate rhs;
  double z = 0.0;             // discrepancy over combined (or paired) SE
  double dt_allowance = 0.0;  // additive discretization allowance
  bool shared_paths = false;
  bool pass = true;           // |lhs - rhs| <= 3 * SE + allowance

  double discrepancy() const { return lhs.mean - rhs.mean; }
};

namespace detail {

// min/max over doubles is exact, so atomics keep it worker-count independent.
struct AtomicRange {
  std::atomic<double> lo{std::numeric_limits<double>::infinity()};
  std::atomic<double> hi{-std::numeric_limits<double>::infinity()};

  void include(double v) {
    double cur = lo.load(std::memory_order_relaxed);
    while (v < cur && !lo.compare_exchange_weak(cur, v)) {}
    cur = hi.load(std::memory_order_relaxed);
    while (v > cur && !hi.compare_exchange_weak(cur, v)) {}
  }
};

inline void check_g_nonnegative(const GSpec& g, double lo, double hi) {
  if (!g.needs_sign_check() || !(lo <= hi)) return;
  constexpr int kSamples = 10000;
  for (int k = 0; k < kSamples; ++k) {
    const double u = lo + (hi - lo) * (static_cast<double>(k) / (kSamples - 1));
    if (eval_scalar(*g.expr, u) < 0.0)
      throw McError("G takes a negative value at u = " + std::to_string(u) +
                    "; the identity requires a non-negative G");
  }
}

inline IdentityReport make_report(const Estimate& lhs, const Estimate& rhs,
                                  double dt_allowance, bool shared,
                                  double paired_se = -1.0) {
  IdentityReport rep;
  rep.lhs = lhs;
  rep.rhs = rhs;
  rep.shared_paths = shared;
  rep.dt_allowance = dt_allowance;
  const double se = paired_se >= 0.0
                        ? paired_se
                        : std::sqrt(lhs.std_error * lhs.std_error +
                                    rhs.std_error * rhs.std_error);
  const double d = lhs.mean - rhs.mean;
  rep.z = se > 0.0 ? d / se : (d == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
  rep.pass = std::abs(d) <= 3.0 * se + dt_allowance;
  return rep;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Distribution identity for deterministic generators.

struct IdentityOptions {
  bool shared_paths = false;
  double dt_allowance = 0.0;
  std::uint32_t lhs_stream = 0;  // lhs uses derive_seed(seed, lhs_stream)
  std::uint32_t rhs_stream = 1;
};

inline void require_deterministic(const ProcessSpec& spec, const char* what) {
  if (!spec.deterministic())
    throw std::invalid_argument(std::string(what) +
                                " requires a deterministic process (no w1..wd)");
}

inline IdentityReport identity_report(const ProcessSpec& spec, const GSpec& g,
                                      double y, double t, const TimeGrid& grid,
                                      const McConfig& cfg,
                                      const IdentityOptions& opts = {}) {
  require_deterministic(spec, "identity");
  if (!(y > 0.0)) throw std::invalid_argument("y must be positive");
  const int it = grid.index_of(t);

  detail::AtomicRange g_range;

  auto lhs_value = [&](const ExponentPaths& expo) {
    const double yt = expo.super[static_cast<std::size_t>(it)];
    g_range.include(yt);
    return g(yt) * std::exp(yt - y);
  };
  auto rhs_value = [&](const ExponentPaths& expo) {
    const double a = expo.time_integral[static_cast<std::size_t>(it)];
    if (!(0.5 * y * a < 1.0)) return 0.0;  // event {A(t) < 2/y}; ties excluded
    const double ratio =
        expo.z[static_cast<std::size_t>(it)] * y / (1.0 - 0.5 * y * a);
    g_range.include(ratio);
    return g(ratio);
  };

  IdentityReport rep;
  if (opts.shared_paths) {
    McConfig sub = cfg;
    sub.seed = derive_seed(cfg.seed, opts.lhs_stream);
    auto totals = exponent_run(
        spec, grid, y, sub, 3,
        [&](const ExponentPaths& expo, const DriverPath&, std::span<double> out) {
          out[0] = lhs_value(expo);
          out[1] = rhs_value(expo);
          out[2] = out[0] - out[1];
          return true;
        });
    const Estimate diff = totals.estimate(2);
    rep = detail::make_report(totals.estimate(0), totals.estimate(1),
                              opts.dt_allowance, true, diff.std_error);
  } else {
    McConfig lhs_cfg = cfg;
    lhs_cfg.seed = derive_seed(cfg.seed, opts.lhs_stream);
    McConfig rhs_cfg = cfg;
    rhs_cfg.seed = derive_seed(cfg.seed, opts.rhs_stream);
    const Estimate lhs = mc_estimate(
        spec, grid, y, lhs_cfg,
        [&](const ExponentPaths& expo, const DriverPath&) { return lhs_value(expo); });
    const Estimate rhs = mc_estimate(
        spec, grid, y, rhs_cfg,
        [&](const ExponentPaths& expo, const DriverPath&) { return rhs_value(expo); });
    rep = detail::make_report(lhs, rhs, opts.dt_allowance, false);
  }
  detail::check_g_nonnegative(g, g_range.lo.load(), g_range.hi.load());
  return rep;
}

// ---------------------------------------------------------------------------
// Supermartingale curve: E[exp(Y(t_k))] on common paths.

struct CurvePoint {
  double t = 0.0;
  Estimate value;
};

inline std::vector<CurvePoint> supermartingale_curve(const ProcessSpec& spec, double y,
                                                     std::span<const double> times,
                                                     const TimeGrid& grid,
                                                     const McConfig& cfg) {
  require_deterministic(spec, "curve");
  if (times.empty()) throw std::invalid_argument("no curve times given");
  const PathValues xv = grid_values(spec, grid);
  for (int i = 0; i < grid.n_steps; ++i) {
    if (!(detail::norm_sq(xv.at(i)) > 0.0))
      throw std::invalid_argument(
          "time integral is not strictly increasing: |X| vanishes at t = " +
          std::to_string(grid.time(i)));
  }
  std::vector<int> idx;
  idx.reserve(times.size());
  for (const double t : times) idx.push_back(grid.index_of(t));

  auto totals = exponent_run(
      spec, grid, y, cfg, idx.size(),
      [&](const ExponentPaths& expo, const DriverPath&, std::span<double> out) {
        for (std::size_t k = 0; k < idx.size(); ++k)
          out[k] = std::exp(expo.super[static_cast<std::size_t>(idx[k])]);
        return true;
      });

  std::vector<CurvePoint> curve(times.size());
  for (std::size_t k = 0; k < times.size(); ++k)
    curve[k] = CurvePoint{times[k], totals.estimate(k)};
  return curve;
}

// ---------------------------------------------------------------------------
// Empirical CDF of the time integral with the tail factorization.

struct CdfPoint {
  double a = 0.0;
  Estimate cdf;         // P{A(t) < a}
  Estimate factor;      // exp(2/a) * cdf
  Estimate remark_rhs;  // exp(-2/a) * E[exp(Y_{2/a}(t))], same paths
  double paired_z = 0.0;
};

struct CdfCurve {
  double t = 0.0;
  std::vector<CdfPoint> points;
};

inline CdfCurve cdf_time_integral(const ProcessSpec& spec, double t,
                                  std::span<const double> a_grid,
                                  const TimeGrid& grid, const McConfig& cfg) {
  require_deterministic(spec, "cdf");
  if (a_grid.empty()) throw std::invalid_argument("empty a-grid");
  for (std::size_t k = 0; k < a_grid.size(); ++k) {
    if (!(a_grid[k] > 0.0)) throw std::invalid_argument("a thresholds must be positive");
    if (k > 0 && !(a_grid[k] > a_grid[k - 1]))
      throw std::invalid_argument("a thresholds must be increasing");
  }
  const int it = grid.index_of(t);
  const std::size_t ka = a_grid.size();

  // Per threshold: indicator, remark term, their difference. The super-
  // exponent is rebuilt per y = 2/a from the path's (Z, A), which do not
  // depend on y.
  auto totals = exponent_run(
      spec, grid, 1.0, cfg, 3 * ka,
      [&](const ExponentPaths& expo, const DriverPath&, std::span<double> out) {
        const double a_t = expo.time_integral[static_cast<std::size_t>(it)];
        const double z_t = expo.z[static_cast<std::size_t>(it)];
        for (std::size_t k = 0; k < ka; ++k) {
          const double a = a_grid[k];
          const double ind = a_t < a ? 1.0 : 0.0;
          const double remark = std::exp(-2.0 / a) * std::exp(2.0 * z_t / (a + a_t));
          out[3 * k] = ind;
          out[3 * k + 1] = remark;
          out[3 * k + 2] = ind - remark;
        }
        return true;
      });

  CdfCurve curve;
  curve.t = t;
  curve.points.resize(ka);
  for (std::size_t k = 0; k < ka; ++k) {
    CdfPoint& pt = curve.points[k];
    pt.a = a_grid[k];
    pt.cdf = totals.estimate(3 * k);
    pt.remark_rhs = totals.estimate(3 * k + 1);
    const double scale = std::exp(2.0 / pt.a);
    pt.factor = pt.cdf;
    pt.factor.mean *= scale;
    pt.factor.std_error *= scale;
    const Estimate diff = totals.estimate(3 * k + 2);
    pt.paired_z = diff.std_error > 0.0 ? diff.mean / diff.std_error : 0.0;
  }
  return curve;
}

// ---------------------------------------------------------------------------
// Geometric Brownian motion special case (d = 1, X == 1):
//
//   P{ int_0^t exp(W(u) - u/2) du <= a }
//     = exp(-2/a) E[ exp( 2 exp(W(t) - t/2) / (a + int_0^t exp(W - u/2) du) ) ]

inline IdentityReport gk_identity_check(double t, double a, const TimeGrid& grid,
                                        const McConfig& cfg,
                                        const IdentityOptions& opts = {}) {
  if (!(a > 0.0)) throw std::invalid_argument("a must be positive");
  const ProcessSpec unit = parse_process("1", 1);
  const int it = grid.index_of(t);

  McConfig lhs_cfg = cfg;
  lhs_cfg.seed = derive_seed(cfg.seed, opts.lhs_stream);
  McConfig rhs_cfg = cfg;
  rhs_cfg.seed = derive_seed(cfg.seed, opts.rhs_stream);

  const Estimate lhs = mc_estimate(
      unit, grid, 1.0, lhs_cfg, [&](const ExponentPaths& expo, const DriverPath&) {
        return expo.time_integral[static_cast<std::size_t>(it)] <= a ? 1.0 : 0.0;
      });
  const Estimate rhs = mc_estimate(
      unit, grid, 1.0, rhs_cfg, [&](const ExponentPaths& expo, const DriverPath&) {
        const double a_t = expo.time_integral[static_cast<std::size_t>(it)];
        const double z_t = expo.z[static_cast<std::size_t>(it)];
        return std::exp(-2.0 / a) * std::exp(2.0 * z_t / (a + a_t));
      });
  return detail::make_report(lhs, rhs, opts.dt_allowance, false);
}

// ---------------------------------------------------------------------------
// Exploratory probe of E[ 2 Z(t) / A(t) ]. The estimate is reported on a
// ladder of path counts; a divergent mean cannot be confirmed or refuted by
// Monte Carlo, so this carries no pass flag.

struct ProbeRow {
  std::int64_t n_paths = 0;
  Estimate value;
};

inline std::vector<ProbeRow> conjecture_probe(const ProcessSpec& spec, double t,
                                              const TimeGrid& grid,
                                              const McConfig& cfg) {
  require_deterministic(spec, "probe");
  if (spec.dim != 1) throw std::invalid_argument("probe requires d = 1");
  const PathValues xv = grid_values(spec, grid);
  bool any_positive = false;
  for (int i = 0; i < grid.n_steps; ++i)
    any_positive = any_positive || detail::norm_sq(xv.at(i)) > 0.0;
  if (!any_positive)
    throw std::invalid_argument("probe undefined for a vanishing process (A == 0)");
  const int it = grid.index_of(t);

  std::vector<std::int64_t> ladder;
  for (const std::int64_t n : {std::int64_t{1000}, std::int64_t{10000},
                               std::int64_t{100000}, std::int64_t{1000000}})
    if (n <= cfg.n_paths) ladder.push_back(n);
  if (ladder.empty() || ladder.back() != cfg.n_paths) ladder.push_back(cfg.n_paths);

  std::vector<ProbeRow> rows;
  rows.reserve(ladder.size());
  for (const std::int64_t n : ladder) {
    McConfig sub = cfg;
    sub.n_paths = n;
    const Estimate est = mc_estimate(
        spec, grid, 1.0, sub, [&](const ExponentPaths& expo, const DriverPath&) {
          const double a_t = expo.time_integral[static_cast<std::size_t>(it)];
          return 2.0 * expo.z[static_cast<std::size_t>(it)] / a_t;
        });
    rows.push_back(ProbeRow{n, est});
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Drift-shift (explosion-time) checks.

struct DriftContext {
  DriverPath path;
  DriftShiftPaths dsp;
};

template <class Fn>
McTotals drift_run(const ProcessSpec& spec, const TimeGrid& grid, double y,
                   const McConfig& cfg, std::size_t n_outputs, Fn&& fn,
                   bool with_zx_variant = false) {
  return mc_run(
      cfg, n_outputs, [] { return DriftContext{}; },
      [&](std::uint64_t idx, DriftContext& ctx, std::span<double> out) {
        sample_driver_into(ctx.path, grid, spec.dim, cfg.seed, idx);
        drift_shift_paths_into(ctx.dsp, spec, ctx.path, y, with_zx_variant);
        if (ctx.dsp.failed) return false;
        if (!fn(ctx.dsp, ctx.path, out)) return false;
        for (const double v : out)
          if (!std::isfinite(v)) return false;
        return true;
      });
}

inline Estimate explosion_probability(const ProcessSpec& spec, double y, double t,
                                      const TimeGrid& grid, const McConfig& cfg) {
  const int it = grid.index_of(t);
  auto totals = drift_run(
      spec, grid, y, cfg, 1,
      [&](const DriftShiftPaths& dsp, const DriverPath&, std::span<double> out) {
        out[0] = dsp.explosion_index <= it ? 1.0 : 0.0;
        return true;
      });
  return totals.estimate(0);
}

struct DriftShiftReport {
  IdentityReport identity;    // E[exp(Y(t)-y)] vs P{M(t) < 2/y}
  Estimate explosion;         // P{explosion by t}
  bool has_zx_variant = false;
  Estimate rhs_zx;            // P{M_zx(t) < 2/y}, diagnostic only
};

inline DriftShiftReport drift_shift_report(const ProcessSpec& spec, double y, double t,
                                           const TimeGrid& grid, const McConfig& cfg,
                                           bool with_zx_variant = false,
                                           const IdentityOptions& opts = {}) {
  if (!(y > 0.0)) throw std::invalid_argument("y must be positive");
  const int it = grid.index_of(t);

  McConfig lhs_cfg = cfg;
  lhs_cfg.seed = derive_seed(cfg.seed, opts.lhs_stream);
  McConfig rhs_cfg = cfg;
  rhs_cfg.seed = derive_seed(cfg.seed, opts.rhs_stream);

  const Estimate lhs = mc_estimate(
      spec, grid, y, lhs_cfg, [&](const ExponentPaths& expo, const DriverPath&) {
        return std::exp(expo.super[static_cast<std::size_t>(it)] - y);
      });

  const std::size_t n_outputs = with_zx_variant ? 3u : 2u;
  auto totals = drift_run(
      spec, grid, y, rhs_cfg, n_outputs,
      [&](const DriftShiftPaths& dsp, const DriverPath&, std::span<double> out) {
        const bool alive = dsp.explosion_index > it;
        out[0] = alive ? 1.0 : 0.0;
        out[1] = alive ? 0.0 : 1.0;
        if (with_zx_variant) out[2] = dsp.explosion_index_zx > it ? 1.0 : 0.0;
        return true;
      },
      with_zx_variant);

  DriftShiftReport rep;
  rep.identity = detail::make_report(lhs, totals.estimate(0), opts.dt_allowance, false);
  rep.explosion = totals.estimate(1);
  rep.has_zx_variant = with_zx_variant;
  if (with_zx_variant) rep.rhs_zx = totals.estimate(2);
  return rep;
}

// ---------------------------------------------------------------------------
// Stopped exponential E[exp(Y(t ^ tau_N) - y)] with tau_N the first grid
// index where Y reaches the barrier.

inline Estimate stopped_exponential_estimate(const ProcessSpec& spec, double y,
                                             double barrier, double t,
                                             const TimeGrid& grid, const McConfig& cfg) {
  if (!(barrier > y)) throw std::invalid_argument("barrier must exceed y");
  const int it = grid.index_of(t);
  return mc_estimate(
      spec, grid, y, cfg, [&](const ExponentPaths& expo, const DriverPath&) {
        int stop = it;
        for (int i = 0; i <= it; ++i) {
          if (expo.super[static_cast<std::size_t>(i)] >= barrier) {
            stop = i;
            break;
          }
        }
        return std::exp(expo.super[static_cast<std::size_t>(stop)] - y);
      });
}

// ---------------------------------------------------------------------------
// Martingale defect sweep: E[exp(Y_y(t) - y)] for several y on common paths.
// logZ and A do not depend on y, so each y is a cheap re-evaluation.

inline std::vector<std::pair<double, Estimate>> martingale_defect_sweep(
    const ProcessSpec& spec, std::span<const double> ys, double t,
    const TimeGrid& grid, const McConfig& cfg) {
  if (ys.empty()) throw std::invalid_argument("no y values given");
  for (const double y : ys)
    if (!(y > 0.0)) throw std::invalid_argument("y must be positive");
  const int it = grid.index_of(t);
  auto totals = exponent_run(
      spec, grid, ys[0], cfg, ys.size(),
      [&](const ExponentPaths& expo, const DriverPath&, std::span<double> out) {
        const double z_t = expo.z[static_cast<std::size_t>(it)];
        const double a_t = expo.time_integral[static_cast<std::size_t>(it)];
        for (std::size_t k = 0; k < ys.size(); ++k) {
          const double y = ys[k];
          const double y_t = z_t * y / (1.0 + 0.5 * y * a_t);
          out[k] = std::exp(y_t - y);
        }
        return true;
      });
  std::vector<std::pair<double, Estimate>> result(ys.size());
  for (std::size_t k = 0; k < ys.size(); ++k)
    result[k] = {ys[k], totals.estimate(k)};
  return result;
}

// ---------------------------------------------------------------------------
// Step-halving pilot: per-path difference of a functional evaluated on the
// fine grid and on the same path restricted to half the steps. The mean gap
// estimates the residual discretization bias; |mean| + 2 SE is the additive
// allowance used by the acceptance runs.
//
//   fn: (const ExponentPaths&, const DriverPath&) -> double

template <class Fn>
Estimate resolution_gap(const ProcessSpec& spec, const TimeGrid& fine, double y,
                        const McConfig& cfg, Fn&& fn) {
  if (fine.n_steps % 2 != 0)
    throw std::invalid_argument("resolution pilot needs an even step count");
  const bool det = spec.deterministic();
  PathValues shared_fine, shared_coarse;
  const TimeGrid coarse_grid{fine.horizon, fine.n_steps / 2, fine.dt * 2.0};
  if (det) {
    shared_fine = grid_values(spec, fine);
    shared_coarse = grid_values(spec, coarse_grid);
  }
  struct Ctx {
    PathContext fine;
    DriverPath coarse_path;
    PathValues coarse_x;
    ExponentPaths coarse_expo;
  };
  auto totals = mc_run(
      cfg, 1, [] { return Ctx{}; },
      [&](std::uint64_t idx, Ctx& ctx, std::span<double> out) {
        sample_driver_into(ctx.fine.path, fine, spec.dim, cfg.seed, idx);
        ctx.coarse_path = coarsen(ctx.fine.path);
        const PathValues* xf = &shared_fine;
        const PathValues* xc = &shared_coarse;
        if (!det) {
          eval_on_path_into(ctx.fine.xvals, spec, ctx.fine.path);
          eval_on_path_into(ctx.coarse_x, spec, ctx.coarse_path);
          xf = &ctx.fine.xvals;
          xc = &ctx.coarse_x;
        }
        exponent_paths_into(ctx.fine.expo, *xf, ctx.fine.path, y);
        exponent_paths_into(ctx.coarse_expo, *xc, ctx.coarse_path, y);
        if (ctx.fine.expo.failed || ctx.coarse_expo.failed) return false;
        const double vf = fn(ctx.fine.expo, ctx.fine.path);
        const double vc = fn(ctx.coarse_expo, ctx.coarse_path);
        out[0] = vf - vc;
        return std::isfinite(out[0]);
      });
  return totals.estimate(0);
}

inline double allowance_from_gap(const Estimate& gap) {
  return std::abs(gap.mean) + 2.0 * gap.std_error;
}

// Discretization allowance for the distribution identity: the step-halving
// gap of each side on its own seed stream. For first-order bias the gap of
// a side equals the residual bias on the fine grid.
inline double identity_pilot_allowance(const ProcessSpec& spec, const GSpec& g,
                                       double y, double t, const TimeGrid& fine,
                                       const McConfig& cfg,
                                       const IdentityOptions& opts = {}) {
  require_deterministic(spec, "identity");
  const int it_fine = fine.index_of(t);
  const TimeGrid coarse{fine.horizon, fine.n_steps / 2, fine.dt * 2.0};
  const int it_coarse = coarse.index_of(t);

  McConfig lhs_cfg = cfg;
  lhs_cfg.seed = derive_seed(cfg.seed, opts.lhs_stream);
  McConfig rhs_cfg = cfg;
  rhs_cfg.seed = derive_seed(cfg.seed, opts.rhs_stream);

  const Estimate gap_lhs = resolution_gap(
      spec, fine, y, lhs_cfg, [&](const ExponentPaths& expo, const DriverPath& path) {
        const int it = path.grid.n_steps == fine.n_steps ? it_fine : it_coarse;
        const double yt = expo.super[static_cast<std::size_t>(it)];
        return g(yt) * std::exp(yt - y);
      });
  const Estimate gap_rhs = resolution_gap(
      spec, fine, y, rhs_cfg, [&](const ExponentPaths& expo, const DriverPath& path) {
        const int it = path.grid.n_steps == fine.n_steps ? it_fine : it_coarse;
        const double a = expo.time_integral[static_cast<std::size_t>(it)];
        if (!(0.5 * y * a < 1.0)) return 0.0;
        const double ratio = expo.z[static_cast<std::size_t>(it)] * y / (1.0 - 0.5 * y * a);
        return g(ratio);
      });
  return std::abs(gap_lhs.mean - gap_rhs.mean) +
         2.0 * std::sqrt(gap_lhs.std_error * gap_lhs.std_error +
                         gap_rhs.std_error * gap_rhs.std_error);
}

}  // namespace superexp
