#pragma once

// Command-line front end. One subcommand per estimator; every run writes a
// CSV whose '#' comment line records the full configuration (except the
// worker count, which never affects the numbers), so a run can be reproduced
// from its own output.
//
// Exit codes: 0 success / identity check passed, 2 identity check failed,
// 1 usage or runtime error.

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "superexp/csv.hpp"
#include "superexp/estimate.hpp"
#include "superexp/exponent.hpp"
#include "superexp/identities.hpp"
#include "superexp/path.hpp"
#include "superexp/version.hpp"

namespace superexp {
namespace cli {

struct RunConfig {
  std::string process = "1";
  int d = 1;
  double horizon = 1.0;
  int n_steps = 1024;
  std::int64_t n_paths = 100000;
  double y = 1.0;
  std::vector<double> y_grid;
  double t = 1.0;
  std::vector<double> t_grid;
  std::vector<double> a_grid;
  double a = 1.0;
  double barrier = 0.0;
  std::string g_choice = "one";
  std::uint64_t seed = 1;
  std::string out;
  int workers = 0;
  bool shared_paths = false;
  bool pilot = false;
  double allowance = 0.0;
  bool alt_zx = false;
  std::string kind = "driver";
  std::int64_t dump_paths = 4;
};

namespace detail {

inline std::string config_comment(const std::string& cmd, const RunConfig& c,
                                  const std::string& extra) {
  std::ostringstream os;
  os << kVersion << " | cmd=" << cmd << " process=\"" << c.process << "\" d=" << c.d
     << " T=" << format_real(c.horizon) << " steps=" << c.n_steps
     << " paths=" << c.n_paths << " seed=" << c.seed;
  if (!extra.empty()) os << ' ' << extra;
  return os.str();
}

inline std::string list_to_string(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += format_real(v[i]);
  }
  return s;
}

inline McConfig mc_config(const RunConfig& c) {
  McConfig mc;
  mc.n_paths = c.n_paths;
  mc.seed = c.seed;
  mc.workers = c.workers;
  return mc;
}

inline void add_common(CLI::App* sub, RunConfig& c, bool with_process = true) {
  if (with_process) {
    sub->add_option("--process", c.process,
                    "process expression(s), one per component, comma separated");
    sub->add_option("--d", c.d, "process dimension")->check(CLI::PositiveNumber);
  }
  sub->add_option("--T", c.horizon, "time horizon")->check(CLI::PositiveNumber);
  sub->add_option("--steps", c.n_steps, "number of grid steps")->check(CLI::PositiveNumber);
  sub->add_option("--paths", c.n_paths, "number of Monte Carlo paths")
      ->check(CLI::PositiveNumber);
  sub->add_option("--seed", c.seed, "base seed");
  sub->add_option("--out", c.out, "output CSV path (default: stdout)");
  sub->add_option("--workers", c.workers, "worker threads (0 = hardware)");
}

inline void summary_line(const RunConfig& c, const std::string& text) {
  if (!c.out.empty()) std::cout << text << "\n";
}

inline void write_estimate_fields(CsvWriter& w, const Estimate& e) {
  w.field(e.mean);
  w.field(e.std_error);
}

}  // namespace detail

inline int run_identity(const RunConfig& c) {
  const ProcessSpec spec = parse_process(c.process, c.d);
  const TimeGrid grid = make_grid(c.horizon, c.n_steps);
  const GSpec g = GSpec::parse(c.g_choice);
  IdentityOptions opts;
  opts.shared_paths = c.shared_paths;
  opts.dt_allowance = c.allowance;
  if (c.pilot)
    opts.dt_allowance +=
        identity_pilot_allowance(spec, g, c.y, c.t, grid, detail::mc_config(c), opts);
  const IdentityReport rep =
      identity_report(spec, g, c.y, c.t, grid, detail::mc_config(c), opts);

  CsvWriter w(c.out);
  w.comment(detail::config_comment("identity", c,
                                   "y=" + format_real(c.y) + " t=" + format_real(c.t) +
                                       " G=" + c.g_choice +
                                       " shared=" + (c.shared_paths ? "1" : "0")));
  w.row("lhs_mean", "lhs_se", "rhs_mean", "rhs_se", "n_paths", "n_excluded_lhs",
        "n_excluded_rhs", "z", "dt_allowance", "pass");
  w.field(rep.lhs.mean);
  w.field(rep.lhs.std_error);
  w.field(rep.rhs.mean);
  w.field(rep.rhs.std_error);
  w.field(rep.lhs.n_paths);
  w.field(rep.lhs.n_excluded);
  w.field(rep.rhs.n_excluded);
  w.field(rep.z);
  w.field(rep.dt_allowance);
  w.field(std::int64_t{rep.pass ? 1 : 0});
  w.end_row();
  w.flush();
  detail::summary_line(
      c, std::string(rep.pass ? "PASS" : "FAIL") + " identity: lhs=" +
             format_real(rep.lhs.mean) + " rhs=" + format_real(rep.rhs.mean) +
             " z=" + format_real(rep.z));
  return rep.pass ? 0 : 2;
}

inline int run_curve(const RunConfig& c) {
  const ProcessSpec spec = parse_process(c.process, c.d);
  const TimeGrid grid = make_grid(c.horizon, c.n_steps);
  if (c.t_grid.empty()) throw CLI::ValidationError("curve requires --t-grid");
  const auto curve =
      supermartingale_curve(spec, c.y, c.t_grid, grid, detail::mc_config(c));

  CsvWriter w(c.out);
  w.comment(detail::config_comment(
      "curve", c,
      "y=" + format_real(c.y) + " t_grid=" + detail::list_to_string(c.t_grid)));
  w.row("t", "mean", "std_error", "ci95_lo", "ci95_hi", "n_paths", "n_excluded");
  for (const auto& pt : curve) {
    w.field(pt.t);
    w.field(pt.value.mean);
    w.field(pt.value.std_error);
    w.field(pt.value.ci95_lo());
    w.field(pt.value.ci95_hi());
    w.field(pt.value.n_paths);
    w.field(pt.value.n_excluded);
    w.end_row();
  }
  w.flush();
  detail::summary_line(c, "curve written: " + std::to_string(curve.size()) + " points");
  return 0;
}

inline int run_cdf(const RunConfig& c) {
  const ProcessSpec spec = parse_process(c.process, c.d);
  const TimeGrid grid = make_grid(c.horizon, c.n_steps);
  if (c.a_grid.empty()) throw CLI::ValidationError("cdf requires --a-grid");
  const CdfCurve curve =
      cdf_time_integral(spec, c.t, c.a_grid, grid, detail::mc_config(c));

  CsvWriter w(c.out);
  w.comment(detail::config_comment(
      "cdf", c, "t=" + format_real(c.t) + " a_grid=" + detail::list_to_string(c.a_grid)));
  w.row("a", "cdf", "cdf_se", "factor", "factor_se", "remark_rhs", "remark_rhs_se",
        "paired_z", "n_paths", "n_excluded");
  for (const auto& pt : curve.points) {
    w.field(pt.a);
    w.field(pt.cdf.mean);
    w.field(pt.cdf.std_error);
    w.field(pt.factor.mean);
    w.field(pt.factor.std_error);
    w.field(pt.remark_rhs.mean);
    w.field(pt.remark_rhs.std_error);
    w.field(pt.paired_z);
    w.field(pt.cdf.n_paths);
    w.field(pt.cdf.n_excluded);
    w.end_row();
  }
  w.flush();
  detail::summary_line(c, "cdf written: " + std::to_string(curve.points.size()) + " thresholds");
  return 0;
}

inline int run_martingale(const RunConfig& c) {
  const ProcessSpec spec = parse_process(c.process, c.d);
  const TimeGrid grid = make_grid(c.horizon, c.n_steps);
  std::vector<double> ys = c.y_grid.empty() ? std::vector<double>{c.y} : c.y_grid;
  const auto sweep = martingale_defect_sweep(spec, ys, c.t, grid, detail::mc_config(c));

  CsvWriter w(c.out);
  w.comment(detail::config_comment(
      "martingale", c, "t=" + format_real(c.t) + " y_grid=" + detail::list_to_string(ys)));
  w.row("y", "mean", "std_error", "defect", "ci95_lo", "ci95_hi", "n_paths", "n_excluded");
  for (const auto& [y, est] : sweep) {
    w.field(y);
    w.field(est.mean);
    w.field(est.std_error);
    w.field(1.0 - est.mean);
    w.field(est.ci95_lo());
    w.field(est.ci95_hi());
    w.field(est.n_paths);
    w.field(est.n_excluded);
    w.end_row();
  }
  w.flush();
  detail::summary_line(
      c, "martingale defect at y=" + format_real(sweep.front().first) + ": " +
             format_real(1.0 - sweep.front().second.mean) + " (se " +
             format_real(sweep.front().second.std_error) + ")");
  return 0;
}

inline int run_driftshift(const RunConfig& c) {
  const ProcessSpec spec = parse_process(c.process, c.d);
  const TimeGrid grid = make_grid(c.horizon, c.n_steps);
  IdentityOptions opts;
  opts.dt_allowance = c.allowance;
  const DriftShiftReport rep = drift_shift_report(spec, c.y, c.t, grid,
                                                  detail::mc_config(c), c.alt_zx, opts);

  CsvWriter w(c.out);
  w.comment(detail::config_comment("driftshift", c,
                                   "y=" + format_real(c.y) + " t=" + format_real(c.t) +
                                       " alt_zx=" + (c.alt_zx ? "1" : "0")));
  if (c.alt_zx) {
    w.row("lhs_mean", "lhs_se", "rhs_mean", "rhs_se", "z", "dt_allowance", "pass",
          "explosion_prob", "explosion_se", "rhs_zx", "rhs_zx_se", "n_paths",
          "n_excluded");
  } else {
    w.row("lhs_mean", "lhs_se", "rhs_mean", "rhs_se", "z", "dt_allowance", "pass",
          "explosion_prob", "explosion_se", "n_paths", "n_excluded");
  }
  w.field(rep.identity.lhs.mean);
  w.field(rep.identity.lhs.std_error);
  w.field(rep.identity.rhs.mean);
  w.field(rep.identity.rhs.std_error);
  w.field(rep.identity.z);
  w.field(rep.identity.dt_allowance);
  w.field(std::int64_t{rep.identity.pass ? 1 : 0});
  w.field(rep.explosion.mean);
  w.field(rep.explosion.std_error);
  if (c.alt_zx) {
    w.field(rep.rhs_zx.mean);
    w.field(rep.rhs_zx.std_error);
  }
  w.field(rep.identity.lhs.n_paths);
  w.field(rep.identity.lhs.n_excluded + rep.identity.rhs.n_excluded);
  w.end_row();
  w.flush();
  detail::summary_line(
      c, std::string(rep.identity.pass ? "PASS" : "FAIL") +
             " drift-shift identity: lhs=" + format_real(rep.identity.lhs.mean) +
             " rhs=" + format_real(rep.identity.rhs.mean) +
             " z=" + format_real(rep.identity.z) +
             " P(explosion)=" + format_real(rep.explosion.mean));
  return rep.identity.pass ? 0 : 2;
}

inline int run_gk(const RunConfig& c) {
  const TimeGrid grid = make_grid(c.horizon, c.n_steps);
  IdentityOptions opts;
  opts.dt_allowance = c.allowance;
  const IdentityReport rep = gk_identity_check(c.t, c.a, grid, detail::mc_config(c), opts);

  CsvWriter w(c.out);
  RunConfig cc = c;
  cc.process = "1";
  cc.d = 1;
  w.comment(detail::config_comment("gk", cc,
                                   "t=" + format_real(c.t) + " a=" + format_real(c.a)));
  w.row("a", "lhs_mean", "lhs_se", "rhs_mean", "rhs_se", "z", "dt_allowance", "pass",
        "n_paths", "n_excluded");
  w.field(c.a);
  w.field(rep.lhs.mean);
  w.field(rep.lhs.std_error);
  w.field(rep.rhs.mean);
  w.field(rep.rhs.std_error);
  w.field(rep.z);
  w.field(rep.dt_allowance);
  w.field(std::int64_t{rep.pass ? 1 : 0});
  w.field(rep.lhs.n_paths);
  w.field(rep.lhs.n_excluded + rep.rhs.n_excluded);
  w.end_row();
  w.flush();
  detail::summary_line(c, std::string(rep.pass ? "PASS" : "FAIL") +
                              " gbm time-integral identity: z=" + format_real(rep.z));
  return rep.pass ? 0 : 2;
}

inline int run_probe(const RunConfig& c) {
  const ProcessSpec spec = parse_process(c.process, c.d);
  const TimeGrid grid = make_grid(c.horizon, c.n_steps);
  const auto rows = conjecture_probe(spec, c.t, grid, detail::mc_config(c));

  CsvWriter w(c.out);
  w.comment(detail::config_comment("probe", c, "t=" + format_real(c.t)));
  w.comment("exploratory: running estimate of E[2 Z(t)/A(t)]; no pass/fail");
  w.row("n_paths", "mean", "std_error");
  for (const auto& row : rows) {
    w.field(row.n_paths);
    w.field(row.value.mean);
    w.field(row.value.std_error);
    w.end_row();
  }
  w.flush();
  detail::summary_line(c, "probe written: " + std::to_string(rows.size()) + " rows");
  return 0;
}

inline int run_paths(const RunConfig& c) {
  const TimeGrid grid = make_grid(c.horizon, c.n_steps);

  CsvWriter w(c.out);
  w.comment(detail::config_comment("paths", c,
                                   "kind=" + c.kind + " y=" + format_real(c.y) +
                                       " dump_paths=" + std::to_string(c.dump_paths)));
  if (c.kind == "driver") {
    w.field("path_index");
    w.field("i");
    w.field("t");
    for (int j = 1; j <= c.d; ++j) w.field("W_" + std::to_string(j));
    w.end_row();
    for (std::int64_t p = 0; p < c.dump_paths; ++p) {
      const DriverPath path = sample_driver(grid, c.d, c.seed, static_cast<std::uint64_t>(p));
      for (int i = 0; i <= grid.n_steps; ++i) {
        w.field(p);
        w.field(std::int64_t{i});
        w.field(grid.time(i));
        for (const double v : path.value_at(i)) w.field(v);
        w.end_row();
      }
    }
  } else if (c.kind == "exponent") {
    const ProcessSpec spec = parse_process(c.process, c.d);
    w.row("path_index", "i", "t", "logZ", "A", "Y", "Y_euler");
    for (std::int64_t p = 0; p < c.dump_paths; ++p) {
      const DriverPath path = sample_driver(grid, c.d, c.seed, static_cast<std::uint64_t>(p));
      const PathValues xv = eval_on_path(spec, path);
      const ExponentPaths expo = exponent_paths(xv, path, c.y);
      const EulerSolution euler = euler_super_sde(xv, path, c.y);
      for (int i = 0; i <= grid.n_steps; ++i) {
        w.field(p);
        w.field(std::int64_t{i});
        w.field(grid.time(i));
        w.field(expo.log_z[static_cast<std::size_t>(i)]);
        w.field(expo.time_integral[static_cast<std::size_t>(i)]);
        w.field(expo.super[static_cast<std::size_t>(i)]);
        w.field(euler.values[static_cast<std::size_t>(i)]);
        w.end_row();
      }
    }
  } else if (c.kind == "driftshift") {
    const ProcessSpec spec = parse_process(c.process, c.d);
    w.field("path_index");
    w.field("i");
    w.field("t");
    for (int j = 1; j <= c.d; ++j) w.field("Xp_" + std::to_string(j));
    for (int j = 1; j <= c.d; ++j) w.field("B_" + std::to_string(j));
    w.field("M");
    w.field("exploded");
    w.end_row();
    for (std::int64_t p = 0; p < c.dump_paths; ++p) {
      const DriverPath path = sample_driver(grid, c.d, c.seed, static_cast<std::uint64_t>(p));
      const DriftShiftPaths dsp = drift_shift_paths(spec, path, c.y);
      for (int i = 0; i <= grid.n_steps; ++i) {
        w.field(p);
        w.field(std::int64_t{i});
        w.field(grid.time(i));
        for (int j = 0; j < c.d; ++j)
          w.field(dsp.x_prime[static_cast<std::size_t>(i) * c.d + j]);
        for (int j = 0; j < c.d; ++j)
          w.field(dsp.drift[static_cast<std::size_t>(i) * c.d + j]);
        w.field(dsp.m[static_cast<std::size_t>(i)]);
        w.field(std::int64_t{i >= dsp.explosion_index ? 1 : 0});
        w.end_row();
      }
    }
  } else {
    throw CLI::ValidationError("--kind must be driver, exponent or driftshift");
  }
  w.flush();
  return 0;
}

inline int run_cli(int argc, const char* const* argv) {
  CLI::App app{std::string(kVersion) +
               " - Monte Carlo checks for super-exponents of Brownian stochastic "
               "exponentials"};
  app.require_subcommand(1);
  app.footer(
      "Expression grammar: numbers, t, w1..wd, + - * / ^, unary minus,\n"
      "parentheses, sin cos exp log sqrt abs tanh. '^' binds tightest and is\n"
      "right-associative; unary minus binds looser than '^' (-2^2 == -4).\n"
      "No implicit multiplication.\n"
      "Exit codes: 0 ok / check passed, 2 identity check failed, 1 error.");

  RunConfig c;

  auto* identity = app.add_subcommand(
      "identity", "distribution identity for deterministic X: E[G(Y)e^{Y-y}] vs "
                  "E[G(Z/(1/y - A/2)); A < 2/y]");
  detail::add_common(identity, c);
  identity->add_option("--y", c.y, "initial value y > 0")->check(CLI::PositiveNumber);
  identity->add_option("--t", c.t, "evaluation time (grid point)");
  identity->add_option("--G", c.g_choice, "G choice: one | id | ind:c | cap:c | expr:<in u>");
  identity->add_flag("--shared-paths", c.shared_paths,
                     "evaluate both sides on the same paths (variance reduction)");
  identity->add_option("--allowance", c.allowance, "additive discretization allowance");
  identity->add_flag("--pilot", c.pilot, "derive the allowance from a step-halving pilot");

  auto* curve = app.add_subcommand(
      "curve", "supermartingale curve E[exp(Y(t_k))] on common paths");
  detail::add_common(curve, c);
  curve->add_option("--y", c.y, "initial value y > 0")->check(CLI::PositiveNumber);
  curve->add_option("--t-grid", c.t_grid, "comma separated curve times")->delimiter(',');

  auto* cdf = app.add_subcommand(
      "cdf", "empirical CDF of A(t) with the exp(-2/a) tail factorization");
  detail::add_common(cdf, c);
  cdf->add_option("--t", c.t, "evaluation time (grid point)");
  cdf->add_option("--a-grid", c.a_grid, "comma separated thresholds")->delimiter(',');

  auto* mart = app.add_subcommand(
      "martingale", "martingale defect 1 - E[exp(Y(t) - y)]");
  detail::add_common(mart, c);
  mart->add_option("--y", c.y, "initial value y > 0")->check(CLI::PositiveNumber);
  mart->add_option("--y-grid", c.y_grid, "sweep of y values on common paths")->delimiter(',');
  mart->add_option("--t", c.t, "evaluation time (grid point)");

  auto* drift = app.add_subcommand(
      "driftshift", "explosion-time check: E[exp(Y(t)-y)] vs P{M(t) < 2/y}");
  detail::add_common(drift, c);
  drift->add_option("--y", c.y, "initial value y > 0")->check(CLI::PositiveNumber);
  drift->add_option("--t", c.t, "evaluation time (grid point)");
  drift->add_option("--allowance", c.allowance, "additive discretization allowance");
  drift->add_flag("--alt-zx", c.alt_zx,
                  "also report the variant P{int |X'|^2 Z_X du < 2/y} (diagnostic)");

  auto* gk = app.add_subcommand(
      "gk", "geometric Brownian motion special case (d=1, X==1) at threshold a");
  detail::add_common(gk, c, /*with_process=*/false);
  gk->add_option("--t", c.t, "evaluation time (grid point)");
  gk->add_option("--a", c.a, "threshold")->check(CLI::PositiveNumber);
  gk->add_option("--allowance", c.allowance, "additive discretization allowance");

  auto* probe = app.add_subcommand(
      "probe", "exploratory estimate of E[2 Z(t)/A(t)] on a ladder of path counts");
  detail::add_common(probe, c);
  probe->add_option("--t", c.t, "evaluation time (grid point)");

  auto* paths = app.add_subcommand("paths", "dump per-path traces");
  detail::add_common(paths, c);
  paths->add_option("--kind", c.kind, "driver | exponent | driftshift");
  paths->add_option("--y", c.y, "initial value y > 0")->check(CLI::PositiveNumber);
  paths->add_option("--dump-paths", c.dump_paths, "number of paths to dump")
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;  // 0 for --help, 1 for usage errors
  }

  try {
    if (identity->parsed()) return run_identity(c);
    if (curve->parsed()) return run_curve(c);
    if (cdf->parsed()) return run_cdf(c);
    if (mart->parsed()) return run_martingale(c);
    if (drift->parsed()) return run_driftshift(c);
    if (gk->parsed()) return run_gk(c);
    if (probe->parsed()) return run_probe(c);
    if (paths->parsed()) return run_paths(c);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

inline int run_cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("superexp");
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace cli
}  // namespace superexp
