#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <vector>

#include "superexp/exponent.hpp"
#include "superexp/expr.hpp"
#include "superexp/path.hpp"
#include "test_support.hpp"

using namespace superexp;
using superexp::testing::path_from_increments;
using superexp::testing::zero_path;

TEST_CASE("eval_on_path") {
  const TimeGrid g = make_grid(1.0, 8);
  const DriverPath p = sample_driver(g, 1, 1, 0);

  const PathValues zeros = eval_on_path(parse_process("0", 1), p);
  const PathValues ones = eval_on_path(parse_process("1", 1), p);
  for (int i = 0; i <= 8; ++i) {
    CHECK(zeros.at(i)[0] == 0.0);
    CHECK(ones.at(i)[0] == 1.0);
  }

  const PathValues cosw = eval_on_path(parse_process("cos(w1)", 1), zero_path(g));
  for (int i = 0; i <= 8; ++i) CHECK(cosw.at(i)[0] == 1.0);

  CHECK_THROWS_AS(eval_on_path(parse_process("1,1", 2), p), std::invalid_argument);

  // Domain errors carry (path_index, step).
  const ProcessSpec bad = parse_process("log(w1)", 1);
  try {
    eval_on_path(bad, p);  // W_0 = 0 -> log(0) fails at step 0
    FAIL("expected PathEvalError");
  } catch (const PathEvalError& e) {
    CHECK(e.step() == 0);
    CHECK(e.path_index() == 0);
  }
}

TEST_CASE("zero process is exactly trivial") {
  const TimeGrid g = make_grid(1.0, 64);
  const DriverPath p = sample_driver(g, 1, 1, 3);
  const PathValues xv = eval_on_path(parse_process("0", 1), p);
  for (double y : {0.3, 1.0, 2.5}) {
    const ExponentPaths e = exponent_paths(xv, p, y);
    REQUIRE_FALSE(e.failed);
    for (int i = 0; i <= 64; ++i) {
      CHECK(e.z[i] == 1.0);
      CHECK(e.time_integral[i] == 0.0);
      CHECK(e.super[i] == y);  // exact
      CHECK(std::exp(e.super[i] - y) == 1.0);
    }
    const EulerSolution sol = euler_super_sde(xv, p, y);
    for (int i = 0; i <= 64; ++i) CHECK(sol.values[i] == y);
    const TransformedExponential zt = transformed_exponential(xv, e, p);
    for (int i = 0; i <= 64; ++i) CHECK(zt.values[i] == 1.0);
  }
}

TEST_CASE("initial value equals y exactly for random paths and specs") {
  const TimeGrid g = make_grid(1.5, 16);
  for (const char* src : {"0", "1", "2", "1+t", "cos(w1)", "w1"}) {
    const ProcessSpec spec = parse_process(src, 1);
    for (int p = 0; p < 25; ++p) {
      const DriverPath path = sample_driver(g, 1, 77, static_cast<std::uint64_t>(p));
      const PathValues xv = eval_on_path(spec, path);
      for (double y : {0.3, 0.7, 1.0, 1.3, 4.0}) {
        const ExponentPaths e = exponent_paths(xv, path, y);
        CHECK(e.super[0] == y);
        CHECK(e.log_z[0] == 0.0);
        CHECK(e.time_integral[0] == 0.0);
      }
    }
  }
}

TEST_CASE("quadrature oracle: X == 1 on the frozen zero driver") {
  // With W == 0 the recursion is deterministic:
  //   logZ(t) = -t/2,   A(t) = int_0^t exp(-u/2) du = 2 (1 - e^{-t/2}),
  //   Y(t)    = e^{-t/2} / (1 + A(t)/2)  for y = 1.
  const int n = 1024;  // dt = 2^-10, so the logZ sum is exact
  const TimeGrid g = make_grid(1.0, n);
  const DriverPath p = zero_path(g);
  const PathValues xv = eval_on_path(parse_process("1", 1), p);
  const ExponentPaths e = exponent_paths(xv, p, 1.0);
  REQUIRE_FALSE(e.failed);

  CHECK(e.log_z[n] == -0.5);  // sum of 1024 copies of -2^-11 is exact
  CHECK(e.z[n] == Catch::Approx(std::exp(-0.5)).epsilon(1e-15));

  const double a_exact = 2.0 * (1.0 - std::exp(-0.5));
  const double y_exact = std::exp(-0.5) / (1.0 + 0.5 * a_exact);
  CHECK(a_exact == Catch::Approx(0.7869386805747332).epsilon(1e-14));
  CHECK(y_exact == Catch::Approx(0.43526659839358384).epsilon(1e-14));

  // Left-point quadrature of a decreasing integrand overshoots by O(dt).
  CHECK(e.time_integral[n] == Catch::Approx(a_exact).margin(0.25 * g.dt));
  CHECK(e.super[n] == Catch::Approx(y_exact).margin(0.25 * g.dt));

  // The quadrature error halves when the step count doubles.
  const TimeGrid g2 = make_grid(1.0, 2 * n);
  const DriverPath p2 = zero_path(g2);
  const PathValues xv2 = eval_on_path(parse_process("1", 1), p2);
  const ExponentPaths e2 = exponent_paths(xv2, p2, 1.0);
  const double err1 = std::abs(e.time_integral[n] - a_exact);
  const double err2 = std::abs(e2.time_integral[2 * n] - a_exact);
  CHECK(err1 / err2 == Catch::Approx(2.0).margin(0.2));

  // On a frozen (zero-increment) path the Euler recursion drops the dW term
  // entirely, so it discretizes the ODE y' = -y^2/2 instead: its limit is
  // y/(1 + y t/2) = 2/3, not the closed-form value. The Ito correction that
  // reconciles the two lives in the quadratic variation of a true Brownian
  // path, which a frozen path does not have.
  const EulerSolution sol = euler_super_sde(xv2, p2, 1.0);
  CHECK(sol.values[2 * n] == Catch::Approx(2.0 / 3.0).margin(0.5 * g2.dt));
  CHECK_FALSE(sol.went_negative);
}

TEST_CASE("closed form stays positive with a nondecreasing denominator") {
  const TimeGrid g = make_grid(1.0, 128);
  for (const char* src : {"1", "cos(w1)", "1+t"}) {
    int violations = 0;
    for (int p = 0; p < 50; ++p) {
      const DriverPath path = sample_driver(g, 1, 911, static_cast<std::uint64_t>(p));
      const PathValues xv = eval_on_path(parse_process(src, 1), path);
      const ExponentPaths e = exponent_paths(xv, path, 1.0);
      REQUIRE_FALSE(e.failed);
      for (int i = 0; i <= g.n_steps; ++i) {
        if (!(e.super[i] > 0.0)) ++violations;
        if (i > 0 && !(e.time_integral[i] >= e.time_integral[i - 1])) ++violations;
      }
      // Strict increase whenever |X| > 0 on the step.
      for (int i = 0; i < g.n_steps; ++i)
        if (detail::norm_sq(xv.at(i)) > 0.0 &&
            !(e.time_integral[i + 1] > e.time_integral[i]))
          ++violations;
    }
    INFO(src);
    CHECK(violations == 0);
  }
}

TEST_CASE("euler scheme converges to the closed form as dt shrinks") {
  // The gap between Euler and the closed form is dominated by the missing
  // Milstein term, a martingale sum of (dW^2 - dt) increments, so the mean
  // of max_i |Y_euler - Y| decays at order 1/2: halving dt shrinks it by
  // about sqrt(2).
  const TimeGrid fine = make_grid(1.0, 1024);
  const ProcessSpec spec = parse_process("1", 1);
  const int n_paths = 512;
  double err_fine = 0.0, err_coarse = 0.0;
  for (int p = 0; p < n_paths; ++p) {
    const DriverPath pf = sample_driver(fine, 1, 4242, static_cast<std::uint64_t>(p));
    const DriverPath pc = coarsen(pf);
    for (const DriverPath* path : {&pf, &pc}) {
      const PathValues xv = eval_on_path(spec, *path);
      const ExponentPaths e = exponent_paths(xv, *path, 1.0);
      const EulerSolution sol = euler_super_sde(xv, *path, 1.0);
      REQUIRE_FALSE(e.failed);
      double max_err = 0.0;
      for (int i = 0; i <= path->grid.n_steps; ++i)
        max_err = std::max(max_err, std::abs(sol.values[i] - e.super[i]));
      (path == &pf ? err_fine : err_coarse) += max_err;
    }
  }
  const double ratio = err_coarse / err_fine;
  INFO("euler error ratio (512 vs 1024): " << ratio);
  CHECK(ratio >= 1.15);
  CHECK(ratio <= 1.9);
}

TEST_CASE("transformed exponential tracks exp(Y - y) with a shrinking gap") {
  // Same order-1/2 mechanism as the Euler comparison: the exponents of the
  // two routes differ by a (dW^2 - dt) martingale sum.
  for (const char* src : {"1", "cos(w1)"}) {
    const ProcessSpec spec = parse_process(src, 1);
    const TimeGrid fine = make_grid(1.0, 1024);
    const int n_paths = 384;
    double gap_fine = 0.0, gap_coarse = 0.0;
    for (int p = 0; p < n_paths; ++p) {
      const DriverPath pf = sample_driver(fine, 1, 515, static_cast<std::uint64_t>(p));
      const DriverPath pc = coarsen(pf);
      for (const DriverPath* path : {&pf, &pc}) {
        const PathValues xv = eval_on_path(spec, *path);
        const ExponentPaths e = exponent_paths(xv, *path, 1.0);
        const TransformedExponential zt = transformed_exponential(xv, e, *path);
        REQUIRE_FALSE(zt.failed);
        double max_gap = 0.0;
        for (int i = 0; i <= path->grid.n_steps; ++i)
          max_gap = std::max(max_gap, std::abs(zt.values[i] - std::exp(e.super[i] - 1.0)));
        (path == &pf ? gap_fine : gap_coarse) += max_gap;
      }
    }
    const double ratio = gap_coarse / gap_fine;
    INFO(src << ": transform gap ratio (512 vs 1024): " << ratio
             << ", mean max gap " << gap_fine / n_paths);
    CHECK(ratio >= 1.15);
    CHECK(ratio <= 1.9);
    // The gap itself scales like sqrt(dt).
    CHECK(gap_fine / n_paths < 8.0 * std::sqrt(fine.dt));
  }
}

TEST_CASE("barrier stopping") {
  const TimeGrid g = make_grid(1.0, 64);

  SECTION("zero process never stops") {
    const DriverPath p = sample_driver(g, 1, 6, 0);
    const PathValues xv = eval_on_path(parse_process("0", 1), p);
    const ExponentPaths e = exponent_paths(xv, p, 1.0);
    const StoppedExponent s = stop_at_barrier(e, 2.0);
    CHECK(s.stop_index == g.n_steps + 1);
    for (int i = 0; i <= g.n_steps; ++i) CHECK(s.stopped[i] == 1.0);
  }

  SECTION("infinite barrier reduces to exp(Y - y)") {
    const DriverPath p = sample_driver(g, 1, 6, 1);
    const PathValues xv = eval_on_path(parse_process("1", 1), p);
    const ExponentPaths e = exponent_paths(xv, p, 1.0);
    const StoppedExponent s =
        stop_at_barrier(e, std::numeric_limits<double>::infinity());
    CHECK(s.stop_index == g.n_steps + 1);
    for (int i = 0; i <= g.n_steps; ++i)
      CHECK(s.stopped[i] == std::exp(e.super[i] - 1.0));
  }

  SECTION("Y stays below the barrier before the stop index") {
    const ProcessSpec spec = parse_process("2", 1);
    int stopped_paths = 0;
    for (int p = 0; p < 200; ++p) {
      const DriverPath path = sample_driver(g, 1, 321, static_cast<std::uint64_t>(p));
      const PathValues xv = eval_on_path(spec, path);
      const ExponentPaths e = exponent_paths(xv, path, 1.0);
      const StoppedExponent s = stop_at_barrier(e, 1.5);
      for (int i = 0; i < s.stop_index && i <= g.n_steps; ++i)
        CHECK(e.super[i] < 1.5);
      if (s.stop_index <= g.n_steps) {
        ++stopped_paths;
        CHECK(e.super[s.stop_index] >= 1.5);
        // Frozen after the stop.
        for (int i = s.stop_index; i <= g.n_steps; ++i)
          CHECK(s.stopped[i] == s.stopped[s.stop_index]);
      }
    }
    CHECK(stopped_paths > 0);  // barrier 1.5 is reachable for sigma = 2
  }

  SECTION("barrier must exceed y") {
    const DriverPath p = sample_driver(g, 1, 6, 2);
    const PathValues xv = eval_on_path(parse_process("1", 1), p);
    const ExponentPaths e = exponent_paths(xv, p, 1.0);
    CHECK_THROWS_AS(stop_at_barrier(e, 1.0), std::invalid_argument);
  }
}

TEST_CASE("overflowing paths are flagged, not propagated") {
  const TimeGrid g = make_grid(1.0, 4);
  // One giant increment sends logZ past the exp overflow threshold.
  const DriverPath p = path_from_increments(g, 1, {800.0, 0.0, 0.0, 0.0});
  const PathValues xv = eval_on_path(parse_process("1", 1), p);
  const ExponentPaths e = exponent_paths(xv, p, 1.0);
  CHECK(e.failed);
  CHECK(e.fail_index == 1);
}
