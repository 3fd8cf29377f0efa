#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>

#include "superexp/rng.hpp"

using namespace superexp;

TEST_CASE("philox4x32-10 known-answer vectors") {
  // Reference vectors from the Random123 test suite.
  SECTION("zero counter, zero key") {
    const auto out = Philox4x32::round10({0, 0, 0, 0}, {0, 0});
    CHECK(out[0] == 0x6627e8d5u);
    CHECK(out[1] == 0xe169c58du);
    CHECK(out[2] == 0xbc57ac4cu);
    CHECK(out[3] == 0x9b00dbd8u);
  }
  SECTION("all-ones counter and key") {
    const auto out = Philox4x32::round10({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                                         {0xffffffffu, 0xffffffffu});
    CHECK(out[0] == 0x408f276du);
    CHECK(out[1] == 0x41c83b0eu);
    CHECK(out[2] == 0xa20bc7c6u);
    CHECK(out[3] == 0x6d5451fdu);
  }
  SECTION("pi digits") {
    const auto out = Philox4x32::round10({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                                         {0xa4093822u, 0x299f31d0u});
    CHECK(out[0] == 0xd16cfe09u);
    CHECK(out[1] == 0x94fdccebu);
    CHECK(out[2] == 0x5001e420u);
    CHECK(out[3] == 0x24126ea1u);
  }
}

TEST_CASE("keyed draws are pure functions of the key") {
  CHECK(philox_u64(42, 7, 3, 0) == philox_u64(42, 7, 3, 0));
  CHECK(philox_u64(42, 7, 3, 0) != philox_u64(42, 8, 3, 0));
  CHECK(philox_u64(42, 7, 3, 0) != philox_u64(42, 7, 4, 0));
  CHECK(philox_u64(42, 7, 3, 0) != philox_u64(42, 7, 3, 1));
  CHECK(philox_u64(42, 7, 3, 0) != philox_u64(43, 7, 3, 0));
  CHECK(derive_seed(42, 0) != derive_seed(42, 1));
  CHECK(derive_seed(42, 0) == derive_seed(42, 0));
}

TEST_CASE("uniform draws live strictly inside (0,1)") {
  CHECK(uniform_open01(0) > 0.0);
  CHECK(uniform_open01(~std::uint64_t{0}) < 1.0);
  CHECK(uniform_open01(std::uint64_t{1} << 63) == Catch::Approx(0.5));
}

TEST_CASE("inverse normal cdf spot values") {
  CHECK(inverse_normal_cdf(0.5) == 0.0);
  CHECK(inverse_normal_cdf(0.975) == Catch::Approx(1.9599639845400545).epsilon(1e-12));
  CHECK(inverse_normal_cdf(0.025) == Catch::Approx(-1.9599639845400545).epsilon(1e-12));
  CHECK(inverse_normal_cdf(0.8413447460685429) == Catch::Approx(1.0).epsilon(1e-12));
  CHECK(inverse_normal_cdf(0.9986501019683699) == Catch::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("inverse normal cdf inverts the normal cdf across both tails") {
  for (double x = 0.0; x <= 8.0; x += 0.25) {
    const double lower_tail = 0.5 * std::erfc(x / std::sqrt(2.0));
    CHECK(inverse_normal_cdf(lower_tail) == Catch::Approx(-x).margin(1e-9));
    if (x >= 0.25 && x <= 2.0) {
      // Reflected argument exercises the upper branch at full precision.
      const double upper = 1.0 - lower_tail;
      CHECK(inverse_normal_cdf(upper) == Catch::Approx(x).margin(1e-8));
    }
  }
}

TEST_CASE("central-region symmetry is exact") {
  for (double u : {0.25, 0.3125, 0.375, 0.4375, 0.5, 0.5625, 0.625, 0.6875, 0.75}) {
    CHECK(inverse_normal_cdf(u) == -inverse_normal_cdf(1.0 - u));
  }
}

TEST_CASE("normal draws have the right moments at desk scale") {
  // 200k draws: |mean| < 4/sqrt(n), |var - 1| < 5 * sqrt(2/n).
  const int n = 200000;
  double sum = 0.0, sum_sq = 0.0;
  double in_one_sigma = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = normal_draw(2024, static_cast<std::uint64_t>(i), 0, 0);
    sum += z;
    sum_sq += z * z;
    if (std::abs(z) <= 1.0) in_one_sigma += 1.0;
  }
  const double mean = sum / n;
  const double var = sum_sq / n - mean * mean;
  CHECK(std::abs(mean) < 4.0 / std::sqrt(static_cast<double>(n)));
  CHECK(std::abs(var - 1.0) < 5.0 * std::sqrt(2.0 / n));
  const double p = 0.6826894921370859;  // P(|Z| <= 1)
  CHECK(std::abs(in_one_sigma / n - p) < 5.0 * std::sqrt(p * (1 - p) / n));
}
