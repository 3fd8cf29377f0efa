#pragma once

// Counter-based random numbers for reproducible parallel Monte Carlo.
//
// Generator: Philox4x32-10 (Salmon, Moraes, Dror, Shaw; SC'11). Every draw
// is a pure function of (seed, path_index, step, component), so paths can be
// generated in any order by any number of workers and come out identical.
//
// Normal variates: 64 bits of Philox output mapped to u in (0,1), then
// Wichura's AS241 (PPND16) inverse normal CDF. Both choices are fixed so CSV
// outputs are bit-stable for a given build.

#include <array>
#include <cmath>
#include <cstdint>

namespace superexp {

struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

  static Counter round10(Counter ctr, Key key) {
    for (int r = 0; r < 10; ++r) {
      const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
      ctr = Counter{static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
                    static_cast<std::uint32_t>(p1),
                    static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
                    static_cast<std::uint32_t>(p0)};
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    return ctr;
  }
};

inline std::uint64_t philox_u64(std::uint64_t seed, std::uint64_t path_index,
                                std::uint32_t step, std::uint32_t component) {
  const Philox4x32::Key key{static_cast<std::uint32_t>(seed),
                            static_cast<std::uint32_t>(seed >> 32)};
  const Philox4x32::Counter ctr{static_cast<std::uint32_t>(path_index),
                                static_cast<std::uint32_t>(path_index >> 32),
                                step, component};
  const auto out = Philox4x32::round10(ctr, key);
  return (std::uint64_t{out[0]} << 32) | out[1];
}

// Uniform in the open interval (0,1): 53 high bits; an exact zero is bumped
// to half an ulp so the inverse CDF never sees an endpoint.
inline double uniform_open01(std::uint64_t bits) {
  const double u = static_cast<double>(bits >> 11) * 0x1p-53;
  return u == 0.0 ? 0x1p-54 : u;
}

// AS241 PPND16: inverse of the standard normal CDF, double precision.
inline double inverse_normal_cdf(double p) {
  const double q = p - 0.5;
  if (q >= -0.425 && q <= 0.425) {
    const double r = 0.180625 - q * q;
    const double num =
        (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
              6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r +
            1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r +
          1.3314166789178437745e2) * r + 3.3871328727963666080e0);
    const double den =
        (((((((5.226495278852545610e3 * r + 2.8729085735721942674e4) * r +
              3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r +
            5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r +
          4.2313330701600911252e1) * r + 1.0);
    return q * num / den;
  }
  double r = q < 0.0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double x;
  if (r <= 5.0) {
    r -= 1.6;
    const double num =
        (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
              2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r +
            3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
          4.63033784615654529590e0) * r + 1.42343711074968357734e0);
    const double den =
        (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
              1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
            6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
          2.05319162663775882187e0) * r + 1.0);
    x = num / den;
  } else {
    r -= 5.0;
    const double num =
        (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
              1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
            2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
          5.46378491116411436990e0) * r + 6.65790464350110377720e0);
    const double den =
        (((((((2.04426310338993978564e-15 * r + 1.4215117583164458887e-7) * r +
              1.8463183175100546818e-5) * r + 7.868691311456132591e-4) * r +
            1.48753612908506148521e-2) * r + 1.3692988092273580531e-1) * r +
          5.9983220655588793769e-1) * r + 1.0);
    x = num / den;
  }
  return q < 0.0 ? -x : x;
}

// Standard normal draw keyed by (seed, path_index, step, component).
inline double normal_draw(std::uint64_t seed, std::uint64_t path_index,
                          std::uint32_t step, std::uint32_t component) {
  return inverse_normal_cdf(uniform_open01(philox_u64(seed, path_index, step, component)));
}

// Decorrelated seed for an auxiliary estimator stream (e.g. the independent
// right-hand side of a paired identity check).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint32_t stream) {
  const Philox4x32::Key key{static_cast<std::uint32_t>(seed),
                            static_cast<std::uint32_t>(seed >> 32)};
  const Philox4x32::Counter ctr{0x5EEDu, stream, 0xA110Cu, 0x5EEDu};
  const auto out = Philox4x32::round10(ctr, key);
  return (std::uint64_t{out[2]} << 32) | out[3];
}

}  // namespace superexp
