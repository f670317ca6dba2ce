#ifndef SHESIM_RNG_HPP
#define SHESIM_RNG_HPP

#include <array>
#include <cmath>
#include <cstdint>

namespace shesim {

// Counter-based random streams (Philox 4x32-10). Every draw is a pure
// function of (seed, purpose, path, a, b), so sampling is reproducible and
// independent of evaluation order and worker count.
namespace rng {

// Stream purposes. Distinct purposes never share a key schedule.
enum Purpose : std::uint32_t {
  kWiener = 1,      // Brownian increments, keyed (path, step, mode)
  kBridge = 16,     // bridge refinement; level l uses kBridge + l
  kOuResidual = 48, // conditional OU residuals, keyed (path, step, mode)
  kGamma = 64,      // Gaussian coefficients for gamma-norm sampling
  kInit = 65,       // random field / operator initialisation
  kBurkholder = 66, // step-integrand construction
  kBootstrap = 67,  // bootstrap resampling indices
};

namespace detail {

inline constexpr std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline constexpr void mulhilo(std::uint32_t a, std::uint32_t b,
                              std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t prod = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(prod >> 32);
  lo = static_cast<std::uint32_t>(prod);
}

} // namespace detail

// One Philox 4x32-10 block: four 32-bit words from a 64-bit key and a
// 128-bit counter.
inline std::array<std::uint32_t, 4> philox_block(std::uint64_t key,
                                                 std::uint32_t c0,
                                                 std::uint32_t c1,
                                                 std::uint32_t c2,
                                                 std::uint32_t c3) {
  std::uint32_t k0 = static_cast<std::uint32_t>(key);
  std::uint32_t k1 = static_cast<std::uint32_t>(key >> 32);
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    detail::mulhilo(0xD2511F53u, c0, hi0, lo0);
    detail::mulhilo(0xCD9E8D57u, c2, hi1, lo1);
    const std::uint32_t n0 = hi1 ^ c1 ^ k0;
    const std::uint32_t n1 = lo1;
    const std::uint32_t n2 = hi0 ^ c3 ^ k1;
    const std::uint32_t n3 = lo0;
    c0 = n0;
    c1 = n1;
    c2 = n2;
    c3 = n3;
    k0 += 0x9E3779B9u;
    k1 += 0xBB67AE85u;
  }
  return {c0, c1, c2, c3};
}

inline std::uint64_t stream_key(std::uint64_t seed, std::uint32_t purpose) {
  return detail::splitmix64(seed ^ (0xA24BAED4963EE407ULL * (purpose + 1)));
}

// Two independent N(0,1) draws for the counter (path, a, b) via Box-Muller.
inline std::array<double, 2> normal_pair(std::uint64_t seed,
                                         std::uint32_t purpose,
                                         std::uint64_t path, std::uint32_t a,
                                         std::uint32_t b) {
  const auto w = philox_block(stream_key(seed, purpose),
                              static_cast<std::uint32_t>(path),
                              static_cast<std::uint32_t>(path >> 32), a, b);
  const std::uint64_t u0 =
      (static_cast<std::uint64_t>(w[0]) << 32) | w[1];
  const std::uint64_t u1 =
      (static_cast<std::uint64_t>(w[2]) << 32) | w[3];
  const double x = (static_cast<double>(u0 >> 11) + 0.5) * 0x1p-53;
  const double y = (static_cast<double>(u1 >> 11) + 0.5) * 0x1p-53;
  const double rad = std::sqrt(-2.0 * std::log(x));
  const double ang = 6.283185307179586476925286766559 * y;
  return {rad * std::cos(ang), rad * std::sin(ang)};
}

inline double normal(std::uint64_t seed, std::uint32_t purpose,
                     std::uint64_t path, std::uint32_t a, std::uint32_t b) {
  return normal_pair(seed, purpose, path, a, b)[0];
}

// Uniform in [0, n): used for bootstrap index draws.
inline std::uint64_t uniform_index(std::uint64_t seed, std::uint32_t purpose,
                                   std::uint64_t path, std::uint32_t a,
                                   std::uint32_t b, std::uint64_t n) {
  const auto w = philox_block(stream_key(seed, purpose),
                              static_cast<std::uint32_t>(path),
                              static_cast<std::uint32_t>(path >> 32), a, b);
  const std::uint64_t u =
      (static_cast<std::uint64_t>(w[0]) << 32) | w[1];
  return u % n;
}

} // namespace rng
} // namespace shesim

#endif
