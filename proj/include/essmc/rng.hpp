#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>

#include "essmc/errors.hpp"

// Counter-based random streams (Philox 4x32-10).
//
// Every random draw is a pure function of (master seed, stream id, iteration,
// draw index), so any walker's stream can be reconstructed in isolation.
// This is what makes runs bit-identical regardless of how walker updates are
// scheduled across worker threads.

namespace essmc {

namespace detail {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;  // golden ratio
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;  // sqrt(3)-1

inline void philox_round(std::array<std::uint32_t, 4>& c,
                         const std::array<std::uint32_t, 2>& k) {
  const std::uint64_t p0 = std::uint64_t(kPhiloxM0) * c[0];
  const std::uint64_t p1 = std::uint64_t(kPhiloxM1) * c[2];
  const auto hi0 = std::uint32_t(p0 >> 32), lo0 = std::uint32_t(p0);
  const auto hi1 = std::uint32_t(p1 >> 32), lo1 = std::uint32_t(p1);
  c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

inline std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                                  std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kPhiloxW0;
      key[1] += kPhiloxW1;
    }
    philox_round(ctr, key);
  }
  return ctr;
}

}  // namespace detail

// Reserved stream ids. Walker updates use the walker's global index
// (0 .. n_walkers-1); auxiliary consumers get ids far above any
// realistic walker count so streams never collide.
constexpr std::uint32_t kStreamMixtureFit = 0xFFFF0000u;    // + half index
constexpr std::uint32_t kStreamInitialize = 0xFFFE0000u;    // + walker index
constexpr std::uint32_t kStreamScaleProbe = 0xFFFD0000u;    // proposal autotuning
constexpr std::uint32_t kStreamScratch = 0xFFFC0000u;       // tests, demos

class RngStream {
 public:
  // One stream per (seed, stream id, iteration) triple. The 64-bit draw
  // counter occupies the remaining two counter words.
  RngStream(std::uint64_t master_seed, std::uint32_t stream_id,
            std::uint32_t iteration = 0)
      : key_{std::uint32_t(master_seed), std::uint32_t(master_seed >> 32)},
        stream_id_(stream_id),
        iteration_(iteration) {}

  std::uint64_t next_u64() {
    const std::array<std::uint32_t, 4> ctr = {
        std::uint32_t(draw_), std::uint32_t(draw_ >> 32), stream_id_, iteration_};
    ++draw_;
    const auto out = detail::philox4x32_10(ctr, key_);
    return (std::uint64_t(out[1]) << 32) | out[0];
  }

  // Uniform on [0, 1) with 53-bit resolution.
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1); safe under log().
  double uniform_open() {
    return (double(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  // Uniform integer on [0, n). Rejection keeps it exactly unbiased.
  std::uint64_t uniform_int(std::uint64_t n) {
    if (n == 0) throw Error("uniform_int: empty range");
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x = next_u64();
    while (x >= limit) x = next_u64();
    return x % n;
  }

  // Standard normal via Box-Muller; consumes exactly two uniforms per draw.
  double normal() {
    const double u1 = uniform_open();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  std::uint64_t draws_consumed() const { return draw_; }
  std::uint32_t stream_id() const { return stream_id_; }
  std::uint32_t iteration() const { return iteration_; }

 private:
  std::array<std::uint32_t, 2> key_;
  std::uint32_t stream_id_;
  std::uint32_t iteration_;
  std::uint64_t draw_ = 0;
};

}  // namespace essmc
