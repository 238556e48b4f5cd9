#pragma once

#include <cstdint>
#include <random>

namespace spw {

using Rng = std::mt19937_64;

/// Named substreams of a single top-level seed. Each consumer of randomness
/// draws from its own stream so that adding draws in one place never shifts
/// another.
enum class Stream : std::uint32_t {
  instance = 1,
  init = 2,
  schedule = 3,
  boundary = 4,
  tape = 5,
  redraw = 6,
  sampling = 7,
};

inline Rng make_rng(std::uint64_t seed, Stream stream, std::uint64_t index = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32)};
  return Rng(seq);
}

inline double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(rng);
}

/// Uniform on [0, n) by Lemire's multiply-shift with rejection. Unbiased,
/// and avoids the division libstdc++'s uniform_int_distribution does per draw.
inline std::uint64_t bounded(Rng& rng, std::uint64_t n) {
  unsigned __int128 m = static_cast<unsigned __int128>(rng()) * n;
  auto low = static_cast<std::uint64_t>(m);
  if (low < n) {
    const std::uint64_t threshold = (0 - n) % n;
    while (low < threshold) {
      m = static_cast<unsigned __int128>(rng()) * n;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

inline bool coin(Rng& rng) { return (rng() >> 63) != 0; }

}  // namespace spw
