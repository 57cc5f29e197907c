#pragma once

#include <cstdint>
#include <random>

namespace flowmm {

using Rng = std::mt19937_64;

/// Independent sub-streams of one episode. Market paths, fill draws and policy
/// noise never share a stream, so two policies evaluated on the same episode
/// seed see the same prices, order flow and fill uniforms.
enum class Stream : std::uint64_t {
  kMarket = 1,
  kFills = 2,
  kPolicy = 3,
  kInit = 4,
  kTrain = 5,
  kData = 6,
  kSelect = 7,
  kValidation = 8,
  kBacktest = 9,
  kHoldout = 10,
};

/// SplitMix64 finalizer.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Derives a child seed from a parent seed and a counter. Chaining gives a
/// tree of independent streams: mix(mix(master, scenario), episode).
constexpr std::uint64_t mix_seed(std::uint64_t parent, std::uint64_t counter) noexcept {
  return splitmix64(parent ^ splitmix64(counter + 0x632BE59BD9B4E019ull));
}

constexpr std::uint64_t mix_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b) noexcept {
  return mix_seed(mix_seed(master, a), b);
}

inline Rng make_rng(std::uint64_t seed) { return Rng{seed}; }

inline Rng make_stream(std::uint64_t episode_seed, Stream s) {
  return Rng{mix_seed(episode_seed, static_cast<std::uint64_t>(s))};
}

/// Seed of episode `episode` in scenario `scenario` under `master`.
constexpr std::uint64_t episode_seed(std::uint64_t master, std::uint64_t scenario,
                                     std::uint64_t episode) noexcept {
  return mix_seed(master, scenario, episode);
}

inline double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

inline double standard_normal(Rng& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); }

}  // namespace flowmm
