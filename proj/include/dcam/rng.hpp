#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace dcam {

// 64-bit FNV-1a, stable across platforms and runs.
std::uint64_t fnv1a64(std::string_view text);

// SplitMix64 finalizer; spreads nearby seeds apart.
std::uint64_t mix64(std::uint64_t x);

// Per-item seed: mix64(seed ^ fnv1a64(key)).
std::uint64_t derive_seed(std::uint64_t seed, std::string_view key);

// Seeded generator whose output depends only on the seed. Distribution
// transforms are implemented here rather than with <random> distributions,
// whose algorithms differ between standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer in [0, n), n > 0, without modulo bias.
  std::uint64_t below(std::uint64_t n);
  // Standard normal via Box-Muller.
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Fisher-Yates shuffle driven by Rng.
template <class It>
void shuffle(It first, It last, Rng& rng) {
  const auto n = static_cast<std::uint64_t>(last - first);
  for (std::uint64_t i = n; i > 1; --i) {
    const auto j = rng.below(i);
    std::swap(first[static_cast<std::ptrdiff_t>(i - 1)], first[static_cast<std::ptrdiff_t>(j)]);
  }
}

}  // namespace dcam
