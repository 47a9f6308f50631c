#pragma once

#include <cstdint>
#include <random>

namespace ecsim {

// splitmix64 finalizer; used to derive independent stream seeds from (seed, salt...).
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) noexcept {
  return mix_seed(mix_seed(seed) ^ salt);
}

// Seeded stream whose output is identical on every platform: mt19937_64 is fully
// specified by the standard and the double conversion is done by hand (the
// std distributions are implementation-defined).
class DeterministicStream {
 public:
  explicit DeterministicStream(std::uint64_t seed = 0) : engine_(seed) {}

  // Uniform in [0, 1).
  double next_unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform in [lo, hi].
  double uniform(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

  // Uniform in [-1, 1).
  double symmetric() { return 2.0 * next_unit() - 1.0; }

  std::uint64_t next_index(std::uint64_t n) { return n == 0 ? 0 : engine_() % n; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace ecsim
