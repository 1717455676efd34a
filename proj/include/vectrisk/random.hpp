#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace vectrisk {

/// SplitMix64 finalizer, used to derive independent seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Seed of sub-stream `stream` of `seed`.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(seed ^ splitmix64(stream + 0xA5A5A5A5A5A5A5A5ULL));
}

/// Reproducible random source: std::mt19937_64 (whose output sequence is fixed
/// by the C++ standard) with all transforms written out here, since the
/// standard distributions and std::shuffle differ between library vendors.
///
/// Stream rule: the generator for sub-stream s of seed S is seeded with
/// derive_seed(S, s).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  static Rng stream(std::uint64_t seed, std::uint64_t stream) { return Rng(derive_seed(seed, stream)); }

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n) by rejection, n > 0.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v = next();
    while (v >= limit) v = next();
    return v % n;
  }

  /// Standard normal by Box-Muller, consuming two uniforms per draw.
  double normal();

  /// Poisson draw: multiplication method on chunks of mean <= 30.
  std::int64_t poisson(double mean);

  /// Fisher-Yates, last position first.
  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace vectrisk
