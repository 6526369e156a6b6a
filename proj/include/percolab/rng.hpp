#pragma once

// Portable random streams. std::mt19937_64 has a sequence fixed by the
// standard; the distribution adaptors in <random> do not, so the
// conversions to doubles and bounded integers live here.

#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace percolab {

/// SplitMix64 finalizer. Used for seed derivation and keyed hashing.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) noexcept {
  return mix64(a ^ mix64(b + 0x632be59bd9b4e019ULL));
}

/// Seed for realization `index` of an ensemble driven by `master`. Depends
/// only on the pair, so realizations can run in any order.
constexpr std::uint64_t realization_seed(std::uint64_t master, std::uint64_t index) noexcept {
  return hash_combine(master, index);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(mix64(seed)) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform() < p; }

  /// Uniform integer in [0, bound), bound > 0. Lemire's multiply-shift with
  /// rejection, so the result is exactly uniform.
  std::uint64_t below(std::uint64_t bound) {
    __extension__ typedef unsigned __int128 wide;
    std::uint64_t x = engine_();
    wide m = static_cast<wide>(x) * bound;
    auto low = static_cast<std::uint64_t>(m);
    if (low < bound) {
      const std::uint64_t threshold = (0 - bound) % bound;
      while (low < threshold) {
        x = engine_();
        m = static_cast<wide>(x) * bound;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  template <typename T>
  void shuffle(std::span<T> values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(values[i - 1], values[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace percolab
