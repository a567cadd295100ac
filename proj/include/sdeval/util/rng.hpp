#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string_view>
#include <utility>
#include <vector>

#include "sdeval/util/hash.hpp"

namespace sdeval::util {

// splitmix64 finalizer; used to derive independent sub-seeds.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Sub-seed for a named stream under a parent seed, e.g. (seed, "src/elevenlabs").
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream) {
  return mix64(seed ^ mix64(fnv1a64(stream)));
}

// Seeded generator. The draws below are written out by hand rather than
// going through std::*_distribution, whose algorithms are left to the
// standard library implementation; a seed must reproduce the same manifest
// and the same augmented audio on every toolchain.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n), rejection-sampled to avoid modulo bias.
  std::uint64_t below(std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  // Standard normal via Box-Muller; the spare value is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// In-place Fisher-Yates shuffle.
template <typename T>
void fisher_yates(std::vector<T>& items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.below(i));
    std::swap(items[i - 1], items[j]);
  }
}

// k distinct indices from [0, n), in draw order.
inline std::vector<std::size_t> sample_without_replacement(std::size_t n,
                                                           std::size_t k,
                                                           Rng& rng) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  fisher_yates(idx, rng);
  idx.resize(std::min(k, n));
  return idx;
}

}  // namespace sdeval::util
