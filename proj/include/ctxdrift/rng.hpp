#pragma once

#include <algorithm>
#include <cstdint>
#include <random>

namespace ctxdrift {

/// Seeded random stream with cheap derivation of independent substreams.
///
/// Substreams are keyed off the parent's seed (not its generator state), so
/// `derive(i)` yields the same stream regardless of how much the parent has
/// been consumed. Permutation indices, run indices and retry attempts each
/// use their own substream, which keeps results independent of scheduling.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(mix(seed, 0x9e3779b97f4a7c15ULL)) {}

  std::uint64_t seed() const { return seed_; }

  Rng derive(std::uint64_t stream) const { return Rng(mix(seed_, stream + 1)); }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform draw on [0, 1).
  double uniform() {
    return std::uniform_real_distribution<double>(0.0, 1.0)(engine_);
  }

  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }

  double normal() { return std::normal_distribution<double>(0.0, 1.0)(engine_); }

  double normal(double mean, double stddev) {
    return mean + stddev * normal();
  }

  bool bernoulli(double p) { return uniform() < p; }

  /// Uniform integer on [0, n).
  std::uint64_t uniform_index(std::uint64_t n) {
    return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(engine_);
  }

  double gamma(double shape, double scale) {
    return std::gamma_distribution<double>(shape, scale)(engine_);
  }

  double beta(double a, double b) {
    double x = gamma(a, 1.0);
    double y = gamma(b, 1.0);
    return x / (x + y);
  }

  /// Inverse-gamma draw: 1/X with X ~ Gamma(shape, 1/scale).
  double inverse_gamma(double shape, double scale) {
    return 1.0 / gamma(shape, 1.0 / scale);
  }

  template <typename It>
  void shuffle(It first, It last) {
    std::shuffle(first, last, engine_);
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  static std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    // splitmix64 finalizer over the combined words
    std::uint64_t x = a + 0x9e3779b97f4a7c15ULL * (b + 1);
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebULL;
    x ^= x >> 31;
    return x;
  }

  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace ctxdrift
