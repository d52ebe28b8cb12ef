#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace iadet {

/// Mixes a user seed, a model version and an image id into one 64-bit key
/// (FNV-1a over the id, splitmix64 finalization).
std::uint64_t stream_key(std::uint64_t seed, std::uint64_t version,
                         std::string_view image_id) noexcept;

/// Pseudo-random stream whose output is fixed by the seed on every platform.
class DeterministicStream {
 public:
  explicit DeterministicStream(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform();

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n); n must be positive.
  std::uint64_t uniform_index(std::uint64_t n);

  /// Standard normal via Box-Muller.
  double normal();

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  /// Poisson by Knuth's product method; intended for small means.
  std::uint64_t poisson(double mean);

 private:
  std::mt19937_64 engine_;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace iadet
