#include "iadet/random.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace iadet {
namespace {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t stream_key(std::uint64_t seed, std::uint64_t version,
                         std::string_view image_id) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : image_id) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::uint64_t key = splitmix64(seed);
  key = splitmix64(key ^ version);
  return splitmix64(key ^ h);
}

double DeterministicStream::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::uint64_t DeterministicStream::uniform_index(std::uint64_t n) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % n;
}

double DeterministicStream::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_normal_;
  }
  double u1;
  do {
    u1 = uniform();
  } while (u1 <= 0.0);
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_normal_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

std::uint64_t DeterministicStream::poisson(double mean) {
  if (!(mean > 0.0)) return 0;
  const double limit = std::exp(-mean);
  std::uint64_t k = 0;
  double product = uniform();
  while (product > limit) {
    ++k;
    product *= uniform();
  }
  return k;
}

}  // namespace iadet
