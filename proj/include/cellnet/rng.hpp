#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>

namespace cellnet {

// Named random streams derived from one master seed. Each subsystem draws
// from its own stream so that enabling one protocol never shifts the draws
// of another.
enum class Stream : std::uint64_t {
  topology = 1,
  traffic = 2,
  movement = 3,
  selection = 4,
  placement = 5,
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Portable generator. std::mt19937_64 is bit-exact across standard
// libraries; the std distributions are not, so the conversions below are
// written out by hand.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  Rng(std::uint64_t master, Stream stream, std::uint64_t counter = 0)
      : engine_(derive(master, stream, counter)) {}

  static std::uint64_t derive(std::uint64_t master, Stream stream, std::uint64_t counter) {
    std::uint64_t h = splitmix64(master);
    h = splitmix64(h ^ static_cast<std::uint64_t>(stream));
    return splitmix64(h ^ splitmix64(counter));
  }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 bits of resolution.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, bound). Rejection sampling keeps it unbiased.
  std::uint64_t below(std::uint64_t bound) {
    if (bound == 0) throw std::invalid_argument("Rng::below: bound must be positive");
    const std::uint64_t limit = bound * (UINT64_MAX / bound);
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % bound;
  }

  bool bernoulli(double p) {
    if (p <= 0.0) return false;
    if (p >= 1.0) return true;
    return uniform01() < p;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace cellnet
