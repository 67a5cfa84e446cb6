#pragma once

#include <cstdint>
#include <random>

namespace hetmarket {

// SplitMix64 finalizer (Steele, Lea & Flood). A bijection on 64-bit words.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Random stream used by the simulator.
//
// The engine is std::mt19937_64, whose output sequence is fixed by the
// standard. The conversions to doubles and bounded integers are done here
// rather than through <random> distributions, whose algorithms are
// implementation-defined, so a seed reproduces the same run on any platform.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform integer on [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n) {
    // Rejection sampling on the largest multiple of n.
    const std::uint64_t limit = -n % n;  // (2^64 - n) mod n == 2^64 mod n
    for (;;) {
      const std::uint64_t r = engine_();
      if (r >= limit) return r % n;
    }
  }

  bool bernoulli(double p) { return uniform() < p; }

private:
  std::mt19937_64 engine_;
};

}  // namespace hetmarket
