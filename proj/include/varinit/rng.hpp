#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace varinit {

// Deterministic, seedable PRNG stack used everywhere randomness is needed.
// Streams are xoshiro256++ seeded through splitmix64; normal deviates come
// from the polar (Marsaglia) Box-Muller variant. Results depend only on the
// seed and draw order, never on platform RNG facilities.

inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Independent sub-stream seed for (base, index); used for per-layer,
// per-chunk and per-run streams so parallel evaluation order cannot
// influence results.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  return mix64(mix64(base) ^ (index * 0xD1B54A32D192ED03ull + 0x2545F4914F6CDD1Dull));
}

class Xoshiro256pp {
 public:
  explicit Xoshiro256pp(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& w : state_) {
      sm += 0x9E3779B97F4A7C15ull;
      w = mix64(sm);
    }
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform double in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform double in [-1, 1).
  double uniform_sym() { return 2.0 * uniform01() - 1.0; }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  std::array<std::uint64_t, 4> state_;
};

// N(0,1) sampler, polar Box-Muller with one cached deviate.
class NormalSampler {
 public:
  explicit NormalSampler(std::uint64_t seed) : rng_(seed) {}

  double next() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = rng_.uniform_sym();
      v = rng_.uniform_sym();
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    have_spare_ = true;
    return u * m;
  }

  Xoshiro256pp& uniform_source() { return rng_; }

 private:
  Xoshiro256pp rng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace varinit
