#pragma once

#include <cstdint>

namespace wes {

// PCG-XSH-RR 64/32. Integer-only state transitions, so streams are identical
// on every platform for a given seed.
class Pcg32 {
 public:
  explicit Pcg32(uint64_t seed, uint64_t stream = kDefaultStream) {
    inc_ = (stream << 1u) | 1u;
    state_ = 0u;
    next();
    state_ += seed;
    next();
  }

  uint32_t next() {
    uint64_t old = state_;
    state_ = old * 6364136223846793005ULL + inc_;
    uint32_t xorshifted = static_cast<uint32_t>(((old >> 18u) ^ old) >> 27u);
    uint32_t rot = static_cast<uint32_t>(old >> 59u);
    return (xorshifted >> rot) | (xorshifted << ((32u - rot) & 31u));
  }

  uint64_t next_u64() {
    uint64_t hi = next();
    return (hi << 32) | next();
  }

  // Uniform in [0, bound) without modulo bias (Lemire with rejection).
  uint32_t next_below(uint32_t bound) {
    uint64_t m = static_cast<uint64_t>(next()) * bound;
    uint32_t lo = static_cast<uint32_t>(m);
    if (lo < bound) {
      uint32_t threshold = (0u - bound) % bound;
      while (lo < threshold) {
        m = static_cast<uint64_t>(next()) * bound;
        lo = static_cast<uint32_t>(m);
      }
    }
    return static_cast<uint32_t>(m >> 32);
  }

  // 53-bit uniform in [0, 1).
  double next_double() {
    uint64_t hi = next() >> 6;  // 26 bits
    uint64_t lo = next() >> 5;  // 27 bits
    return static_cast<double>((hi << 27) | lo) * (1.0 / 9007199254740992.0);
  }

  // Standard normal via Box-Muller, deterministic draw order.
  double next_gaussian();

  static constexpr uint64_t kDefaultStream = 0x14057b7ef767814fULL;

 private:
  uint64_t state_ = 0;
  uint64_t inc_ = 0;
};

// SplitMix64 step; used to derive independent sub-seeds.
inline uint64_t mix_seed(uint64_t a, uint64_t b) {
  uint64_t z = a + 0x9e3779b97f4a7c15ULL + b;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace wes
