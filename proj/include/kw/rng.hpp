#pragma once

#include <cstdint>

namespace kw {

// Self-contained generators so that streams are bit-identical across
// platforms and standard libraries.  std::uniform_int_distribution makes no
// such guarantee, which would break run-to-run reproducibility of estimates.

inline uint64_t splitmix64(uint64_t& state) {
  uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4edbfULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Derives one stream seed from (base seed, n, job index).  Every sampling
// job is keyed this way, so the merged result does not depend on how jobs
// are spread over threads.
inline uint64_t derive_seed(uint64_t seed, uint64_t n, uint64_t job) {
  uint64_t x = seed;
  x ^= 0x9e3779b97f4a7c15ULL + splitmix64(x) + (n << 1);
  x ^= 0xc4ceb9fe1a85ec53ULL * (job + 1);
  splitmix64(x);
  return splitmix64(x);
}

class Xoshiro256pp {
 public:
  explicit Xoshiro256pp(uint64_t seed) {
    uint64_t x = seed;
    for (auto& w : s_) w = splitmix64(x);
  }

  uint64_t next() {
    uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Unbiased draw from [0, n) (Lemire's multiply-shift with rejection).
  uint32_t below(uint32_t n) {
    uint64_t x = next() >> 32;
    uint64_t m = x * n;
    auto lo = static_cast<uint32_t>(m);
    if (lo < n) {
      uint32_t t = (0u - n) % n;
      while (lo < t) {
        x = next() >> 32;
        m = x * n;
        lo = static_cast<uint32_t>(m);
      }
    }
    return static_cast<uint32_t>(m >> 32);
  }

  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  static uint64_t rotl(uint64_t v, int k) { return (v << k) | (v >> (64 - k)); }
  uint64_t s_[4];
};

}  // namespace kw
