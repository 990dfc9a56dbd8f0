#ifndef OODIL_RNG_HPP_
#define OODIL_RNG_HPP_

#include <cmath>
#include <cstdint>
#include <string_view>

namespace oodil {

// splitmix64, used to derive independent sub-stream seeds.
inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline uint64_t hash_tag(std::string_view tag) {
  // FNV-1a
  uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Derive a child seed for a named sub-stream. Deterministic in (seed, tag, index).
inline uint64_t derive_seed(uint64_t seed, std::string_view tag, uint64_t index = 0) {
  return splitmix64(splitmix64(seed ^ hash_tag(tag)) + index);
}

// Deterministic generator (xoshiro256**). All randomness in the project flows
// through this type so results do not depend on the standard library's
// distribution implementations.
class Rng {
 public:
  explicit Rng(uint64_t seed = 0) {
    uint64_t x = seed;
    for (int i = 0; i < 4; i++) {
      x = splitmix64(x);
      s_[i] = x;
    }
  }

  uint64_t next_u64() {
    const uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // uniform in [0, 1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // uniform integer in [0, n)
  uint64_t uniform_int(uint64_t n) {
    // Lemire's bounded rejection method: unbiased and deterministic.
    uint64_t x = next_u64();
    __uint128_t m = static_cast<__uint128_t>(x) * n;
    uint64_t l = static_cast<uint64_t>(m);
    if (l < n) {
      uint64_t t = (0 - n) % n;
      while (l < t) {
        x = next_u64();
        m = static_cast<__uint128_t>(x) * n;
        l = static_cast<uint64_t>(m);
      }
    }
    return static_cast<uint64_t>(m >> 64);
  }

  // standard normal via Box-Muller (cosine branch only, keeps state simple)
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

 private:
  static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  uint64_t s_[4];
};

}  // namespace oodil

#endif  // OODIL_RNG_HPP_
