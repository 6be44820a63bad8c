#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace facetvec {

// Counter-free splitmix64 generator. Every consumer derives its own stream
// from (seed, stream tag, indices...) so that draws never depend on the
// order in which unrelated work is scheduled.
struct Rng {
  std::uint64_t state;

  explicit Rng(std::uint64_t seed) : state(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1), 53-bit resolution.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in (0, 1); half-step offset keeps log() finite at both ends.
  double next_open01() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Uniform integer in [0, n). Lemire's multiply-shift rejection, no modulo bias.
  std::uint64_t next_below(std::uint64_t n) {
    if (n <= 1) return 0;
    while (true) {
      std::uint64_t x = next_u64();
      unsigned __int128 m = static_cast<unsigned __int128>(x) * n;
      std::uint64_t lo = static_cast<std::uint64_t>(m);
      if (lo >= n || lo >= static_cast<std::uint64_t>(-static_cast<std::int64_t>(n)) % n)
        return static_cast<std::uint64_t>(m >> 64);
    }
  }

  // Standard Gumbel(0,1): -log(-log(u)).
  double next_gumbel() { return -std::log(-std::log(next_open01())); }

  // Standard normal via Box-Muller. Draws two uniforms per value; the
  // simplicity is worth more than the spare variate here.
  double next_gaussian() {
    double u1 = next_open01();
    double u2 = next_open01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(next_below(i));
      std::swap(v[i - 1], v[j]);
    }
  }
};

// Stream tags. Distinct consumers of randomness get distinct tags so that
// adding or removing draws in one place cannot shift another's sequence.
inline constexpr std::uint64_t kStreamInit = 0x01;
inline constexpr std::uint64_t kStreamWalk = 0x02;
inline constexpr std::uint64_t kStreamShuffle = 0x03;
inline constexpr std::uint64_t kStreamAspectNoise = 0x04;
inline constexpr std::uint64_t kStreamNegative = 0x05;
inline constexpr std::uint64_t kStreamWarmup = 0x06;
inline constexpr std::uint64_t kStreamSplit = 0x07;
inline constexpr std::uint64_t kStreamNegPair = 0x08;

inline std::uint64_t mix64(std::uint64_t h, std::uint64_t v) {
  h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  h = (h ^ (h >> 30)) * 0xbf58476d1ce4e5b9ULL;
  h = (h ^ (h >> 27)) * 0x94d049bb133111ebULL;
  return h ^ (h >> 31);
}

inline std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t tag) {
  return mix64(mix64(0x243f6a8885a308d3ULL, seed), tag);
}
inline std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t tag, std::uint64_t a) {
  return mix64(derive_stream(seed, tag), a);
}
inline std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t tag, std::uint64_t a,
                                   std::uint64_t b) {
  return mix64(derive_stream(seed, tag, a), b);
}
inline std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t tag, std::uint64_t a,
                                   std::uint64_t b, std::uint64_t c) {
  return mix64(derive_stream(seed, tag, a, b), c);
}

}  // namespace facetvec
