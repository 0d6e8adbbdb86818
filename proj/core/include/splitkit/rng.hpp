#pragma once

#include <cstdint>
#include <initializer_list>
#include <string_view>

namespace splitkit {

// SplitMix64. Small, fast, and good enough for sampling; chosen over
// std::mt19937_64 because the output sequence is identical across standard
// library implementations, which the reproducibility contract depends on.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Unbiased draw in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t threshold = -n % n;  // 2^64 mod n
    for (;;) {
      const std::uint64_t r = next();
      if (r >= threshold) return r % n;
    }
  }

  // Uniform double in [0, 1) with 53 random bits.
  double uniform01() {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

 private:
  std::uint64_t state_;
};

// FNV-1a over the seed and a list of string parts. Used to fan one root seed
// out into decoupled per-stage / per-entity seeds, so that editing one stage
// of an experiment config never perturbs the randomness of another.
inline std::uint64_t derive_seed(std::uint64_t root,
                                 std::initializer_list<std::string_view> parts) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix_byte = [&h](unsigned char b) {
    h ^= b;
    h *= 0x100000001b3ULL;
  };
  for (int shift = 0; shift < 64; shift += 8) {
    mix_byte(static_cast<unsigned char>(root >> shift));
  }
  for (std::string_view part : parts) {
    for (char c : part) mix_byte(static_cast<unsigned char>(c));
    mix_byte(0x1f);  // part separator, keeps ("ab","c") != ("a","bc")
  }
  return h;
}

}  // namespace splitkit
