// Portable deterministic random number generation.
//
// The generator is splitmix64 (Steele & Lea's SplittableRandom finalizer,
// as published by Vigna). It is fully specified by its 64-bit arithmetic,
// so the same seed produces the same corpus on every platform and in any
// reimplementation. Per-dialogue streams are derived from the master seed
// with stream_seed(), a documented splitting rule: the stream index is
// folded into the state with the golden-ratio increment and passed through
// the splitmix64 finalizer twice.

#pragma once

#include <cstdint>
#include <string_view>

namespace dialeval {

// FNV-1a over bytes. Used for config digests and stable per-route jitter;
// unlike std::hash its value is the same on every platform.
inline std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1), 53 significant bits.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  bool bernoulli(double p) { return next_double() < p; }

  // Uniform in [0, n). n must be positive.
  std::size_t uniform_index(std::size_t n) {
    return static_cast<std::size_t>(next_double() * static_cast<double>(n));
  }

  // Derive the seed of an independent stream (dialogue index, etc.).
  static std::uint64_t stream_seed(std::uint64_t master_seed,
                                   std::uint64_t stream_index) {
    SplitMix64 g(master_seed + 0x9E3779B97F4A7C15ull * (stream_index + 1));
    g.next_u64();
    return g.next_u64();
  }

 private:
  std::uint64_t state_;
};

}  // namespace dialeval
