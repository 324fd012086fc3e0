#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace adprompt {

// SplitMix64 (Steele, Lea & Flood / Vigna's reference sequence). Chosen over
// the platform default because its output stream is pinned by the algorithm,
// so a seed reproduces the same shuffle on every compiler and OS.
class SplitMix64 {
 public:
  explicit SplitMix64(uint64_t seed) : state_(seed) {}

  uint64_t next() {
    state_ += 0x9E3779B97F4A7C15ULL;
    uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform draw in [0, bound) via rejection sampling, bias-free.
  uint64_t next_below(uint64_t bound) {
    const uint64_t threshold = (0ULL - bound) % bound;
    for (;;) {
      uint64_t v = next();
      if (v >= threshold) return v % bound;
    }
  }

 private:
  uint64_t state_;
};

inline uint64_t fnv1a64(std::string_view bytes) {
  uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

// Stream key for a (seed, tag) pair: the tag hash perturbs the seed so the
// AD and HC shuffles of one seed are independent streams.
inline SplitMix64 keyed_rng(uint64_t seed, std::string_view tag) {
  return SplitMix64(seed ^ fnv1a64(tag));
}

// Fisher-Yates with the portable generator; permutes indices 0..n-1.
inline std::vector<size_t> shuffled_indices(size_t n, SplitMix64 rng) {
  std::vector<size_t> idx(n);
  for (size_t i = 0; i < n; ++i) idx[i] = i;
  for (size_t i = n; i > 1; --i) {
    size_t j = static_cast<size_t>(rng.next_below(i));
    std::swap(idx[i - 1], idx[j]);
  }
  return idx;
}

}  // namespace adprompt
