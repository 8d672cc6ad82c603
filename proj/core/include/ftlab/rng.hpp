#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <string_view>
#include <vector>

namespace ftlab {

// Counter-based splittable PRNG.
//
// Every stream is identified by a 64-bit key; drawing the n-th sample mixes
// (key, n) through the SplitMix64 finalizer, so streams never share state and
// a stream's output depends only on (root seed, labels used to derive it,
// sample index). Streams are split by purpose label ("init", "shuffle",
// "dropout", "masking", "sampling", ...) and optionally by integer index,
// which keeps independent consumers off each other's sequences.
class Rng {
 public:
  explicit Rng(std::uint64_t key) : key_(key) {}

  Rng(std::uint64_t root_seed, std::string_view label)
      : key_(mix(root_seed ^ fnv1a(label))) {}

  // Derive an independent stream from this one.
  Rng fork(std::string_view label) const { return Rng(mix(key_ ^ fnv1a(label))); }
  Rng fork(std::uint64_t index) const { return Rng(mix(key_ ^ mix(index + 0x9e3779b97f4a7c15ull))); }
  Rng fork(std::string_view label, std::uint64_t index) const { return fork(label).fork(index); }

  std::uint64_t key() const { return key_; }

  std::uint64_t next_u64() { return mix(key_ + (++counter_) * 0x9e3779b97f4a7c15ull); }

  // Uniform in [0, 1) with 53 random bits.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, bound) via rejection-free Lemire reduction.
  std::uint64_t next_below(std::uint64_t bound) {
    // Multiply-shift; bias is below 2^-64 * bound which is negligible here,
    // and the mapping is deterministic, which is what the contracts need.
    unsigned __int128 m = static_cast<unsigned __int128>(next_u64()) * bound;
    return static_cast<std::uint64_t>(m >> 64);
  }

  // Standard normal via Box-Muller (one value per pair; the spare is dropped
  // to keep draw counts independent of call sites).
  double next_normal() {
    double u1 = next_double();
    double u2 = next_double();
    while (u1 <= 0.0) u1 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  // Normal(0, std) truncated to [-limit*std, limit*std], by rejection.
  double next_trunc_normal(double std_dev, double limit = 2.0) {
    for (;;) {
      const double z = next_normal();
      if (z >= -limit && z <= limit) return z * std_dev;
    }
  }

  // Fisher-Yates permutation of [0, n).
  std::vector<std::uint32_t> permutation(std::size_t n) {
    std::vector<std::uint32_t> p(n);
    std::iota(p.begin(), p.end(), 0u);
    for (std::size_t i = n; i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(next_below(i));
      std::swap(p[i - 1], p[j]);
    }
    return p;
  }

  static std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ull;
    }
    return h;
  }

  // SplitMix64 finalizer.
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

}  // namespace ftlab
