#pragma once

#include <cmath>
#include <cstdint>

namespace agmh {

/// Counter-style 64-bit generator (splitmix64). Cheap to copy; independent
/// sub-streams are derived from a base state plus integer tags, so any run
/// is a pure function of its seed. Feature files written with format
/// version 1 imply this generator.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  static std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ull;
    return mix64(state_);
  }

  /// Uniform in [0, 1), 53-bit resolution.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, bound), bound > 0. Multiply-shift reduction.
  std::uint64_t next_below(std::uint64_t bound) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * bound) >> 64);
  }

  /// Standard normal via Box-Muller (cosine branch only, two draws each).
  double next_gaussian() {
    double u1 = next_double();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    const double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(6.28318530717958647692 * u2);
  }

  /// Independent sub-stream for (this base state, tag).
  Rng stream(std::uint64_t tag) const {
    return Rng(mix64(state_ + 0x9e3779b97f4a7c15ull * (tag + 1)));
  }
  Rng stream(std::uint64_t a, std::uint64_t b) const { return stream(a).stream(b); }
  Rng stream(std::uint64_t a, std::uint64_t b, std::uint64_t c) const {
    return stream(a).stream(b).stream(c);
  }

 private:
  std::uint64_t state_;
};

}  // namespace agmh
