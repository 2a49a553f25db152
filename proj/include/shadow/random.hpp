#pragma once

// Counter-based random streams. Every draw is a pure function of
// (master seed, stream id, counter), so a Monte Carlo run produces the same
// numbers no matter how its trials are split across workers.

#include <cstdint>

namespace shadow {

/// SplitMix64 finalizer (Steele, Lea & Flood; Vigna's constants).
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

class RandomStream {
 public:
  constexpr RandomStream(std::uint64_t seed, std::uint64_t stream) noexcept
      : key_(mix64(mix64(seed + kGolden) ^ mix64(stream * kGolden + 0xD1B54A32D192ED03ULL))),
        stream_(stream) {}

  /// Independent child stream; deterministic in (this stream, index).
  constexpr RandomStream split(std::uint64_t index) const noexcept {
    return RandomStream(key_, index ^ 0xA0761D6478BD642FULL);
  }

  constexpr std::uint64_t stream_id() const noexcept { return stream_; }

  constexpr std::uint64_t bits(std::uint64_t counter) const noexcept {
    return mix64(key_ + (counter + 1) * kGolden);
  }

  /// Uniform in [0, 1) with 53 random bits.
  constexpr double uniform(std::uint64_t counter) const noexcept {
    return static_cast<double>(bits(counter) >> 11) * 0x1.0p-53;
  }

  /// Sequential convenience cursor; advances an internal counter.
  constexpr double next_uniform() noexcept { return uniform(cursor_++); }

  constexpr std::uint64_t position() const noexcept { return cursor_; }

 private:
  std::uint64_t key_;
  std::uint64_t stream_;
  std::uint64_t cursor_ = 0;
};

}  // namespace shadow
