// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <utility>

namespace triage {

/// SplitMix64 finalizer. Used to expand a user seed into generator state and
/// to derive independent streams from a master seed.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// xorshift64* generator (shifts 12/25/27, multiplier 0x2545F4914F6CDD1D).
///
/// The exact bit stream is part of the public contract: splits, shuffles,
/// dropout masks and initializations are reproducible across platforms and
/// across independent reimplementations.
///
///   state    = splitmix64(seed), replaced by a fixed constant if zero
///   next()   = x ^= x >> 12; x ^= x << 25; x ^= x >> 27; return x * M
///   uniform  = (next() >> 11) * 2^-53                 in [0, 1)
///   below(n) = high 64 bits of the 128-bit product next() * n
class Rng {
 public:
  explicit Rng(std::uint64_t seed) noexcept : state_(splitmix64(seed)) {
    if (state_ == 0) state_ = 0x853C49E6748FEA9BULL;
  }

  std::uint64_t next() noexcept {
    state_ ^= state_ >> 12;
    state_ ^= state_ << 25;
    state_ ^= state_ >> 27;
    return state_ * 0x2545F4914F6CDD1DULL;
  }

  double uniform() noexcept {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) noexcept {
    return lo + (hi - lo) * uniform();
  }

  /// Integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n) noexcept {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next()) * n) >> 64);
  }

  /// Fisher-Yates, walking from the last element down.
  template <typename T>
  void shuffle(std::span<T> items) noexcept {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      using std::swap;
      swap(items[i - 1], items[j]);
    }
  }

  /// Seed for the index-th independent stream under a master seed.
  static std::uint64_t derive(std::uint64_t master, std::uint64_t index) noexcept {
    return splitmix64(master ^ splitmix64(index + 0x632BE59BD9B4E019ULL));
  }

 private:
  std::uint64_t state_;
};

}  // namespace triage
