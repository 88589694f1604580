#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string_view>

namespace rradam {

// SplitMix64: the output is a bijective mix of a Weyl counter, so the stream
// is defined by (seed, counter) alone and is identical on every platform.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  static constexpr std::string_view algorithm_id = "splitmix64";

  explicit SplitMix64(std::uint64_t seed = 0) noexcept : counter_(seed) {}

  /// Independent stream for one run of a sweep.
  static SplitMix64 stream(std::uint64_t seed, std::uint64_t run_id) noexcept;

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept;

  /// Unbiased integer in [0, bound); bound must be positive.
  std::uint64_t bounded(std::uint64_t bound) noexcept;

  /// Fisher-Yates shuffle of `perm` in place.
  void shuffle(std::span<std::size_t> perm) noexcept;

  std::uint64_t counter() const noexcept { return counter_; }

  friend bool operator==(const SplitMix64&, const SplitMix64&) = default;

 private:
  std::uint64_t counter_;
};

std::uint64_t mix64(std::uint64_t z) noexcept;

}  // namespace rradam
