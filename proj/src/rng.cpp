#include "rradam/rng.hpp"

#include <utility>

namespace rradam {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
}

std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

SplitMix64 SplitMix64::stream(std::uint64_t seed, std::uint64_t run_id) noexcept {
  return SplitMix64(mix64(seed) ^ mix64(run_id + kGolden));
}

SplitMix64::result_type SplitMix64::operator()() noexcept {
  counter_ += kGolden;
  return mix64(counter_);
}

std::uint64_t SplitMix64::bounded(std::uint64_t bound) noexcept {
  // Rejection on the top of the range keeps every residue equally likely.
  const std::uint64_t limit = max() - (max() % bound + 1) % bound;
  std::uint64_t x = (*this)();
  while (x > limit) x = (*this)();
  return x % bound;
}

void SplitMix64::shuffle(std::span<std::size_t> perm) noexcept {
  for (std::size_t i = perm.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(bounded(i));
    std::swap(perm[i - 1], perm[j]);
  }
}

}  // namespace rradam
