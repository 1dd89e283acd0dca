#pragma once

#include <cstdint>
#include <string_view>

namespace tasksel {

// Platform-independent sampling stream. std::uniform_int_distribution is
// implementation-defined, so draws are built on a SplitMix64 counter instead:
// output k of a stream is mix(key + k * golden), with no other state.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key) noexcept : key_(key) {}

  /// Stream keyed by (seed, label); draws for one label never depend on
  /// which other labels were used.
  static CounterRng for_stream(std::uint64_t seed, std::string_view label) noexcept;

  std::uint64_t next() noexcept;

  /// Uniform integer in [0, bound), bound > 0, by rejection.
  std::uint64_t below(std::uint64_t bound) noexcept;

  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

std::uint64_t mix64(std::uint64_t x) noexcept;
std::uint64_t fnv1a64(std::string_view bytes) noexcept;

}  // namespace tasksel
