#pragma once

// Counter-based random numbers: every draw is a pure function of
// (master seed, stream, sample index, slot), so Monte-Carlo results do not
// depend on how samples are distributed across threads.

#include <array>
#include <cstdint>

namespace cms {

/// Philox4x32 with 10 rounds (Salmon et al., "Parallel random numbers: as easy
/// as 1, 2, 3").
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                           std::array<std::uint32_t, 2> key);

std::uint64_t splitmix64(std::uint64_t x);

class CounterRng {
 public:
  CounterRng(std::uint64_t master_seed, std::uint64_t stream_id);

  /// Four independent 32-bit words for (index, block).
  std::array<std::uint32_t, 4> block(std::uint64_t index, std::uint32_t block) const;

  /// Uniform double in (0, 1] for (index, slot); 53 bits of resolution.
  double uniform(std::uint64_t index, std::uint32_t slot) const;

  /// Standard normal for (index, slot) via Box-Muller on two uniforms.
  double normal(std::uint64_t index, std::uint32_t slot) const;

 private:
  std::array<std::uint32_t, 2> key_;
};

}  // namespace cms
