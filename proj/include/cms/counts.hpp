#pragma once

#include <cstdint>
#include <vector>

namespace cms {

/// Monte-Carlo tally of base-classifier argmax outcomes.
struct SampleCounts {
  std::vector<std::uint64_t> counts;
  std::uint64_t n = 0;

  SampleCounts() = default;
  explicit SampleCounts(std::size_t class_count) : counts(class_count, 0) {}

  void add(std::uint32_t label) {
    ++counts.at(label);
    ++n;
  }
  SampleCounts& operator+=(const SampleCounts& other);
  std::uint64_t operator[](std::uint32_t label) const { return counts.at(label); }

  /// Highest count, lowest index on ties.
  std::uint32_t top() const;
  /// Highest count among the other classes, lowest index on ties. Requires at
  /// least two classes.
  std::uint32_t runner_up() const;

  friend bool operator==(const SampleCounts&, const SampleCounts&) = default;
};

}  // namespace cms
