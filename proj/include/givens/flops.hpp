#pragma once

#include <cstdint>

namespace givens {

/// Monotone tally of floating point work.
///
/// Counting convention, used consistently across the library: one count per
/// scalar addition/subtraction and one per scalar multiplication. Comparisons,
/// absolute values, sign flips, index arithmetic and transcendental function
/// evaluations (cos, sin, sqrt) are not counted. I/O and metric computation
/// are never charged; only solver work is.
class FlopCounter {
 public:
  void add(std::uint64_t n) { count_ += n; }
  std::uint64_t count() const { return count_; }

 private:
  std::uint64_t count_ = 0;
};

}  // namespace givens
