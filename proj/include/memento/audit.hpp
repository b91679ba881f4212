#pragma once

#include <atomic>
#include <cstdint>

namespace memento::audit {

/// Process-wide tallies of space/time bound checks performed by sketches.
/// Every sketch update is checked; a failing check bumps `violations`.
struct Counters {
  std::atomic<std::uint64_t> checks{0};
  std::atomic<std::uint64_t> violations{0};
  std::atomic<std::uint64_t> nonempty_rotations{0};
};

Counters& global();

/// Resets the global tallies (tests and the acceptance driver).
void reset();

}  // namespace memento::audit
