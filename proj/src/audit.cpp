#include "memento/audit.hpp"

namespace memento::audit {

Counters& global() {
  static Counters counters;
  return counters;
}

void reset() {
  auto& g = global();
  g.checks = 0;
  g.violations = 0;
  g.nonempty_rotations = 0;
}

}  // namespace memento::audit
