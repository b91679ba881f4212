#pragma once

// Exact reference computations: window frequencies, prefix frequencies,
// conditioned frequencies and exact hierarchical heavy hitters.
//
// Warm-up convention: before W packets have arrived the window is the whole
// stream prefix.

#include <cstdint>
#include <deque>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include "memento/flow_key.hpp"
#include "memento/hierarchy.hpp"

namespace memento {

using WeightedCounts = std::vector<std::pair<FlowKey, double>>;

/// Rolling exact counter over the last W keys.
class WindowCounter {
 public:
  explicit WindowCounter(std::uint64_t window);
  void push(const FlowKey& key);
  std::uint64_t count(const FlowKey& key) const;
  std::uint64_t size() const { return ring_.size(); }
  std::uint64_t window() const { return window_; }
  WeightedCounts counts() const;

 private:
  std::uint64_t window_;
  std::deque<FlowKey> ring_;
  std::unordered_map<FlowKey, std::uint64_t> counts_;
};

/// Count of key among stream positions (t - W, t] (1-based t, 0 <= t <= size).
std::uint64_t oracle_window_freq(std::span<const FlowKey> stream, std::uint64_t window, std::uint64_t t,
                                 const FlowKey& key);

/// Per-key counts of the window ending at t.
WeightedCounts window_counts(std::span<const FlowKey> stream, std::uint64_t window, std::uint64_t t);

/// f_p: total weight of keys generalized by p.
double prefix_frequency(const WeightedCounts& counts, const Prefix& p);

/// C_{q|P} by definition: weight of keys under q not under any member of P
/// that q strictly generalizes.
double conditioned_frequency(const WeightedCounts& counts, const Prefix& q, std::span<const Prefix> set);

/// Same quantity through f_q - sum f_h (+ sum f_glb in 2-D) over G(q|P).
double conditioned_frequency_by_parts(const WeightedCounts& counts, const Prefix& q, std::span<const Prefix> set);

/// Bottom-up exact HHH: level l adds every prefix whose conditioned frequency
/// with respect to the HHHs of lower levels reaches `threshold`.
std::vector<Prefix> exact_hhh(const WeightedCounts& counts, double threshold, HierarchyDef hier);

/// exact_hhh on the window ending at t with threshold theta * W.
std::vector<Prefix> oracle_hhh(std::span<const FlowKey> stream, std::uint64_t window, std::uint64_t t, double theta,
                               HierarchyDef hier);

struct CoverageAudit {
  std::uint64_t checked = 0;     // prefixes outside the set that were examined
  std::uint64_t violations = 0;  // of those, conditioned frequency >= threshold
  std::vector<Prefix> missed;
};

/// Checks every prefix that covers at least one key and lies outside `set`.
CoverageAudit audit_coverage(const WeightedCounts& counts, std::span<const Prefix> set, double threshold,
                             HierarchyDef hier);

}  // namespace memento
