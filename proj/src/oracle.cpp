#include "memento/oracle.hpp"

#include <algorithm>
#include <unordered_set>

namespace memento {
namespace {

HierarchyDef hier_of(const FlowKey& key) { return HierarchyDef::for_dim(key.dim()); }

// For every key, the conditioned mass it contributes to each of its
// generalizations q (restricted by `want`), given the set members above it.
template <class Want>
std::unordered_map<Prefix, double> conditioned_all(const WeightedCounts& counts,
                                                   const std::unordered_set<Prefix>& members, Want&& want) {
  std::unordered_map<Prefix, double> out;
  std::vector<Prefix> gens;
  std::vector<Prefix> covering;
  for (const auto& [key, weight] : counts) {
    const HierarchyDef hier = hier_of(key);
    gens.clear();
    covering.clear();
    for (int i = 0; i < hier.size; ++i) {
      gens.push_back(prefix_at(key, i));
      if (members.count(gens.back())) covering.push_back(gens.back());
    }
    for (const Prefix& q : gens) {
      if (!want(q)) continue;
      const bool covered = std::any_of(covering.begin(), covering.end(),
                                       [&](const Prefix& h) { return strictly_generalizes(q, h); });
      if (!covered) out[q] += weight;
    }
  }
  return out;
}

}  // namespace

WindowCounter::WindowCounter(std::uint64_t window) : window_(window) {
  if (window == 0) throw ConfigError("window must be positive");
}

void WindowCounter::push(const FlowKey& key) {
  ring_.push_back(key);
  ++counts_[key];
  if (ring_.size() > window_) {
    auto it = counts_.find(ring_.front());
    if (--it->second == 0) counts_.erase(it);
    ring_.pop_front();
  }
}

std::uint64_t WindowCounter::count(const FlowKey& key) const {
  auto it = counts_.find(key);
  return it == counts_.end() ? 0 : it->second;
}

WeightedCounts WindowCounter::counts() const {
  WeightedCounts out;
  out.reserve(counts_.size());
  for (const auto& [k, c] : counts_) out.emplace_back(k, static_cast<double>(c));
  return out;
}

std::uint64_t oracle_window_freq(std::span<const FlowKey> stream, std::uint64_t window, std::uint64_t t,
                                 const FlowKey& key) {
  if (t > stream.size()) throw UsageError("query time beyond the end of the stream");
  const std::uint64_t from = t > window ? t - window : 0;
  return static_cast<std::uint64_t>(std::count(stream.begin() + static_cast<std::ptrdiff_t>(from),
                                               stream.begin() + static_cast<std::ptrdiff_t>(t), key));
}

WeightedCounts window_counts(std::span<const FlowKey> stream, std::uint64_t window, std::uint64_t t) {
  if (t > stream.size()) throw UsageError("query time beyond the end of the stream");
  std::unordered_map<FlowKey, double> m;
  for (std::uint64_t i = t > window ? t - window : 0; i < t; ++i) m[stream[i]] += 1;
  return {m.begin(), m.end()};
}

double prefix_frequency(const WeightedCounts& counts, const Prefix& p) {
  double sum = 0;
  for (const auto& [key, w] : counts) {
    if (key.dim() == p.dim() && generalizes(p, Prefix::of(key))) sum += w;
  }
  return sum;
}

double conditioned_frequency(const WeightedCounts& counts, const Prefix& q, std::span<const Prefix> set) {
  double sum = 0;
  for (const auto& [key, w] : counts) {
    const Prefix e = Prefix::of(key);
    if (!generalizes(q, e)) continue;
    const bool covered = std::any_of(set.begin(), set.end(), [&](const Prefix& h) {
      return strictly_generalizes(q, h) && generalizes(h, e);
    });
    if (!covered) sum += w;
  }
  return sum;
}

double conditioned_frequency_by_parts(const WeightedCounts& counts, const Prefix& q, std::span<const Prefix> set) {
  const auto g = best_generalized(q, set);
  double c = prefix_frequency(counts, q);
  for (const Prefix& h : g) c -= prefix_frequency(counts, h);
  if (q.dim() == 2) {
    for (std::size_t i = 0; i < g.size(); ++i) {
      for (std::size_t j = i + 1; j < g.size(); ++j) {
        if (auto m = glb(g[i], g[j])) c += prefix_frequency(counts, *m);
      }
    }
  }
  return c;
}

std::vector<Prefix> exact_hhh(const WeightedCounts& counts, double threshold, HierarchyDef hier) {
  std::vector<Prefix> result;
  std::unordered_set<Prefix> members;
  for (int level = 0; level <= hier.max_depth; ++level) {
    const auto cond = conditioned_all(counts, members, [&](const Prefix& q) { return q.depth() == level; });
    std::vector<Prefix> added;
    for (const auto& [q, c] : cond) {
      if (c >= threshold) added.push_back(q);
    }
    std::sort(added.begin(), added.end(), canonical_less);
    for (const Prefix& q : added) {
      members.insert(q);
      result.push_back(q);
    }
  }
  return result;
}

std::vector<Prefix> oracle_hhh(std::span<const FlowKey> stream, std::uint64_t window, std::uint64_t t, double theta,
                               HierarchyDef hier) {
  return exact_hhh(window_counts(stream, window, t), theta * static_cast<double>(window), hier);
}

CoverageAudit audit_coverage(const WeightedCounts& counts, std::span<const Prefix> set, double threshold,
                             HierarchyDef hier) {
  const std::unordered_set<Prefix> members(set.begin(), set.end());
  const auto cond = conditioned_all(counts, members, [&](const Prefix& q) { return !members.count(q); });
  CoverageAudit audit;
  for (const auto& [q, c] : cond) {
    if (q.dim() != hier.dim) continue;
    ++audit.checked;
    if (c >= threshold) {
      ++audit.violations;
      audit.missed.push_back(q);
    }
  }
  std::sort(audit.missed.begin(), audit.missed.end(), canonical_less);
  return audit;
}

}  // namespace memento
