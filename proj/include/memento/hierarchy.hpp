#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "memento/common.hpp"
#include "memento/flow_key.hpp"

namespace memento {

/// Byte-granularity IPv4 prefix (1-D) or (source, destination) prefix pair
/// (2-D). Bits beyond each mask length are always zero.
class Prefix {
 public:
  constexpr Prefix() = default;

  /// Builds a canonical prefix; mask lengths must be multiples of 8 in [0, 32].
  static Prefix one_d(std::uint32_t src, int src_bits);
  static Prefix two_d(std::uint32_t src, int src_bits, std::uint32_t dst, int dst_bits);
  /// The fully specified prefix of a key.
  static Prefix of(const FlowKey& key);

  constexpr int dim() const { return dim_; }
  constexpr int src_bits() const { return src_bits_; }
  constexpr int dst_bits() const { return dst_bits_; }
  constexpr std::uint32_t src() const { return src_; }
  constexpr std::uint32_t dst() const { return dst_; }

  /// Number of wildcard bytes: 0 for fully specified, up to 4 (1-D) or 8 (2-D).
  int depth() const;
  bool fully_specified() const { return depth() == 0; }

  constexpr bool operator==(const Prefix&) const = default;

  /// Text form: "181.7.*", "*", "(181.7.20.6,208.67.*)".
  std::string to_string() const;

 private:
  std::uint8_t dim_ = 1;
  std::uint8_t src_bits_ = 0;
  std::uint8_t dst_bits_ = 0;
  std::uint32_t src_ = 0;
  std::uint32_t dst_ = 0;
};

/// Canonical total order used when iterating a level (more specific and
/// numerically smaller first).
bool canonical_less(const Prefix& a, const Prefix& b);

std::optional<Prefix> parse_prefix(std::string_view text);

/// Byte hierarchy shape: dim 1 -> (H, L) = (5, 4); dim 2 -> (25, 8).
struct HierarchyDef {
  int dim = 1;
  int size = 5;       // H
  int max_depth = 4;  // L

  static HierarchyDef for_dim(int dim);
};

/// p generalizes q (p is an ancestor of, or equal to, q).
bool generalizes(const Prefix& p, const Prefix& q);

/// Strict generalization: generalizes(p, q) && p != q.
inline bool strictly_generalizes(const Prefix& p, const Prefix& q) {
  return p != q && generalizes(p, q);
}

/// Immediate ancestors (one byte shorter in one dimension).
std::vector<Prefix> parents(const Prefix& p);

/// All strict ancestors of p.
std::vector<Prefix> ancestors(const Prefix& p);

/// The level-th of the H generalizations of key. 1-D orders by source mask
/// 32, 24, 16, 8, 0; 2-D walks the 5x5 (src, dst) mask grid row-major with
/// both masks descending.
Prefix prefix_at(const FlowKey& key, int level);

/// The most general common descendant of h and h2, if any.
std::optional<Prefix> glb(const Prefix& h, const Prefix& h2);

/// G(p|P): the strict descendants of p in P with no other element of P
/// strictly between them and p.
std::vector<Prefix> best_generalized(const Prefix& p, std::span<const Prefix> set);

/// Draws one of a key's H prefixes with probability tau/H each, or nothing
/// with probability 1 - tau. Internally draws i uniform in {1..V}, V = ceil(H/tau).
class PrefixSampler {
 public:
  PrefixSampler(HierarchyDef hier, double tau_full);

  /// Level index for one 64-bit random word, or -1 for a miss.
  int level_for(std::uint64_t word) const {
    const auto i = reduce_range(word, v_);
    return i < static_cast<std::uint64_t>(hier_.size) ? static_cast<int>(i) : -1;
  }

  template <class Rng>
  std::optional<Prefix> draw(const FlowKey& key, Rng& rng) const {
    const int level = level_for(rng());
    if (level < 0) return std::nullopt;
    return prefix_at(key, level);
  }

  std::uint64_t v() const { return v_; }
  /// H / V, the Full-update probability actually realised.
  double effective_tau() const { return static_cast<double>(hier_.size) / static_cast<double>(v_); }
  const HierarchyDef& hierarchy() const { return hier_; }

 private:
  HierarchyDef hier_;
  std::uint64_t v_;
};

}  // namespace memento

template <>
struct std::hash<memento::Prefix> {
  std::size_t operator()(const memento::Prefix& p) const noexcept {
    const std::uint64_t packed = (static_cast<std::uint64_t>(p.src()) << 32) | p.dst();
    const std::uint64_t shape = static_cast<std::uint64_t>(p.src_bits()) << 8 |
                                static_cast<std::uint64_t>(p.dst_bits()) << 16 |
                                static_cast<std::uint64_t>(p.dim());
    return static_cast<std::size_t>(memento::splitmix64(packed ^ memento::splitmix64(shape)));
  }
};
