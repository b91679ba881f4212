#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

#include "memento/common.hpp"

namespace memento {

std::optional<std::uint32_t> parse_ipv4(std::string_view text);
std::string format_ipv4(std::uint32_t addr);

/// Packet identity: a source address, plus a destination for 2-D hierarchies.
/// The destination field is zero whenever dim == 1 so that value equality
/// and hashing only see meaningful fields.
class FlowKey {
 public:
  constexpr FlowKey() = default;

  static constexpr FlowKey one_d(std::uint32_t src) { return FlowKey(1, src, 0); }
  static constexpr FlowKey two_d(std::uint32_t src, std::uint32_t dst) {
    return FlowKey(2, src, dst);
  }

  constexpr int dim() const { return dim_; }
  constexpr std::uint32_t src() const { return src_; }
  constexpr std::optional<std::uint32_t> dst() const {
    return dim_ == 2 ? std::optional<std::uint32_t>(dst_) : std::nullopt;
  }
  /// Destination or 0 (for hot paths that already know the dimension).
  constexpr std::uint32_t dst_or_zero() const { return dst_; }

  constexpr bool operator==(const FlowKey&) const = default;

  /// "a.b.c.d" or "a.b.c.d,e.f.g.h".
  std::string to_string() const;

 private:
  constexpr FlowKey(std::uint8_t dim, std::uint32_t src, std::uint32_t dst)
      : dim_(dim), src_(src), dst_(dst) {}

  std::uint8_t dim_ = 1;
  std::uint32_t src_ = 0;
  std::uint32_t dst_ = 0;
};

}  // namespace memento

template <>
struct std::hash<memento::FlowKey> {
  std::size_t operator()(const memento::FlowKey& k) const noexcept {
    const std::uint64_t packed =
        (static_cast<std::uint64_t>(k.src()) << 32) | k.dst_or_zero();
    return static_cast<std::size_t>(memento::splitmix64(packed ^ static_cast<std::uint64_t>(k.dim())));
  }
};
