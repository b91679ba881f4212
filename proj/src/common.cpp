#include "memento/common.hpp"

#include <algorithm>
#include <cmath>

#include "memento/flow_key.hpp"

namespace memento {

std::uint64_t ceil_tolerant(double x) {
  const double nearest = std::round(x);
  if (std::fabs(x - nearest) <= 1e-9 * std::max(1.0, std::fabs(x))) {
    return static_cast<std::uint64_t>(nearest);
  }
  return static_cast<std::uint64_t>(std::ceil(x));
}

std::uint64_t counters_for_error(double eps) {
  if (!(eps > 0.0) || !(eps < 1.0)) {
    throw ConfigError("error parameter must lie in (0, 1)");
  }
  return ceil_tolerant(4.0 / eps);
}

std::optional<std::uint32_t> parse_ipv4(std::string_view text) {
  std::uint32_t addr = 0;
  int octets = 0;
  std::size_t i = 0;
  while (octets < 4) {
    if (i >= text.size() || text[i] < '0' || text[i] > '9') return std::nullopt;
    unsigned value = 0;
    std::size_t digits = 0;
    while (i < text.size() && text[i] >= '0' && text[i] <= '9') {
      value = value * 10 + static_cast<unsigned>(text[i] - '0');
      if (++digits > 3 || value > 255) return std::nullopt;
      ++i;
    }
    addr = (addr << 8) | value;
    ++octets;
    if (octets < 4) {
      if (i >= text.size() || text[i] != '.') return std::nullopt;
      ++i;
    }
  }
  if (i != text.size()) return std::nullopt;
  return addr;
}

std::string format_ipv4(std::uint32_t addr) {
  return std::to_string(addr >> 24) + '.' + std::to_string((addr >> 16) & 0xFF) + '.' +
         std::to_string((addr >> 8) & 0xFF) + '.' + std::to_string(addr & 0xFF);
}

std::string FlowKey::to_string() const {
  std::string out = format_ipv4(src_);
  if (dim_ == 2) out += ',' + format_ipv4(dst_);
  return out;
}

}  // namespace memento
