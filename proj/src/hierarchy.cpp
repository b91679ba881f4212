#include "memento/hierarchy.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>
#include <unordered_set>

namespace memento {
namespace {

constexpr std::uint32_t mask_of(int bits) {
  return bits == 0 ? 0u : ~std::uint32_t{0} << (32 - bits);
}

void check_bits(int bits) {
  if (bits < 0 || bits > 32 || bits % 8 != 0) {
    throw UsageError("prefix mask length must be one of 0, 8, 16, 24, 32");
  }
}

void check_same_dim(const Prefix& a, const Prefix& b) {
  if (a.dim() != b.dim()) throw UsageError("prefixes of different dimensions");
}

// Does the shorter mask's value agree with the longer one truncated to it?
bool compatible(std::uint32_t a, int a_bits, std::uint32_t b, int b_bits) {
  const std::uint32_t m = mask_of(std::min(a_bits, b_bits));
  return (a & m) == (b & m);
}

std::string format_component(std::uint32_t value, int bits) {
  if (bits == 0) return "*";
  std::string out;
  for (int i = 0; i < bits / 8; ++i) {
    if (i) out += '.';
    out += std::to_string((value >> (24 - 8 * i)) & 0xFF);
  }
  if (bits < 32) out += ".*";
  return out;
}

std::optional<std::pair<std::uint32_t, int>> parse_component(std::string_view text) {
  if (text == "*") return std::pair<std::uint32_t, int>{0, 0};
  std::uint32_t value = 0;
  int octets = 0;
  bool wildcard = false;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t dot = text.find('.', pos);
    const std::string_view tok = text.substr(pos, dot == std::string_view::npos ? text.npos : dot - pos);
    if (tok == "*") {
      if (dot != std::string_view::npos) return std::nullopt;  // '*' must be last
      wildcard = true;
      break;
    }
    if (tok.empty() || tok.size() > 3 || octets == 4) return std::nullopt;
    unsigned v = 0;
    for (char c : tok) {
      if (c < '0' || c > '9') return std::nullopt;
      v = v * 10 + static_cast<unsigned>(c - '0');
    }
    if (v > 255) return std::nullopt;
    value |= v << (24 - 8 * octets);
    ++octets;
    if (dot == std::string_view::npos) break;
    pos = dot + 1;
  }
  if (!wildcard && octets != 4) return std::nullopt;
  if (wildcard && octets == 4) return std::nullopt;
  return std::pair<std::uint32_t, int>{value, octets * 8};
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

}  // namespace

Prefix Prefix::one_d(std::uint32_t src, int src_bits) {
  check_bits(src_bits);
  Prefix p;
  p.dim_ = 1;
  p.src_bits_ = static_cast<std::uint8_t>(src_bits);
  p.src_ = src & mask_of(src_bits);
  return p;
}

Prefix Prefix::two_d(std::uint32_t src, int src_bits, std::uint32_t dst, int dst_bits) {
  check_bits(src_bits);
  check_bits(dst_bits);
  Prefix p;
  p.dim_ = 2;
  p.src_bits_ = static_cast<std::uint8_t>(src_bits);
  p.dst_bits_ = static_cast<std::uint8_t>(dst_bits);
  p.src_ = src & mask_of(src_bits);
  p.dst_ = dst & mask_of(dst_bits);
  return p;
}

Prefix Prefix::of(const FlowKey& key) {
  return key.dim() == 2 ? two_d(key.src(), 32, key.dst_or_zero(), 32) : one_d(key.src(), 32);
}

int Prefix::depth() const {
  const int d = (32 - src_bits_) / 8;
  return dim_ == 2 ? d + (32 - dst_bits_) / 8 : d;
}

std::string Prefix::to_string() const {
  if (dim_ == 1) return format_component(src_, src_bits_);
  return '(' + format_component(src_, src_bits_) + ',' + format_component(dst_, dst_bits_) + ')';
}

bool canonical_less(const Prefix& a, const Prefix& b) {
  return std::make_tuple(a.depth(), a.dim(), -a.src_bits(), -a.dst_bits(), a.src(), a.dst()) <
         std::make_tuple(b.depth(), b.dim(), -b.src_bits(), -b.dst_bits(), b.src(), b.dst());
}

std::optional<Prefix> parse_prefix(std::string_view text) {
  text = trim(text);
  if (text.size() >= 2 && text.front() == '<' && text.back() == '>') {
    text = trim(text.substr(1, text.size() - 2));
  }
  if (!text.empty() && text.front() == '(') {
    if (text.back() != ')') return std::nullopt;
    text = text.substr(1, text.size() - 2);
    const std::size_t comma = text.find(',');
    if (comma == std::string_view::npos) return std::nullopt;
    auto strip = [](std::string_view s) {
      s = trim(s);
      if (s.size() >= 2 && s.front() == '<' && s.back() == '>') s = trim(s.substr(1, s.size() - 2));
      return s;
    };
    const auto src = parse_component(strip(text.substr(0, comma)));
    const auto dst = parse_component(strip(text.substr(comma + 1)));
    if (!src || !dst) return std::nullopt;
    return Prefix::two_d(src->first, src->second, dst->first, dst->second);
  }
  const auto src = parse_component(text);
  if (!src) return std::nullopt;
  return Prefix::one_d(src->first, src->second);
}

HierarchyDef HierarchyDef::for_dim(int dim) {
  if (dim == 1) return HierarchyDef{1, 5, 4};
  if (dim == 2) return HierarchyDef{2, 25, 8};
  throw ConfigError("hierarchy dimension must be 1 or 2");
}

bool generalizes(const Prefix& p, const Prefix& q) {
  check_same_dim(p, q);
  if (p.src_bits() > q.src_bits() || (q.src() & mask_of(p.src_bits())) != p.src()) return false;
  if (p.dim() == 2 &&
      (p.dst_bits() > q.dst_bits() || (q.dst() & mask_of(p.dst_bits())) != p.dst())) {
    return false;
  }
  return true;
}

std::vector<Prefix> parents(const Prefix& p) {
  std::vector<Prefix> out;
  if (p.dim() == 1) {
    if (p.src_bits() > 0) out.push_back(Prefix::one_d(p.src(), p.src_bits() - 8));
    return out;
  }
  if (p.src_bits() > 0) out.push_back(Prefix::two_d(p.src(), p.src_bits() - 8, p.dst(), p.dst_bits()));
  if (p.dst_bits() > 0) out.push_back(Prefix::two_d(p.src(), p.src_bits(), p.dst(), p.dst_bits() - 8));
  return out;
}

std::vector<Prefix> ancestors(const Prefix& p) {
  std::vector<Prefix> out;
  if (p.dim() == 1) {
    for (int bits = p.src_bits() - 8; bits >= 0; bits -= 8) out.push_back(Prefix::one_d(p.src(), bits));
    return out;
  }
  for (int sb = p.src_bits(); sb >= 0; sb -= 8) {
    for (int db = p.dst_bits(); db >= 0; db -= 8) {
      if (sb == p.src_bits() && db == p.dst_bits()) continue;
      out.push_back(Prefix::two_d(p.src(), sb, p.dst(), db));
    }
  }
  return out;
}

Prefix prefix_at(const FlowKey& key, int level) {
  if (key.dim() == 1) {
    if (level < 0 || level >= 5) throw UsageError("level index out of range for a 1-D hierarchy");
    return Prefix::one_d(key.src(), 32 - 8 * level);
  }
  if (level < 0 || level >= 25) throw UsageError("level index out of range for a 2-D hierarchy");
  return Prefix::two_d(key.src(), 32 - 8 * (level / 5), key.dst_or_zero(), 32 - 8 * (level % 5));
}

std::optional<Prefix> glb(const Prefix& h, const Prefix& h2) {
  check_same_dim(h, h2);
  if (!compatible(h.src(), h.src_bits(), h2.src(), h2.src_bits())) return std::nullopt;
  const bool src_from_h = h.src_bits() >= h2.src_bits();
  const std::uint32_t src = src_from_h ? h.src() : h2.src();
  const int sb = std::max(h.src_bits(), h2.src_bits());
  if (h.dim() == 1) return Prefix::one_d(src, sb);
  if (!compatible(h.dst(), h.dst_bits(), h2.dst(), h2.dst_bits())) return std::nullopt;
  const bool dst_from_h = h.dst_bits() >= h2.dst_bits();
  return Prefix::two_d(src, sb, dst_from_h ? h.dst() : h2.dst(), std::max(h.dst_bits(), h2.dst_bits()));
}

std::vector<Prefix> best_generalized(const Prefix& p, std::span<const Prefix> set) {
  std::vector<Prefix> below;
  for (const Prefix& h : set) {
    if (strictly_generalizes(p, h)) below.push_back(h);
  }
  std::vector<Prefix> out;
  if (below.size() <= 16) {
    for (const Prefix& h : below) {
      const bool shadowed = std::any_of(below.begin(), below.end(), [&](const Prefix& mid) {
        return strictly_generalizes(mid, h);
      });
      if (!shadowed) out.push_back(h);
    }
    return out;
  }
  // large sets: look the (at most 24) ancestors of each member up instead
  const std::unordered_set<Prefix> members(below.begin(), below.end());
  for (const Prefix& h : below) {
    bool shadowed = false;
    for (const Prefix& a : ancestors(h)) {
      if (strictly_generalizes(p, a) && members.count(a)) {
        shadowed = true;
        break;
      }
    }
    if (!shadowed) out.push_back(h);
  }
  return out;
}

PrefixSampler::PrefixSampler(HierarchyDef hier, double tau_full) : hier_(hier), v_(0) {
  if (!(tau_full > 0.0)) throw ConfigError("Full-update probability must be positive");
  v_ = ceil_tolerant(static_cast<double>(hier.size) / tau_full);
  if (v_ < static_cast<std::uint64_t>(hier.size)) {
    throw ConfigError("Full-update probability above 1");
  }
}

}  // namespace memento
