#include "memento/trace.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <unordered_set>

namespace memento {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view s) {
  std::vector<std::string_view> out;
  while (true) {
    const auto comma = s.find(',');
    out.push_back(trim(s.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    s.remove_prefix(comma + 1);
  }
  return out;
}

std::uint32_t ip_or_throw(std::string_view tok, std::size_t line_no) {
  const auto ip = parse_ipv4(tok);
  if (!ip) throw ParseError("bad IPv4 address '" + std::string(tok) + "'", line_no);
  return *ip;
}

// Zipf weights 1/r^alpha for r = 1..n.
std::discrete_distribution<std::uint64_t> zipf(std::uint64_t n, double alpha) {
  std::vector<double> w(n);
  for (std::uint64_t r = 0; r < n; ++r) w[r] = std::pow(static_cast<double>(r + 1), -alpha);
  return std::discrete_distribution<std::uint64_t>(w.begin(), w.end());
}

}  // namespace

std::optional<TraceRecord> parse_trace_line(std::string_view line, std::size_t line_no, int dim) {
  line = trim(line);
  if (line.empty() || line.front() == '#') return std::nullopt;
  const auto fields = split(line);
  if (fields.size() > 3) throw ParseError("too many columns", line_no);
  TraceRecord r;
  const std::uint32_t src = ip_or_throw(fields[0], line_no);
  std::optional<std::uint32_t> dst;
  std::size_t next = 1;
  if (fields.size() >= 2 && fields[1] != "0" && fields[1] != "1") {
    dst = ip_or_throw(fields[1], line_no);
    next = 2;
  }
  if (next < fields.size()) {
    if (fields[next] != "0" && fields[next] != "1") {
      throw ParseError("flood column must be 0 or 1, got '" + std::string(fields[next]) + "'", line_no);
    }
    r.tagged = true;
    r.flood = fields[next] == "1";
    ++next;
  }
  if (next != fields.size()) throw ParseError("unexpected column", line_no);
  r.key = dst ? FlowKey::two_d(src, *dst) : FlowKey::one_d(src);
  if (dim != 0 && r.key.dim() != dim) {
    throw ParseError("expected a " + std::to_string(dim) + "-D record", line_no);
  }
  return r;
}

std::string format_trace_line(const TraceRecord& r) {
  std::string out = r.key.to_string();
  if (r.tagged) out += r.flood ? ",1" : ",0";
  return out;
}

TraceReader::TraceReader(const std::string& path, int dim) : in_(path), dim_(dim) {
  if (!in_) throw IoError("cannot open trace '" + path + "'");
}

std::optional<TraceRecord> TraceReader::next() {
  while (std::getline(in_, buf_)) {
    ++line_;
    if (auto r = parse_trace_line(buf_, line_, dim_)) return r;
  }
  if (in_.bad()) throw IoError("read error in trace");
  return std::nullopt;
}

std::vector<TraceRecord> load_trace(const std::string& path, int dim) {
  TraceReader reader(path, dim);
  std::vector<TraceRecord> out;
  while (auto r = reader.next()) out.push_back(*r);
  return out;
}

void write_trace(const std::string& path, std::span<const TraceRecord> records) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write trace '" + path + "'");
  for (const auto& r : records) out << format_trace_line(r) << '\n';
  if (!out) throw IoError("write error on '" + path + "'");
}

std::vector<FlowKey> keys_of(std::span<const TraceRecord> records) {
  std::vector<FlowKey> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.key);
  return out;
}

std::uint32_t scramble32(std::uint32_t x) {
  x ^= x >> 16;
  x *= 0x7FEB352DU;
  x ^= x >> 15;
  x *= 0x846CA68BU;
  x ^= x >> 16;
  return x;
}

FlowKey zipf_flow_key(std::uint64_t rank, std::uint64_t seed, int dim) {
  const auto salt = static_cast<std::uint32_t>(splitmix64(seed));
  const auto src = scramble32(static_cast<std::uint32_t>(rank) ^ salt);
  if (dim == 2) {
    const auto salt2 = static_cast<std::uint32_t>(splitmix64(seed + 1));
    return FlowKey::two_d(src, scramble32(static_cast<std::uint32_t>(rank) ^ salt2));
  }
  return FlowKey::one_d(src);
}

std::vector<TraceRecord> gen_zipf_trace(const ZipfSpec& spec) {
  if (!(spec.alpha >= 0.0)) throw ConfigError("Zipf exponent must be non-negative");
  if (spec.flows == 0 || spec.flows > (std::uint64_t{1} << 32)) throw ConfigError("flow count must lie in [1, 2^32]");
  if (spec.dim != 1 && spec.dim != 2) throw ConfigError("dimension must be 1 or 2");
  auto dist = zipf(spec.flows, spec.alpha);
  std::mt19937_64 rng(splitmix64(spec.seed ^ 0x5A697066ULL));
  std::vector<FlowKey> keys(spec.flows);
  for (std::uint64_t r = 0; r < spec.flows; ++r) keys[r] = zipf_flow_key(r, spec.seed, spec.dim);
  std::vector<TraceRecord> out(spec.packets);
  for (auto& rec : out) rec.key = keys[dist(rng)];
  return out;
}

std::vector<TraceRecord> gen_clustered_trace(const ClusteredSpec& spec) {
  if (spec.fanout < 1 || spec.fanout > 256) throw ConfigError("fanout must lie in [1, 256]");
  if (spec.dim != 1 && spec.dim != 2) throw ConfigError("dimension must be 1 or 2");
  auto dist = zipf(static_cast<std::uint64_t>(spec.fanout), spec.alpha);
  std::mt19937_64 rng(splitmix64(spec.seed ^ 0x436C75ULL));
  // child byte = hash(parent) + 2 r + 1 (odd step keeps ranks distinct mod 256)
  auto address = [&](std::uint64_t salt) {
    std::uint32_t addr = 0;
    for (int byte = 0; byte < 4; ++byte) {
      const auto offset = static_cast<std::uint32_t>(splitmix64(salt ^ (static_cast<std::uint64_t>(addr) << 8 | byte)));
      const auto r = static_cast<std::uint32_t>(dist(rng));
      addr |= ((offset + 2 * r + 1) & 0xFF) << (24 - 8 * byte);
    }
    return addr;
  };
  std::vector<TraceRecord> out(spec.packets);
  for (auto& rec : out) {
    const std::uint32_t src = address(spec.seed);
    rec.key = spec.dim == 2 ? FlowKey::two_d(src, address(spec.seed ^ 0xD57ULL)) : FlowKey::one_d(src);
  }
  return out;
}

FloodTrace inject_flood(std::span<const TraceRecord> input, const FloodSpec& spec) {
  if (spec.subnets < 1) throw ConfigError("need at least one flood subnet");
  if (spec.mask_bits < 8 || spec.mask_bits > 24 || spec.mask_bits % 8 != 0) {
    throw ConfigError("flood subnet mask must be 8, 16 or 24 bits");
  }
  if (spec.mask_bits == 8 && spec.subnets > 256) throw ConfigError("at most 256 distinct /8 subnets exist");
  if (!(spec.prob >= 0.0 && spec.prob <= 1.0)) throw ConfigError("flood probability must lie in [0, 1]");
  if (spec.start_hi < spec.start_lo + 2) throw ConfigError("flood start range is empty");
  if (input.size() <= spec.start_hi) throw ConfigError("trace shorter than the flood start range");
  const int dim = input.empty() ? 1 : input.front().key.dim();

  std::mt19937_64 rng(splitmix64(spec.seed ^ 0x466C6F6FULL));
  FloodTrace out;
  std::unordered_set<std::uint32_t> picked;
  std::vector<std::uint32_t> nets;
  while (nets.size() < static_cast<std::size_t>(spec.subnets)) {
    const auto net = static_cast<std::uint32_t>(rng() >> (64 - spec.mask_bits));
    if (picked.insert(net).second) nets.push_back(net);
  }
  for (auto net : nets) {
    out.subnets.push_back(Prefix::one_d(net << (32 - spec.mask_bits), spec.mask_bits));
  }
  out.start = spec.start_lo + 1 + reduce_range(rng(), spec.start_hi - spec.start_lo - 1);

  out.records.reserve(input.size());
  out.records.assign(input.begin(), input.begin() + static_cast<std::ptrdiff_t>(out.start));
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::size_t next = out.start;
  const std::uint32_t host_mask = ~std::uint32_t{0} >> spec.mask_bits;
  while (out.records.size() < input.size()) {
    if (coin(rng) < spec.prob) {
      const std::uint32_t net = nets[reduce_range(rng(), nets.size())];
      const auto host = static_cast<std::uint32_t>(rng()) & host_mask;
      const std::uint32_t src = net << (32 - spec.mask_bits) | host;
      TraceRecord r;
      r.key = dim == 2 ? FlowKey::two_d(src, static_cast<std::uint32_t>(rng())) : FlowKey::one_d(src);
      r.flood = true;
      r.tagged = true;
      out.records.push_back(r);
    } else {
      out.records.push_back(input[next++]);
    }
  }
  return out;
}

}  // namespace memento
