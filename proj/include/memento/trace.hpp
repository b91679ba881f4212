#pragma once

// Packet traces: CSV reading/writing, synthetic generators and flood injection.
//
// CSV: one packet per line, "src[,dst][,flood]" with flood in {0,1}; blank
// lines and lines starting with '#' are skipped.

#include <cstdint>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "memento/flow_key.hpp"
#include "memento/hierarchy.hpp"

namespace memento {

struct TraceRecord {
  FlowKey key;
  bool flood = false;
  bool tagged = false;  // carried a flood column

  bool operator==(const TraceRecord&) const = default;
};

/// Parses one CSV line; nullopt for comments and blank lines. `dim` of 0
/// accepts either form, otherwise a mismatch is a parse error.
std::optional<TraceRecord> parse_trace_line(std::string_view line, std::size_t line_no, int dim = 0);
std::string format_trace_line(const TraceRecord& r);

/// Lazy line-by-line reader.
class TraceReader {
 public:
  explicit TraceReader(const std::string& path, int dim = 0);
  std::optional<TraceRecord> next();
  std::size_t line() const { return line_; }

 private:
  std::ifstream in_;
  std::string buf_;
  std::size_t line_ = 0;
  int dim_;
};

std::vector<TraceRecord> load_trace(const std::string& path, int dim = 0);
void write_trace(const std::string& path, std::span<const TraceRecord> records);
std::vector<FlowKey> keys_of(std::span<const TraceRecord> records);

/// 32-bit bijection used to map flow ranks to addresses.
std::uint32_t scramble32(std::uint32_t x);

struct ZipfSpec {
  std::uint64_t packets = 1'000'000;
  std::uint64_t flows = 10'000;
  double alpha = 1.0;
  std::uint64_t seed = 1;
  int dim = 1;
};

/// i.i.d. draws of Zipf(alpha) ranks over `flows` keys; rank r maps to a
/// fixed pseudo-random address (distinct per rank).
std::vector<TraceRecord> gen_zipf_trace(const ZipfSpec& spec);
/// The address assigned to a rank (0-based) for a given seed.
FlowKey zipf_flow_key(std::uint64_t rank, std::uint64_t seed, int dim);

/// Traffic with prefix structure: every address byte is drawn Zipf(alpha)
/// over `fanout` children of the byte prefix above it, so heavy prefixes
/// appear at every level of the hierarchy.
struct ClusteredSpec {
  std::uint64_t packets = 200'000;
  int fanout = 16;
  double alpha = 1.2;
  std::uint64_t seed = 1;
  int dim = 1;
};
std::vector<TraceRecord> gen_clustered_trace(const ClusteredSpec& spec);

struct FloodSpec {
  int subnets = 50;
  int mask_bits = 8;
  double prob = 0.7;
  std::uint64_t start_lo = 0;  // start line drawn uniformly in (start_lo, start_hi)
  std::uint64_t start_hi = 1'000'000;
  std::uint64_t seed = 1;
};

struct FloodTrace {
  std::vector<TraceRecord> records;  // same length as the input
  std::uint64_t start = 0;           // index of the first line after which flooding may occur
  std::vector<Prefix> subnets;
};

/// Lines before `start` are copied; from there on each output line is a flood
/// packet (probability prob, random host bits in a random flood subnet) or
/// the next unread input line. Output stops at the input length.
FloodTrace inject_flood(std::span<const TraceRecord> input, const FloodSpec& spec);

}  // namespace memento
