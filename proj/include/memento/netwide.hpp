#pragma once

// Measurement points that sample under a byte budget and report to a
// controller, the report wire format, and a deterministic in-process
// simulator tying them together.

#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <utility>
#include <vector>

#include "memento/flow_key.hpp"
#include "memento/hhh.hpp"
#include "memento/memento_sketch.hpp"

namespace memento {

enum class ReportKind : std::uint8_t { kSample = 0, kBatch = 1, kAggregation = 2 };

struct Report {
  std::uint32_t point_id = 0;
  ReportKind kind = ReportKind::kSample;
  std::uint32_t observed_count = 0;  // packets seen since the previous report
  std::vector<FlowKey> samples;
  std::vector<std::pair<FlowKey, std::uint32_t>> snapshot;  // Aggregation only
  int dim = 1;
};

enum class WireError { kTruncated, kTrailingBytes, kBadMagic, kVersionMismatch, kBadKind, kInvalidReport };

class WireFormatError : public std::runtime_error {
 public:
  WireFormatError(WireError code, const std::string& what) : std::runtime_error(what), code_(code) {}
  WireError code() const noexcept { return code_; }

 private:
  WireError code_;
};

inline constexpr std::uint16_t kWireMagic = 0x4D4D;
inline constexpr std::uint8_t kWireVersion = 1;
inline constexpr std::size_t kWireHeaderBytes = 16;

/// Little-endian: magic(2) version(1) kind(1) pointId(4) observedCount(4)
/// count(4), then count keys (4B src [+4B dst]) or count (key, count:4B) pairs.
std::vector<std::uint8_t> serialize_report(const Report& r);
/// The key width is not on the wire; the receiver knows its hierarchy.
Report deserialize_report(std::span<const std::uint8_t> bytes, int dim);
/// Semantic checks (non-empty samples, observedCount >= |samples|, uniform dim).
void validate_report(const Report& r);

/// Modelled control-channel cost.
struct CostModel {
  double overhead_bytes = 64;  // per message
  double sample_bytes = 4;     // per reported key
  double entry_bytes() const { return sample_bytes + 4; }
  double cost(const Report& r) const;
};

enum class Method { kSample, kBatch, kAggregation };

/// When a sampling point reports.
///  kPeriodic: every ceil(b/tau) packets, carrying exactly b samples chosen
///             uniformly among them.
///  kBernoulli: each packet is sampled with probability tau and a report
///              leaves once b samples are pending (budget permitting).
enum class Cadence { kPeriodic, kBernoulli };

const char* to_string(Method m);

struct PointConfig {
  std::uint32_t point_id = 0;
  Method method = Method::kBatch;
  double tau = 1.0;
  std::uint64_t batch = 1;
  double budget = 1.0;  // bytes earned per observed packet
  CostModel cost;
  Cadence cadence = Cadence::kPeriodic;
  int dim = 1;
  std::uint64_t seed = 0;
};

/// tau = B b / (O + E b), clamped to 1: the sampling rate a budget sustains.
double budget_tau(double budget, const CostModel& cost, std::uint64_t batch);

class MeasurementPoint {
 public:
  explicit MeasurementPoint(const PointConfig& cfg);

  std::optional<Report> observe(const FlowKey& key);

  std::uint64_t unreported() const { return observed_; }
  double earned() const { return earned_; }
  double spent() const { return spent_; }
  std::uint64_t reports() const { return reports_; }
  std::uint64_t deferred() const { return deferred_; }
  /// Largest (spent - earned) seen at an emission; <= 0 when compliant.
  double worst_overdraft() const { return worst_overdraft_; }
  std::uint64_t period() const { return period_; }
  const PointConfig& config() const { return cfg_; }

 private:
  std::optional<Report> observe_sampling(const FlowKey& key);
  std::optional<Report> observe_aggregation(const FlowKey& key);
  bool affordable(double cost) const { return earned_ - spent_ >= cost - 1e-9 * cost; }
  Report emit(Report r);

  PointConfig cfg_;
  std::mt19937_64 rng_;
  std::uint64_t threshold_ = 0;  // tau * 2^64 for the Bernoulli coin
  bool always_ = false;
  std::uint64_t period_ = 0;
  std::uint64_t in_period_ = 0;
  std::uint64_t observed_ = 0;
  std::vector<FlowKey> pending_;
  std::unordered_map<FlowKey, std::size_t> table_index_;
  std::vector<std::pair<FlowKey, std::uint32_t>> table_;
  double earned_ = 0;
  double spent_ = 0;
  double worst_overdraft_ = -1;
  std::uint64_t reports_ = 0;
  std::uint64_t deferred_ = 0;
  bool waiting_ = false;
  bool deferring_ = false;
};

enum class ControllerMode { kHH, kHHH, kExact };

struct ControllerConfig {
  ControllerMode mode = ControllerMode::kHH;
  std::uint64_t window = 100000;
  double eps_a = 0.01;
  double tau = 1.0;  // rate at which points sample
  double delta = 0.05;
  double theta = 0.01;
  int dim = 1;
  std::uint64_t seed = 0;
};

/// D-Memento / D-H-Memento over the merged report stream, or the idealised
/// exact window for the Aggregation baseline.
class Controller {
 public:
  explicit Controller(const ControllerConfig& cfg);

  /// Throws WireFormatError(kInvalidReport) and counts the rejection.
  void ingest(const Report& r);
  /// Decodes and ingests; malformed bytes are rejected and counted. Returns success.
  bool ingest_bytes(std::span<const std::uint8_t> bytes);

  /// HH mode: window frequency estimate of a key. Exact mode: exact count.
  double query(const FlowKey& key) const;
  /// HHH mode: H-Memento output; Exact mode: exact HHH of the window model.
  std::vector<Prefix> hhh(double theta) const;
  std::vector<HHHEntry> hhh_entries(double theta) const;

  std::uint64_t packets() const { return packets_; }
  std::uint64_t rejected() const { return rejected_; }
  std::uint64_t generation() const { return generation_; }
  const ControllerConfig& config() const { return cfg_; }
  const MementoSketch<FlowKey>* hh_sketch() const { return hh_.get(); }
  const HHHState* hhh_state() const { return hhh_.get(); }

 private:
  void ingest_exact(const Report& r);

  ControllerConfig cfg_;
  std::unique_ptr<MementoSketch<FlowKey>> hh_;
  std::unique_ptr<HHHState> hhh_;
  // exact window: chunks of (counts, packets), newest at the back
  struct Chunk {
    std::vector<std::pair<FlowKey, std::uint32_t>> counts;
    std::uint64_t packets = 0;
  };
  std::deque<Chunk> chunks_;
  std::uint64_t chunk_packets_ = 0;
  std::uint64_t packets_ = 0;
  std::uint64_t rejected_ = 0;
  std::uint64_t generation_ = 0;
};

enum class Assignment { kRoundRobin, kSkewed };

struct SimConfig {
  std::uint32_t points = 10;
  Method method = Method::kBatch;
  double tau = 1.0;
  std::uint64_t batch = 1;
  double budget = 1.0;
  CostModel cost;
  Cadence cadence = Cadence::kPeriodic;
  Assignment assignment = Assignment::kRoundRobin;
  int dim = 1;
  std::uint64_t seed = 0;
};

/// Routes packets to points, carries reports over the wire format to the
/// controller and keeps the accounting needed for the budget and staleness
/// invariants.
class NetworkSimulator {
 public:
  NetworkSimulator(const SimConfig& cfg, const ControllerConfig& controller);

  /// One ingress packet. Returns true if a report reached the controller.
  bool step(const FlowKey& key);

  /// Packets observed somewhere but not yet reported.
  std::uint64_t unreported() const { return unreported_; }
  std::uint64_t max_unreported() const { return max_unreported_; }
  std::uint64_t packets() const { return packets_; }
  double bytes_spent() const;
  bool budget_respected() const;
  /// m b / tau, the staleness bound for sampling methods.
  double staleness_bound() const;

  const Controller& controller() const { return controller_; }
  const std::vector<MeasurementPoint>& points() const { return points_; }
  const SimConfig& config() const { return cfg_; }

 private:
  SimConfig cfg_;
  std::vector<MeasurementPoint> points_;
  Controller controller_;
  std::mt19937_64 route_rng_;
  std::discrete_distribution<std::uint32_t> skew_;
  std::uint64_t packets_ = 0;
  std::uint64_t unreported_ = 0;
  std::uint64_t max_unreported_ = 0;
};

}  // namespace memento
