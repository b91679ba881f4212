#include "memento/netwide.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "memento/oracle.hpp"
#include "memento/planner.hpp"

namespace memento {
namespace {

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint32_t>(b[at]) | static_cast<std::uint32_t>(b[at + 1]) << 8 |
         static_cast<std::uint32_t>(b[at + 2]) << 16 | static_cast<std::uint32_t>(b[at + 3]) << 24;
}

void put_key(std::vector<std::uint8_t>& out, const FlowKey& k, int dim) {
  put_u32(out, k.src());
  if (dim == 2) put_u32(out, k.dst_or_zero());
}

FlowKey get_key(std::span<const std::uint8_t> b, std::size_t at, int dim) {
  return dim == 2 ? FlowKey::two_d(get_u32(b, at), get_u32(b, at + 4)) : FlowKey::one_d(get_u32(b, at));
}

std::uint64_t tau_threshold(double tau, bool& always) {
  const double scaled = std::ldexp(tau, 64);
  always = scaled >= 18446744073709551616.0;
  return always ? std::numeric_limits<std::uint64_t>::max() : static_cast<std::uint64_t>(scaled);
}

}  // namespace

std::vector<std::uint8_t> serialize_report(const Report& r) {
  if (r.dim != 1 && r.dim != 2) throw UsageError("report dimension must be 1 or 2");
  const bool agg = r.kind == ReportKind::kAggregation;
  const std::size_t count = agg ? r.snapshot.size() : r.samples.size();
  const std::size_t key_bytes = 4 * static_cast<std::size_t>(r.dim);
  std::vector<std::uint8_t> out;
  out.reserve(kWireHeaderBytes + count * (key_bytes + (agg ? 4 : 0)));
  put_u16(out, kWireMagic);
  out.push_back(kWireVersion);
  out.push_back(static_cast<std::uint8_t>(r.kind));
  put_u32(out, r.point_id);
  put_u32(out, r.observed_count);
  put_u32(out, static_cast<std::uint32_t>(count));
  if (agg) {
    for (const auto& [key, c] : r.snapshot) {
      put_key(out, key, r.dim);
      put_u32(out, c);
    }
  } else {
    for (const auto& key : r.samples) put_key(out, key, r.dim);
  }
  return out;
}

Report deserialize_report(std::span<const std::uint8_t> bytes, int dim) {
  if (dim != 1 && dim != 2) throw UsageError("report dimension must be 1 or 2");
  if (bytes.size() < kWireHeaderBytes) throw WireFormatError(WireError::kTruncated, "report shorter than its header");
  if ((bytes[0] | bytes[1] << 8) != kWireMagic) throw WireFormatError(WireError::kBadMagic, "bad report magic");
  if (bytes[2] != kWireVersion) {
    throw WireFormatError(WireError::kVersionMismatch, "unsupported report version " + std::to_string(bytes[2]));
  }
  if (bytes[3] > 2) throw WireFormatError(WireError::kBadKind, "unknown report kind " + std::to_string(bytes[3]));
  Report r;
  r.dim = dim;
  r.kind = static_cast<ReportKind>(bytes[3]);
  r.point_id = get_u32(bytes, 4);
  r.observed_count = get_u32(bytes, 8);
  const std::uint64_t count = get_u32(bytes, 12);
  const bool agg = r.kind == ReportKind::kAggregation;
  const std::uint64_t entry = 4 * static_cast<std::uint64_t>(dim) + (agg ? 4 : 0);
  const std::uint64_t need = kWireHeaderBytes + count * entry;
  if (bytes.size() < need) throw WireFormatError(WireError::kTruncated, "report body truncated");
  if (bytes.size() > need) throw WireFormatError(WireError::kTrailingBytes, "trailing bytes after report body");
  std::size_t at = kWireHeaderBytes;
  for (std::uint64_t i = 0; i < count; ++i, at += entry) {
    const FlowKey key = get_key(bytes, at, dim);
    if (agg) {
      r.snapshot.emplace_back(key, get_u32(bytes, at + entry - 4));
    } else {
      r.samples.push_back(key);
    }
  }
  return r;
}

void validate_report(const Report& r) {
  auto bad = [](const std::string& why) { throw WireFormatError(WireError::kInvalidReport, why); };
  if (r.kind == ReportKind::kAggregation) {
    if (!r.samples.empty()) bad("aggregation report carrying samples");
    std::uint64_t total = 0;
    for (const auto& [key, c] : r.snapshot) {
      if (key.dim() != r.dim) bad("key dimension differs from report dimension");
      total += c;
    }
    if (total != r.observed_count) bad("aggregation counts do not add up to observedCount");
    return;
  }
  if (!r.snapshot.empty()) bad("sampling report carrying a snapshot");
  if (r.samples.empty()) bad("sampling report without samples");
  if (r.observed_count < r.samples.size()) bad("observedCount smaller than the number of samples");
  for (const auto& key : r.samples) {
    if (key.dim() != r.dim) bad("key dimension differs from report dimension");
  }
}

double CostModel::cost(const Report& r) const {
  if (r.kind == ReportKind::kAggregation) return overhead_bytes + entry_bytes() * static_cast<double>(r.snapshot.size());
  return overhead_bytes + sample_bytes * static_cast<double>(r.samples.size());
}

const char* to_string(Method m) {
  switch (m) {
    case Method::kSample: return "Sample";
    case Method::kBatch: return "Batch";
    case Method::kAggregation: return "Aggregation";
  }
  return "?";
}

double budget_tau(double budget, const CostModel& cost, std::uint64_t batch) {
  const double b = static_cast<double>(batch);
  return std::min(1.0, budget * b / (cost.overhead_bytes + cost.sample_bytes * b));
}

MeasurementPoint::MeasurementPoint(const PointConfig& cfg) : cfg_(cfg), rng_(splitmix64(cfg.seed ^ 0x506F696E74ULL)) {
  if (cfg_.method == Method::kSample) cfg_.batch = 1;
  if (!(cfg_.tau > 0.0) || cfg_.tau > 1.0) throw ConfigError("point sampling probability must lie in (0, 1]");
  if (cfg_.batch < 1) throw ConfigError("batch size must be at least 1");
  if (!(cfg_.budget > 0.0)) throw ConfigError("bandwidth budget must be positive");
  if (!(cfg_.cost.overhead_bytes >= 0.0) || !(cfg_.cost.sample_bytes > 0.0)) {
    throw ConfigError("message cost parameters must be positive");
  }
  if (cfg_.dim != 1 && cfg_.dim != 2) throw ConfigError("dimension must be 1 or 2");
  threshold_ = tau_threshold(cfg_.tau, always_);
  period_ = std::max(cfg_.batch, ceil_tolerant(static_cast<double>(cfg_.batch) / cfg_.tau));
}

std::optional<Report> MeasurementPoint::observe(const FlowKey& key) {
  earned_ += cfg_.budget;
  ++observed_;
  return cfg_.method == Method::kAggregation ? observe_aggregation(key) : observe_sampling(key);
}

std::optional<Report> MeasurementPoint::observe_sampling(const FlowKey& key) {
  const std::uint64_t word = rng_();
  if (!waiting_) {
    if (cfg_.cadence == Cadence::kPeriodic) {
      // selection sampling: exactly `batch` of the `period_` packets
      const std::uint64_t need = cfg_.batch - pending_.size();
      const std::uint64_t left = period_ - in_period_;
      if (need > 0 && reduce_range(word, left) < need) pending_.push_back(key);
      if (++in_period_ == period_) {
        in_period_ = 0;
        waiting_ = true;
      }
    } else {
      if (always_ || word < threshold_) pending_.push_back(key);
      if (pending_.size() == cfg_.batch) waiting_ = true;
    }
  }
  if (!waiting_) return std::nullopt;

  Report r;
  r.point_id = cfg_.point_id;
  r.kind = cfg_.method == Method::kSample ? ReportKind::kSample : ReportKind::kBatch;
  r.dim = cfg_.dim;
  const double cost = cfg_.cost.overhead_bytes + cfg_.cost.sample_bytes * static_cast<double>(pending_.size());
  if (!affordable(cost)) {
    if (!deferring_) ++deferred_;
    deferring_ = true;
    return std::nullopt;
  }
  r.samples = std::move(pending_);
  pending_.clear();
  return emit(std::move(r));
}

std::optional<Report> MeasurementPoint::observe_aggregation(const FlowKey& key) {
  auto [it, fresh] = table_index_.try_emplace(key, table_.size());
  if (fresh) {
    table_.emplace_back(key, 1);
  } else {
    ++table_[it->second].second;
  }
  const double cost = cfg_.cost.overhead_bytes + cfg_.cost.entry_bytes() * static_cast<double>(table_.size());
  if (!affordable(cost)) return std::nullopt;
  Report r;
  r.point_id = cfg_.point_id;
  r.kind = ReportKind::kAggregation;
  r.dim = cfg_.dim;
  r.snapshot = std::move(table_);
  table_.clear();
  table_index_.clear();
  return emit(std::move(r));
}

Report MeasurementPoint::emit(Report r) {
  r.observed_count = static_cast<std::uint32_t>(observed_);
  spent_ += cfg_.cost.cost(r);
  worst_overdraft_ = std::max(worst_overdraft_, spent_ - earned_);
  observed_ = 0;
  waiting_ = false;
  deferring_ = false;
  ++reports_;
  return r;
}

Controller::Controller(const ControllerConfig& cfg) : cfg_(cfg) {
  if (cfg_.dim != 1 && cfg_.dim != 2) throw ConfigError("dimension must be 1 or 2");
  if (cfg_.window == 0) throw ConfigError("window must be positive");
  switch (cfg_.mode) {
    case ControllerMode::kHH:
      hh_ = std::make_unique<MementoSketch<FlowKey>>(
          MementoParams{cfg_.window, counters_for_error(cfg_.eps_a), cfg_.tau, cfg_.seed, OverflowUnit::kSamples});
      break;
    case ControllerMode::kHHH: {
      HHHConfig h;
      h.window = cfg_.window;
      h.eps_a = cfg_.eps_a;
      h.delta = cfg_.delta;
      h.theta = cfg_.theta;
      h.hier = HierarchyDef::for_dim(cfg_.dim);
      h.tau_full = cfg_.tau;
      h.presampled = true;
      h.seed = cfg_.seed;
      const double eps_s = planner::eps_s_for_tau(static_cast<double>(cfg_.window), cfg_.tau, cfg_.delta, h.hier.size);
      h.eps_s = std::min(eps_s, 0.999);
      h.guarantee_void = eps_s >= 0.999;
      hhh_ = std::make_unique<HHHState>(h);
      break;
    }
    case ControllerMode::kExact:
      break;
  }
}

void Controller::ingest(const Report& r) {
  try {
    validate_report(r);
    if (r.dim != cfg_.dim) throw WireFormatError(WireError::kInvalidReport, "report dimension mismatch");
    const bool agg = r.kind == ReportKind::kAggregation;
    if (agg != (cfg_.mode == ControllerMode::kExact)) {
      throw WireFormatError(WireError::kInvalidReport, "report kind does not match controller mode");
    }
  } catch (const WireFormatError&) {
    ++rejected_;
    throw;
  }
  packets_ += r.observed_count;
  ++generation_;
  if (cfg_.mode == ControllerMode::kExact) {
    ingest_exact(r);
    return;
  }
  const std::uint64_t rest = r.observed_count - r.samples.size();
  if (hh_) {
    for (const auto& key : r.samples) hh_->full_update(key);
    for (std::uint64_t i = 0; i < rest; ++i) hh_->window_update();
  } else {
    for (const auto& key : r.samples) hhh_->ingest_sample(key);
    for (std::uint64_t i = 0; i < rest; ++i) hhh_->advance();
  }
}

bool Controller::ingest_bytes(std::span<const std::uint8_t> bytes) {
  Report r;
  try {
    r = deserialize_report(bytes, cfg_.dim);
  } catch (const WireFormatError&) {
    ++rejected_;
    return false;
  }
  try {
    ingest(r);
  } catch (const WireFormatError&) {
    return false;
  }
  return true;
}

void Controller::ingest_exact(const Report& r) {
  chunks_.push_back(Chunk{r.snapshot, r.observed_count});
  chunk_packets_ += r.observed_count;
  while (!chunks_.empty() && chunk_packets_ - chunks_.front().packets >= cfg_.window) {
    chunk_packets_ -= chunks_.front().packets;
    chunks_.pop_front();
  }
}

namespace {

// Weight of each chunk: the oldest one may straddle the window edge and is
// scaled by the fraction of its packets still inside.
template <class Chunks>
std::vector<double> chunk_weights(const Chunks& chunks, std::uint64_t total, std::uint64_t window) {
  std::vector<double> w(chunks.size(), 1.0);
  if (!chunks.empty() && total > window) {
    const double outside = static_cast<double>(total - window);
    w[0] = 1.0 - outside / static_cast<double>(chunks.front().packets);
  }
  return w;
}

}  // namespace

double Controller::query(const FlowKey& key) const {
  if (hh_) return hh_->query(key);
  if (cfg_.mode != ControllerMode::kExact) throw UsageError("query() needs an HH or exact controller");
  const auto w = chunk_weights(chunks_, chunk_packets_, cfg_.window);
  double sum = 0;
  for (std::size_t i = 0; i < chunks_.size(); ++i) {
    for (const auto& [k, c] : chunks_[i].counts) {
      if (k == key) sum += w[i] * c;
    }
  }
  return sum;
}

std::vector<HHHEntry> Controller::hhh_entries(double theta) const {
  if (!hhh_) throw UsageError("hhh_entries() needs an HHH controller");
  return hhh_->output(theta);
}

std::vector<Prefix> Controller::hhh(double theta) const {
  std::vector<Prefix> out;
  if (hhh_) {
    for (const auto& e : hhh_->output(theta)) out.push_back(e.prefix);
    return out;
  }
  if (cfg_.mode != ControllerMode::kExact) throw UsageError("hhh() needs an HHH or exact controller");
  const auto w = chunk_weights(chunks_, chunk_packets_, cfg_.window);
  std::unordered_map<FlowKey, double> merged;
  for (std::size_t i = 0; i < chunks_.size(); ++i) {
    for (const auto& [k, c] : chunks_[i].counts) merged[k] += w[i] * c;
  }
  WeightedCounts counts(merged.begin(), merged.end());
  return exact_hhh(counts, theta * static_cast<double>(cfg_.window), HierarchyDef::for_dim(cfg_.dim));
}

NetworkSimulator::NetworkSimulator(const SimConfig& cfg, const ControllerConfig& controller)
    : cfg_(cfg), controller_(controller), route_rng_(splitmix64(cfg.seed ^ 0x526F757465ULL)) {
  if (cfg_.points == 0) throw ConfigError("at least one measurement point required");
  points_.reserve(cfg_.points);
  for (std::uint32_t i = 0; i < cfg_.points; ++i) {
    PointConfig p;
    p.point_id = i;
    p.method = cfg_.method;
    p.tau = cfg_.tau;
    p.batch = cfg_.batch;
    p.budget = cfg_.budget;
    p.cost = cfg_.cost;
    p.cadence = cfg_.cadence;
    p.dim = cfg_.dim;
    p.seed = splitmix64(cfg_.seed + i + 1);
    points_.emplace_back(p);
  }
  std::vector<double> weights;
  for (std::uint32_t i = 0; i < cfg_.points; ++i) weights.push_back(1.0 / (i + 1));
  skew_ = std::discrete_distribution<std::uint32_t>(weights.begin(), weights.end());
}

bool NetworkSimulator::step(const FlowKey& key) {
  const std::uint32_t at = cfg_.assignment == Assignment::kRoundRobin
                               ? static_cast<std::uint32_t>(packets_ % cfg_.points)
                               : skew_(route_rng_);
  ++packets_;
  ++unreported_;
  auto report = points_[at].observe(key);
  bool delivered = false;
  if (report) {
    unreported_ -= report->observed_count;
    delivered = controller_.ingest_bytes(serialize_report(*report));
  }
  max_unreported_ = std::max(max_unreported_, unreported_);
  return delivered;
}

double NetworkSimulator::bytes_spent() const {
  double s = 0;
  for (const auto& p : points_) s += p.spent();
  return s;
}

bool NetworkSimulator::budget_respected() const {
  return std::all_of(points_.begin(), points_.end(), [](const MeasurementPoint& p) {
    return p.worst_overdraft() <= 1e-9 * std::max(1.0, p.spent());
  });
}

double NetworkSimulator::staleness_bound() const {
  if (cfg_.method == Method::kAggregation) return std::numeric_limits<double>::infinity();
  const double b = cfg_.method == Method::kSample ? 1.0 : static_cast<double>(cfg_.batch);
  return cfg_.points * b / cfg_.tau;
}

}  // namespace memento
