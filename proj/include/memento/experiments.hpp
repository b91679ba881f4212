#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "memento/hhh.hpp"
#include "memento/netwide.hpp"
#include "memento/oracle.hpp"
#include "memento/parallel.hpp"
#include "memento/trace.hpp"

namespace memento {

struct ErrorStats {
  std::uint64_t queries = 0;
  double rmse = 0;
  double min_error = 0;  // signed, estimate - exact
  double max_error = 0;
  double p50_abs = 0;
  double p90_abs = 0;
  double p99_abs = 0;
  std::uint64_t over_bound = 0;  // |error| > bound
};

namespace detail {
ErrorStats summarize(std::vector<float>& abs_errors, double sum_sq, double lo, double hi, std::uint64_t over);
}

/// Every packet queries its own key before the update is applied; errors are
/// measured against the exact count of the window that ends just before it.
template <class Query, class Update>
ErrorStats on_arrival(std::span<const FlowKey> stream, std::uint64_t window, Query&& query, Update&& update,
                      double bound = std::numeric_limits<double>::infinity()) {
  WindowCounter exact(window);
  std::vector<float> abs_errors;
  abs_errors.reserve(stream.size());
  double sum_sq = 0;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  std::uint64_t over = 0;
  for (const FlowKey& key : stream) {
    const double err = query(key) - static_cast<double>(exact.count(key));
    sum_sq += err * err;
    lo = std::min(lo, err);
    hi = std::max(hi, err);
    if (std::abs(err) > bound) ++over;
    abs_errors.push_back(static_cast<float>(std::abs(err)));
    update(key);
    exact.push(key);
  }
  return detail::summarize(abs_errors, sum_sq, lo, hi, over);
}

/// On-arrival RMSE (and friends) of anything with query(key) / update(key).
template <class Sketch>
ErrorStats rmse_on_arrival(Sketch& sketch, std::span<const FlowKey> stream, std::uint64_t window,
                           double bound = std::numeric_limits<double>::infinity()) {
  return on_arrival(
      stream, window, [&](const FlowKey& k) { return sketch.query(k); },
      [&](const FlowKey& k) { sketch.update(k); }, bound);
}

struct AccuracyCell {
  double tau = 1.0;
  std::uint64_t counters = 0;
  std::uint64_t seed = 0;
  ErrorStats stats;
};

/// rmse_on_arrival of Memento over the (tau x counters x seeds) grid.
std::vector<AccuracyCell> accuracy_grid(std::span<const FlowKey> stream, std::uint64_t window,
                                        const std::vector<double>& taus, const std::vector<std::uint64_t>& counters,
                                        const std::vector<std::uint64_t>& seeds, Execution ex = Execution::kParallel);

struct Throughput {
  std::uint64_t updates = 0;
  double seconds = 0;  // best repetition
  double updates_per_sec = 0;
};

Throughput memento_throughput(std::span<const FlowKey> stream, std::uint64_t window, std::uint64_t counters,
                              double tau, int reps = 3, std::uint64_t seed = 1);
Throughput hmemento_throughput(std::span<const FlowKey> stream, const HHHConfig& cfg, int reps = 3);
Throughput level_sketches_throughput(std::span<const FlowKey> stream, HierarchyDef hier, std::uint64_t window,
                                     std::uint64_t counters, int reps = 3);

enum class DetectMethod { kWindow, kInterval, kImprovedInterval };
const char* to_string(DetectMethod m);

/// Packets from the start of a new flow of rate ratio * theta until it is
/// detected. The flow starts `phase` packets into the second interval
/// (phase in [0, W)). Counts are exact; other traffic only fills the
/// remaining slots and never changes the new flow's counts.
std::uint64_t detection_delay(DetectMethod m, double ratio, double theta, std::uint64_t window, std::uint64_t phase);

struct DetectionSpec {
  double theta = 0.01;
  std::uint64_t window = 10'000;
  int phases = 50;
  std::uint64_t seed = 1;
};

/// Mean detection delay in windows over uniformly random phases.
double detection_experiment(DetectMethod m, double ratio, const DetectionSpec& spec);

struct FloodConfig {
  std::uint64_t window = 100'000;
  double theta = 0.01;
  double eps_a = 0.01;
  double delta = 0.05;
  double budget = 1.0;
  std::uint32_t points = 10;
  CostModel cost;
  std::uint64_t check_every = 250;  // controller HHH output cadence (packets)
  std::uint64_t batch = 0;          // 0: planner optimum
  double delta_s = 1e-4;
  std::uint64_t seed = 1;
};

struct MethodOutcome {
  std::string method;
  std::uint64_t batch = 0;
  double tau = 1.0;
  double missed_fraction = 0;
  std::vector<std::int64_t> delays;  // per subnet, packets after flood start; -1 if never detected
  std::uint64_t detected = 0;
  double median_delay = 0;  // undetected subnets count as the remaining trace length
  double bytes_per_packet = 0;
  std::uint64_t reports = 0;
  std::uint64_t max_unreported = 0;
  double staleness_bound = 0;
};

/// OPT (exact window, zero delay), then Sample, Batch and Aggregation.
std::vector<MethodOutcome> flood_experiment(const FloodTrace& trace, const FloodConfig& cfg);

double median(std::vector<double> v);

}  // namespace memento
