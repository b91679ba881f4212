#include "memento/experiments.hpp"

#include <random>
#include <unordered_map>
#include <unordered_set>

#include "memento/planner.hpp"

namespace memento {
namespace detail {

ErrorStats summarize(std::vector<float>& abs_errors, double sum_sq, double lo, double hi, std::uint64_t over) {
  ErrorStats s;
  s.queries = abs_errors.size();
  if (abs_errors.empty()) return s;
  s.rmse = std::sqrt(sum_sq / static_cast<double>(abs_errors.size()));
  s.min_error = lo;
  s.max_error = hi;
  s.over_bound = over;
  auto quantile = [&](double q) {
    const auto at = static_cast<std::size_t>(q * static_cast<double>(abs_errors.size() - 1));
    std::nth_element(abs_errors.begin(), abs_errors.begin() + static_cast<std::ptrdiff_t>(at), abs_errors.end());
    return static_cast<double>(abs_errors[at]);
  };
  s.p50_abs = quantile(0.5);
  s.p90_abs = quantile(0.9);
  s.p99_abs = quantile(0.99);
  return s;
}

}  // namespace detail

namespace {

using Clock = std::chrono::steady_clock;

template <class Run>
Throughput time_best(std::uint64_t updates, int reps, Run&& run) {
  Throughput t;
  t.updates = updates;
  t.seconds = std::numeric_limits<double>::infinity();
  for (int r = 0; r < std::max(1, reps); ++r) {
    const auto begin = Clock::now();
    run();
    t.seconds = std::min(t.seconds, std::chrono::duration<double>(Clock::now() - begin).count());
  }
  t.updates_per_sec = static_cast<double>(updates) / t.seconds;
  return t;
}

volatile double g_sink = 0;

}  // namespace

std::vector<AccuracyCell> accuracy_grid(std::span<const FlowKey> stream, std::uint64_t window,
                                        const std::vector<double>& taus, const std::vector<std::uint64_t>& counters,
                                        const std::vector<std::uint64_t>& seeds, Execution ex) {
  const auto cells = static_cast<std::int64_t>(taus.size() * counters.size() * seeds.size());
  return run_cells(
      cells,
      [&](std::int64_t i) {
        const auto idx = static_cast<std::size_t>(i);
        AccuracyCell cell;
        cell.seed = seeds[idx % seeds.size()];
        cell.counters = counters[(idx / seeds.size()) % counters.size()];
        cell.tau = taus[idx / (seeds.size() * counters.size())];
        MementoSketch<FlowKey> sketch(MementoParams{window, cell.counters, cell.tau, cell.seed});
        cell.stats = rmse_on_arrival(sketch, stream, window);
        return cell;
      },
      ex);
}

Throughput memento_throughput(std::span<const FlowKey> stream, std::uint64_t window, std::uint64_t counters,
                              double tau, int reps, std::uint64_t seed) {
  return time_best(stream.size(), reps, [&] {
    MementoSketch<FlowKey> sketch(MementoParams{window, counters, tau, seed});
    for (const auto& key : stream) sketch.update(key);
    g_sink = g_sink + sketch.query(stream.front());
  });
}

Throughput hmemento_throughput(std::span<const FlowKey> stream, const HHHConfig& cfg, int reps) {
  return time_best(stream.size(), reps, [&] {
    HHHState state(cfg);
    for (const auto& key : stream) state.update(key);
    g_sink = g_sink + state.f_upper(Prefix::of(stream.front()));
  });
}

Throughput level_sketches_throughput(std::span<const FlowKey> stream, HierarchyDef hier, std::uint64_t window,
                                     std::uint64_t counters, int reps) {
  return time_best(stream.size(), reps, [&] {
    LevelSketches sketches(hier, window, counters);
    for (const auto& key : stream) sketches.update(key);
    g_sink = g_sink + sketches.query(Prefix::of(stream.front()));
  });
}

const char* to_string(DetectMethod m) {
  switch (m) {
    case DetectMethod::kWindow: return "Window";
    case DetectMethod::kInterval: return "Interval";
    case DetectMethod::kImprovedInterval: return "ImprovedInterval";
  }
  return "?";
}

std::uint64_t detection_delay(DetectMethod m, double ratio, double theta, std::uint64_t window, std::uint64_t phase) {
  if (!(ratio > 1.0) || !(theta > 0.0) || ratio * theta > 1.0) {
    throw ConfigError("detection needs ratio > 1 and ratio * theta <= 1");
  }
  if (phase >= window) throw ConfigError("phase must lie in [0, W)");
  const double rate = ratio * theta;
  const double need = theta * static_cast<double>(window);
  // flow packets among its first j slots (evenly spread)
  auto sent = [&](std::uint64_t j) { return std::floor(static_cast<double>(j) * rate + 1e-9); };
  const std::uint64_t start = window + phase;
  for (std::uint64_t t = start;; ++t) {
    const std::uint64_t j = t - start + 1;
    double count = 0;
    bool check = true;
    switch (m) {
      case DetectMethod::kWindow: {
        const std::uint64_t outside = t + 1 > window + start ? t + 1 - window - start : 0;
        count = sent(j) - sent(outside);
        break;
      }
      case DetectMethod::kInterval:
      case DetectMethod::kImprovedInterval: {
        const std::uint64_t interval_start = (t / window) * window;
        const std::uint64_t before = interval_start > start ? interval_start - start : 0;
        count = sent(j) - sent(before);
        check = m == DetectMethod::kImprovedInterval || (t + 1) % window == 0;
        break;
      }
    }
    if (check && count >= need - 1e-9) return j;
    if (j > 10 * window) throw ConfigError("flow never detected");
  }
}

double detection_experiment(DetectMethod m, double ratio, const DetectionSpec& spec) {
  std::mt19937_64 rng(spec.seed);
  double total = 0;
  for (int i = 0; i < spec.phases; ++i) {
    const std::uint64_t phase = reduce_range(rng(), spec.window);
    total += static_cast<double>(detection_delay(m, ratio, spec.theta, spec.window, phase));
  }
  return total / spec.phases / static_cast<double>(spec.window);
}

double median(std::vector<double> v) {
  if (v.empty()) return 0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

namespace {

struct SubnetIndex {
  explicit SubnetIndex(const std::vector<Prefix>& subnets) {
    for (std::size_t i = 0; i < subnets.size(); ++i) {
      bits = subnets[i].src_bits();
      index.emplace(subnets[i], static_cast<int>(i));
    }
  }
  int of(const FlowKey& key) const {
    auto it = index.find(Prefix::one_d(key.src(), bits));
    return it == index.end() ? -1 : it->second;
  }
  int bits = 8;
  std::unordered_map<Prefix, int> index;
};

void finish(MethodOutcome& out, const FloodTrace& trace, std::uint64_t flood_packets, std::uint64_t missed) {
  out.missed_fraction = flood_packets ? static_cast<double>(missed) / static_cast<double>(flood_packets) : 0.0;
  const auto censored = static_cast<double>(trace.records.size() - trace.start);
  std::vector<double> d;
  out.detected = 0;
  for (auto delay : out.delays) {
    if (delay >= 0) ++out.detected;
    d.push_back(delay >= 0 ? static_cast<double>(delay) : censored);
  }
  out.median_delay = median(d);
}

MethodOutcome run_opt(const FloodTrace& trace, const FloodConfig& cfg, const SubnetIndex& subnets) {
  MethodOutcome out;
  out.method = "OPT";
  out.delays.assign(trace.subnets.size(), -1);
  std::vector<std::uint64_t> counts(trace.subnets.size(), 0);
  std::vector<int> idx(trace.records.size());
  const double need = cfg.theta * static_cast<double>(cfg.window);
  std::uint64_t flood = 0;
  std::uint64_t missed = 0;
  for (std::size_t t = 0; t < trace.records.size(); ++t) {
    const auto& rec = trace.records[t];
    idx[t] = subnets.of(rec.key);
    if (rec.flood) {
      ++flood;
      if (idx[t] >= 0 && out.delays[static_cast<std::size_t>(idx[t])] < 0) ++missed;
    }
    if (idx[t] >= 0) ++counts[static_cast<std::size_t>(idx[t])];
    if (t >= cfg.window && idx[t - cfg.window] >= 0) --counts[static_cast<std::size_t>(idx[t - cfg.window])];
    if (t < trace.start) continue;
    for (std::size_t s = 0; s < counts.size(); ++s) {
      if (out.delays[s] < 0 && static_cast<double>(counts[s]) >= need) {
        out.delays[s] = static_cast<std::int64_t>(t - trace.start);
      }
    }
  }
  finish(out, trace, flood, missed);
  return out;
}

MethodOutcome run_method(const FloodTrace& trace, const FloodConfig& cfg, const SubnetIndex& subnets, Method method,
                         std::uint64_t batch, double tau) {
  MethodOutcome out;
  out.method = to_string(method);
  out.batch = batch;
  out.tau = tau;
  out.delays.assign(trace.subnets.size(), -1);

  SimConfig sim;
  sim.points = cfg.points;
  sim.method = method;
  sim.tau = tau;
  sim.batch = std::max<std::uint64_t>(1, batch);
  sim.budget = cfg.budget;
  sim.cost = cfg.cost;
  sim.seed = cfg.seed;
  ControllerConfig cc;
  cc.mode = method == Method::kAggregation ? ControllerMode::kExact : ControllerMode::kHHH;
  cc.window = cfg.window;
  cc.eps_a = cfg.eps_a;
  cc.tau = tau;
  cc.delta = cfg.delta;
  cc.theta = cfg.theta;
  cc.seed = splitmix64(cfg.seed ^ 0xC0DEULL);
  NetworkSimulator net(sim, cc);

  std::uint64_t flood = 0;
  std::uint64_t missed = 0;
  std::uint64_t seen_generation = 0;
  std::size_t undetected = trace.subnets.size();
  for (std::size_t t = 0; t < trace.records.size(); ++t) {
    const auto& rec = trace.records[t];
    if (rec.flood) {
      ++flood;
      const int s = subnets.of(rec.key);
      if (s >= 0 && out.delays[static_cast<std::size_t>(s)] < 0) ++missed;
    }
    net.step(rec.key);
    if (t < trace.start || undetected == 0) continue;
    if ((t - trace.start) % cfg.check_every != 0) continue;
    if (net.controller().generation() == seen_generation) continue;
    seen_generation = net.controller().generation();
    const auto output = net.controller().hhh(cfg.theta);
    const std::unordered_set<Prefix> present(output.begin(), output.end());
    for (std::size_t s = 0; s < trace.subnets.size(); ++s) {
      if (out.delays[s] < 0 && present.count(trace.subnets[s])) {
        out.delays[s] = static_cast<std::int64_t>(t - trace.start);
        --undetected;
      }
    }
  }
  out.bytes_per_packet = net.bytes_spent() / static_cast<double>(std::max<std::uint64_t>(1, net.packets()));
  for (const auto& p : net.points()) out.reports += p.reports();
  out.max_unreported = net.max_unreported();
  out.staleness_bound = net.staleness_bound();
  finish(out, trace, flood, missed);
  return out;
}

}  // namespace

std::vector<MethodOutcome> flood_experiment(const FloodTrace& trace, const FloodConfig& cfg) {
  if (trace.records.empty() || trace.records.front().key.dim() != 1) {
    throw ConfigError("flood experiment expects a non-empty 1-D trace");
  }
  if (cfg.check_every == 0) throw ConfigError("check interval must be positive");
  const SubnetIndex subnets(trace.subnets);

  planner::DeploymentParams dp;
  dp.points = cfg.points;
  dp.overhead_bytes = cfg.cost.overhead_bytes;
  dp.sample_bytes = cfg.cost.sample_bytes;
  dp.budget = cfg.budget;
  dp.window = static_cast<double>(cfg.window);
  dp.hierarchy_size = 5;
  dp.delta_s = cfg.delta_s;
  const std::uint64_t b = cfg.batch ? cfg.batch : planner::optimal_batch(dp).batch;

  std::vector<MethodOutcome> out;
  out.push_back(run_opt(trace, cfg, subnets));
  out.push_back(run_method(trace, cfg, subnets, Method::kSample, 1, budget_tau(cfg.budget, cfg.cost, 1)));
  out.push_back(run_method(trace, cfg, subnets, Method::kBatch, b, budget_tau(cfg.budget, cfg.cost, b)));
  out.push_back(run_method(trace, cfg, subnets, Method::kAggregation, 0, 1.0));
  return out;
}

}  // namespace memento
