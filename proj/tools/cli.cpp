#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <memory>
#include <optional>

#include "memento/acceptance.hpp"
#include "memento/experiments.hpp"
#include "memento/planner.hpp"

namespace memento::cli {
namespace {

using json = nlohmann::ordered_json;

struct RunConfig {
  std::uint64_t window = 0;
  double eps_a = 0.01;
  double eps_s = 0.02;
  double delta = 0.05;
  double theta = 0.01;
  std::string tau = "1";  // number or "auto"
  int dim = 1;
  double budget = 1;
  double overhead = 64;
  double sample_bytes = 4;
  std::uint32_t points = 10;
  std::string batch = "auto";  // number or "auto"
  std::uint64_t seed = 1;
  std::string trace;
  std::string out;

  // generator / grid knobs
  std::uint64_t packets = 0;
  std::uint64_t flows = 0;
  double alpha = 1.0;
  std::string kind = "zipf";
  std::vector<double> taus;
  std::vector<std::uint64_t> counters;
  std::vector<double> ratios{1.1, 1.5, 2, 3, 5};
  int seeds = 1;
  int phases = 50;
  int reps = 3;
  int subnets = 50;
  double flood_prob = 0.7;
  std::uint64_t max_batch = 200;
  bool serial = false;
  bool check = false;
  std::vector<int> criteria;
};

std::optional<double> parse_number(const std::string& s) {
  double v = 0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) return std::nullopt;
  return v;
}

// Writes JSON lines to --out or the given stream.
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) : os_(&fallback) {
    if (!path.empty()) {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) throw IoError("cannot open " + path + " for writing");
      os_ = file_.get();
    }
  }
  void line(const json& j) {
    *os_ << j.dump() << '\n';
    if (!*os_) throw IoError("write failed");
  }

 private:
  std::ostream* os_;
  std::unique_ptr<std::ofstream> file_;
};

std::uint64_t or_default(std::uint64_t v, std::uint64_t dflt) { return v ? v : dflt; }

std::vector<FlowKey> load_or_zipf(const RunConfig& c, std::uint64_t default_packets, std::uint64_t default_flows) {
  if (!c.trace.empty()) {
    auto keys = keys_of(load_trace(c.trace, c.dim));
    if (keys.empty()) throw ConfigError("trace " + c.trace + " is empty");
    return keys;
  }
  return keys_of(gen_zipf_trace({or_default(c.packets, default_packets), or_default(c.flows, default_flows),
                                 c.alpha, c.seed, c.dim}));
}

json budget_json(const planner::ErrorBudget& e) {
  return {{"batch", e.batch},           {"tau", e.tau},
          {"tauClamped", e.tau_clamped}, {"delayError", e.delay_error},
          {"samplingError", e.sampling_error}, {"totalError", e.total_error}};
}

planner::DeploymentParams deployment(const RunConfig& c, double window, double delta_s) {
  planner::DeploymentParams p;
  p.points = c.points;
  p.overhead_bytes = c.overhead;
  p.sample_bytes = c.sample_bytes;
  p.budget = c.budget;
  p.window = window;
  p.hierarchy_size = HierarchyDef::for_dim(c.dim).size;
  p.delta_s = delta_s;
  return p;
}

std::optional<std::uint64_t> fixed_batch(const RunConfig& c) {
  if (c.batch == "auto") return std::nullopt;
  const auto v = parse_number(c.batch);
  if (!v || *v < 1 || *v != std::floor(*v)) throw ConfigError("--batch must be a positive integer or auto");
  return static_cast<std::uint64_t>(*v);
}

void cmd_plan(RunConfig c, bool delta_given, Sink& sink) {
  const double window = static_cast<double>(or_default(c.window, 1'000'000));
  const double delta_s = delta_given ? c.delta : 1e-4;
  const auto p = deployment(c, window, delta_s);
  planner::validate(p);
  const auto fixed = fixed_batch(c);
  sink.line({{"kind", "config"}, {"command", "plan"}, {"window", window}, {"points", c.points},
             {"overhead", c.overhead}, {"sampleBytes", c.sample_bytes}, {"budget", c.budget},
             {"H", p.hierarchy_size}, {"delta", delta_s}, {"batch", fixed ? json(*fixed) : json("auto")}});
  for (const auto& e : planner::error_curve(p, c.max_batch)) {
    json j = budget_json(e);
    j["kind"] = "curve";
    sink.line(j);
  }
  const auto best = fixed ? planner::error_bound(*fixed, p) : planner::optimal_batch(p);
  json j = {{"kind", fixed ? "selected" : "optimum"}};
  j.update(budget_json(best));
  j["errorFraction"] = best.total_error / window;
  sink.line(j);
}

std::vector<double> resolve_taus(const RunConfig& c, std::uint64_t window) {
  if (!c.taus.empty()) return c.taus;
  if (c.tau == "auto") return {planner::min_tau_hh(static_cast<double>(window), c.eps_s, c.delta).tau};
  const auto v = parse_number(c.tau);
  if (!v) throw ConfigError("--tau must be a number or auto");
  return {*v};
}

void cmd_accuracy(const RunConfig& c, Sink& sink) {
  const std::uint64_t window = or_default(c.window, 100'000);
  const auto taus = resolve_taus(c, window);
  auto counters = c.counters;
  if (counters.empty()) counters.push_back(counters_for_error(c.eps_a));
  if (c.seeds < 1) throw ConfigError("--seeds must be at least 1");
  const auto stream = load_or_zipf(c, 500'000, 10'000);
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < c.seeds; ++i) seeds.push_back(c.seed + static_cast<std::uint64_t>(i));
  sink.line({{"kind", "config"}, {"command", "accuracy"}, {"window", window}, {"packets", stream.size()},
             {"taus", taus}, {"counters", counters}, {"seeds", seeds}});
  for (const auto& cell : accuracy_grid(stream, window, taus, counters, seeds,
                                        c.serial ? Execution::kSerial : Execution::kParallel)) {
    const auto& s = cell.stats;
    sink.line({{"kind", "cell"}, {"tau", cell.tau}, {"counters", cell.counters}, {"seed", cell.seed},
               {"queries", s.queries}, {"rmse", s.rmse}, {"minError", s.min_error}, {"maxError", s.max_error},
               {"p50", s.p50_abs}, {"p90", s.p90_abs}, {"p99", s.p99_abs}});
  }
}

void cmd_bench(const RunConfig& c, Sink& sink) {
  std::vector<double> taus = c.taus;
  if (taus.empty()) {
    if (c.tau != "1") {
      taus = resolve_taus(c, or_default(c.window, 100'000));
    } else {
      for (int e = 0; e <= 10; e += 2) taus.push_back(std::ldexp(1.0, -e));
    }
  }
  auto counters = c.counters;
  if (counters.empty()) counters.push_back(4096);
  const auto stream = load_or_zipf(c, 2'000'000, 100'000);
  sink.line({{"kind", "config"}, {"command", "bench"}, {"packets", stream.size()}, {"taus", taus},
             {"counters", counters}, {"reps", c.reps}});
  for (const auto k : counters) {
    const std::uint64_t window = c.window ? c.window : 64 * k;
    double base = 0;
    for (const double tau : taus) {
      const auto t = memento_throughput(stream, window, k, tau, c.reps, c.seed);
      if (tau == 1.0) base = t.updates_per_sec;
      json j = {{"kind", "throughput"}, {"tau", tau}, {"counters", k}, {"window", window},
                {"updates", t.updates}, {"seconds", t.seconds}, {"updatesPerSec", t.updates_per_sec}};
      if (base > 0) j["speedupVsTau1"] = t.updates_per_sec / base;
      sink.line(j);
    }
  }
}

void cmd_detect(const RunConfig& c, Sink& sink) {
  DetectionSpec spec;
  spec.theta = c.theta;
  spec.window = or_default(c.window, 10'000);
  spec.phases = c.phases;
  spec.seed = c.seed;
  if (spec.phases < 1) throw ConfigError("--phases must be at least 1");
  sink.line({{"kind", "config"}, {"command", "detect"}, {"window", spec.window}, {"theta", spec.theta},
             {"phases", spec.phases}, {"ratios", c.ratios}});
  for (const auto m : {DetectMethod::kWindow, DetectMethod::kImprovedInterval, DetectMethod::kInterval}) {
    for (const double r : c.ratios) {
      if (!(r > 1.0)) throw ConfigError("detection ratios must exceed 1");
      sink.line({{"kind", "point"}, {"method", to_string(m)}, {"ratio", r},
                 {"windows", detection_experiment(m, r, spec)}});
    }
  }
}

FloodTrace make_flood(const RunConfig& c, std::uint64_t window) {
  std::vector<TraceRecord> bg;
  if (!c.trace.empty()) {
    bg = load_trace(c.trace, 1);
  } else {
    bg = gen_zipf_trace({or_default(c.packets, 4 * window), or_default(c.flows, 10'000), c.alpha, c.seed, 1});
  }
  FloodSpec fs;
  fs.subnets = c.subnets;
  fs.prob = c.flood_prob;
  fs.start_lo = window;
  fs.start_hi = 2 * window;
  fs.seed = c.seed;
  return inject_flood(bg, fs);
}

void cmd_flood(const RunConfig& c, Sink& sink) {
  if (c.dim != 1) throw ConfigError("the flood experiment uses 1-D source prefixes");
  FloodConfig cfg;
  cfg.window = or_default(c.window, 100'000);
  cfg.theta = c.theta;
  cfg.eps_a = c.eps_a;
  cfg.delta = c.delta;
  cfg.budget = c.budget;
  cfg.points = c.points;
  cfg.cost.overhead_bytes = c.overhead;
  cfg.cost.sample_bytes = c.sample_bytes;
  cfg.batch = fixed_batch(c).value_or(0);
  cfg.seed = c.seed;
  const auto trace = make_flood(c, cfg.window);
  sink.line({{"kind", "config"}, {"command", "flood"}, {"window", cfg.window}, {"theta", cfg.theta},
             {"budget", cfg.budget}, {"points", cfg.points}, {"packets", trace.records.size()},
             {"floodStart", trace.start}, {"subnets", trace.subnets.size()}});
  for (const auto& m : flood_experiment(trace, cfg)) {
    sink.line({{"kind", "method"}, {"method", m.method}, {"batch", m.batch}, {"tau", m.tau},
               {"missedFraction", m.missed_fraction}, {"detected", m.detected}, {"medianDelay", m.median_delay},
               {"bytesPerPacket", m.bytes_per_packet}, {"reports", m.reports},
               {"maxUnreported", m.max_unreported},
               {"stalenessBound", std::isfinite(m.staleness_bound) ? json(m.staleness_bound) : json("inf")}});
  }
}

void cmd_gen(const RunConfig& c, Sink& sink) {
  if (c.out.empty()) throw ConfigError("gen needs --out");
  json summary = {{"kind", "trace"}, {"generator", c.kind}, {"path", c.out}, {"seed", c.seed}};
  std::vector<TraceRecord> records;
  if (c.kind == "zipf") {
    records = gen_zipf_trace({or_default(c.packets, 1'000'000), or_default(c.flows, 10'000), c.alpha, c.seed, c.dim});
  } else if (c.kind == "clustered") {
    ClusteredSpec spec;
    spec.packets = or_default(c.packets, spec.packets);
    spec.seed = c.seed;
    spec.dim = c.dim;
    records = gen_clustered_trace(spec);
  } else if (c.kind == "flood") {
    if (c.dim != 1) throw ConfigError("flood traces are 1-D");
    auto flood = make_flood(c, or_default(c.window, 100'000));
    summary["floodStart"] = flood.start;
    std::vector<std::string> nets;
    for (const auto& p : flood.subnets) nets.push_back(p.to_string());
    summary["subnets"] = nets;
    records = std::move(flood.records);
  } else {
    throw ConfigError("unknown generator " + c.kind + " (zipf, clustered, flood)");
  }
  write_trace(c.out, records);
  summary["packets"] = records.size();
  sink.line(summary);
}

void cmd_hhh(const RunConfig& c, Sink& sink) {
  HHHConfig cfg;
  cfg.window = or_default(c.window, 100'000);
  cfg.eps_a = c.eps_a;
  cfg.eps_s = c.eps_s;
  cfg.delta = c.delta;
  cfg.theta = c.theta;
  cfg.hier = HierarchyDef::for_dim(c.dim);
  cfg.seed = c.seed;
  if (c.tau == "auto") {
    cfg.tau_full = planner::min_tau_hhh(static_cast<double>(cfg.window), c.eps_s, c.delta, cfg.hier.size).tau;
  } else {
    const auto v = parse_number(c.tau);
    if (!v) throw ConfigError("--tau must be a number or auto");
    cfg.tau_full = *v;
  }
  std::vector<FlowKey> stream;
  if (!c.trace.empty()) {
    stream = keys_of(load_trace(c.trace, c.dim));
  } else {
    ClusteredSpec spec;
    spec.packets = or_default(c.packets, 3 * cfg.window / 2);
    spec.seed = c.seed;
    spec.dim = c.dim;
    stream = keys_of(gen_clustered_trace(spec));
  }
  HHHState state(cfg);
  for (const auto& k : stream) state.update(k);
  const auto entries = state.output();
  sink.line({{"kind", "config"}, {"command", "hhh"}, {"window", cfg.window}, {"theta", cfg.theta},
             {"tau", state.effective_tau()}, {"dim", c.dim}, {"packets", stream.size()},
             {"vacuous", state.vacuous()}, {"entries", entries.size()}});
  for (const auto& e : entries) sink.line(json::parse(to_json_line(e)));
}

int cmd_check(const RunConfig& c, Sink& sink) {
  AcceptanceOptions opts;
  opts.execution = c.serial ? Execution::kSerial : Execution::kParallel;
  opts.only = c.criteria;
  bool all = true;
  run_acceptance(opts, [&](const CriterionResult& r) {
    all = all && r.pass;
    sink.line({{"kind", "criterion"}, {"id", r.id}, {"name", r.name}, {"pass", r.pass}, {"detail", r.detail},
               {"seconds", r.seconds}, {"limitSeconds", r.limit_seconds}});
  });
  return all ? kOk : kCheckFailed;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig c;
  CLI::App app{"Memento sliding-window sketches: planner, experiments and trace tools", "memento"};
  app.require_subcommand(0, 1);
  app.fallthrough();

  app.add_option("--window", c.window, "window size W (packets)");
  app.add_option("--eps-a", c.eps_a, "algorithmic error eps_a");
  app.add_option("--eps-s", c.eps_s, "sampling error eps_s");
  auto* delta = app.add_option("--delta", c.delta, "failure probability (plan: delta_s, default 1e-4)");
  app.add_option("--theta", c.theta, "heavy-hitter threshold (fraction of W)");
  app.add_option("--tau", c.tau, "Full-update probability or auto");
  app.add_option("--dim", c.dim, "hierarchy dimension")->check(CLI::IsMember({1, 2}));
  app.add_option("--budget", c.budget, "bytes per ingress packet");
  app.add_option("--overhead", c.overhead, "per-message overhead bytes");
  app.add_option("--sample-bytes", c.sample_bytes, "bytes per reported key");
  app.add_option("--points", c.points, "measurement points m");
  app.add_option("--batch", c.batch, "batch size b or auto");
  app.add_option("--seed", c.seed, "random seed")->envname("MEMENTO_SEED");
  app.add_option("--trace", c.trace, "input trace CSV");
  app.add_option("--out", c.out, "output path");
  app.add_option("--packets", c.packets, "generated trace length");
  app.add_option("--flows", c.flows, "generated Zipf flow count");
  app.add_option("--alpha", c.alpha, "Zipf exponent");
  app.add_option("--taus", c.taus, "tau grid")->delimiter(',');
  app.add_option("--counters", c.counters, "counter grid")->delimiter(',');
  app.add_flag("--serial", c.serial, "run grid cells serially");
  app.add_flag("--check", c.check, "run the acceptance criteria");
  app.add_option("--criteria", c.criteria, "criteria for --check")->delimiter(',');

  auto* plan = app.add_subcommand("plan", "error budget over the batch size");
  plan->add_option("--max-batch", c.max_batch, "curve length");
  auto* accuracy = app.add_subcommand("accuracy", "on-arrival RMSE over a (tau, counters, seed) grid");
  accuracy->add_option("--seeds", c.seeds, "seeds per cell");
  auto* bench = app.add_subcommand("bench", "update throughput per tau");
  bench->add_option("--reps", c.reps, "repetitions (best is kept)");
  auto* detect = app.add_subcommand("detect", "detection time of Window vs Interval methods");
  detect->add_option("--ratios", c.ratios, "flow rate / theta")->delimiter(',');
  detect->add_option("--phases", c.phases, "random phases per point");
  auto* flood = app.add_subcommand("flood", "network-wide flood detection: OPT, Sample, Batch, Aggregation");
  flood->add_option("--subnets", c.subnets, "flooding subnets");
  flood->add_option("--flood-prob", c.flood_prob, "share of flood packets after the start");
  auto* gen = app.add_subcommand("gen", "write a synthetic trace");
  gen->add_option("--kind", c.kind, "zipf, clustered or flood");
  gen->add_option("--subnets", c.subnets, "flooding subnets");
  gen->add_option("--flood-prob", c.flood_prob, "share of flood packets after the start");
  auto* hhh = app.add_subcommand("hhh", "H-Memento hierarchical heavy hitters of a trace");

  std::vector<std::string> argv(args.rbegin(), args.rend());
  try {
    app.parse(argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (c.check) {
      Sink sink(c.out, out);
      return cmd_check(c, sink);
    }
    // gen writes the trace to --out; its summary goes to stdout
    Sink sink(*gen ? std::string() : c.out, out);
    if (*plan) {
      cmd_plan(c, delta->count() > 0, sink);
    } else if (*accuracy) {
      cmd_accuracy(c, sink);
    } else if (*bench) {
      cmd_bench(c, sink);
    } else if (*detect) {
      cmd_detect(c, sink);
    } else if (*flood) {
      cmd_flood(c, sink);
    } else if (*gen) {
      cmd_gen(c, sink);
    } else if (*hhh) {
      cmd_hhh(c, sink);
    } else {
      err << app.help();
      return kConfigError;
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const UsageError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << '\n';
    return kIoError;
  } catch (const ParseError& e) {
    err << "trace error: " << e.what() << '\n';
    return kIoError;
  }
  return kOk;
}

}  // namespace memento::cli
