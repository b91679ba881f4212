#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "memento/flow_key.hpp"
#include "memento/hierarchy.hpp"
#include "memento/memento_sketch.hpp"

namespace memento {

struct HHHConfig {
  std::uint64_t window = 0;
  double eps_a = 0.01;
  double eps_s = 0.01;
  double delta = 0.05;
  double theta = 0.05;
  HierarchyDef hier = HierarchyDef::for_dim(1);
  double tau_full = 1.0;  // per-packet Full-update probability
  /// Accept a tau_full below the planner's minimum (accuracy guarantee void).
  bool guarantee_void = false;
  /// Keys arrive already sampled with probability tau_full (controller use):
  /// every ingest_sample() is a Full update on a uniformly chosen level.
  bool presampled = false;
  std::uint64_t seed = 0;
};

struct HHHEntry {
  Prefix prefix;
  double f_hat = 0;
  double f_upper = 0;
  double f_lower = 0;
  double cond_freq = 0;
};

/// {"prefix":..., "fHat":..., "fUpper":..., "fLower":..., "condFreq":...}
std::string to_json_line(const HHHEntry& e);

/// -sum over G(p|P) of f_lower.
double calc_pred_1d(const Prefix& p, std::span<const HHHEntry> set);

/// 2-D variant: also adds back f_upper(glb(h, h')) for every pair in G(p|P)
/// whose glb is not generalized by a third member of G(p|P).
double calc_pred_2d(const Prefix& p, std::span<const HHHEntry> set,
                    const std::function<double(const Prefix&)>& f_upper);

/// H-Memento: one Memento instance over sampled prefixes of all levels.
class HHHState {
 public:
  explicit HHHState(const HHHConfig& cfg);

  /// Draws a random prefix of key; a hit is a Full update of that prefix,
  /// a miss a Window update. Returns the prefix that was inserted, if any.
  std::optional<Prefix> update(const FlowKey& key);

  /// Presampled mode: Full update of a uniformly chosen level of key.
  Prefix ingest_sample(const FlowKey& key);
  /// Window update only (an un-sampled packet).
  void advance();

  double f_upper(const Prefix& p) const { return scale_ * sketch_.raw_query(p); }
  double f_hat(const Prefix& p) const;
  double f_lower(const Prefix& p) const;

  std::vector<HHHEntry> output() const { return output(cfg_.theta); }
  std::vector<HHHEntry> output(double theta) const;

  /// V: the factor turning per-prefix sample counts into packet counts.
  double scale() const { return scale_; }
  double effective_tau() const { return tau_; }
  /// eps_a + eps_s >= theta: the threshold sits inside the error band.
  bool vacuous() const { return cfg_.eps_a + cfg_.eps_s >= cfg_.theta; }
  const HHHConfig& config() const { return cfg_; }
  const MementoSketch<Prefix>& sketch() const { return sketch_; }

 private:
  HHHConfig cfg_;
  PrefixSampler sampler_;
  double tau_;
  double scale_;
  double lower_band_;
  double output_band_;
  MementoSketch<Prefix> sketch_;
  std::mt19937_64 rng_;
};

/// MST-style sliding-window baseline: one Memento per hierarchy level, every
/// packet fully updates all H of them.
class LevelSketches {
 public:
  LevelSketches(HierarchyDef hier, std::uint64_t window, std::uint64_t total_counters);
  void update(const FlowKey& key);
  double query(const Prefix& p) const;

 private:
  HierarchyDef hier_;
  std::vector<MementoSketch<Prefix>> levels_;
};

}  // namespace memento
