#include "memento/hhh.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "memento/planner.hpp"

namespace memento {
namespace {

std::vector<Prefix> prefixes_of(std::span<const HHHEntry> set) {
  std::vector<Prefix> out;
  out.reserve(set.size());
  for (const auto& e : set) out.push_back(e.prefix);
  return out;
}

const HHHEntry& entry_for(std::span<const HHHEntry> set, const Prefix& p) {
  return *std::find_if(set.begin(), set.end(), [&](const HHHEntry& e) { return e.prefix == p; });
}

void validate(const HHHConfig& c) {
  if (c.window == 0) throw ConfigError("window must be positive");
  auto unit = [](double x) { return x > 0.0 && x < 1.0; };
  if (!unit(c.eps_a) || !unit(c.eps_s) || !unit(c.delta) || !unit(c.theta)) {
    throw ConfigError("eps_a, eps_s, delta and theta must lie in (0, 1)");
  }
  if (!(c.tau_full > 0.0) || c.tau_full > 1.0) throw ConfigError("tau_full must lie in (0, 1]");
  if (!c.guarantee_void) {
    const auto need = planner::min_tau_hhh(static_cast<double>(c.window), c.eps_s, c.delta, c.hier.size);
    if (c.tau_full < need.tau * (1 - 1e-9)) {
      throw ConfigError("tau_full " + std::to_string(c.tau_full) + " is below the minimum " +
                        std::to_string(need.tau) + " for the requested eps_s/delta");
    }
  }
}

}  // namespace

std::string to_json_line(const HHHEntry& e) {
  nlohmann::ordered_json j;
  j["prefix"] = e.prefix.to_string();
  j["fHat"] = e.f_hat;
  j["fUpper"] = e.f_upper;
  j["fLower"] = e.f_lower;
  j["condFreq"] = e.cond_freq;
  return j.dump();
}

double calc_pred_1d(const Prefix& p, std::span<const HHHEntry> set) {
  const auto prefixes = prefixes_of(set);
  double r = 0;
  for (const Prefix& h : best_generalized(p, prefixes)) r -= entry_for(set, h).f_lower;
  return r;
}

double calc_pred_2d(const Prefix& p, std::span<const HHHEntry> set,
                    const std::function<double(const Prefix&)>& f_upper) {
  const auto prefixes = prefixes_of(set);
  const auto g = best_generalized(p, prefixes);
  double r = 0;
  for (const Prefix& h : g) r -= entry_for(set, h).f_lower;
  const std::unordered_set<Prefix> members(g.begin(), g.end());
  for (std::size_t i = 0; i < g.size(); ++i) {
    for (std::size_t j = i + 1; j < g.size(); ++j) {
      const auto q = glb(g[i], g[j]);
      if (!q) continue;
      bool covered = false;
      for (const Prefix& a : ancestors(*q)) {
        if (a != g[i] && a != g[j] && members.count(a)) {
          covered = true;
          break;
        }
      }
      if (!covered) r += f_upper(*q);
    }
  }
  return r;
}

HHHState::HHHState(const HHHConfig& cfg)
    : cfg_((validate(cfg), cfg)),
      sampler_(cfg.hier, cfg.tau_full),
      tau_(cfg.presampled ? cfg.tau_full : sampler_.effective_tau()),
      scale_(cfg.hier.size / tau_),
      lower_band_(0),
      output_band_(0),
      sketch_(MementoParams{cfg.window, counters_for_error(cfg.eps_a / cfg.hier.size), tau_, cfg.seed,
                            OverflowUnit::kSamples}),
      rng_(splitmix64(cfg.seed ^ 0x484D656D656E746FULL)) {
  const double w = static_cast<double>(sketch_.window());
  const double spread = std::sqrt(scale_ * w);
  lower_band_ = cfg_.eps_a * w + 2 * planner::z_score(1 - cfg_.delta / 2) * spread;
  output_band_ = 2 * planner::z_score(1 - cfg_.delta) * spread;
}

std::optional<Prefix> HHHState::update(const FlowKey& key) {
  const int level = sampler_.level_for(rng_());
  if (level < 0) {
    sketch_.window_update();
    return std::nullopt;
  }
  const Prefix p = prefix_at(key, level);
  sketch_.full_update(p);
  return p;
}

Prefix HHHState::ingest_sample(const FlowKey& key) {
  const auto level = static_cast<int>(reduce_range(rng_(), static_cast<std::uint64_t>(cfg_.hier.size)));
  const Prefix p = prefix_at(key, level);
  sketch_.full_update(p);
  return p;
}

void HHHState::advance() { sketch_.window_update(); }

double HHHState::f_hat(const Prefix& p) const {
  const double raw = sketch_.raw_query(p) - 2.0 * static_cast<double>(sketch_.quantum());
  return scale_ * std::max(0.0, raw);
}

double HHHState::f_lower(const Prefix& p) const {
  return std::min(f_hat(p), std::max(0.0, f_upper(p) - lower_band_));
}

std::vector<HHHEntry> HHHState::output(double theta) const {
  const double threshold = theta * static_cast<double>(sketch_.window());
  std::vector<std::vector<Prefix>> levels(static_cast<std::size_t>(cfg_.hier.max_depth) + 1);
  sketch_.for_each_tracked([&](const Prefix& p) { levels[static_cast<std::size_t>(p.depth())].push_back(p); });

  std::vector<HHHEntry> result;
  std::unordered_map<Prefix, std::vector<std::size_t>> below;  // ancestor -> result indices
  const std::function<double(const Prefix&)> upper = [this](const Prefix& q) { return f_upper(q); };
  std::vector<HHHEntry> descendants;
  for (auto& level : levels) {
    std::sort(level.begin(), level.end(), canonical_less);
    for (const Prefix& p : level) {
      descendants.clear();
      if (auto it = below.find(p); it != below.end()) {
        for (std::size_t idx : it->second) descendants.push_back(result[idx]);
      }
      double pred = 0;
      if (!descendants.empty()) {
        pred = cfg_.hier.dim == 1 ? calc_pred_1d(p, descendants) : calc_pred_2d(p, descendants, upper);
      }
      const double fu = f_upper(p);
      const double cond = fu + pred + output_band_;
      if (cond >= threshold) {
        const double fh = f_hat(p);
        result.push_back(HHHEntry{p, fh, fu, std::min(fh, std::max(0.0, fu - lower_band_)), cond});
        for (const Prefix& a : ancestors(p)) below[a].push_back(result.size() - 1);
      }
    }
  }
  return result;
}

LevelSketches::LevelSketches(HierarchyDef hier, std::uint64_t window, std::uint64_t total_counters)
    : hier_(hier) {
  const std::uint64_t per_level = std::max<std::uint64_t>(1, total_counters / static_cast<std::uint64_t>(hier.size));
  levels_.reserve(static_cast<std::size_t>(hier.size));
  for (int i = 0; i < hier.size; ++i) {
    levels_.emplace_back(MementoParams{window, per_level, 1.0, static_cast<std::uint64_t>(i),
                                       OverflowUnit::kPackets});
  }
}

void LevelSketches::update(const FlowKey& key) {
  for (int i = 0; i < hier_.size; ++i) levels_[static_cast<std::size_t>(i)].full_update(prefix_at(key, i));
}

double LevelSketches::query(const Prefix& p) const {
  const int level = p.dim() == 1 ? (32 - p.src_bits()) / 8
                                 : 5 * ((32 - p.src_bits()) / 8) + (32 - p.dst_bits()) / 8;
  return levels_[static_cast<std::size_t>(level)].query(p);
}

}  // namespace memento
