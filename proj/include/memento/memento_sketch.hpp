#pragma once

// Memento: a sliding-window frequency sketch that performs a Full update
// (insert into the frame's Space Saving table) for a tau fraction of packets
// and a cheap Window update (advance the window) for the rest.
//
// The stream is cut into frames of W packets, each split into k blocks of
// W/k packets. Whenever a key's in-frame estimate crosses a multiple of the
// overflow quantum the key is logged in the newest block's queue and its
// overflow counter is bumped; queues of blocks that leave the window are
// drained one key per packet.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <unordered_map>
#include <utility>
#include <vector>

#include "memento/audit.hpp"
#include "memento/common.hpp"
#include "memento/space_saving.hpp"

namespace memento {

/// Unit in which overflows are counted.
///  kPackets: the quantum is the block size W/k, exactly as in the original
///            listing. Estimates carry an error of about 4W/(k*tau).
///  kSamples: the quantum is tau*W/k, the expected number of samples per
///            block, so the deterministic error stays 4W/k after the 1/tau
///            scaling. Both units coincide when tau == 1.
enum class OverflowUnit { kSamples, kPackets };

struct MementoParams {
  std::uint64_t window = 0;    // requested window W; rounded down to a multiple of counters
  std::uint64_t counters = 0;  // k: Space Saving counters and blocks per frame
  double tau = 1.0;            // Full-update probability
  std::uint64_t seed = 0;
  OverflowUnit unit = OverflowUnit::kSamples;
};

struct SketchStats {
  std::uint64_t updates = 0;
  std::uint64_t full_updates = 0;
  std::uint64_t flushes = 0;
  std::uint64_t max_entries = 0;
  std::uint64_t max_ss_ops = 0;
  std::uint64_t max_pushes = 0;
  std::uint64_t max_pops = 0;
  std::uint64_t violations = 0;
  std::uint64_t nonempty_rotations = 0;
};

namespace detail {

// Stats holder that publishes into audit::global() exactly once: copies start
// from zero and moves leave the source empty.
class AuditedStats {
 public:
  AuditedStats() = default;
  AuditedStats(const AuditedStats&) {}
  AuditedStats& operator=(const AuditedStats&) {
    publish();
    s = {};
    return *this;
  }
  AuditedStats(AuditedStats&& o) noexcept : s(std::exchange(o.s, {})) {}
  AuditedStats& operator=(AuditedStats&& o) noexcept {
    publish();
    s = std::exchange(o.s, {});
    return *this;
  }
  ~AuditedStats() { publish(); }

  SketchStats s;

 private:
  void publish() noexcept {
    auto& g = audit::global();
    g.checks += s.updates;
    g.violations += s.violations;
    g.nonempty_rotations += s.nonempty_rotations;
  }
};

}  // namespace detail

template <class Key, class Hash = std::hash<Key>>
class MementoSketch {
 public:
  explicit MementoSketch(const MementoParams& p)
      : k_(p.counters), tau_(p.tau), unit_(p.unit), rng_(splitmix64(p.seed ^ 0x4D656D656E746FULL)), ss_(p.counters ? p.counters : 1) {
    if (p.counters == 0) throw ConfigError("Memento needs at least one counter");
    if (!(p.tau > 0.0) || p.tau > 1.0) throw ConfigError("tau must lie in (0, 1]");
    if (p.window < 4 * k_) throw ConfigError("window too small for requested accuracy");
    window_ = (p.window / k_) * k_;
    block_ = window_ / k_;
    quantum_ = unit_ == OverflowUnit::kPackets
                   ? block_
                   : std::max<std::uint64_t>(1, static_cast<std::uint64_t>(
                                                    std::llround(tau_ * static_cast<double>(block_))));
    inv_tau_ = 1.0 / tau_;
    const double scaled = std::ldexp(tau_, 64);
    always_full_ = scaled >= 18446744073709551616.0;
    threshold_ = always_full_ ? std::numeric_limits<std::uint64_t>::max()
                              : static_cast<std::uint64_t>(scaled);
    queues_.resize(k_ + 1);
    head_ = k_;
    overflows_.reserve(4 * k_);
  }

  /// Memento(W, eps, tau) with k = ceil(4/eps).
  static MementoSketch with_error(std::uint64_t window, double eps, double tau, std::uint64_t seed = 0,
                                  OverflowUnit unit = OverflowUnit::kSamples) {
    return MementoSketch(MementoParams{window, counters_for_error(eps), tau, seed, unit});
  }

  /// Full update with probability tau (one 64-bit draw per call), else Window update.
  void update(const Key& key) {
    const std::uint64_t draw = rng_();
    if (always_full_ || draw < threshold_) {
      full_update(key);
    } else {
      window_update();
    }
  }

  void window_update() {
    Ops ops;
    advance(ops);
    check(ops);
  }

  void full_update(const Key& key) {
    Ops ops;
    advance(ops);
    const std::uint64_t est = ss_.add(key);
    ++ops.ss;
    if (est % quantum_ == 0) {
      queues_[head_].keys.push_back(key);
      ++queued_;
      ++overflows_[key];
      ++ops.pushes;
    }
    ++stats_.s.full_updates;
    check(ops);
  }

  /// Estimate in sample units, including the +2 quanta correction but not
  /// the 1/tau scaling.
  double raw_query(const Key& key) const {
    const std::uint64_t in_frame = ss_.query(key);
    if (auto it = overflows_.find(key); it != overflows_.end()) {
      return static_cast<double>(quantum_ * (it->second + 2) + in_frame % quantum_);
    }
    return static_cast<double>(2 * quantum_ + in_frame);
  }

  /// Window frequency estimate (in packets).
  double query(const Key& key) const { return inv_tau_ * raw_query(key); }

  /// Keys with an overflow record whose estimate reaches theta * W, largest first.
  std::vector<std::pair<Key, double>> heavy_hitters(double theta) const {
    std::vector<std::pair<Key, double>> out;
    const double cut = theta * static_cast<double>(window_);
    for (const auto& [key, count] : overflows_) {
      const double est = query(key);
      if (est >= cut) out.emplace_back(key, est);
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    return out;
  }

  /// Visits every key holding an overflow record or a Space Saving counter, once.
  template <class F>
  void for_each_tracked(F&& fn) const {
    for (const auto& [key, count] : overflows_) fn(key);
    ss_.for_each([&](const Key& key, std::uint64_t) {
      if (!overflows_.count(key)) fn(key);
    });
  }

  std::uint64_t window() const { return window_; }
  std::uint64_t counters() const { return k_; }
  std::uint64_t block_size() const { return block_; }
  std::uint64_t quantum() const { return quantum_; }
  double tau() const { return tau_; }
  OverflowUnit unit() const { return unit_; }
  /// Packets into the current frame, in [0, W).
  std::uint64_t position() const { return position_; }
  std::uint64_t overflow_count(const Key& key) const {
    auto it = overflows_.find(key);
    return it == overflows_.end() ? 0 : it->second;
  }
  std::size_t overflow_keys() const { return overflows_.size(); }
  std::size_t queued() const { return queued_; }
  std::size_t queue_count() const { return queues_.size(); }
  /// Pending keys of the i-th queue, oldest block first.
  std::vector<Key> queue_contents(std::size_t i) const {
    const auto& q = queues_[(head_ + 1 + i) % queues_.size()];
    return {q.keys.begin() + static_cast<std::ptrdiff_t>(q.read), q.keys.end()};
  }
  const SpaceSaving<Key, Hash>& frame_table() const { return ss_; }
  std::size_t entries() const { return ss_.size() + overflows_.size() + queued_; }
  const SketchStats& stats() const { return stats_.s; }

 private:
  struct Queue {
    std::vector<Key> keys;
    std::size_t read = 0;
    bool empty() const { return read == keys.size(); }
    void clear() {
      keys.clear();
      read = 0;
    }
  };
  struct Ops {
    std::uint32_t ss = 0;
    std::uint32_t pushes = 0;
    std::uint32_t pops = 0;
  };

  void advance(Ops& ops) {
    if (++position_ == window_) {
      position_ = 0;
      ss_.flush();
      ++stats_.s.flushes;
    }
    if (++block_pos_ == block_) {
      block_pos_ = 0;
      rotate();
    }
    Queue& tail = queues_[(head_ + 1) % queues_.size()];
    if (!tail.empty()) {
      release(tail.keys[tail.read++]);
      ++ops.pops;
      if (tail.empty()) tail.clear();
    }
  }

  // Retires the oldest block's queue and reuses its slot as the newest block.
  void rotate() {
    const std::size_t oldest = (head_ + 1) % queues_.size();
    Queue& q = queues_[oldest];
    if (!q.empty()) {
      ++stats_.s.nonempty_rotations;
      ++stats_.s.violations;
      while (!q.empty()) release(q.keys[q.read++]);
    }
    q.clear();
    head_ = oldest;
  }

  void release(const Key& key) {
    --queued_;
    auto it = overflows_.find(key);
    if (--it->second == 0) overflows_.erase(it);
  }

  void check(const Ops& ops) {
    SketchStats& s = stats_.s;
    ++s.updates;
    const std::uint64_t n = entries();
    s.max_entries = std::max(s.max_entries, n);
    s.max_ss_ops = std::max<std::uint64_t>(s.max_ss_ops, ops.ss);
    s.max_pushes = std::max<std::uint64_t>(s.max_pushes, ops.pushes);
    s.max_pops = std::max<std::uint64_t>(s.max_pops, ops.pops);
    if (n > 5 * k_ || ops.ss > 1 || ops.pushes > 1 || ops.pops > 1) ++s.violations;
  }

  std::uint64_t k_;
  double tau_;
  OverflowUnit unit_;
  std::mt19937_64 rng_;
  SpaceSaving<Key, Hash> ss_;
  std::uint64_t window_ = 0;
  std::uint64_t block_ = 0;
  std::uint64_t quantum_ = 0;
  double inv_tau_ = 1.0;
  bool always_full_ = true;
  std::uint64_t threshold_ = 0;
  std::uint64_t position_ = 0;
  std::uint64_t block_pos_ = 0;
  std::unordered_map<Key, std::uint64_t, Hash> overflows_;
  std::vector<Queue> queues_;
  std::size_t head_ = 0;
  std::size_t queued_ = 0;
  detail::AuditedStats stats_;
};

}  // namespace memento
