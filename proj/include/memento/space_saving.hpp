#pragma once

// Space Saving counter table backed by a stream-summary: counters with equal
// value share a bucket, buckets form an ascending doubly linked list, so both
// increment and find-minimum are O(1) worst case.

#include <cstdint>
#include <functional>
#include <limits>
#include <unordered_map>
#include <vector>

#include "memento/common.hpp"

namespace memento {

template <class Key, class Hash = std::hash<Key>>
class SpaceSaving {
 public:
  explicit SpaceSaving(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw ConfigError("Space Saving needs at least one counter");
    nodes_.reserve(capacity);
    buckets_.reserve(capacity + 1);
    index_.reserve(capacity * 2);
  }

  /// Counts one arrival of key and returns the key's new counter value.
  /// When the table is full, the minimum counter is reassigned to key; ties
  /// go to the counter that was updated least recently.
  std::uint64_t add(const Key& key) {
    if (auto it = index_.find(key); it != index_.end()) {
      return increment(it->second);
    }
    if (nodes_.size() < capacity_) {
      const auto n = static_cast<std::uint32_t>(nodes_.size());
      nodes_.push_back(Node{key, kNil, kNil, kNil});
      index_.emplace(key, n);
      std::uint32_t b = first_;
      if (b == kNil || buckets_[b].count != 1) {
        b = new_bucket(1);
        link_bucket_after(b, kNil);
      }
      append_node(b, n);
      return 1;
    }
    const std::uint32_t victim = buckets_[first_].head;
    index_.erase(nodes_[victim].key);
    nodes_[victim].key = key;
    index_.emplace(key, victim);
    return increment(victim);
  }

  /// The key's counter, or the minimum counter if untracked (0 when empty).
  std::uint64_t query(const Key& key) const {
    if (auto it = index_.find(key); it != index_.end()) {
      return buckets_[nodes_[it->second].bucket].count;
    }
    return min_count();
  }

  bool contains(const Key& key) const { return index_.count(key) != 0; }

  std::uint64_t min_count() const { return first_ == kNil ? 0 : buckets_[first_].count; }

  void flush() {
    nodes_.clear();
    buckets_.clear();
    free_buckets_.clear();
    index_.clear();
    first_ = kNil;
  }

  std::size_t size() const { return nodes_.size(); }
  std::size_t capacity() const { return capacity_; }

  template <class F>
  void for_each(F&& fn) const {
    for (const Node& n : nodes_) fn(n.key, buckets_[n.bucket].count);
  }

  /// Sum of all counters (equals the number of adds since the last flush).
  std::uint64_t total() const {
    std::uint64_t sum = 0;
    for (const Node& n : nodes_) sum += buckets_[n.bucket].count;
    return sum;
  }

 private:
  static constexpr std::uint32_t kNil = std::numeric_limits<std::uint32_t>::max();

  struct Node {
    Key key;
    std::uint32_t bucket;
    std::uint32_t prev;
    std::uint32_t next;
  };
  struct Bucket {
    std::uint64_t count;
    std::uint32_t head;
    std::uint32_t tail;
    std::uint32_t prev;
    std::uint32_t next;
  };

  std::uint32_t new_bucket(std::uint64_t count) {
    std::uint32_t b;
    if (!free_buckets_.empty()) {
      b = free_buckets_.back();
      free_buckets_.pop_back();
    } else {
      b = static_cast<std::uint32_t>(buckets_.size());
      buckets_.push_back({});
    }
    buckets_[b] = Bucket{count, kNil, kNil, kNil, kNil};
    return b;
  }

  // Inserts bucket b after `after` (kNil = at the front).
  void link_bucket_after(std::uint32_t b, std::uint32_t after) {
    const std::uint32_t next = after == kNil ? first_ : buckets_[after].next;
    buckets_[b].prev = after;
    buckets_[b].next = next;
    if (next != kNil) buckets_[next].prev = b;
    if (after == kNil) {
      first_ = b;
    } else {
      buckets_[after].next = b;
    }
  }

  void unlink_bucket(std::uint32_t b) {
    const Bucket& bk = buckets_[b];
    if (bk.prev != kNil) {
      buckets_[bk.prev].next = bk.next;
    } else {
      first_ = bk.next;
    }
    if (bk.next != kNil) buckets_[bk.next].prev = bk.prev;
    free_buckets_.push_back(b);
  }

  void append_node(std::uint32_t b, std::uint32_t n) {
    Bucket& bk = buckets_[b];
    nodes_[n].bucket = b;
    nodes_[n].next = kNil;
    nodes_[n].prev = bk.tail;
    if (bk.tail != kNil) {
      nodes_[bk.tail].next = n;
    } else {
      bk.head = n;
    }
    bk.tail = n;
  }

  void detach_node(std::uint32_t n) {
    Node& nd = nodes_[n];
    Bucket& bk = buckets_[nd.bucket];
    if (nd.prev != kNil) {
      nodes_[nd.prev].next = nd.next;
    } else {
      bk.head = nd.next;
    }
    if (nd.next != kNil) {
      nodes_[nd.next].prev = nd.prev;
    } else {
      bk.tail = nd.prev;
    }
  }

  std::uint64_t increment(std::uint32_t n) {
    const std::uint32_t from = nodes_[n].bucket;
    const std::uint64_t target = buckets_[from].count + 1;
    std::uint32_t to = buckets_[from].next;
    if (to == kNil || buckets_[to].count != target) {
      to = new_bucket(target);
      link_bucket_after(to, from);
    }
    detach_node(n);
    append_node(to, n);
    if (buckets_[from].head == kNil) unlink_bucket(from);
    return target;
  }

  std::size_t capacity_;
  std::vector<Node> nodes_;
  std::vector<Bucket> buckets_;
  std::vector<std::uint32_t> free_buckets_;
  std::uint32_t first_ = kNil;
  std::unordered_map<Key, std::uint32_t, Hash> index_;
};

}  // namespace memento
