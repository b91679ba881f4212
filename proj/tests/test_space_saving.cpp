#include <doctest.h>

#include <map>
#include <random>

#include "memento/space_saving.hpp"

using memento::ConfigError;
using memento::SpaceSaving;

namespace {

// Reference Space Saving: linear scans, evicts the minimum counter that was
// touched longest ago.
struct NaiveSS {
  struct Cell {
    int key;
    std::uint64_t count;
    std::uint64_t touched;
  };
  std::size_t cap;
  std::vector<Cell> cells;
  std::uint64_t clock = 0;

  std::uint64_t add(int key) {
    ++clock;
    for (auto& c : cells) {
      if (c.key == key) {
        c.touched = clock;
        return ++c.count;
      }
    }
    if (cells.size() < cap) {
      cells.push_back({key, 1, clock});
      return 1;
    }
    auto victim = cells.begin();
    for (auto it = cells.begin(); it != cells.end(); ++it) {
      if (it->count < victim->count || (it->count == victim->count && it->touched < victim->touched)) victim = it;
    }
    victim->key = key;
    victim->touched = clock;
    return ++victim->count;
  }
  std::uint64_t query(int key) const {
    std::uint64_t lo = cells.empty() ? 0 : cells.front().count;
    for (const auto& c : cells) {
      if (c.key == key) return c.count;
      lo = std::min(lo, c.count);
    }
    return lo;
  }
};

}  // namespace

TEST_CASE("space saving: construction") {
  SpaceSaving<int> t(8);
  CHECK(t.size() == 0);
  CHECK(t.capacity() == 8);
  CHECK(SpaceSaving<int>(memento::counters_for_error(0.5)).capacity() == 8);
  CHECK_THROWS_AS(SpaceSaving<int>(0), ConfigError);
}

TEST_CASE("space saving: single counter absorbs distinct keys") {
  SpaceSaving<int> t(1);
  t.add(1);
  t.add(2);
  CHECK(t.add(3) == 3);
  CHECK(t.size() == 1);
  CHECK(t.contains(3));
  CHECK(t.query(3) == 3);
}

TEST_CASE("space saving: replacing x:4 by y gives y:5") {
  SpaceSaving<int> t(1);
  for (int i = 0; i < 4; ++i) t.add(10);
  CHECK(t.query(10) == 4);
  CHECK(t.add(20) == 5);
  CHECK(t.contains(20));
  CHECK_FALSE(t.contains(10));
}

TEST_CASE("space saving: insert into free slot") {
  SpaceSaving<int> t(4);
  CHECK(t.add(7) == 1);
  CHECK(t.query(7) == 1);
}

TEST_CASE("space saving: tie among minimum counters evicts the least recently updated") {
  // {a:2, b:2}: a reached 2 first, so it is the one replaced.
  SpaceSaving<int> t(2);
  t.add(1);
  t.add(1);
  t.add(2);
  t.add(2);
  CHECK(t.add(3) == 3);
  CHECK_FALSE(t.contains(1));
  CHECK(t.contains(2));
  CHECK(t.query(2) == 2);

  // Same counts, other order of last touch.
  SpaceSaving<int> u(2);
  u.add(2);
  u.add(1);
  u.add(2);
  u.add(1);
  CHECK(u.add(3) == 3);
  CHECK_FALSE(u.contains(2));
  CHECK(u.contains(1));
}

TEST_CASE("space saving: queries") {
  SpaceSaving<int> t(2);
  for (int i = 0; i < 4; ++i) t.add(1);
  CHECK(t.query(1) == 4);
  for (int i = 0; i < 7; ++i) t.add(2);
  CHECK(t.query(3) == 4);  // untracked: minimum counter
  CHECK(SpaceSaving<int>(3).query(5) == 0);
}

TEST_CASE("space saving: flush") {
  SpaceSaving<int> t(3);
  for (int i = 0; i < 4; ++i) t.add(1);
  t.flush();
  CHECK(t.size() == 0);
  CHECK(t.capacity() == 3);
  t.flush();
  CHECK(t.size() == 0);
  CHECK(t.query(1) == 0);
  CHECK(t.add(1) == 1);
}

TEST_CASE("space saving: matches a linear-scan reference on random streams") {
  for (std::size_t cap : {1u, 2u, 7u, 32u}) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      std::mt19937_64 rng(seed);
      std::geometric_distribution<int> geo(0.08);
      SpaceSaving<int> t(cap);
      NaiveSS ref{cap, {}};
      std::map<int, std::uint64_t> truth;
      for (int i = 0; i < 5000; ++i) {
        const int key = geo(rng);
        ++truth[key];
        REQUIRE(t.add(key) == ref.add(key));
        if (i % 97 == 0) {
          for (int probe = 0; probe < 40; ++probe) CHECK(t.query(probe) == ref.query(probe));
        }
        if (i == 2500) {
          t.flush();
          ref.cells.clear();
          truth.clear();
        }
      }
      CHECK(t.size() <= cap);
      std::uint64_t adds = 0;
      for (const auto& [k, c] : truth) {
        adds += c;
        CHECK(t.query(k) >= c);  // one-sided
      }
      CHECK(t.total() == adds);
    }
  }
}
