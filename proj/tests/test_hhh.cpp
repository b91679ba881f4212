#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <map>
#include <random>

#include <json.hpp>

#include "memento/hhh.hpp"
#include "memento/oracle.hpp"
#include "memento/planner.hpp"
#include "memento/trace.hpp"

using namespace memento;

namespace {

Prefix P(const char* text) { return *parse_prefix(text); }

HHHConfig base(std::uint64_t window, double tau, std::uint64_t seed = 1, int dim = 1) {
  HHHConfig c;
  c.window = window;
  c.eps_a = 0.01;
  c.eps_s = 0.05;
  c.delta = 0.05;
  c.theta = 0.1;
  c.hier = HierarchyDef::for_dim(dim);
  c.tau_full = tau;
  c.guarantee_void = true;
  c.seed = seed;
  return c;
}

HHHEntry entry(const char* p, double lower, double upper = 0) {
  HHHEntry e;
  e.prefix = P(p);
  e.f_lower = lower;
  e.f_upper = upper;
  return e;
}

bool contains(const std::vector<Prefix>& v, const Prefix& p) { return std::find(v.begin(), v.end(), p) != v.end(); }

std::vector<Prefix> prefixes(const std::vector<HHHEntry>& es) {
  std::vector<Prefix> out;
  for (const auto& e : es) out.push_back(e.prefix);
  return out;
}

}  // namespace

TEST_CASE("hhh: configuration checks") {
  auto c = base(10000, 1.0);
  CHECK_NOTHROW(HHHState{c});
  c.window = 0;
  CHECK_THROWS_AS(HHHState{c}, ConfigError);
  c = base(10000, 0.01);
  c.guarantee_void = false;
  CHECK_THROWS_AS(HHHState{c}, ConfigError);  // below the planner minimum
  c.tau_full = planner::min_tau_hhh(10000, c.eps_s, c.delta, 5).tau;
  CHECK_NOTHROW(HHHState{c});
  c = base(10000, 1.0);
  c.theta = 0.05;
  CHECK(HHHState(c).vacuous());
  c.theta = 0.2;
  CHECK_FALSE(HHHState(c).vacuous());
}

TEST_CASE("hhh: tau_full = 1 gives one Full update per packet on a uniform level") {
  HHHState st(base(10000, 1.0, 3));
  const auto key = FlowKey::one_d(0x0A000001u);
  std::array<double, 5> seen{};
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const auto p = st.update(key);
    REQUIRE(p.has_value());
    seen[static_cast<std::size_t>(p->depth())] += 1;
  }
  double chi2 = 0;
  for (double s : seen) chi2 += (s - n / 5.0) * (s - n / 5.0) / (n / 5.0);
  CHECK(chi2 < 13.277);  // 4 degrees of freedom, alpha = 0.01
  CHECK(st.sketch().stats().full_updates == static_cast<std::uint64_t>(n));
}

TEST_CASE("hhh: Full update count concentrates at N tau") {
  const int n = 20000;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    HHHState st(base(10000, 0.3, seed));
    const double tau = st.effective_tau();
    CHECK(tau == doctest::Approx(5.0 / 17));
    std::mt19937_64 rng(seed);
    for (int i = 0; i < n; ++i) st.update(FlowKey::one_d(static_cast<std::uint32_t>(rng())));
    const double fulls = static_cast<double>(st.sketch().stats().full_updates);
    const double sd = std::sqrt(n * tau * (1 - tau));
    CHECK(std::abs(fulls - n * tau) <= 4 * sd);
  }
}

TEST_CASE("hhh: the window advances exactly once per packet") {
  HHHState st(base(10000, 0.1, 2));
  std::mt19937_64 rng(2);
  for (int i = 1; i <= 12345; ++i) {
    st.update(FlowKey::one_d(static_cast<std::uint32_t>(rng())));
    if (i % 1000 == 0) CHECK(st.sketch().position() == static_cast<std::uint64_t>(i) % st.sketch().window());
  }
  const auto& s = st.sketch().stats();
  CHECK(s.updates == 12345);
  CHECK(s.max_ss_ops <= 1);
  CHECK(s.violations == 0);
}

TEST_CASE("hhh: empty state estimates") {
  HHHState st(base(10000, 0.5));
  const Prefix p = P("10.*");
  CHECK(st.f_upper(p) == doctest::Approx(st.scale() * 2 * static_cast<double>(st.sketch().quantum())));
  CHECK(st.f_lower(p) == 0);
  CHECK(st.f_hat(p) == 0);
  CHECK(st.output().empty());
  // tau = 1: the quantum is the block size
  HHHState one(base(10000, 1.0));
  CHECK(one.sketch().quantum() == one.sketch().block_size());
}

TEST_CASE("hhh: upper estimate never falls below the scaled in-window sample count") {
  const std::uint64_t w = 10000;
  HHHState st(base(w, 1.0, 4));
  const auto key = FlowKey::one_d(0xC0A80101u);
  std::deque<std::optional<Prefix>> recent;
  for (std::uint64_t i = 0; i < 3 * w; ++i) {
    recent.push_back(st.update(key));
    if (recent.size() > w) recent.pop_front();
    if (i % 997 == 0 || i == 3 * w - 1) {
      for (int level = 0; level < 5; ++level) {
        const Prefix p = prefix_at(key, level);
        const auto samples = std::count(recent.begin(), recent.end(), std::optional<Prefix>(p));
        CHECK(st.f_upper(p) >= st.scale() * static_cast<double>(samples));
      }
    }
  }
  // the fully general prefix covers every packet: V * samples averages W
  CHECK(st.f_upper(P("*")) >= 0.9 * static_cast<double>(w));
}

TEST_CASE("hhh: V times the sample count is unbiased") {
  const std::uint64_t w = 10000;
  const Prefix target = P("77.*");
  double sum = 0;
  const int runs = 100;
  for (int seed = 1; seed <= runs; ++seed) {
    HHHState st(base(w, 1.0, static_cast<std::uint64_t>(seed)));
    std::mt19937_64 rng(static_cast<std::uint64_t>(seed) + 1000);
    std::uint64_t count = 0;
    for (std::uint64_t i = 0; i < w; ++i) {
      // every 10th packet is under 77.*
      const std::uint32_t src = i % 10 == 0 ? (77u << 24) | static_cast<std::uint32_t>(rng() & 0xFFFFFF)
                                            : (static_cast<std::uint32_t>(rng() % 76 + 1) << 24) |
                                                  static_cast<std::uint32_t>(rng() & 0xFFFFFF);
      const auto p = st.update(FlowKey::one_d(src));
      if (p && *p == target) ++count;
    }
    sum += st.scale() * static_cast<double>(count);
  }
  CHECK(sum / runs == doctest::Approx(1000.0).epsilon(0.02));
}

TEST_CASE("hhh: calc_pred_1d") {
  CHECK(calc_pred_1d(P("10.*"), {}) == 0);
  const std::vector<HHHEntry> one{entry("10.1.*", 100)};
  CHECK(calc_pred_1d(P("10.*"), one) == -100);
  const std::vector<HHHEntry> chain{entry("10.1.*", 100), entry("10.1.2.*", 60)};
  CHECK(calc_pred_1d(P("10.*"), chain) == -100);
  const std::vector<HHHEntry> siblings{entry("10.1.*", 100), entry("10.2.*", 30), entry("11.*", 500)};
  CHECK(calc_pred_1d(P("10.*"), siblings) == -130);
}

TEST_CASE("hhh: calc_pred_2d") {
  std::map<std::string, double> upper{{"(181.7.*,208.67.*)", 40}, {"(181.7.*,208.*)", 70}, {"(181.*,208.67.*)", 90}};
  const std::function<double(const Prefix&)> fu = [&](const Prefix& p) {
    auto it = upper.find(p.to_string());
    return it == upper.end() ? 0.0 : it->second;
  };
  CHECK(calc_pred_2d(P("(*,*)"), {}, fu) == 0);

  // overlapping descendants: their glb is added back once
  const std::vector<HHHEntry> two{entry("(181.7.*,*)", 300), entry("(*,208.67.*)", 200)};
  CHECK(calc_pred_2d(P("(*,*)"), two, fu) == doctest::Approx(-300 - 200 + 40));

  // (181.*,208.*) generalizes glb = (181.7.*,208.67.*), so that pair adds nothing;
  // the pairs it forms with the other two have glbs no third member covers
  const std::vector<HHHEntry> three{entry("(181.7.*,*)", 300), entry("(*,208.67.*)", 200),
                                    entry("(181.*,208.*)", 150)};
  const double expected = -300 - 200 - 150 + upper["(181.7.*,208.*)"] + upper["(181.*,208.67.*)"];
  CHECK(calc_pred_2d(P("(*,*)"), three, fu) == doctest::Approx(expected));
}

TEST_CASE("hhh: JSON line") {
  HHHEntry e = entry("181.7.*", 12.5, 40);
  e.f_hat = 20;
  e.cond_freq = 33;
  const auto j = nlohmann::json::parse(to_json_line(e));
  CHECK(j["prefix"] == "181.7.*");
  CHECK(j["fHat"] == 20.0);
  CHECK(j["fUpper"] == 40.0);
  CHECK(j["fLower"] == 12.5);
  CHECK(j["condFreq"] == 33.0);
  CHECK(to_json_line(e).find("\"prefix\"") == 1);
}

TEST_CASE("hhh: a dominant flow's chain matches the exact HHH") {
  const std::uint64_t w = 100000;
  auto cfg = base(w, 1.0, 5);
  cfg.theta = 0.3;
  HHHState st(cfg);
  std::mt19937_64 rng(5);
  const auto heavy = FlowKey::one_d(0xB5071406u);
  std::vector<FlowKey> stream;
  for (std::uint64_t i = 0; i < 2 * w; ++i) {
    stream.push_back(i % 2 == 0 ? heavy : FlowKey::one_d(static_cast<std::uint32_t>(rng())));
    st.update(stream.back());
  }
  const auto exact = oracle_hhh(stream, w, stream.size(), 0.3, cfg.hier);
  const auto got = prefixes(st.output());
  for (int level = 0; level < 5; ++level) {
    const Prefix p = prefix_at(heavy, level);
    CHECK_MESSAGE(contains(got, p) == contains(exact, p), p.to_string());
  }
  CHECK(contains(exact, Prefix::of(heavy)));
  CHECK(contains(exact, P("*")));
}

TEST_CASE("hhh: coverage and accuracy against the exact window") {
  const std::uint64_t w = 40000;
  const double eps_s = 0.03, delta = 0.05, theta = 0.05;
  std::uint64_t missed = 0, checked = 0, inaccurate = 0, reported = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    HHHConfig cfg;
    cfg.window = w;
    cfg.eps_a = 0.005;
    cfg.eps_s = eps_s;
    cfg.delta = delta;
    cfg.theta = theta;
    cfg.tau_full = planner::min_tau_hhh(static_cast<double>(w), eps_s, delta, 5).tau;
    cfg.seed = seed;
    HHHState st(cfg);
    ClusteredSpec spec;
    spec.packets = 3 * w / 2;
    spec.seed = seed;
    const auto stream = keys_of(gen_clustered_trace(spec));
    for (const auto& k : stream) st.update(k);
    const auto out = st.output();
    const auto counts = window_counts(stream, w, stream.size());
    const auto set = prefixes(out);
    const auto audit = audit_coverage(counts, set, theta * static_cast<double>(w), cfg.hier);
    missed += audit.violations;
    checked += audit.checked;
    for (const auto& e : out) {
      ++reported;
      if (std::abs(prefix_frequency(counts, e.prefix) - e.f_hat) > (cfg.eps_a + eps_s) * static_cast<double>(w)) {
        ++inaccurate;
      }
    }
  }
  REQUIRE(checked > 0);
  CHECK(static_cast<double>(missed) / static_cast<double>(checked) <= delta + 0.05);
  REQUIRE(reported > 0);
  CHECK(static_cast<double>(inaccurate) / static_cast<double>(reported) <= delta + 0.05);
}

TEST_CASE("hhh: raising theta never adds fully specified prefixes") {
  const std::uint64_t w = 50000;
  HHHState st(base(w, 1.0, 6));
  ClusteredSpec spec;
  spec.packets = w;
  spec.seed = 6;
  for (const auto& k : keys_of(gen_clustered_trace(spec))) st.update(k);
  std::vector<Prefix> prev;
  bool first = true;
  for (const double theta : {0.11, 0.15, 0.2, 0.3, 0.5}) {
    std::vector<Prefix> leaves;
    for (const auto& e : st.output(theta)) {
      if (e.prefix.depth() == 0) leaves.push_back(e.prefix);
    }
    if (!first) {
      for (const auto& p : leaves) CHECK(contains(prev, p));
    }
    prev = leaves;
    first = false;
  }
}

TEST_CASE("hhh: raising theta can add a higher-level prefix") {
  // q = 10.* holds 0.5 W, of which h = 10.1.2.3 holds 0.3 W and the rest is
  // spread thinly. At theta = 0.25 h is selected and C(q) = 0.2 W < 0.25 W;
  // at theta = 0.4 h is not selected and C(q) = 0.5 W >= 0.4 W.
  WeightedCounts counts{{FlowKey::one_d(0x0A010203u), 300}};
  for (std::uint32_t i = 0; i < 200; ++i) counts.emplace_back(FlowKey::one_d(0x0A000000u | (i << 8)), 1);
  for (std::uint32_t i = 0; i < 500; ++i) counts.emplace_back(FlowKey::one_d(0x14000000u | (i << 8)), 1);
  const auto hier = HierarchyDef::for_dim(1);
  const auto low = exact_hhh(counts, 0.25 * 1000, hier);
  const auto high = exact_hhh(counts, 0.4 * 1000, hier);
  CHECK(contains(low, P("10.1.2.3")));
  CHECK_FALSE(contains(low, P("10.*")));
  CHECK_FALSE(contains(high, P("10.1.2.3")));
  CHECK(contains(high, P("10.*")));
}

TEST_CASE("hhh: presampled ingestion") {
  auto cfg = base(10000, 0.2, 8);
  cfg.presampled = true;
  HHHState st(cfg);
  CHECK(st.effective_tau() == doctest::Approx(0.2));
  CHECK(st.scale() == doctest::Approx(25));
  const auto key = FlowKey::one_d(0x01020304u);
  const Prefix p = st.ingest_sample(key);
  CHECK(generalizes(p, Prefix::of(key)));
  st.advance();
  CHECK(st.sketch().stats().updates == 2);
  CHECK(st.sketch().stats().full_updates == 1);
}

TEST_CASE("hhh: level sketches track every level") {
  const std::uint64_t w = 20000;
  LevelSketches ls(HierarchyDef::for_dim(2), w, 25 * 400);
  std::mt19937_64 rng(9);
  WindowCounter exact(w);
  const auto heavy = FlowKey::two_d(0x0A0B0C0Du, 0x01020304u);
  std::vector<FlowKey> stream;
  for (std::uint64_t i = 0; i < w; ++i) {
    stream.push_back(i % 4 == 0 ? heavy : FlowKey::two_d(static_cast<std::uint32_t>(rng()), static_cast<std::uint32_t>(rng())));
    ls.update(stream.back());
  }
  const auto counts = window_counts(stream, w, stream.size());
  for (int level = 0; level < 25; ++level) {
    const Prefix p = prefix_at(heavy, level);
    const double f = prefix_frequency(counts, p);
    CHECK(ls.query(p) >= f);
    CHECK(ls.query(p) <= f + 0.01 * static_cast<double>(w) + 1);
  }
}
