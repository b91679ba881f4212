#include <doctest.h>

#include <algorithm>
#include <array>
#include <map>
#include <random>
#include <set>

#include "memento/hierarchy.hpp"

using namespace memento;

namespace {

Prefix P(const char* text) {
  auto p = parse_prefix(text);
  REQUIRE_MESSAGE(p.has_value(), text);
  return *p;
}

std::uint32_t mask(int bits) { return bits == 0 ? 0 : ~std::uint32_t{0} << (32 - bits); }

// Reference relation written directly from the definition.
bool gen_ref(const Prefix& p, const Prefix& q) {
  if (p.dim() != q.dim()) return false;
  auto dim_ok = [](std::uint32_t pv, int pb, std::uint32_t qv, int qb) {
    return pb <= qb && (qv & mask(pb)) == pv;
  };
  return dim_ok(p.src(), p.src_bits(), q.src(), q.src_bits()) &&
         (p.dim() == 1 || dim_ok(p.dst(), p.dst_bits(), q.dst(), q.dst_bits()));
}

std::vector<Prefix> all_2d_patterns(std::uint32_t src, std::uint32_t dst) {
  std::vector<Prefix> out;
  for (int sb = 0; sb <= 32; sb += 8) {
    for (int db = 0; db <= 32; db += 8) out.push_back(Prefix::two_d(src & mask(sb), sb, dst & mask(db), db));
  }
  return out;
}

}  // namespace

TEST_CASE("hierarchy: text round trip") {
  for (const char* t : {"181.7.20.6", "181.7.20.*", "181.7.*", "181.*", "*", "(181.7.20.6,208.67.222.222)",
                        "(181.7.*,208.67.*)", "(*,*)"}) {
    CHECK(P(t).to_string() == t);
  }
  CHECK_FALSE(parse_prefix("181.7.20.999").has_value());
  CHECK_FALSE(parse_prefix("181.*.20.6").has_value());
  CHECK(P("181.7.*").src_bits() == 16);
  CHECK(P("181.7.*").depth() == 2);
  CHECK(P("(*,*)").depth() == 8);
  CHECK(HierarchyDef::for_dim(1).size == 5);
  CHECK(HierarchyDef::for_dim(2).size == 25);
  CHECK(HierarchyDef::for_dim(2).max_depth == 8);
}

TEST_CASE("hierarchy: generalizes") {
  CHECK(generalizes(P("181.7.*"), P("181.7.20.6")));
  CHECK(generalizes(P("181.7.20.*"), P("181.7.20.6")));
  CHECK(generalizes(P("181.7.20.6"), P("181.7.20.6")));
  CHECK_FALSE(generalizes(P("181.8.*"), P("181.7.20.6")));
  CHECK_FALSE(generalizes(P("181.7.20.6"), P("181.7.*")));
}

TEST_CASE("hierarchy: parents") {
  CHECK(parents(P("181.7.20.*")) == std::vector<Prefix>{P("181.7.*")});
  const auto two = parents(P("(181.7.20.6,208.67.222.222)"));
  CHECK(std::set<Prefix, decltype(&canonical_less)>(two.begin(), two.end(), &canonical_less) ==
        std::set<Prefix, decltype(&canonical_less)>({P("(181.7.20.*,208.67.222.222)"), P("(181.7.20.6,208.67.222.*)")},
                                                    &canonical_less));
  CHECK(parents(P("*")).empty());
  CHECK(parents(P("(*,*)")).empty());
  CHECK(parents(P("(*,208.*)")) == std::vector<Prefix>{P("(*,*)")});
}

TEST_CASE("hierarchy: prefix_at") {
  const auto k = FlowKey::one_d(*parse_ipv4("181.7.20.6"));
  CHECK(prefix_at(k, 0) == P("181.7.20.6"));
  CHECK(prefix_at(k, 2) == P("181.7.*"));
  CHECK(prefix_at(k, 4) == P("*"));
  const auto k2 = FlowKey::two_d(*parse_ipv4("181.7.20.6"), *parse_ipv4("208.67.222.222"));
  CHECK(prefix_at(k2, 0) == P("(181.7.20.6,208.67.222.222)"));
  CHECK(prefix_at(k2, 1) == P("(181.7.20.6,208.67.222.*)"));
  CHECK(prefix_at(k2, 5) == P("(181.7.20.*,208.67.222.222)"));
  CHECK(prefix_at(k2, 24) == P("(*,*)"));
  CHECK_THROWS_AS(prefix_at(k, 5), UsageError);
  CHECK_THROWS_AS(prefix_at(k2, -1), UsageError);

  for (const auto& key : {k, k2}) {
    const int h = HierarchyDef::for_dim(key.dim()).size;
    std::set<std::string> distinct;
    for (int i = 0; i < h; ++i) {
      const Prefix p = prefix_at(key, i);
      CHECK(generalizes(p, Prefix::of(key)));
      distinct.insert(p.to_string());
    }
    CHECK(static_cast<int>(distinct.size()) == h);
  }
}

TEST_CASE("hierarchy: glb") {
  CHECK(glb(P("181.7.*"), P("181.7.20.*")) == P("181.7.20.*"));
  CHECK(glb(P("(181.7.*,208.67.222.222)"), P("(181.7.20.6,208.67.*)")) == P("(181.7.20.6,208.67.222.222)"));
  CHECK_FALSE(glb(P("181.7.*"), P("182.0.*")).has_value());
}

TEST_CASE("hierarchy: best_generalized") {
  const std::vector<Prefix> set{P("142.14.13.*"), P("142.14.13.14")};
  CHECK(best_generalized(P("142.14.*"), set) == std::vector<Prefix>{P("142.14.13.*")});
  CHECK(best_generalized(P("142.14.*"), {}).empty());
  const std::vector<Prefix> other{P("143.1.*")};
  CHECK(best_generalized(P("142.14.*"), other).empty());

  // large sets take the indexed path; compare with the definition
  std::mt19937_64 rng(3);
  std::vector<Prefix> many;
  for (int i = 0; i < 200; ++i) {
    const auto key = FlowKey::one_d(0x8E000000u | static_cast<std::uint32_t>(rng() & 0x00FF0F0Fu));
    many.push_back(prefix_at(key, static_cast<int>(rng() % 4)));
  }
  for (const Prefix& p : {P("142.*"), P("142.14.*"), P("*")}) {
    std::vector<Prefix> ref;
    for (const Prefix& h : many) {
      if (!strictly_generalizes(p, h)) continue;
      bool nearest = true;
      for (const Prefix& mid : many) {
        if (strictly_generalizes(p, mid) && strictly_generalizes(mid, h)) nearest = false;
      }
      if (nearest && std::find(ref.begin(), ref.end(), h) == ref.end()) ref.push_back(h);
    }
    auto got = best_generalized(p, many);
    std::sort(got.begin(), got.end(), canonical_less);
    got.erase(std::unique(got.begin(), got.end()), got.end());
    std::sort(ref.begin(), ref.end(), canonical_less);
    CHECK(got == ref);
  }
}

TEST_CASE("hierarchy: generalizes is a partial order on all 2-D mask patterns") {
  const auto ps = all_2d_patterns(0xB5071406u, 0xD043DEDEu);
  REQUIRE(ps.size() == 25);
  for (const auto& a : ps) {
    CHECK(generalizes(a, a));
    for (const auto& b : ps) {
      CHECK(generalizes(a, b) == gen_ref(a, b));
      if (generalizes(a, b) && generalizes(b, a)) CHECK(a == b);
      for (const auto& c : ps) {
        if (generalizes(a, b) && generalizes(b, c)) CHECK(generalizes(a, c));
      }
    }
  }
}

TEST_CASE("hierarchy: glb is the most general common descendant") {
  // two value families so that some pairs are disjoint
  auto ps = all_2d_patterns(0xB5071406u, 0xD043DEDEu);
  const auto qs = all_2d_patterns(0xB5081406u, 0xD043DE01u);
  ps.insert(ps.end(), qs.begin(), qs.end());
  std::vector<Prefix> universe = ps;
  for (const auto& p : all_2d_patterns(0xB5071406u, 0xD043DE01u)) universe.push_back(p);
  for (const auto& p : all_2d_patterns(0xB5081406u, 0xD043DEDEu)) universe.push_back(p);
  for (const auto& h : ps) {
    for (const auto& h2 : ps) {
      std::vector<Prefix> common;
      for (const auto& g : universe) {
        if (generalizes(h, g) && generalizes(h2, g)) common.push_back(g);
      }
      const auto got = glb(h, h2);
      if (common.empty()) {
        CHECK_FALSE(got.has_value());
        continue;
      }
      REQUIRE(got.has_value());
      CHECK(generalizes(h, *got));
      CHECK(generalizes(h2, *got));
      for (const auto& g : common) CHECK(generalizes(*got, g));
    }
  }
}

TEST_CASE("hierarchy: sampler V and effective tau") {
  PrefixSampler s1(HierarchyDef::for_dim(1), 1.0);
  CHECK(s1.v() == 5);
  PrefixSampler s2(HierarchyDef::for_dim(1), 5 * std::ldexp(1.0, -10));
  CHECK(s2.v() == 1024);
  CHECK(s2.effective_tau() / 5 == doctest::Approx(std::ldexp(1.0, -10)));
  PrefixSampler s3(HierarchyDef::for_dim(1), 0.3);
  CHECK(s3.v() == 17);
  CHECK(s3.effective_tau() == doctest::Approx(5.0 / 17));
  CHECK_THROWS_AS(PrefixSampler(HierarchyDef::for_dim(1), 0.0), ConfigError);

  std::mt19937_64 rng(1);
  const auto key = FlowKey::one_d(0x01020304u);
  for (int i = 0; i < 1000; ++i) CHECK(s1.draw(key, rng).has_value());
}

TEST_CASE("hierarchy: sampler outcomes pass a chi-square test") {
  // tau = 0.5, H = 5: V = 10, each level 1/10, miss 1/2
  PrefixSampler s(HierarchyDef::for_dim(1), 0.5);
  REQUIRE(s.v() == 10);
  std::mt19937_64 rng(99);
  const auto key = FlowKey::one_d(0x0A0B0C0Du);
  std::array<double, 6> seen{};
  const int n = 1'000'000;
  for (int i = 0; i < n; ++i) {
    const auto p = s.draw(key, rng);
    if (!p) {
      seen[5] += 1;
      continue;
    }
    seen[static_cast<std::size_t>(p->depth())] += 1;
  }
  const std::array<double, 6> prob{0.1, 0.1, 0.1, 0.1, 0.1, 0.5};
  double chi2 = 0;
  for (std::size_t i = 0; i < 6; ++i) {
    const double e = prob[i] * n;
    chi2 += (seen[i] - e) * (seen[i] - e) / e;
  }
  CHECK(chi2 < 15.086);  // chi-square, 5 degrees of freedom, alpha = 0.01
}
