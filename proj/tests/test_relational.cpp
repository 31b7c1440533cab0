#include "doctest.h"
#include "helpers.hpp"
#include "uryforge/generators.hpp"
#include "uryforge/relational.hpp"

#include <nlohmann/json.hpp>

using namespace uryforge;

namespace {

RelStructure graph(const std::vector<std::string>& vertices,
                   const std::vector<std::pair<std::string, std::string>>& edges) {
  RelStructure s;
  for (const auto& v : vertices) s.add_point(v);
  for (const auto& [a, b] : edges) s.add_tuple("E", {*s.find(a), *s.find(b)});
  return s;
}

}  // namespace

TEST_CASE("free amalgam adds no cross relations") {
  auto ab = graph({"b", "a"}, {{"a", "b"}});
  auto cb = graph({"b", "c"}, {{"b", "c"}});
  auto out = free_amalgam(ab, cb, {});
  CHECK(out.has_tuple("E", {*out.find("a"), *out.find("b")}));
  CHECK(out.has_tuple("E", {*out.find("b"), *out.find("c")}));
  CHECK_FALSE(out.has_tuple("E", {*out.find("a"), *out.find("c")}));
}

TEST_CASE("free amalgam with C inside B returns the AB side unchanged") {
  auto ab = graph({"b1", "b2", "a"}, {{"a", "b1"}, {"b1", "b2"}});
  auto cb = graph({"b1", "b2"}, {{"b1", "b2"}});
  auto out = free_amalgam(ab, cb, {});
  CHECK(out.size() == 3);
  CHECK(out.has_tuple("E", {*out.find("a"), *out.find("b1")}));
  CHECK_FALSE(out.has_tuple("E", {*out.find("a"), *out.find("b2")}));
}

TEST_CASE("free amalgams of triangle-free graphs stay triangle-free") {
  // Exhaustive triangle scan as the oracle over 500 random instances.
  RelConstraints k3;
  k3.forbid_clique = 3;
  auto cls = ClassConfig::parse("knfree(3)");
  for (uint64_t seed = 1; seed <= 500; ++seed) {
    auto base = random_rel_fragment(cls, seed, 2 + seed % 3);
    Rng rng(seed * 3 + 1);
    auto ab = random_rel_fragment(cls, seed * 5 + 1, 1 + seed % 2);
    // Build AB and CB as extensions of the same base by renaming fresh parts.
    RelStructure left = base.universe();
    RelStructure right = base.universe();
    PointId la = left.add_point("A0");
    PointId rc = right.add_point("C0");
    for (PointId p : base.points()) {
      if (rng.coin()) {
        RelStructure cand = left;
        cand.add_tuple("E", {la, p});
        if (!has_clique(cand, "E", 3)) left = cand;
      }
      if (rng.coin()) {
        RelStructure cand = right;
        cand.add_tuple("E", {rc, p});
        if (!has_clique(cand, "E", 3)) right = cand;
      }
    }
    auto out = free_amalgam(left, right, k3);
    CHECK_FALSE(has_clique(out, "E", 3));
  }
}

TEST_CASE("relational independence detects spanning tuples") {
  auto path = graph({"a", "b", "c"}, {{"a", "b"}, {"b", "c"}});
  RelFragment frag(ClassConfig::parse("random_graph"), 1);
  // grow the same path inside a fragment
  PointId a = frag.adjoin_isolated();
  PointId b = frag.adjoin({{"E", {(int)a.v, -1}}});
  PointId c = frag.adjoin({{"E", {(int)b.v, -1}}});
  auto cert = frag.indep(PointSet{a}, PointSet{b}, PointSet{c});
  CHECK(cert.verdict);

  PointId d = frag.adjoin({{"E", {(int)a.v, -1}}});  // edge a-d
  auto cert2 = frag.indep(PointSet{a}, PointSet{b}, PointSet{d});
  CHECK_FALSE(cert2.verdict);
  CHECK(cert2.violating_tuple.size() == 2);
}

TEST_CASE("relational independence agrees with reconstruction from restrictions") {
  auto cls = ClassConfig::parse("random_graph");
  for (uint64_t seed = 1; seed <= 200; ++seed) {
    auto frag = random_rel_fragment(cls, seed, 4 + seed % 3);
    Rng rng(seed * 9 + 2);
    auto pts = frag.points();
    auto A = random_subset(rng, pts, 2, true);
    auto B = random_subset(rng, pts, 2, false);
    auto C = random_subset(rng, pts, 2, true);
    auto cert = frag.indep(A, B, C);

    // Oracle: independent iff the induced structure on A∪B∪C equals the free
    // amalgam of its two sides over B.
    PointSet ab = set_union(A, B), cb = set_union(C, B), all = set_union(ab, cb);
    auto lhs = frag.universe().restrict(all);
    auto rhs = free_amalgam(frag.universe().restrict(ab), frag.universe().restrict(cb), {});
    bool equal = lhs.size() == rhs.size();
    if (equal) {
      for (const auto& t : lhs.tuples("E")) {
        std::vector<PointId> mapped;
        for (uint32_t v : t) mapped.push_back(*rhs.find(lhs.label(PointId{v})));
        if (!rhs.has_tuple("E", mapped)) equal = false;
      }
      for (const auto& t : rhs.tuples("E")) {
        std::vector<PointId> mapped;
        for (uint32_t v : t) mapped.push_back(*lhs.find(rhs.label(PointId{v})));
        if (!lhs.has_tuple("E", mapped)) equal = false;
      }
    }
    CHECK(cert.verdict == equal);
  }
}

TEST_CASE("grow rejects patterns that force a forbidden clique") {
  RelFragment frag(ClassConfig::parse("knfree(3)"), 1);
  PointId u = frag.adjoin_isolated();
  PointId v = frag.adjoin({{"E", {(int)u.v, -1}}});
  CHECK_THROWS_AS(frag.adjoin({{"E", {(int)u.v, -1}}, {"E", {(int)v.v, -1}}}), Error);
  // adjacent to one end only is fine
  CHECK_NOTHROW(frag.adjoin({{"E", {(int)u.v, -1}}}));
}

TEST_CASE("rel structure JSON round trips") {
  auto s = graph({"u", "v", "w"}, {{"u", "v"}, {"v", "w"}});
  RelConstraints c;
  c.forbid_clique = 3;
  auto j = s.to_json(&c);
  CHECK(j["constraints"]["forbid_clique"] == 3);
  auto back = RelStructure::from_json(j);
  CHECK(back.to_json(&c).dump() == j.dump());
}
