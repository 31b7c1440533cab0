#include "doctest.h"
#include "helpers.hpp"
#include "uryforge/fragment.hpp"
#include "uryforge/generators.hpp"

#include <nlohmann/json.hpp>

using namespace uryforge;

TEST_CASE("metric fragment log replays bit-exactly") {
  for (uint64_t seed = 1; seed <= 50; ++seed) {
    auto frag = random_metric_fragment(ClassConfig{}, seed, 4 + seed % 4, 16, 10);
    auto copy = MetricFragment::replay(ClassConfig{}, seed, frag.log(), 16);
    CHECK(copy.universe().to_json().dump() == frag.universe().to_json().dump());
    CHECK(copy.log().dump() == frag.log().dump());
  }
}

TEST_CASE("relational fragment log replays bit-exactly") {
  auto cls = ClassConfig::parse("knfree(4)");
  for (uint64_t seed = 1; seed <= 50; ++seed) {
    auto frag = random_rel_fragment(cls, seed, 5);
    auto copy = RelFragment::replay(cls, seed, frag.log());
    CHECK(copy.universe().to_json().dump() == frag.universe().to_json().dump());
  }
}

TEST_CASE("canonical realization forces the amalgam distances") {
  MetricFragment frag(ClassConfig{}, 1);
  PointId b = frag.adjoin(KatetovFunction{});
  KatetovFunction fc;
  fc.base = {b};
  fc.values = {Rational(5)};
  PointId c = frag.adjoin(fc);

  // a template with one slot at distance 2 from b
  MetricTemplate t;
  t.base = {b};
  t.pattern.add_point("b");
  t.pattern.add_point("s0");
  t.pattern.set_distance(PointId{0}, PointId{1}, Rational(2));
  t.coord = {0};
  auto out = frag.realize(t);
  REQUIRE(out.size() == 1);
  CHECK(frag.universe().distance(out[0], b) == Rational(2));
  CHECK(frag.universe().distance(out[0], c) == Rational(7));  // forced through b
  CHECK(frag.indep(out, PointSet{b}, PointSet{c}).verdict);
}

TEST_CASE("templates keep overlapping coordinates") {
  MetricFragment frag(ClassConfig{}, 2);
  auto f0 = KatetovFunction{};
  PointId x = frag.adjoin(f0);
  KatetovFunction f1;
  f1.base = {x};
  f1.values = {Rational(3)};
  PointId y = frag.adjoin(f1);

  PointSet tuple{x, y};
  PointSet base{x};
  auto t = frag.type_of(tuple, base);
  CHECK(t.arity() == 2);
  CHECK(t.slots() == 1);
  CHECK(t.coord[0] < 0);  // x is kept
  auto out = frag.realize(t);
  CHECK(out[0] == x);
  CHECK(out[1] != y);  // fresh realization of the slot
  CHECK(frag.universe().distance(out[1], x) == Rational(3));
  CHECK(frag.realizes(out, t));
}

TEST_CASE("metric independence certificates carry exhaustive witnesses") {
  MetricFragment frag(ClassConfig{}, 3);
  PointId a = frag.adjoin(KatetovFunction{});
  KatetovFunction fb;
  fb.base = {a};
  fb.values = {Rational(1)};
  PointId b = frag.adjoin(fb);
  KatetovFunction fc;
  fc.base = {a, b};
  fc.values = {Rational(3), Rational(2)};
  PointId c = frag.adjoin(fc);

  auto cert = frag.indep(PointSet{a}, PointSet{b}, PointSet{c});
  CHECK(cert.verdict);
  REQUIRE(cert.witnesses.size() == 1);
  CHECK(cert.witnesses[0][2] == frag.label(b));

  // equilateral triangle: 1 != 2
  MetricFragment eq(ClassConfig{}, 4);
  PointId u = eq.adjoin(KatetovFunction{});
  KatetovFunction fv;
  fv.base = {u};
  fv.values = {Rational(1)};
  PointId v = eq.adjoin(fv);
  KatetovFunction fw;
  fw.base = {u, v};
  fw.values = {Rational(1), Rational(1)};
  PointId w = eq.adjoin(fw);
  auto cert2 = eq.indep(PointSet{u}, PointSet{v}, PointSet{w});
  CHECK_FALSE(cert2.verdict);
  CHECK(cert2.missing_pair.has_value());

  // C inside B holds with witness b = c
  auto cert3 = frag.indep(PointSet{a}, PointSet{b, c}, PointSet{c});
  CHECK(cert3.verdict);

  CHECK_THROWS_AS(frag.indep(PointSet{a}, PointSet{}, PointSet{c}), Error);
}

TEST_CASE("bounded class witnesses the cap") {
  MetricFragment frag(ClassConfig::parse("bounded_metric"), 5);
  PointId a = frag.adjoin(KatetovFunction{});
  KatetovFunction fb;
  fb.base = {a};
  fb.values = {Rational(1)};
  PointId b = frag.adjoin(fb);
  auto cert = frag.indep(PointSet{a}, PointSet{}, PointSet{b});
  CHECK(cert.verdict);
  REQUIRE(cert.witnesses.size() == 1);
  CHECK(cert.witnesses[0][2] == kCapWitness);
}

TEST_CASE("partial automorphism validity is exact distance preservation") {
  auto frag = random_metric_fragment(ClassConfig{}, 11, 5, 8, 10);
  auto pts = frag.points();
  PartialAutomorphism id = PartialAutomorphism::identity_on(pts);
  CHECK(frag.map_valid(id));
  CHECK(id.fixes(pts));

  PartialAutomorphism g;
  g.add(pts[0], pts[1]);
  bool valid = frag.map_valid(g);
  CHECK(valid);  // single pair is always consistent
  // a second pair must match distances exactly
  PartialAutomorphism h = g;
  bool ok = frag.pair_extension_ok(h, pts[1], pts[0]);
  bool expect = frag.universe().distance(pts[0], pts[1]) ==
                frag.universe().distance(pts[1], pts[0]);
  CHECK(ok == expect);
}

TEST_CASE("grid doubling is logged and pinning raises an obstruction") {
  MetricFragment frag(ClassConfig{}, 6, 4);
  frag.require_on_grid(Rational(1, 8));
  CHECK(frag.grid() == 8);
  frag.pin_grid(true);
  CHECK_THROWS_AS(frag.require_on_grid(Rational(1, 16)), Error);
}

TEST_CASE("class config parsing") {
  CHECK(ClassConfig::parse("metric").kind == ClassConfig::Kind::Metric);
  CHECK(ClassConfig::parse("knfree(4)").forbid_n == 4);
  CHECK(ClassConfig::parse("hypergraph(3)").arity == 3);
  CHECK(ClassConfig::parse("bounded_metric").name() == "bounded_metric");
  CHECK_THROWS_AS(ClassConfig::parse("euclidean"), Error);
}
