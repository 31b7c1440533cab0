#include "doctest.h"
#include "helpers.hpp"
#include "uryforge/generators.hpp"
#include "uryforge/metric.hpp"

#include <nlohmann/json.hpp>

using namespace uryforge;
using namespace uryforge::testing;

TEST_CASE("validate_metric accepts a tight geodesic triangle") {
  auto s = make_space({"a", "b", "c"},
                      {{"a", "b", Rational(1)}, {"b", "c", Rational(1)}, {"a", "c", Rational(2)}});
  CHECK(validate_metric(s).ok());
}

TEST_CASE("validate_metric lists the violating triple") {
  auto s = make_space({"a", "b", "c"},
                      {{"a", "b", Rational(1)}, {"b", "c", Rational(1)}, {"a", "c", Rational(3)}});
  auto report = validate_metric(s);
  REQUIRE(report.violations.size() == 1);
  CHECK(report.violations[0].kind == MetricViolation::Kind::TriangleInequality);
  CHECK(report.violations[0].points == std::vector<std::string>{"a", "b", "c"});
}

TEST_CASE("is_katetov on a two point base") {
  auto s = make_space({"x1", "x2"}, {{"x1", "x2", Rational(2)}});
  CHECK(is_katetov(s, over(s, {{"x1", Rational(1)}, {"x2", Rational(1)}})));
  CHECK_FALSE(is_katetov(s, over(s, {{"x1", Rational(1)}, {"x2", Rational(4)}})));
  auto s3 = make_space({"x1", "x2"}, {{"x1", "x2", Rational(3)}});
  CHECK_FALSE(is_katetov(s3, over(s3, {{"x1", Rational(1)}, {"x2", Rational(1)}})));
  KatetovFunction bad;
  bad.base.push_back(PointId{9});
  bad.values.push_back(Rational(1));
  CHECK_THROWS_AS((void)is_katetov(s, bad), Error);
}

TEST_CASE("adjoin_point realizes the extension and deletes back to the original") {
  auto s = make_space({"x"}, {});
  PointId fresh = adjoin_point(s, over(s, {{"x", Rational(5)}}), "a");
  CHECK(s.distance(*s.find("x"), fresh) == Rational(5));
  CHECK(validate_metric(s).ok());

  PointSet original{*s.find("x")};
  FinMetricSpace back = s.restrict(original);
  CHECK(back.size() == 1);
  CHECK(back.label(PointId{0}) == "x");

  CHECK_THROWS_AS(adjoin_point(s, over(s, {{"x", Rational(1)}}), "short"), Error);
}

TEST_CASE("adjoined extensions always produce valid spaces") {
  // validate_metric is the oracle for 500 sampled (space, extension) pairs.
  for (uint64_t seed = 1; seed <= 500; ++seed) {
    auto frag = random_metric_fragment(ClassConfig{}, seed, 2 + seed % 5, 8, 12);
    CHECK(validate_metric(frag.universe()).ok());
  }
}

TEST_CASE("canonical amalgam takes the shortest path through the base") {
  auto ab = make_space({"b1", "b2", "a"}, {{"b1", "b2", Rational(3)},
                                           {"a", "b1", Rational(1)},
                                           {"a", "b2", Rational(4)}});
  auto cb = make_space({"b1", "b2", "c"}, {{"b1", "b2", Rational(3)},
                                           {"c", "b1", Rational(2)},
                                           {"c", "b2", Rational(2)}});
  auto out = canonical_amalgam(ab, cb);
  CHECK(out.distance(*out.find("a"), *out.find("c")) == Rational(3));
  CHECK(validate_metric(out).ok());
}

TEST_CASE("canonical amalgam over a single base point is the geodesic value") {
  auto ab = make_space({"b", "a"}, {{"a", "b", Rational(1)}});
  auto cb = make_space({"b", "c"}, {{"c", "b", Rational(2)}});
  auto out = canonical_amalgam(ab, cb);
  CHECK(out.distance(*out.find("a"), *out.find("c")) == Rational(3));
}

TEST_CASE("canonical amalgam errors") {
  auto ab = make_space({"a"}, {});
  auto cb = make_space({"c"}, {});
  CHECK_THROWS_AS(canonical_amalgam(ab, cb), Error);  // EmptyBase

  auto ab2 = make_space({"b1", "b2", "a"}, {{"b1", "b2", Rational(3)},
                                            {"a", "b1", Rational(1)},
                                            {"a", "b2", Rational(4)}});
  auto cb2 = make_space({"b1", "b2", "c"}, {{"b1", "b2", Rational(2)},
                                            {"c", "b1", Rational(1)},
                                            {"c", "b2", Rational(1)}});
  CHECK_THROWS_AS(canonical_amalgam(ab2, cb2), Error);  // BaseMismatch
}

TEST_CASE("canonical amalgam with C inside B returns the AB side unchanged") {
  auto ab = make_space({"b1", "b2", "a"}, {{"b1", "b2", Rational(2)},
                                           {"a", "b1", Rational(1)},
                                           {"a", "b2", Rational(1)}});
  auto cb = make_space({"b1", "b2"}, {{"b1", "b2", Rational(2)}});
  auto out = canonical_amalgam(ab, cb);
  REQUIRE(out.size() == ab.size());
  for (PointId p : ab.all_points()) {
    for (PointId q : ab.all_points()) {
      CHECK(out.distance(*out.find(ab.label(p)), *out.find(ab.label(q))) ==
            ab.distance(p, q));
    }
  }
}

TEST_CASE("random canonical amalgams are valid and geodesically witnessed") {
  for (uint64_t seed = 1; seed <= 500; ++seed) {
    auto base = random_metric_fragment(ClassConfig{}, seed, 1 + seed % 3, 8, 10);
    const FinMetricSpace& b = base.universe();
    FinMetricSpace ab = b, cb = b;
    Rng r2(seed * 77 + 1);
    adjoin_point(ab, random_katetov(base, r2, 10), "A0");
    adjoin_point(cb, random_katetov(base, r2, 10), "C0");
    auto out = canonical_amalgam(ab, cb);
    CHECK(validate_metric(out).ok());
    // every cross pair has an exact geodesic witness in the base
    PointId a = *out.find("A0"), c = *out.find("C0");
    bool witnessed = false;
    for (PointId p : b.all_points()) {
      PointId bp = *out.find(b.label(p));
      if (out.distance(a, c) == out.distance(a, bp) + out.distance(bp, c)) witnessed = true;
    }
    CHECK(witnessed);
  }
}

TEST_CASE("bounded amalgam caps the cross distance") {
  auto ab = make_space({"b", "a"}, {{"a", "b", Rational(7, 10)}});
  auto cb = make_space({"b", "c"}, {{"c", "b", Rational(8, 10)}});
  auto out = bounded_amalgam(ab, cb);
  CHECK(out.distance(*out.find("a"), *out.find("c")) == Rational(1));

  auto ab2 = make_space({"b", "a"}, {{"a", "b", Rational(2, 10)}});
  auto cb2 = make_space({"b", "c"}, {{"c", "b", Rational(3, 10)}});
  auto out2 = bounded_amalgam(ab2, cb2);
  CHECK(out2.distance(*out2.find("a"), *out2.find("c")) == Rational(1, 2));
}

TEST_CASE("bounded amalgam over the empty base uses the cap") {
  auto ab = make_space({"a"}, {});
  auto cb = make_space({"c"}, {});
  auto out = bounded_amalgam(ab, cb);
  CHECK(out.distance(*out.find("a"), *out.find("c")) == Rational(1));
}

TEST_CASE("bounded amalgam rejects inputs above the cap") {
  auto ab = make_space({"b", "a"}, {{"a", "b", Rational(2)}});
  auto cb = make_space({"b", "c"}, {{"c", "b", Rational(1, 2)}});
  CHECK_THROWS_AS(bounded_amalgam(ab, cb), Error);
}

TEST_CASE("minimal distance amalgam computes the max gap") {
  auto x = make_space({"x1", "x2"}, {{"x1", "x2", Rational(2)}});
  auto res = min_distance_amalgam(x, over(x, {{"x1", Rational(3)}, {"x2", Rational(5)}}),
                                  over(x, {{"x1", Rational(1)}, {"x2", Rational(2)}}),
                                  "y", "z");
  CHECK(res.yz == Rational(3));
  CHECK_FALSE(res.identified);
  CHECK(res.space.distance(*res.space.find("y"), *res.space.find("z")) == Rational(3));
  CHECK(validate_metric(res.space).ok());
}

TEST_CASE("minimal distance amalgam identifies coinciding extensions") {
  auto x = make_space({"x1", "x2"}, {{"x1", "x2", Rational(2)}});
  auto f = over(x, {{"x1", Rational(1)}, {"x2", Rational(1)}});
  auto res = min_distance_amalgam(x, f, f, "y", "z");
  CHECK(res.identified);
  CHECK(res.yz == Rational(0));
  CHECK(res.z_label == res.y_label);
  CHECK(res.space.size() == 3);
}

TEST_CASE("random minimal distance amalgams are valid metrics") {
  for (uint64_t seed = 1; seed <= 500; ++seed) {
    auto frag = random_metric_fragment(ClassConfig{}, seed, 2 + seed % 4, 8, 10);
    Rng rng(seed * 13 + 5);
    auto d1 = random_katetov(frag, rng, 10);
    auto d2 = random_katetov(frag, rng, 10);
    auto res = min_distance_amalgam(frag.universe(), d1, d2, "Y", "Z");
    CHECK(validate_metric(res.space).ok());
    // d_hat is the stated maximum
    Rational expect(0);
    for (size_t i = 0; i < d1.base.size(); ++i) {
      expect = max(expect, (d1.values[i] - d2.at(d1.base[i])).abs());
    }
    CHECK(res.yz == expect);
  }
}

TEST_CASE("minimal distance is optimal: exhaustive grid search finds nothing smaller") {
  // Independent oracle: every metric on X ∪ {y,z} extending d1, d2 with grid
  // denominators satisfies d(y,z) >= d_hat, and d_hat itself works.
  for (uint64_t seed = 1; seed <= 100; ++seed) {
    auto frag = random_metric_fragment(ClassConfig{}, seed, 1 + seed % 3, 4, 6);
    Rng rng(seed * 31 + 7);
    auto d1 = random_katetov(frag, rng, 6);
    auto d2 = random_katetov(frag, rng, 6);
    auto res = min_distance_amalgam(frag.universe(), d1, d2, "Y", "Z");
    const long long grid = 4;
    Rational upper = d1.values[0] + d2.at(d1.base[0]);
    for (size_t i = 1; i < d1.base.size(); ++i) {
      upper = min(upper, d1.values[i] + d2.at(d1.base[i]));
    }
    std::optional<Rational> smallest;
    for (long long k = 0; k <= grid_floor(upper, grid); ++k) {
      Rational cand(k, grid);
      bool feasible = true;
      for (size_t i = 0; i < d1.base.size() && feasible; ++i) {
        const Rational& a = d1.values[i];
        const Rational& b = d2.at(d1.base[i]);
        if ((a - b).abs() > cand || cand > a + b) feasible = false;
      }
      if (feasible) {
        smallest = cand;
        break;
      }
    }
    REQUIRE(smallest.has_value());
    CHECK(*smallest == res.yz);
  }
}

TEST_CASE("geodesic sequences") {
  auto s = make_space({"a", "b", "c"},
                      {{"a", "b", Rational(1)}, {"b", "c", Rational(1)}, {"a", "c", Rational(2)}});
  CHECK(is_geodesic(s, named(s, {"a", "b", "c"})));
  auto s2 = make_space({"a", "b", "c"}, {{"a", "b", Rational(1)},
                                         {"b", "c", Rational(1)},
                                         {"a", "c", Rational(3, 2)}});
  CHECK_FALSE(is_geodesic(s2, named(s2, {"a", "b", "c"})));
}

TEST_CASE("katetov closure: every point's distance vector is a valid type") {
  for (uint64_t seed = 1; seed <= 100; ++seed) {
    auto frag = random_metric_fragment(ClassConfig{}, seed, 3 + seed % 4, 8, 10);
    const auto& s = frag.universe();
    for (PointId a : s.all_points()) {
      KatetovFunction f;
      for (PointId x : s.all_points()) {
        if (x == a) continue;
        f.base.push_back(x);
        f.values.push_back(s.distance(a, x));
      }
      CHECK(is_katetov(s, f));
    }
  }
}

TEST_CASE("space JSON round trips bit-exactly") {
  auto s = make_space({"a", "b", "c"}, {{"a", "b", Rational(1, 2)},
                                        {"b", "c", Rational(5, 6)},
                                        {"a", "c", Rational(4, 3)}});
  auto j = s.to_json();
  auto back = FinMetricSpace::from_json(j);
  CHECK(back.to_json().dump() == j.dump());
  CHECK(j["dist"][0][2] == "1/2");
}
