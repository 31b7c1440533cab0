#include "doctest.h"
#include "helpers.hpp"
#include "uryforge/engine.hpp"
#include "uryforge/generators.hpp"

using namespace uryforge;
using namespace uryforge::testing;

namespace {

MetricFragment small_frag(uint64_t seed, size_t n = 4) {
  return random_metric_fragment(ClassConfig{}, seed, n, 8, 10);
}

template <class F>
PartialAutomorphism random_map(F& frag, Rng& rng, size_t pairs) {
  PartialAutomorphism g;
  PointSet pts = frag.points();
  for (size_t i = 0; i < pairs && i < pts.size(); ++i) {
    PointId x = pts[rng.below(pts.size())];
    if (g.image(x)) continue;
    extend_map(frag, g, x, false);
  }
  return g;
}

}  // namespace

TEST_CASE("canonical extension of maps preserves structure") {
  for (uint64_t seed = 1; seed <= 500; ++seed) {
    auto frag = small_frag(seed, 3 + seed % 4);
    Rng rng(seed * 5 + 3);
    PartialAutomorphism g = random_map(frag, rng, 2);
    PointSet pts = frag.points();
    PointId x = pts[rng.below(pts.size())];
    extend_map(frag, g, x, rng.coin());
    CHECK(frag.map_valid(g));
  }
}

TEST_CASE("seeded back-and-forth extension stays valid") {
  for (uint64_t seed = 1; seed <= 500; ++seed) {
    auto frag = small_frag(seed, 4);
    Rng rng(seed);
    PartialAutomorphism g;
    extend_map(frag, g, frag.points()[0], false);
    for (int step = 0; step < 4; ++step) {
      PointId x = frag.points()[rng.below(frag.size())];
      extend_partial_auto(frag, g, x, rng.coin());
      CHECK(frag.map_valid(g));
    }
  }
}

TEST_CASE("forward plus backward closure yields a bijection of the closure") {
  auto frag = small_frag(7, 5);
  PartialAutomorphism g;
  extend_map(frag, g, frag.points()[0], false);
  extend_map(frag, g, frag.points()[1], false);
  PointSet closure = set_union(g.domain(), g.range());
  for (int round = 0; round < 3; ++round) {
    for (PointId p : closure) {
      extend_map(frag, g, p, false);
      extend_map(frag, g, p, true);
    }
    closure = set_union(g.domain(), g.range());
  }
  for (PointId p : sorted_unique(g.domain())) {
    CHECK(g.image(p).has_value());
  }
  CHECK(frag.map_valid(g));
}

TEST_CASE("conjugation identities hold on evaluated points") {
  auto frag = small_frag(11, 4);
  PartialAutomorphism g = random_map(frag, frag.rng(), 2);
  PartialAutomorphism h = random_map(frag, frag.rng(), 2);
  PartialAutomorphism k = random_map(frag, frag.rng(), 2);
  DirectMover<MetricFragment> gm(g);
  ConjugatedMover<MetricFragment> gh(gm, h);
  ConjugatedMover<MetricFragment> ghk(gh, k);
  // (g^h)^k = g^(h∘k) evaluated at a point
  PointId x = frag.points()[0];
  PointId left = ghk.apply(frag, x, false);
  PointId t = extend_map(frag, k, x, false);
  t = extend_map(frag, h, t, false);
  t = extend_map(frag, g, t, false);
  t = extend_map(frag, h, t, true);
  PointId right = extend_map(frag, k, t, true);
  CHECK(left == right);
  // g^h(h⁻¹(x)) = h⁻¹(g(x))
  PointId hx = extend_map(frag, h, x, true);
  PointId lhs = gh.apply(frag, hx, false);
  PointId rhs = extend_map(frag, h, extend_map(frag, g, x, false), true);
  CHECK(lhs == rhs);
}

TEST_CASE("max moves certify pair independence for both orientations") {
  for (uint64_t seed = 1; seed <= 100; ++seed) {
    auto frag = small_frag(seed, 3);
    Rng rng(seed * 17);
    PartialAutomorphism g = random_map(frag, rng, 2);
    DirectMover<MetricFragment> gm(g);
    PointSet X = random_subset(rng, frag.points(), 2, true);
    auto p = frag.type_of(PointSet{frag.points()[rng.below(frag.size())]}, X);
    bool inv = rng.coin();
    auto mm = gm.max_move(frag, X, p, inv);
    CHECK(mm.cert.verdict);
    CHECK(frag.map_valid(g));
    CHECK(frag.realizes(mm.witness, p));
  }
}

TEST_CASE("move_type_independent keeps the type and gains independence") {
  // containment case: D inside B∪C comes back unchanged
  {
    MetricFragment frag2(ClassConfig{}, 9);
    PointId b = frag2.adjoin(KatetovFunction{});
    KatetovFunction fc;
    fc.base = {b};
    fc.values = {Rational(2)};
    PointId c = frag2.adjoin(fc);
    auto ta = frag2.type_of(PointSet{c}, PointSet{b});
    PointSet a = frag2.realize(ta);
    REQUIRE(frag2.indep(a, PointSet{b}, PointSet{c}).verdict);
    auto out = move_type_independent(frag2, a, PointSet{b}, PointSet{c}, PointSet{b, c});
    CHECK(out.d_prime == PointSet{b, c});
    CHECK(out.checks.verified);
  }
  for (uint64_t seed = 1; seed <= 200; ++seed) {
    MetricFragment frag = small_frag(seed, 4);
    Rng rng(seed * 23 + 1);
    auto pts = frag.points();
    PointSet B = random_subset(rng, pts, 2, true);
    PointSet C = random_subset(rng, pts, 2, true);
    PointSet D = random_subset(rng, pts, 2, true);
    PointSet A = frag.realize(frag.type_of(PointSet{pts[rng.below(pts.size())]}, B));
    REQUIRE(frag.indep(A, B, C).verdict);
    auto out = move_type_independent(frag, A, B, C, D);
    CHECK(out.checks.verified);
  }
}

TEST_CASE("fix_conjugators_independent fixes the base and wins joint independence") {
  for (uint64_t seed = 1; seed <= 100; ++seed) {
    auto frag = small_frag(seed, 4);
    Rng rng(seed * 31 + 5);
    auto pts = frag.points();
    PointSet B = random_subset(rng, pts, 2, true);
    PointSet C = random_subset(rng, pts, 2, true);
    PointSet A = frag.realize(frag.type_of(PointSet{pts[rng.below(pts.size())]}, B));
    REQUIRE(frag.indep(A, B, C).verdict);
    size_t n = rng.below(3);
    std::vector<PartialAutomorphism> maps;
    for (size_t i = 0; i < n; ++i) maps.push_back(random_map(frag, rng, 2));
    std::vector<Mover<MetricFragment>*> movers;
    std::vector<std::unique_ptr<DirectMover<MetricFragment>>> own;
    for (auto& m : maps) {
      own.push_back(std::make_unique<DirectMover<MetricFragment>>(m));
      movers.push_back(own.back().get());
    }
    auto out = fix_conjugators_independent(frag, A, B, C, movers);
    CHECK(out.checks.verified);
  }
}

TEST_CASE("identity map conjugates C onto itself") {
  MetricFragment frag(ClassConfig{}, 21);
  PointId b = frag.adjoin(KatetovFunction{});
  KatetovFunction fc;
  fc.base = {b};
  fc.values = {Rational(1)};
  PointId c = frag.adjoin(fc);
  auto ta = frag.type_of(PointSet{c}, PointSet{b});
  PointSet A = frag.realize(ta);
  PartialAutomorphism idm = PartialAutomorphism::identity_on(PointSet{c});
  DirectMover<MetricFragment> gm(idm);
  std::vector<Mover<MetricFragment>*> movers{&gm};
  auto out = fix_conjugators_independent(frag, A, PointSet{b}, PointSet{c}, movers);
  CHECK(out.checks.verified);
  REQUIRE(out.conjugated.size() == 1);
  CHECK(out.conjugated[0] == PointSet{c});
}

TEST_CASE("pull_independent detaches the conjugated image from C") {
  for (uint64_t seed = 1; seed <= 100; ++seed) {
    MetricFragment frag(ClassConfig{}, seed);
    frag.adjoin(KatetovFunction{});
    Rng rng(seed * 7 + 1);
    auto grow = [&](PointId from, Rational d) {
      KatetovFunction f;
      f.base = frag.points();
      for (PointId w : f.base) {
        f.values.push_back(d + frag.universe().distance(from, w));
      }
      return frag.adjoin(f);
    };
    PointId x = frag.points()[0];
    PartialAutomorphism g;
    PointId y = grow(x, Rational(1 + (long long)rng.below(3)));
    g.add(x, y);
    PointId c = grow(y, Rational(1 + (long long)rng.below(3)));
    REQUIRE(frag.indep(PointSet{x}, PointSet{y}, PointSet{c}).verdict);
    DirectMover<MetricFragment> gm(g);
    PointSet tup{frag.points()[rng.below(frag.size())]};
    auto out = pull_independent(frag, gm, PointSet{x}, PointSet{y}, PointSet{c}, tup);
    CHECK(out.checks.verified);
  }
}

TEST_CASE("conjugate_onto lands exactly on the target") {
  for (uint64_t seed = 1; seed <= 100; ++seed) {
    MetricFragment frag(ClassConfig{}, seed);
    PointId x0 = frag.adjoin(KatetovFunction{});
    KatetovFunction fy;
    fy.base = {x0};
    fy.values = {Rational(2)};
    PointId y0 = frag.adjoin(fy);
    PartialAutomorphism g;
    g.add(x0, y0);
    DirectMover<MetricFragment> gm(g);
    PointSet X{x0}, Y{y0};
    Rng rng(seed * 11);
    auto px = frag.type_of(PointSet{frag.points()[rng.below(frag.size())]}, X);
    PointSet x = frag.realize(px);
    auto py = transport_template<MetricFragment>(
        frag.type_of(x, X), [&](PointId b) { return *g.image(b); });
    PointSet y = frag.realize(py);
    REQUIRE(frag.pair_indep(x, X, Y, y).verdict);
    auto out = conjugate_onto(frag, gm, X, Y, x, y);
    CHECK(out.checks.verified);
  }
}

TEST_CASE("align_chain on the identity chain over a singleton") {
  MetricFragment frag(ClassConfig{}, 33);
  PointId x = frag.adjoin(KatetovFunction{});
  std::array<PartialAutomorphism, 4> gs;
  std::array<std::unique_ptr<DirectMover<MetricFragment>>, 4> own;
  std::array<Mover<MetricFragment>*, 4> movers;
  for (int i = 0; i < 4; ++i) {
    gs[(size_t)i] = PartialAutomorphism::identity_on(PointSet{x});
    own[(size_t)i] = std::make_unique<DirectMover<MetricFragment>>(gs[(size_t)i]);
    movers[(size_t)i] = own[(size_t)i].get();
  }
  std::array<PointSet, 5> X;
  for (auto& s : X) s = PointSet{x};
  auto out = align_chain(frag, movers, X);
  CHECK(out.checks.verified);
  CHECK(out.conj[1].pairs == out.conj[2].pairs);
}

namespace {

struct ChainFixture {
  MetricFragment frag;
  std::array<PartialAutomorphism, 4> gs;
  std::array<std::unique_ptr<DirectMover<MetricFragment>>, 4> own;
  std::array<Mover<MetricFragment>*, 4> movers;
  std::array<PointSet, 5> X;

  explicit ChainFixture(uint64_t seed)
      : frag(random_metric_fragment(ClassConfig{}, seed, 3, 8, 8)) {
    Rng rng(seed * 41 + 3);
    X[0] = random_subset(rng, frag.points(), 2, true);
    for (int i = 0; i < 4; ++i) {
      own[(size_t)i] = std::make_unique<DirectMover<MetricFragment>>(gs[(size_t)i]);
      movers[(size_t)i] = own[(size_t)i].get();
      X[(size_t)i + 1] =
          sorted_unique(own[(size_t)i]->apply_tuple(frag, X[(size_t)i], false));
    }
  }
};

}  // namespace

TEST_CASE("align_chain produces the advertised independences on random chains") {
  for (uint64_t seed = 1; seed <= 25; ++seed) {
    ChainFixture fx(seed);
    auto out = align_chain(fx.frag, fx.movers, fx.X);
    CHECK(out.checks.verified);
  }
}

TEST_CASE("four_chain_transport carries x0 to x4 exactly") {
  for (uint64_t seed = 1; seed <= 25; ++seed) {
    ChainFixture fx(seed);
    auto zur = align_chain(fx.frag, fx.movers, fx.X);
    REQUIRE(zur.checks.verified);
    std::array<std::unique_ptr<ConjugatedMover<MetricFragment>>, 4> hb;
    std::array<Mover<MetricFragment>*, 4> hbs;
    for (int i = 0; i < 4; ++i) {
      hb[(size_t)i] = std::make_unique<ConjugatedMover<MetricFragment>>(
          *fx.movers[(size_t)i], zur.conj[(size_t)i]);
      hbs[(size_t)i] = hb[(size_t)i].get();
    }
    Rng rng(seed * 51);
    PointSet x0 = fx.frag.realize(
        fx.frag.type_of(PointSet{fx.frag.points()[rng.below(fx.frag.size())]}, zur.Y[0]));
    auto t = fx.frag.type_of(x0, zur.Y[0]);
    for (int i = 0; i < 4; ++i) {
      t = transport_template<MetricFragment>(
          t, [&](PointId b) { return hbs[(size_t)i]->apply(fx.frag, b, false); });
    }
    PointSet x4 = fx.frag.realize(t);
    auto out = four_chain_transport(fx.frag, hbs, zur.Y, x0, x4);
    CHECK(out.checks.verified);
  }
}

TEST_CASE("density witness with empty conditions realizes requested extensions") {
  for (uint64_t seed = 1; seed <= 10; ++seed) {
    auto frag = small_frag(seed, 3);
    PartialAutomorphism gmap;
    extend_map(frag, gmap, frag.points()[0], false);
    DirectMover<MetricFragment> g(gmap);
    std::array<const PartialAutomorphism*, 4> u{nullptr, nullptr, nullptr, nullptr};
    DensityRun<MetricFragment> run(frag, g, u);
    PartialAutomorphism target = run.base_map();
    PointSet x0 = frag.realize(frag.type_of(PointSet{frag.points()[0]}, run.Y()[0]));
    auto t = frag.type_of(x0, run.Y()[0]);
    auto movers = run.chain_movers();
    for (int i = 0; i < 4; ++i) {
      t = transport_template<MetricFragment>(
          t, [&](PointId b) { return movers[(size_t)i]->apply(frag, b, false); });
    }
    PointSet x4 = frag.realize(t);
    target.add(x0[0], x4[0]);
    auto out = run.finish(&target);
    CHECK(out.checks.verified);
  }
}

TEST_CASE("density witness threads nonempty open conditions") {
  for (uint64_t seed = 1; seed <= 10; ++seed) {
    auto frag = small_frag(seed, 3);
    Rng rng(seed * 3);
    PartialAutomorphism gmap;
    extend_map(frag, gmap, frag.points()[0], false);
    DirectMover<MetricFragment> g(gmap);
    std::array<PartialAutomorphism, 4> conds;
    for (auto& cnd : conds) cnd = random_map(frag, rng, 1);
    std::array<const PartialAutomorphism*, 4> u{&conds[0], &conds[1], &conds[2], &conds[3]};
    auto out = density_witness(frag, g, u, nullptr);
    CHECK(out.checks.verified);
    for (int i = 0; i < 4; ++i) {
      for (const auto& [a, b] : conds[(size_t)i].pairs) {
        auto img = out.factors[(size_t)i].image(a);
        REQUIRE(img.has_value());
        CHECK(*img == b);
      }
    }
  }
}

TEST_CASE("dense conjugacy witness matches both joint types") {
  for (uint64_t seed = 1; seed <= 100; ++seed) {
    auto frag = small_frag(seed, 2);
    Rng rng(seed * 13 + 7);
    PointSet basex{frag.points()[0]};
    auto t = frag.type_of(PointSet{frag.points()[1]}, basex);
    PointSet x = frag.realize(t);
    PointSet y = frag.realize(t);
    PointSet a = random_subset(rng, frag.points(), 2, true);
    auto ta = frag.type_of(a, PointSet{});
    PointSet b = frag.realize(ta);
    auto out = dense_conjugacy_witness(frag, x, y, a, b);
    CHECK(out.checks.verified);
  }
}

TEST_CASE("eight-factor chain: trivial cases verify pointwise") {
  {
    auto frag = small_frag(5, 3);
    PartialAutomorphism gmap;
    extend_map(frag, gmap, frag.points()[0], false);
    extend_map(frag, gmap, frag.points()[1], false);
    DirectMover<MetricFragment> g(gmap);
    PartialAutomorphism f;
    f.add(gmap.pairs[0].first, gmap.pairs[0].second);
    auto out = eight_factor_search(frag, g, f, 3);
    CHECK(out.success);
    CHECK(out.slots.size() == 8);
    int pos = 0;
    for (const auto& s : out.slots) pos += s.positive ? 1 : 0;
    CHECK(pos == 4);
  }
  {
    auto frag = small_frag(6, 3);
    PartialAutomorphism gmap;
    extend_map(frag, gmap, frag.points()[0], false);
    DirectMover<MetricFragment> g(gmap);
    PartialAutomorphism f = PartialAutomorphism::identity_on(PointSet{frag.points()[1]});
    auto out = eight_factor_search(frag, g, f, 3);
    CHECK(out.success);
    CHECK(out.slots.size() == 8);
  }
}

TEST_CASE("eight-factor chain: general search either verifies or reports") {
  int successes = 0;
  for (uint64_t seed = 1; seed <= 6; ++seed) {
    auto frag = small_frag(seed, 3);
    Rng rng(seed * 19);
    PartialAutomorphism gmap;
    extend_map(frag, gmap, frag.points()[0], false);
    DirectMover<MetricFragment> g(gmap);
    PartialAutomorphism f = random_map(frag, rng, 2);
    auto out = eight_factor_search(frag, g, f, 4);
    if (out.success) {
      ++successes;
      CHECK(out.checks.verified);
    } else {
      CHECK(out.failure.contains("reason"));
    }
  }
  MESSAGE("eight-factor successes: ", successes, "/6");
}

TEST_CASE("extension property report on metric fragments") {
  MetricFragment frag(ClassConfig{}, 2, 2);
  PointId p0 = frag.adjoin(KatetovFunction{});
  auto before = certify_extension_property(frag, 1, 2, 2, 100000);
  CHECK_FALSE(before.all_present());
  for (const auto& m : before.missing) {
    KatetovFunction f;
    f.base = frag.points();
    PointSet base = points_from(frag, m.at("base"));
    for (PointId w : f.base) {
      Rational v = Rational::parse(m.at("values").at(0).get<std::string>());
      if (w == base[0]) {
        f.values.push_back(v);
      } else {
        f.values.push_back(v + frag.universe().distance(base[0], w));
      }
    }
    frag.adjoin(f);
  }
  auto after = certify_extension_property(frag, 1, 2, 2, 100000);
  bool original_covered = true;
  for (const auto& m : after.missing) {
    if (points_from(frag, m.at("base"))[0] == p0) original_covered = false;
  }
  CHECK(original_covered);
  CHECK_THROWS_AS(certify_extension_property(frag, 2, 2, 2, 3), Error);
}

TEST_CASE("extension property report on relational fragments") {
  auto cls = ClassConfig::parse("random_graph");
  auto frag = random_rel_fragment(cls, 3, 4);
  auto report = certify_extension_property(frag, 2, 100000);
  CHECK(report.types > 0);
  auto missing = report.missing;
  for (const auto& m : missing) {
    PointSet base = points_from(frag, m.at("base"));
    size_t mask = m.at("pattern_mask").get<size_t>();
    std::vector<std::pair<std::string, std::vector<int>>> incident;
    for (size_t i = 0; i < base.size(); ++i) {
      if (mask & (size_t(1) << i)) {
        incident.push_back({"E", {(int)base[i].v, -1}});
      }
    }
    frag.adjoin(incident);
  }
  auto after = certify_extension_property(frag, 2, 100000);
  CHECK(after.realized >= report.realized);
}
