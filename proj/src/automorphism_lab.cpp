#include "uryforge/automorphism_lab.hpp"

namespace uryforge {

namespace {

// Anchor of the displacement ledger: the recorded pair with the largest
// displacement, seeding the map with a fixed point when it is empty.
std::pair<PointId, Rational> anchor_of(MetricFragment& frag, MetricMover& g) {
  PartialAutomorphism& m = g.underlying();
  if (m.pairs.empty()) {
    PointId p = frag.size() ? frag.points()[0] : frag.adjoin_isolated();
    m.add(p, p);
  }
  PointId best = m.pairs[0].first;
  Rational bestd = frag.universe().distance(m.pairs[0].first, m.pairs[0].second);
  for (const auto& [x, y] : m.pairs) {
    Rational d = frag.universe().distance(x, y);
    if (d > bestd) {
      best = x;
      bestd = d;
    }
  }
  return {best, bestd};
}

Rational grid_ceil_value(const MetricFragment& frag, const Rational& v) {
  if (v <= Rational(0)) return Rational(0);
  long long g = frag.grid();
  __int128 num = (__int128)v.num() * g;
  long long k = (long long)(num / v.den());
  if (num % v.den() != 0) ++k;
  return Rational(k, g);
}

}  // namespace

DisplacementWitness displacement(const MetricFragment& frag, const PartialAutomorphism& g,
                                 PointId x) {
  auto img = g.image(x);
  if (!img) throw Error(ErrorKind::UnknownPoint, "displacement of an unmapped point");
  return {x, *img, frag.universe().distance(x, *img)};
}

MetricTemplate template_from_katetov(const MetricFragment& frag, const KatetovFunction& f) {
  MetricTemplate t;
  t.base = sorted_unique(f.base);
  t.pattern = frag.universe().restrict(t.base);
  PointId slot = t.pattern.add_point("s0");
  for (size_t i = 0; i < t.base.size(); ++i) {
    t.pattern.set_distance(slot, PointId{(uint32_t)i}, f.at(t.base[i]));
  }
  t.coord = {0};
  return t;
}

KatetovFunction prolongation(const KatetovFunction& p, const Rational& d) {
  if (d.is_negative()) throw Error(ErrorKind::KatetovViolation, "negative prolongation");
  KatetovFunction out;
  out.base = p.base;
  for (const auto& v : p.values) out.values.push_back(v + d);
  return out;
}

GrowUnboundedOut grow_unbounded(MetricFragment& frag, MetricMover& g, const Rational& R) {
  Checker<MetricFragment> ck(frag);
  auto [a, D] = anchor_of(frag, g);
  GrowUnboundedOut out;
  if (D >= R) {
    out.witness = displacement(frag, g.underlying(), a);
    ck.dist_cmp(out.witness.point, out.witness.image, "ge", R);
    out.checks = ck.take();
    return out;
  }
  Rational N = grid_ceil_value(frag, (R - D).half());
  if (N.is_zero()) N = Rational(1, frag.grid());
  KatetovFunction p;
  p.base = {a};
  p.values = {N};
  auto mm = g.max_move(frag, PointSet{a}, template_from_katetov(frag, p), false);
  out.witness = {mm.witness[0], mm.image[0],
                 frag.universe().distance(mm.witness[0], mm.image[0])};
  // the doubling identity is exact: displacement = D + 2N
  ck.dist_cmp(out.witness.point, out.witness.image, "eq", D + N + N);
  ck.dist_cmp(out.witness.point, out.witness.image, "ge", R);
  out.checks = ck.take();
  if (!out.checks.verified) {
    throw Error(ErrorKind::Internal, "doubling step missed its displacement");
  }
  return out;
}

ReflectionPrepOut reflection_prep(MetricFragment& frag, MetricMover& g, PointId x1,
                                  PointId x2, const Rational& R) {
  if (x1 == x2) throw Error(ErrorKind::PreconditionFailed, "reflection prep needs x1 != x2");
  Checker<MetricFragment> ck(frag);
  const Rational dx = frag.universe().distance(x1, x2);
  auto [a, D] = anchor_of(frag, g);
  Rational need_disp = R + dx + dx;
  Rational n1 = grid_ceil_value(frag, (need_disp - D).half());
  Rational n2 = frag.universe().distance(a, x1) + dx + Rational(1);
  Rational N = max(max(n1, n2), Rational(1, frag.grid()));
  KatetovFunction pa;
  pa.base = {a};
  pa.values = {N};
  auto mm = g.max_move(frag, PointSet{a}, template_from_katetov(frag, pa), false);
  PointId z = mm.witness[0];
  const Rational dz_x1 = frag.universe().distance(z, x1);
  ck.require(dz_x1 > dx, "moved point must clear the x1-x2 gap");

  // Reflect x1 across the {x2, z} base: the auxiliary extension is the swap
  // image of x1, and the minimal gluing pins d(x1,y) = d(z,x1) - d(x1,x2).
  FinMetricSpace base = frag.universe().restrict(PointSet{x2, z});
  PointId bx2 = *base.find(frag.label(x2));
  PointId bz = *base.find(frag.label(z));
  KatetovFunction ext_y, ext_x1;
  ext_y.base = {bx2, bz};
  ext_y.values = {frag.universe().distance(x1, z), dx};
  ext_x1.base = {bx2, bz};
  ext_x1.values = {dx, dz_x1};
  auto glue = min_distance_amalgam(base, ext_y, ext_x1, "Y", "X1");
  ck.require(!glue.identified, "reflection image collapsed onto x1");
  KatetovFunction fy;
  fy.base = frag.points();
  for (PointId w : fy.base) {
    if (w == x1) {
      fy.values.push_back(glue.yz);
    } else if (w == x2) {
      fy.values.push_back(frag.universe().distance(x1, z));
    } else if (w == z) {
      fy.values.push_back(dx);
    } else {
      Rational best = glue.yz + frag.universe().distance(x1, w);
      best = min(best, frag.universe().distance(x1, z) + frag.universe().distance(x2, w));
      best = min(best, dx + frag.universe().distance(z, w));
      fy.values.push_back(best);
    }
  }
  ReflectionPrepOut out;
  out.y = frag.adjoin(fy);
  PointId yg = g.apply(frag, out.y, false);
  ck.dist_cmp(x1, out.y, "eq", dz_x1 - dx);
  ck.geodesic(PointSet{out.y, x1, x2});
  ck.dist_cmp(out.y, yg, "ge", R);
  out.checks = ck.take();
  if (!out.checks.verified) {
    throw Error(ErrorKind::Internal, "reflection prep violated its contract");
  }
  return out;
}

ReflectionOut reflection(MetricFragment& frag, MetricMover& g, PointId x, const Rational& R) {
  Checker<MetricFragment> ck(frag);
  PointId xg = g.apply(frag, x, false);
  const Rational dxg = frag.universe().distance(x, xg);
  Rational R1 = max(R, dxg);
  // run the preparation against g⁻¹ so the geodesic lands on the image side
  DirectMover<MetricFragment> ginv(g.underlying(), !g.inverted());
  auto prep = reflection_prep(frag, ginv, xg, x, R1);
  PointId yg = prep.y;  // geodesic (yg, xg, x); prep extended g backward at yg
  PointId y = g.inverted() ? *g.underlying().image(yg) : *g.underlying().preimage(yg);
  ck.merge(prep.checks);

  const Rational dyyg = frag.universe().distance(y, yg);
  Rational a = (dyyg - dxg).half();
  frag.require_on_grid(a);
  const Rational b = frag.universe().distance(y, x);
  ck.require(!a.is_negative(), "reflection offset must be nonnegative");
  ck.require(a <= b, "reflection offset exceeds d(x,y)");

  ReflectionOut out;
  if (a.is_zero()) {
    out.z = x;
  } else if (a == b) {
    out.z = y;
  } else {
    MetricTemplate t;
    t.base = sorted_unique(PointSet{x, y});
    t.pattern = frag.universe().restrict(t.base);
    PointId slot = t.pattern.add_point("s0");
    Rational vx = a, vy = b - a;
    t.pattern.set_distance(slot, PointId{0}, t.base[0] == x ? vx : vy);
    t.pattern.set_distance(slot, PointId{1}, t.base[0] == x ? vy : vx);
    t.coord = {0};
    out.z = frag.realize(t)[0];
  }
  PointId zg = g.apply(frag, out.z, false);
  // the two gluing routes coincide, which is what makes the path geodesic
  ck.dist_cmp(out.z, yg, "eq", a + frag.universe().distance(x, yg));
  ck.dist_cmp(out.z, yg, "eq", (b - a) + dyyg);
  ck.geodesic(PointSet{out.z, x, xg, zg});
  ck.dist_cmp(out.z, zg, "ge", R);
  ck.dist_cmp(out.z, zg, "ge", dyyg);  // reflection soundness
  out.checks = ck.take();
  if (!out.checks.verified) {
    throw Error(ErrorKind::Internal, "reflection violated its contract");
  }
  return out;
}

RealizeDisplacedOut realize_with_displacement(MetricFragment& frag, MetricMover& g,
                                              const KatetovFunction& p) {
  if (p.base.empty()) throw Error(ErrorKind::EmptyBase, "type over the empty set");
  Checker<MetricFragment> ck(frag);
  PointSet X = sorted_unique(p.base);
  const Rational diam = frag.universe().diameter_of(X);
  Rational maxp = p.values[0];
  for (const auto& v : p.values) maxp = max(maxp, v);
  PointId x0 = X[0];
  PointId x0g = g.apply(frag, x0, false);
  const Rational d0 = frag.universe().distance(x0, x0g);
  Rational M = maxp + diam;
  auto refl = reflection(frag, g, x0, M + M + d0 + Rational(1));
  ck.merge(refl.checks);
  PointId z = refl.z;
  for (PointId xi : X) {
    ck.require(frag.universe().distance(z, xi) > p.at(xi),
               "reflected point must dominate the type");
  }
  // minimal gluing of X ∪ {z} against X ∪ {slot carrying p}
  FinMetricSpace base = frag.universe().restrict(X);
  KatetovFunction ext_z, ext_p;
  ext_z.base = base.all_points();
  ext_p.base = base.all_points();
  for (size_t i = 0; i < X.size(); ++i) {
    ext_z.values.push_back(frag.universe().distance(z, X[i]));
    ext_p.values.push_back(p.at(X[i]));
  }
  auto glue = min_distance_amalgam(base, ext_z, ext_p, "Z", "Yp");
  KatetovFunction fy;
  fy.base = frag.points();
  for (PointId w : fy.base) {
    if (w == z) {
      fy.values.push_back(glue.yz);
      continue;
    }
    if (contains(X, w)) {
      fy.values.push_back(p.at(w));
      continue;
    }
    Rational best = glue.yz + frag.universe().distance(z, w);
    for (PointId u : X) {
      best = min(best, p.at(u) + frag.universe().distance(u, w));
    }
    fy.values.push_back(best);
  }
  RealizeDisplacedOut out;
  out.y = frag.adjoin(fy);
  PointId yg = g.apply(frag, out.y, false);
  out.bound = p.min_value() + p.min_value() - diam - diam;
  {
    auto t = template_from_katetov(frag, p);
    Json args;
    args["tuple"] = labels_json(frag, PointSet{out.y});
    args["base"] = labels_json(frag, t.base);
    args["pattern"] = t.pattern.to_json();
    auto coord = Json::array();
    for (int c : t.coord) coord.push_back(c);
    args["coord"] = coord;
    ck.run("template_realizes", std::move(args));
  }
  ck.dist_cmp(out.y, yg, "ge", out.bound);
  out.checks = ck.take();
  if (!out.checks.verified) {
    throw Error(ErrorKind::Internal, "displacement realization violated its contract");
  }
  return out;
}

MaxMoveRealizationOut max_move_realization(MetricFragment& frag, MetricMover& g,
                                           const KatetovFunction& p) {
  if (p.base.empty()) throw Error(ErrorKind::EmptyBase, "type over the empty set");
  Checker<MetricFragment> ck(frag);
  PointSet X = sorted_unique(p.base);
  auto p_tmpl = template_from_katetov(frag, p);

  // A realization certified earlier is returned unchanged.
  if (g.underlying().defined_on(X)) {
    PointSet Xg;
    for (PointId xi : X) Xg.push_back(*g.underlying().image(xi));
    for (const auto& [w, wg] : g.underlying().pairs) {
      if (contains(X, w) || !frag.realizes(PointSet{w}, p_tmpl)) continue;
      auto cert = frag.pair_indep(PointSet{w}, X, Xg, PointSet{wg});
      if (cert.verdict) {
        MaxMoveRealizationOut out;
        out.z = w;
        out.cert = cert;
        out.reused_existing = true;
        ck.pair_indep(PointSet{w}, X, Xg, PointSet{wg});
        out.checks = ck.take();
        return out;
      }
    }
  }

  PointSet Xg = g.apply_tuple(frag, X, false);
  PointSet Xgi = g.apply_tuple(frag, X, true);
  PointSet Xp = set_union(X, set_union(Xg, Xgi));
  PointSet a = frag.realize(p_tmpl);
  ck.indep(a, X, set_union(Xg, Xgi));
  KatetovFunction q;
  q.base = Xp;
  for (PointId u : Xp) q.values.push_back(frag.universe().distance(a[0], u));
  const Rational e = frag.universe().diameter_of(Xp) + frag.universe().diameter_of(Xp);
  Rational maxq = q.values[0];
  for (const auto& v : q.values) maxq = max(maxq, v);
  const Rational d = e + maxq + Rational(1);
  auto rd = realize_with_displacement(frag, g, prolongation(q, d));
  ck.merge(rd.checks);
  PointId y = rd.y;
  PointId yg = g.apply(frag, y, false);
  ck.dist_cmp(y, yg, "gt", d);  // the chosen shift clears the slack

  KatetovFunction fz;
  fz.base = frag.points();
  for (PointId w : fz.base) {
    if (w == y) {
      fz.values.push_back(d);
      continue;
    }
    if (contains(Xp, w)) {
      fz.values.push_back(q.at(w));
      continue;
    }
    Rational best = d + frag.universe().distance(y, w);
    for (PointId u : Xp) {
      best = min(best, q.at(u) + frag.universe().distance(u, w));
    }
    fz.values.push_back(best);
  }
  MaxMoveRealizationOut out;
  out.z = frag.adjoin(fz);
  PointId zg = g.apply(frag, out.z, false);
  out.cert = frag.pair_indep(PointSet{out.z}, X, Xg, PointSet{zg});
  ck.pair_indep(PointSet{out.z}, X, Xg, PointSet{zg});
  // union and split readings of the auxiliary independence agree here
  ck.indep(PointSet{out.z}, X, set_union(Xg, Xgi));
  ck.indep(PointSet{out.z}, X, Xg);
  ck.indep(PointSet{out.z}, X, Xgi);
  out.checks = ck.take();
  if (!out.checks.verified) {
    throw Error(ErrorKind::Internal, "maximal move realization failed its certificate");
  }
  return out;
}

}  // namespace uryforge
