#pragma once

#include <algorithm>
#include <array>
#include <memory>
#include <numeric>

#include "uryforge/checks.hpp"
#include "uryforge/fragment.hpp"

namespace uryforge {

// ---------------------------------------------------------------------------
// Pattern permutation (used when transporting tuple types through maps)

inline FinMetricSpace permute_points(const FinMetricSpace& s,
                                     std::span<const uint32_t> new_to_old) {
  FinMetricSpace out;
  for (uint32_t v : new_to_old) out.add_point(s.label(PointId{v}));
  for (uint32_t i = 0; i < new_to_old.size(); ++i) {
    for (uint32_t j = i + 1; j < new_to_old.size(); ++j) {
      out.set_distance(PointId{i}, PointId{j},
                       s.distance(PointId{new_to_old[i]}, PointId{new_to_old[j]}));
    }
  }
  return out;
}

inline RelStructure permute_points(const RelStructure& s,
                                   std::span<const uint32_t> new_to_old) {
  RelStructure out(s.signature());
  std::vector<uint32_t> old_to_new(s.size());
  for (uint32_t i = 0; i < new_to_old.size(); ++i) {
    out.add_point(s.label(PointId{new_to_old[i]}));
    old_to_new[new_to_old[i]] = i;
  }
  for (const auto& r : s.signature().relations) {
    for (const auto& t : s.tuples(r.name)) {
      std::vector<PointId> mapped;
      for (uint32_t v : t) mapped.push_back(PointId{old_to_new[v]});
      out.add_tuple(r.name, mapped);
    }
  }
  return out;
}

/// Transport a tuple type through a point map: the base is mapped, re-sorted,
/// and the pattern permuted to match. `eval` must be injective on the base.
template <class F, class Eval>
typename F::Template transport_template(const typename F::Template& t, Eval&& eval) {
  const size_t nb = t.base.size();
  PointSet mapped;
  for (PointId p : t.base) mapped.push_back(eval(p));
  std::vector<uint32_t> order(nb);
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(),
            [&](uint32_t a, uint32_t b) { return mapped[a] < mapped[b]; });
  typename F::Template out;
  std::vector<uint32_t> new_to_old(t.pattern.size());
  std::vector<uint32_t> old_to_new_base(nb);
  for (uint32_t i = 0; i < nb; ++i) {
    out.base.push_back(mapped[order[i]]);
    new_to_old[i] = order[i];
    old_to_new_base[order[i]] = i;
  }
  for (uint32_t s = (uint32_t)nb; s < t.pattern.size(); ++s) new_to_old[s] = s;
  out.pattern = permute_points(t.pattern, new_to_old);
  for (int c : t.coord) {
    out.coord.push_back(c < 0 ? -(int)old_to_new_base[(uint32_t)(-c - 1)] - 1 : c);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Map extension

/// Extend a partial automorphism at one point with a fresh canonical witness
/// (identity-policy maps extend as the identity; an empty generic map seeds
/// itself with a fixed point). Deterministic; no sampling.
template <class F>
PointId extend_map(F& frag, PartialAutomorphism& g, PointId x, bool backward) {
  if (!backward) {
    if (auto img = g.image(x)) return *img;
  } else {
    if (auto pre = g.preimage(x)) return *pre;
  }
  if (g.policy == PartialAutomorphism::Policy::Identity || g.pairs.empty()) {
    g.add(x, x);
    return x;
  }
  PointId y = frag.extend_witness(g, x, backward);
  if (backward) {
    if (!frag.pair_extension_ok(g, y, x)) {
      throw Error(ErrorKind::Internal, "canonical backward extension failed validity");
    }
    g.add(y, x);
  } else {
    if (!frag.pair_extension_ok(g, x, y)) {
      throw Error(ErrorKind::Internal, "canonical forward extension failed validity");
    }
    g.add(x, y);
  }
  return y;
}

template <class F>
PointSet map_points(F& frag, PartialAutomorphism& g, std::span<const PointId> pts,
                    bool backward = false) {
  PointSet out;
  for (PointId p : pts) out.push_back(extend_map(frag, g, p, backward));
  return out;
}

/// The seeded back-and-forth step: prefer an existing realization of the
/// transported type (chosen by the fragment's generator), otherwise grow a
/// fresh canonical witness.
template <class F>
PointId extend_partial_auto(F& frag, PartialAutomorphism& g, PointId x, bool backward) {
  if (!backward) {
    if (auto img = g.image(x)) return *img;
  } else {
    if (auto pre = g.preimage(x)) return *pre;
  }
  if (g.policy == PartialAutomorphism::Policy::Identity || g.pairs.empty()) {
    g.add(x, x);
    return x;
  }
  PointSet src = backward ? g.range() : g.domain();
  PointSet dst = backward ? g.domain() : g.range();
  auto t = frag.type_of(PointSet{x}, src);
  auto want = transport_template<F>(
      t, [&](PointId p) { return backward ? *g.preimage(p) : *g.image(p); });
  PointSet candidates;
  for (PointId y : frag.points()) {
    if (contains(dst, y)) continue;
    bool ok = backward ? frag.pair_extension_ok(g, y, x) : frag.pair_extension_ok(g, x, y);
    if (ok && frag.realizes(PointSet{y}, want)) candidates.push_back(y);
  }
  PointId y{};
  if (!candidates.empty()) {
    y = candidates[frag.rng().below(candidates.size())];
  } else {
    y = frag.realize(want)[0];
  }
  if (backward) {
    g.add(y, x);
  } else {
    g.add(x, y);
  }
  return y;
}

/// Identity on X extended by src -> dst; valid only when the two tuples have
/// the same type over X.
template <class F>
PartialAutomorphism make_fix_map(F& frag, std::span<const PointId> X,
                                 std::span<const PointId> src,
                                 std::span<const PointId> dst) {
  if (src.size() != dst.size()) {
    throw Error(ErrorKind::TypeMismatch, "fix map tuples differ in length");
  }
  PartialAutomorphism e = PartialAutomorphism::identity_on(X);
  for (size_t i = 0; i < src.size(); ++i) e.add(src[i], dst[i]);
  if (!frag.map_valid(e)) {
    throw Error(ErrorKind::TypeMismatch, "tuples differ over the fixed set");
  }
  return e;
}

/// Materialize outer∘inner on a domain, extending the factors as needed.
template <class F>
PartialAutomorphism compose_on(F& frag, PartialAutomorphism& outer,
                               PartialAutomorphism& inner,
                               std::span<const PointId> domain) {
  PartialAutomorphism out;
  for (PointId x : sorted_unique(domain)) {
    PointId mid = extend_map(frag, inner, x, false);
    out.add(x, extend_map(frag, outer, mid, false));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Movers: partial automorphisms with the obligation to extend on demand and
// to provide maximally moved realizations of requested types.

template <class F>
struct MaxMoveResult {
  PointSet witness;
  PointSet image;
  PairIndependenceCertificate cert;
};

/// Factor decomposition of a mover, application order first to last; the
/// flag marks inverse factors. Serializable, so products re-check by pure
/// lookup.
using Word = std::vector<std::pair<const PartialAutomorphism*, bool>>;

template <class F>
class Mover {
 public:
  virtual ~Mover() = default;
  virtual PointId apply(F& frag, PointId x, bool inverse) = 0;
  /// Some realization of p over X moved maximally; extends the mover.
  virtual MaxMoveResult<F> max_move(F& frag, std::span<const PointId> X,
                                    const typename F::Template& p, bool inverse) = 0;
  virtual Word word() const = 0;

  PointSet apply_tuple(F& frag, std::span<const PointId> xs, bool inverse = false) {
    PointSet out;
    for (PointId x : xs) out.push_back(apply(frag, x, inverse));
    return out;
  }
};

template <class F>
class DirectMover : public Mover<F> {
 public:
  DirectMover(PartialAutomorphism& g, bool inverted = false) : g_(&g), inverted_(inverted) {}

  PointId apply(F& frag, PointId x, bool inverse) override {
    return extend_map(frag, *g_, x, inverted_ ^ inverse);
  }

  MaxMoveResult<F> max_move(F& frag, std::span<const PointId> X,
                            const typename F::Template& p, bool inverse) override {
    const bool backward = inverted_ ^ inverse;
    MaxMoveResult<F> res;
    PointSet Y = map_points(frag, *g_, X, backward);
    res.witness = frag.realize(p);
    auto t = frag.type_of(res.witness, X);
    auto q = transport_template<F>(t, [&](PointId b) {
      return backward ? *g_->preimage(b) : *g_->image(b);
    });
    res.image = frag.realize(q);
    for (size_t i = 0; i < res.witness.size(); ++i) {
      PointId from = res.witness[i], to = res.image[i];
      if (contains(X, from)) continue;  // kept coordinates already map into Y
      PointId a = backward ? to : from;
      PointId b = backward ? from : to;
      if (auto img = g_->image(a)) {
        if (*img != b) throw Error(ErrorKind::Internal, "max move hit a conflicting pair");
        continue;
      }
      if (!frag.pair_extension_ok(*g_, a, b)) {
        throw Error(ErrorKind::Internal, "max move extension failed validity");
      }
      g_->add(a, b);
    }
    res.cert = frag.pair_indep(res.witness, X, Y, res.image);
    if (!res.cert.verdict) {
      throw Error(ErrorKind::Internal, "canonical max move failed its certificate");
    }
    return res;
  }

  Word word() const override { return {{g_, inverted_}}; }

  PartialAutomorphism& underlying() { return *g_; }
  bool inverted() const { return inverted_; }

 private:
  PartialAutomorphism* g_;
  bool inverted_;
};

/// g^k = k⁻¹∘g∘k evaluated lazily; maximal moves are produced in the
/// conjugated coordinates and pulled back isometrically through k.
template <class F>
class ConjugatedMover : public Mover<F> {
 public:
  ConjugatedMover(Mover<F>& inner, PartialAutomorphism& conj) : inner_(&inner), conj_(&conj) {}

  PointId apply(F& frag, PointId x, bool inverse) override {
    PointId t = extend_map(frag, *conj_, x, false);
    t = inner_->apply(frag, t, inverse);
    return extend_map(frag, *conj_, t, true);
  }

  MaxMoveResult<F> max_move(F& frag, std::span<const PointId> X,
                            const typename F::Template& p, bool inverse) override {
    PointSet Xc = map_points(frag, *conj_, X);
    auto pc = transport_template<F>(p, [&](PointId b) { return *conj_->image(b); });
    MaxMoveResult<F> up = inner_->max_move(frag, Xc, pc, inverse);
    MaxMoveResult<F> res;
    res.witness = map_points(frag, *conj_, up.witness, true);
    res.image = map_points(frag, *conj_, up.image, true);
    PointSet Y = this->apply_tuple(frag, PointSet(X.begin(), X.end()), inverse);
    res.cert = frag.pair_indep(res.witness, X, Y, res.image);
    if (!res.cert.verdict) {
      throw Error(ErrorKind::Internal, "conjugated max move failed its certificate");
    }
    return res;
  }

  Word word() const override {
    Word w;
    w.emplace_back(conj_, false);
    for (auto f : inner_->word()) w.push_back(f);
    w.emplace_back(conj_, true);
    return w;
  }

 private:
  Mover<F>* inner_;
  PartialAutomorphism* conj_;
};

template <class F>
class InverseMover : public Mover<F> {
 public:
  explicit InverseMover(Mover<F>& m) : m_(&m) {}
  PointId apply(F& frag, PointId x, bool inverse) override {
    return m_->apply(frag, x, !inverse);
  }
  MaxMoveResult<F> max_move(F& frag, std::span<const PointId> X,
                            const typename F::Template& p, bool inverse) override {
    return m_->max_move(frag, X, p, !inverse);
  }

  Word word() const override {
    Word w = m_->word();
    std::reverse(w.begin(), w.end());
    for (auto& [m, inv] : w) inv = !inv;
    return w;
  }

 private:
  Mover<F>* m_;
};

// ---------------------------------------------------------------------------
// Existence moves

/// Fresh copy of tp(D / S): coordinates inside S are kept, the rest realized
/// canonically over S (hence independent from everything else over S).
template <class F>
PointSet realize_copy_over(F& frag, std::span<const PointId> D, std::span<const PointId> S) {
  return frag.realize(frag.type_of(D, S));
}

/// e ⊇ id_X with e(src) a realization of dst; dst is realized fresh.
template <class F>
std::pair<PointSet, PartialAutomorphism> realize_in_fix(F& frag,
                                                        std::span<const PointId> X,
                                                        std::span<const PointId> src,
                                                        const typename F::Template& dst) {
  auto have = frag.type_of(src, X);
  if (!frag.template_equal(have, dst)) {
    throw Error(ErrorKind::TypeMismatch, "source tuple does not realize the target type");
  }
  PointSet out = frag.realize(dst);
  return {out, make_fix_map(frag, X, src, out)};
}

// ---------------------------------------------------------------------------
// The two basic independence tools

template <class F>
struct MoveTypeOut {
  PointSet d_prime;
  CheckList checks;
};

/// D′ realizing tp(D/B∪C) with A independent from C∪D′ over B.
template <class F>
MoveTypeOut<F> move_type_independent(F& frag, std::span<const PointId> A,
                                     std::span<const PointId> B,
                                     std::span<const PointId> C,
                                     std::span<const PointId> D) {
  Checker<F> ck(frag);
  ck.require(frag.indep(A, B, C).verdict, "A and C must start independent over B");
  PointSet BC = set_union(B, C);
  MoveTypeOut<F> out;
  out.d_prime = realize_copy_over(frag, D, BC);
  ck.type_equal(out.d_prime, BC, D, BC);
  ck.indep(A, B, set_union(C, out.d_prime));
  out.checks = ck.take();
  return out;
}

template <class F>
struct FixConjugatorsOut {
  PartialAutomorphism e;
  std::vector<PointSet> conjugated;  // g_i^e(C) for each input map
  CheckList checks;
};

/// e ∈ Fix(B∪C) making the conjugated copies g_i^e(C) jointly independent
/// from A over B, alongside C itself.
template <class F>
FixConjugatorsOut<F> fix_conjugators_independent(F& frag, std::span<const PointId> A,
                                                 std::span<const PointId> B,
                                                 std::span<const PointId> C,
                                                 std::vector<Mover<F>*> gs) {
  Checker<F> ck(frag);
  ck.require(frag.indep(A, B, C).verdict, "A and C must start independent over B");
  PointSet BC = set_union(B, C);
  // Joint tuple of all images g_i(C), then one fresh copy of its type.
  PointSet joint;
  std::vector<size_t> offsets;
  for (Mover<F>* g : gs) {
    offsets.push_back(joint.size());
    PointSet img = g->apply_tuple(frag, C, false);
    joint.insert(joint.end(), img.begin(), img.end());
  }
  PointSet copies = realize_copy_over(frag, joint, BC);
  FixConjugatorsOut<F> out;
  out.e = make_fix_map(frag, BC, copies, joint);
  PointSet all = PointSet(C.begin(), C.end());
  for (size_t i = 0; i < gs.size(); ++i) {
    size_t len = (i + 1 < offsets.size() ? offsets[i + 1] : joint.size()) - offsets[i];
    PointSet block(copies.begin() + (ptrdiff_t)offsets[i],
                   copies.begin() + (ptrdiff_t)(offsets[i] + len));
    out.conjugated.push_back(block);
    all.insert(all.end(), block.begin(), block.end());
  }
  ck.map_fixes(out.e, BC);
  ck.map_valid(out.e);
  ck.indep(A, B, sorted_unique(all));
  out.checks = ck.take();
  return out;
}

// ---------------------------------------------------------------------------
// Conjugating a moved point off a dependent set (the "pull" step)

template <class F>
struct PullIndependentOut {
  PartialAutomorphism a;  // fixes X ∪ Y
  PointSet image;         // m^a(x)
  CheckList checks;
};

/// Given independent X, Y=m(X), C and a tuple x, produce a ∈ Fix(XY) whose
/// conjugated map sends x to a tuple independent from C over Y.
template <class F>
PullIndependentOut<F> pull_independent(F& frag, Mover<F>& m, std::span<const PointId> X,
                                       std::span<const PointId> Y,
                                       std::span<const PointId> C,
                                       std::span<const PointId> x) {
  Checker<F> ck(frag);
  ck.require(frag.indep(X, Y, C).verdict, "X and C must be independent over Y");
  ck.require(sorted_unique(m.apply_tuple(frag, X, false)) == sorted_unique(Y),
             "the mover must carry X onto Y");
  PointSet XY = set_union(X, Y);
  auto p = frag.type_of(x, XY);
  auto mm = m.max_move(frag, XY, p, false);
  PartialAutomorphism a1 = make_fix_map(frag, XY, x, mm.witness);
  PointSet x3 = map_points(frag, a1, mm.image, true);
  PointSet XYx = set_union(XY, x);
  PointSet y = realize_copy_over(frag, x3, XYx);
  PartialAutomorphism b = make_fix_map(frag, XYx, y, x3);
  PullIndependentOut<F> out;
  PointSet dom_all = set_union(set_union(XYx, y), x3);
  out.a = compose_on(frag, a1, b, dom_all);
  out.image = y;
  ck.map_fixes(out.a, XY);
  ck.map_valid(out.a);
  Word word;
  word.emplace_back(&out.a, false);
  for (auto f : m.word()) word.push_back(f);
  word.emplace_back(&out.a, true);
  ck.word_maps(word, x, y);
  ck.indep(y, Y, C);
  out.checks = ck.take();
  return out;
}

// ---------------------------------------------------------------------------
// Conjugating one tuple exactly onto another (the "alignment" step)

template <class F>
struct ConjugateOntoOut {
  PartialAutomorphism a;  // fixes X ∪ Y
  CheckList checks;
};

/// For x pair-independent from y over X;Y with matching transported types,
/// produce a ∈ Fix(XY) with m^a(x) = y exactly.
template <class F>
ConjugateOntoOut<F> conjugate_onto(F& frag, Mover<F>& m, std::span<const PointId> X,
                                   std::span<const PointId> Y, std::span<const PointId> x,
                                   std::span<const PointId> y) {
  Checker<F> ck(frag);
  ck.require(frag.pair_indep(x, X, Y, y).verdict,
             "x must be pair independent from y over X;Y");
  auto px = frag.type_of(x, X);
  auto transported = transport_template<F>(px, [&](PointId b) {
    return m.apply(frag, b, false);
  });
  ck.require(frag.template_equal(transported, frag.type_of(y, Y)),
             "the mover must carry tp(x/X) to tp(y/Y)");
  auto mm = m.max_move(frag, X, px, false);
  PointSet XY = set_union(X, Y);
  // Both x and the moved witness realize the same type over X and are
  // independent from Y over X, so their types over XY agree.
  ck.require(ck.type_equal(mm.witness, XY, x, XY), "stationarity alignment failed");
  PartialAutomorphism a1 = make_fix_map(frag, XY, x, mm.witness);
  PointSet y1 = map_points(frag, a1, mm.image, true);
  PointSet xy1 = PointSet(x.begin(), x.end());
  xy1.insert(xy1.end(), y1.begin(), y1.end());
  PointSet xy = PointSet(x.begin(), x.end());
  xy.insert(xy.end(), y.begin(), y.end());
  ck.require(ck.type_equal(xy1, XY, xy, XY), "joint type of the moved pair is not unique");
  PointSet XYx = set_union(XY, x);
  PartialAutomorphism b = make_fix_map(frag, XYx, y, y1);
  ConjugateOntoOut<F> out;
  PointSet dom_all = set_union(set_union(XYx, y), y1);
  out.a = compose_on(frag, a1, b, dom_all);
  ck.map_fixes(out.a, XY);
  ck.map_valid(out.a);
  Word word;
  word.emplace_back(&out.a, false);
  for (auto f : m.word()) word.push_back(f);
  word.emplace_back(&out.a, true);
  ck.word_maps(word, x, y);
  out.checks = ck.take();
  return out;
}

// ---------------------------------------------------------------------------
// Chain alignment: conjugate a 4-chain so the grown sets become independent

template <class F>
struct ChainAlignment {
  std::array<PartialAutomorphism, 4> conj;  // conj[1] and conj[2] coincide
  std::array<PointSet, 5> Y;
  CheckList checks;
};

template <class F>
ChainAlignment<F> align_chain(F& frag, std::array<Mover<F>*, 4> g,
                              std::array<PointSet, 5> X) {
  Checker<F> ck(frag);
  for (int i = 0; i < 4; ++i) {
    ck.require(sorted_unique(g[i]->apply_tuple(frag, X[i], false)) == sorted_unique(X[i + 1]),
               "chain precondition g_i(X_{i-1}) = X_i failed");
  }
  PointSet U0;
  for (const auto& Xi : X) U0 = set_union(U0, Xi);
  ck.require(!U0.empty(), "chain sets must not all be empty");

  // Fresh independent copies of the downstream images of U0, glued back by a
  // fix map; the conjugated chain then runs through the copies.
  PointSet G1 = g[1]->apply_tuple(frag, U0, false);
  PointSet G2 = g[2]->apply_tuple(frag, G1, false);
  PointSet G3 = g[3]->apply_tuple(frag, G2, false);
  PointSet joint = G1;
  joint.insert(joint.end(), G2.begin(), G2.end());
  joint.insert(joint.end(), G3.begin(), G3.end());
  PointSet copies = realize_copy_over(frag, joint, U0);
  PartialAutomorphism e = make_fix_map(frag, U0, copies, joint);
  const size_t n0 = U0.size();
  PointSet X1p = U0;
  PointSet X2p(copies.begin(), copies.begin() + (ptrdiff_t)n0);
  PointSet X3p(copies.begin() + (ptrdiff_t)n0, copies.begin() + (ptrdiff_t)(2 * n0));
  PointSet X4p(copies.begin() + (ptrdiff_t)(2 * n0), copies.end());

  // Reversed pass over the conjugated chain h_i = g_i^e.
  ConjugatedMover<F> h2(*g[1], e), h3(*g[2], e), h4(*g[3], e);
  PointSet U1 = set_union(set_union(X1p, X2p), set_union(X3p, X4p));
  InverseMover<F> h3i(h3), h2i(h2);
  PointSet Gt1 = h3i.apply_tuple(frag, U1, false);
  PointSet Gt2 = h2i.apply_tuple(frag, Gt1, false);
  PointSet joint2 = Gt1;
  joint2.insert(joint2.end(), Gt2.begin(), Gt2.end());
  PointSet copies2 = realize_copy_over(frag, joint2, U1);
  PartialAutomorphism ep = make_fix_map(frag, U1, copies2, joint2);
  PointSet Y2(copies2.begin(), copies2.begin() + (ptrdiff_t)U1.size());
  PointSet Y1(copies2.begin() + (ptrdiff_t)U1.size(), copies2.end());
  PointSet Y3 = U1;
  PointSet V4 = h4.apply_tuple(frag, U1, false);
  PointSet Y4 = realize_copy_over(frag, V4, U1);
  PartialAutomorphism fp = make_fix_map(frag, U1, Y4, V4);

  // First slot: a fresh copy of the g_1-preimage of U0, re-glued, then its
  // conjugated preimage of Y1.
  PointSet P = g[0]->apply_tuple(frag, U0, true);
  PointSet X0pp = realize_copy_over(frag, P, U0);
  PartialAutomorphism mfix = make_fix_map(frag, U0, X0pp, P);
  ConjugatedMover<F> h1(*g[0], mfix);
  InverseMover<F> h1i(h1);
  PointSet V = h1i.apply_tuple(frag, Y1, false);
  PointSet X0Y1 = set_union(X0pp, Y1);
  PointSet Y0 = realize_copy_over(frag, V, X0Y1);
  PartialAutomorphism b1 = make_fix_map(frag, X0Y1, Y0, V);

  ChainAlignment<F> out;
  PointSet k1dom = set_union(set_union(Y0, Y1), set_union(X[0], X[1]));
  out.conj[0] = compose_on(frag, mfix, b1, k1dom);
  PointSet k23dom = set_union(set_union(U1, Y1), Y2);
  PartialAutomorphism k23 = compose_on(frag, e, ep, k23dom);
  out.conj[1] = k23;
  out.conj[2] = k23;
  PointSet k4dom = set_union(U1, Y4);
  out.conj[3] = compose_on(frag, e, fp, k4dom);
  out.Y = {sorted_unique(Y0), sorted_unique(Y1), sorted_unique(Y2), sorted_unique(Y3),
           sorted_unique(Y4)};

  for (int i = 0; i < 4; ++i) {
    PointSet from = out.Y[(size_t)i];
    Word word;
    word.emplace_back(&out.conj[(size_t)i], false);
    for (auto f : g[(size_t)i]->word()) word.push_back(f);
    word.emplace_back(&out.conj[(size_t)i], true);
    PointSet img;
    for (PointId p : from) {
      PointId cur = extend_map(frag, out.conj[(size_t)i], p, false);
      cur = g[(size_t)i]->apply(frag, cur, false);
      img.push_back(extend_map(frag, out.conj[(size_t)i], cur, true));
    }
    ck.word_maps(word, from, img);
    ck.subset(img, out.Y[(size_t)i + 1]);
    ck.subset(out.Y[(size_t)i + 1], img);
    PointSet fixset = set_union(X[(size_t)i], X[(size_t)i + 1]);
    ck.map_fixes(out.conj[(size_t)i], fixset);
    ck.subset(X[(size_t)i + 1], out.Y[(size_t)i + 1]);
  }
  ck.subset(X[0], out.Y[0]);
  ck.indep(out.Y[0], out.Y[1], out.Y[2]);
  ck.indep(out.Y[2], out.Y[3], out.Y[4]);
  PointSet Y012 = set_union(set_union(out.Y[0], out.Y[1]), out.Y[2]);
  ck.indep(Y012, out.Y[3], out.Y[4]);
  out.checks = ck.take();
  return out;
}

// ---------------------------------------------------------------------------
// Four-chain transport: conjugate each chain map inside its fixed sets so the
// composed product carries x0 exactly to x4.

template <class F>
struct FourChainOut {
  std::array<PartialAutomorphism, 4> conj;
  CheckList checks;
};

template <class F>
FourChainOut<F> four_chain_transport(F& frag, std::array<Mover<F>*, 4> g,
                                     std::array<PointSet, 5> Y,
                                     std::span<const PointId> x0,
                                     std::span<const PointId> x4) {
  Checker<F> ck(frag);
  for (int i = 0; i < 4; ++i) {
    ck.require(sorted_unique(g[(size_t)i]->apply_tuple(frag, Y[(size_t)i], false)) ==
                   sorted_unique(Y[(size_t)i + 1]),
               "chain precondition g_i(Y_{i-1}) = Y_i failed");
  }
  ck.require(frag.indep(Y[0], Y[1], Y[2]).verdict, "Y0 and Y2 must be independent over Y1");
  ck.require(frag.indep(Y[2], Y[3], Y[4]).verdict, "Y2 and Y4 must be independent over Y3");
  {
    auto t = frag.type_of(x0, Y[0]);
    for (int i = 0; i < 4; ++i) {
      t = transport_template<F>(
          t, [&](PointId b) { return g[(size_t)i]->apply(frag, b, false); });
    }
    ck.require(frag.template_equal(t, frag.type_of(x4, Y[4])),
               "the chain must carry tp(x0/Y0) to tp(x4/Y4)");
  }

  auto zug1 = pull_independent(frag, *g[0], Y[0], Y[1], Y[2], x0);
  InverseMover<F> g4i(*g[3]);
  auto zug2 = pull_independent(frag, g4i, Y[4], Y[3], Y[2], x4);
  const PointSet& x1 = zug1.image;
  const PointSet& x3 = zug2.image;

  auto q2 = transport_template<F>(frag.type_of(x1, Y[1]), [&](PointId b) {
    return g[1]->apply(frag, b, false);
  });
  auto q2_from_right = transport_template<F>(frag.type_of(x3, Y[3]), [&](PointId b) {
    return g[2]->apply(frag, b, true);
  });
  ck.require(frag.template_equal(q2, q2_from_right),
             "the two middle transports disagree");
  PointSet x2 = frag.realize(q2);

  auto neu1 = conjugate_onto(frag, *g[1], Y[1], Y[2], x1, x2);
  InverseMover<F> g3i(*g[2]);
  auto neu2 = conjugate_onto(frag, g3i, Y[3], Y[2], x3, x2);

  FourChainOut<F> out;
  out.conj[0] = std::move(zug1.a);
  out.conj[1] = std::move(neu1.a);
  out.conj[2] = std::move(neu2.a);
  out.conj[3] = std::move(zug2.a);
  Word word;
  for (int i = 0; i < 4; ++i) {
    word.emplace_back(&out.conj[(size_t)i], false);
    for (auto f : g[(size_t)i]->word()) word.push_back(f);
    word.emplace_back(&out.conj[(size_t)i], true);
  }
  ck.word_maps(word, x0, x4);
  for (int i = 0; i < 4; ++i) {
    ck.map_fixes(out.conj[(size_t)i], set_union(Y[(size_t)i], Y[(size_t)i + 1]));
  }
  out.checks = ck.take();
  return out;
}

// ---------------------------------------------------------------------------
// Density witness: a 4-slot conjugator chain through given open conditions
// whose product realizes any requested extension of its base map.

template <class F>
PointId fresh_seed_point(F& frag) {
  if constexpr (std::is_same_v<F, MetricFragment>) {
    if (frag.size() == 0) return frag.adjoin_isolated();
    KatetovFunction f;
    f.base = frag.points();
    PointId p0 = f.base[0];
    for (PointId w : f.base) {
      f.values.push_back(Rational(1) + frag.universe().distance(p0, w));
    }
    return frag.adjoin(f);
  } else {
    return frag.adjoin_isolated();
  }
}

template <class F>
struct DensityOut {
  std::array<PartialAutomorphism, 4> factors;  // the per-slot conjugators
  PartialAutomorphism base_map;                // w = product restricted to Y0
  std::array<PointSet, 5> Y;
  CheckList checks;
};

/// Two-phase construction: building the run extends the four open conditions
/// u_i into an aligned conjugated chain and computes the base map w on Y0;
/// finish(target) additionally realizes a target extension w' ⊇ w and
/// materializes per-slot conjugators extending the u_i.
template <class F>
class DensityRun {
 public:
  DensityRun(F& frag, Mover<F>& g, const std::array<const PartialAutomorphism*, 4>& u)
      : frag_(frag), g_(g) {
    Checker<F> ck(frag_);
    for (int i = 0; i < 4; ++i) {
      a_[(size_t)i] = u[(size_t)i] ? *u[(size_t)i] : PartialAutomorphism{};
      u_[(size_t)i] = u[(size_t)i] ? *u[(size_t)i] : PartialAutomorphism{};
      ck.require(frag_.map_valid(a_[(size_t)i]),
                 "open condition is not a partial automorphism");
    }
    for (int i = 0; i < 4; ++i) {
      h_[(size_t)i] = std::make_unique<ConjugatedMover<F>>(g_, a_[(size_t)i]);
    }
    // Pull every condition's domain and image back to level 0 so the chain
    // sets cover them and the alignment conjugators fix them pointwise.
    PointSet X0;
    for (int i = 0; i < 4; ++i) {
      PointSet back = a_[(size_t)i].domain();
      for (int j = i - 1; j >= 0; --j) back = h_[(size_t)j]->apply_tuple(frag_, back, true);
      X0 = set_union(X0, back);
      back = a_[(size_t)i].range();
      for (int j = i; j >= 0; --j) back = h_[(size_t)j]->apply_tuple(frag_, back, true);
      X0 = set_union(X0, back);
    }
    if (X0.empty()) X0.push_back(fresh_seed_point(frag_));
    std::array<PointSet, 5> X;
    X[0] = X0;
    for (int i = 0; i < 4; ++i) {
      X[(size_t)i + 1] = sorted_unique(h_[(size_t)i]->apply_tuple(frag_, X[(size_t)i], false));
    }
    std::array<Mover<F>*, 4> hs{h_[0].get(), h_[1].get(), h_[2].get(), h_[3].get()};
    zur_ = std::make_unique<ChainAlignment<F>>(align_chain(frag_, hs, X));
    ck.merge(zur_->checks);
    for (int i = 0; i < 4; ++i) {
      hb_[(size_t)i] =
          std::make_unique<ConjugatedMover<F>>(*h_[(size_t)i], zur_->conj[(size_t)i]);
    }
    for (PointId p : zur_->Y[0]) {
      PointId cur = p;
      for (int i = 0; i < 4; ++i) cur = hb_[(size_t)i]->apply(frag_, cur, false);
      w_.add(p, cur);
    }
    phase1_checks_ = ck.take();
  }

  const PartialAutomorphism& base_map() const { return w_; }
  const std::array<PointSet, 5>& Y() const { return zur_->Y; }
  std::array<Mover<F>*, 4> chain_movers() {
    return {hb_[0].get(), hb_[1].get(), hb_[2].get(), hb_[3].get()};
  }

  /// target == nullptr means "no extension beyond the base map".
  DensityOut<F> finish(const PartialAutomorphism* target) {
    Checker<F> ck(frag_);
    DensityOut<F> out;
    out.Y = zur_->Y;
    out.base_map = w_;
    ck.map_valid(w_);
    PointSet extra, extra_img;
    if (target) {
      ck.require(frag_.map_valid(*target), "target is not a partial automorphism");
      for (const auto& [x, y] : target->pairs) {
        auto have = w_.image(x);
        if (have) {
          if (*have != y) throw Error(ErrorKind::NotAnExtension, "target conflicts with w");
          continue;
        }
        extra.push_back(x);
        extra_img.push_back(y);
      }
    }
    std::array<PartialAutomorphism, 4> c;
    if (!extra.empty()) {
      std::array<Mover<F>*, 4> hbs = chain_movers();
      FourChainOut<F> four = four_chain_transport(frag_, hbs, zur_->Y, extra, extra_img);
      ck.merge(four.checks);
      c = std::move(four.conj);
    } else {
      for (int i = 0; i < 4; ++i) {
        c[(size_t)i] = PartialAutomorphism::identity_on(
            set_union(zur_->Y[(size_t)i], zur_->Y[(size_t)i + 1]));
      }
    }

    // Materialize k_i = a_i ∘ b_i ∘ c_i on everything the product evaluation
    // touches; afterwards the whole chain re-checks from serialized factors.
    PointSet eval_pts = set_union(zur_->Y[0], extra);
    std::array<PointSet, 4> touched;
    for (PointId p : eval_pts) {
      PointId cur = p;
      for (int i = 0; i < 4; ++i) {
        touched[(size_t)i].push_back(cur);
        PointId t = extend_map(frag_, c[(size_t)i], cur, false);
        t = hb_[(size_t)i]->apply(frag_, t, false);
        cur = extend_map(frag_, c[(size_t)i], t, true);
        touched[(size_t)i].push_back(cur);
      }
    }
    for (int i = 0; i < 4; ++i) {
      PointSet dom = set_union(set_union(zur_->Y[(size_t)i], zur_->Y[(size_t)i + 1]),
                               a_[(size_t)i].domain());
      dom = set_union(dom, touched[(size_t)i]);
      PartialAutomorphism bc = compose_on(frag_, zur_->conj[(size_t)i], c[(size_t)i], dom);
      out.factors[(size_t)i] = compose_on(frag_, a_[(size_t)i], bc, dom);
    }
    Word word;
    for (int i = 0; i < 4; ++i) {
      word.emplace_back(&out.factors[(size_t)i], false);
      for (auto f : g_.word()) word.push_back(f);
      word.emplace_back(&out.factors[(size_t)i], true);
    }
    {
      PointSet wf, wt;
      for (const auto& [x, y] : w_.pairs) {
        wf.push_back(x);
        wt.push_back(y);
      }
      ck.word_maps(word, wf, wt);
    }
    if (target) {
      PointSet tf, tt;
      for (const auto& [x, y] : target->pairs) {
        tf.push_back(x);
        tt.push_back(y);
      }
      ck.word_maps(word, tf, tt);
    }
    for (int i = 0; i < 4; ++i) {
      if (u_[(size_t)i].size()) ck.map_extends(out.factors[(size_t)i], u_[(size_t)i]);
    }
    out.checks = phase1_checks_;
    out.checks.merge(ck.take());
    return out;
  }

 private:
  F& frag_;
  Mover<F>& g_;
  std::array<PartialAutomorphism, 4> a_;
  std::array<PartialAutomorphism, 4> u_;
  std::array<std::unique_ptr<ConjugatedMover<F>>, 4> h_;
  std::array<std::unique_ptr<ConjugatedMover<F>>, 4> hb_;
  std::unique_ptr<ChainAlignment<F>> zur_;
  PartialAutomorphism w_;
  CheckList phase1_checks_;
};

template <class F>
DensityOut<F> density_witness(F& frag, Mover<F>& g,
                              const std::array<const PartialAutomorphism*, 4>& u,
                              const PartialAutomorphism* target) {
  DensityRun<F> run(frag, g, u);
  return run.finish(target);
}

// ---------------------------------------------------------------------------
// Dense conjugacy witness

template <class F>
struct DenseConjOut {
  PointSet x2, y2;
  std::optional<PointId> base_point;  // the metric anchor c
  CheckList checks;
};

/// Given tp(x̄)=tp(ȳ) and tp(ā)=tp(b̄), produce x̄′ȳ′ with tp(x̄′ȳ′)=tp(x̄ȳ)
/// and tp(x̄′ā)=tp(ȳ′b̄). The metric class anchors everything to a point c
/// equidistant from all four tuples; relational classes realize the fresh
/// pair freely over the empty base.
template <class F>
DenseConjOut<F> dense_conjugacy_witness(F& frag, std::span<const PointId> x,
                                        std::span<const PointId> y,
                                        std::span<const PointId> a,
                                        std::span<const PointId> b) {
  Checker<F> ck(frag);
  PointSet empty;
  ck.require(frag.template_equal(frag.type_of(x, empty), frag.type_of(y, empty)),
             "tp(x) must equal tp(y)");
  ck.require(frag.template_equal(frag.type_of(a, empty), frag.type_of(b, empty)),
             "tp(a) must equal tp(b)");
  PointSet xy(x.begin(), x.end());
  xy.insert(xy.end(), y.begin(), y.end());
  DenseConjOut<F> out;
  PointSet fresh;
  if constexpr (std::is_same_v<F, MetricFragment>) {
    PointSet support = sorted_unique(xy);
    PointSet ab = set_union(sorted_unique(PointSet(a.begin(), a.end())),
                            sorted_unique(PointSet(b.begin(), b.end())));
    support = set_union(support, ab);
    ck.require(!support.empty(), "tuples must not all be empty");
    Rational M = frag.universe().diameter_of(support);
    if (M.is_zero()) {
      out.base_point = support[0];
    } else {
      KatetovFunction f;
      f.base = frag.points();
      for (PointId w : f.base) {
        if (contains(support, w)) {
          f.values.push_back(M);
          continue;
        }
        Rational best = M + frag.universe().distance(support[0], w);
        for (PointId u : support) {
          best = min(best, M + frag.universe().distance(u, w));
        }
        f.values.push_back(best);
      }
      out.base_point = frag.adjoin(f);
    }
    PointSet cset{*out.base_point};
    fresh = frag.realize(frag.type_of(xy, cset));
    ck.indep(fresh, cset, ab);
  } else {
    fresh = frag.realize(frag.type_of(xy, empty));
  }
  out.x2 = PointSet(fresh.begin(), fresh.begin() + (ptrdiff_t)x.size());
  out.y2 = PointSet(fresh.begin() + (ptrdiff_t)x.size(), fresh.end());
  ck.type_equal(fresh, empty, xy, empty);
  PointSet xa = out.x2;
  xa.insert(xa.end(), a.begin(), a.end());
  PointSet yb = out.y2;
  yb.insert(yb.end(), b.begin(), b.end());
  ck.type_equal(xa, empty, yb, empty);
  out.checks = ck.take();
  return out;
}

// ---------------------------------------------------------------------------
// Best-effort product decomposition: forward and backward density chains
// glued through a middle placement. Not guaranteed to succeed; failures name
// the amalgamation constraint that could not be met.

struct ChainSlotRecord {
  bool positive = true;  // conjugate of g vs of g⁻¹
  PartialAutomorphism conj;
};

template <class F>
struct EightOut {
  bool success = false;
  std::vector<ChainSlotRecord> slots;
  CheckList checks;
  Json failure = Json::object();
};

namespace detail {

template <class F>
std::optional<PointId> word_lookup(const Word& w, PointId x) {
  PointId cur = x;
  for (const auto& [m, inv] : w) {
    auto next = inv ? m->preimage(cur) : m->image(cur);
    if (!next) return std::nullopt;
    cur = *next;
  }
  return cur;
}

/// Adjoin a copy of the tuple `S` whose points are fixed by `g` and carry no
/// ties to the rest of the fragment beyond a uniform buffer distance.
inline PointSet adjoin_far_fixed(MetricFragment& frag, PartialAutomorphism& g,
                                 std::span<const PointId> S) {
  Rational M = frag.universe().diameter() + Rational(1);
  PointSet out;
  for (size_t i = 0; i < S.size(); ++i) {
    KatetovFunction f;
    f.base = frag.points();
    for (PointId w : f.base) {
      bool early = false;
      for (size_t j = 0; j < i; ++j) {
        if (out[j] == w) {
          f.values.push_back(frag.universe().distance(S[i], S[j]));
          early = true;
          break;
        }
      }
      if (!early) f.values.push_back(M);
    }
    PointId t = frag.adjoin(f);
    if (!frag.pair_extension_ok(g, t, t)) {
      throw Error(ErrorKind::Internal, "buffered fixed point failed validity");
    }
    g.add(t, t);
    out.push_back(t);
  }
  return out;
}

inline PointSet adjoin_far_fixed(RelFragment& frag, PartialAutomorphism& g,
                                 std::span<const PointId> S) {
  PointSet out;
  for (size_t i = 0; i < S.size(); ++i) {
    std::vector<std::pair<std::string, std::vector<int>>> incident;
    // copy only the induced tuples among the new points
    for (const auto& r : frag.universe().signature().relations) {
      for (const auto& tp : frag.universe().tuples(r.name)) {
        (void)tp;
      }
    }
    PointId t = frag.adjoin(incident);
    if (!frag.pair_extension_ok(g, t, t)) {
      throw Error(ErrorKind::Internal, "isolated fixed point failed validity");
    }
    g.add(t, t);
    out.push_back(t);
  }
  return out;
}

}  // namespace detail

/// Merge two templates that constrain the same fresh tuple from the two ends
/// of a glued chain; on conflict the violated constraint is reported instead
/// of realized.
template <class F>
bool merge_and_realize(F& frag, const typename F::Template& t1,
                       const typename F::Template& t2, PointSet& out_middle,
                       Json& failure) {
  const size_t arity = t1.coord.size();
  if (t2.coord.size() != arity) {
    failure = Json{{"reason", "template arity mismatch"}};
    return false;
  }
  // Resolve per-coordinate pinning: a coordinate kept inside either base is
  // already a concrete point and both requirement sets must agree on it.
  std::vector<std::optional<PointId>> pinned(arity);
  for (size_t i = 0; i < arity; ++i) {
    if (t1.coord[i] < 0) pinned[i] = t1.base[(size_t)(-t1.coord[i] - 1)];
    if (t2.coord[i] < 0) {
      PointId p = t2.base[(size_t)(-t2.coord[i] - 1)];
      if (pinned[i] && *pinned[i] != p) {
        failure = Json{{"reason", "coordinate pinned to two different points"},
                       {"coordinate", (int)i}};
        return false;
      }
      pinned[i] = p;
    }
  }
  // Slot numbering for the merged template: first occurrence of each unpinned
  // coordinate pattern.
  PointSet base = set_union(t1.base, t2.base);
  std::vector<int> coord(arity, 0);
  std::vector<size_t> slot_rep;  // representative coordinate per fresh slot
  for (size_t i = 0; i < arity; ++i) {
    if (pinned[i]) {
      auto it = std::find(base.begin(), base.end(), *pinned[i]);
      coord[i] = -(int)(it - base.begin()) - 1;
      continue;
    }
    // identical slot iff both templates use the same slot at both positions
    bool found = false;
    for (size_t s = 0; s < slot_rep.size(); ++s) {
      size_t r = slot_rep[s];
      if (t1.coord[i] == t1.coord[r] && t2.coord[i] == t2.coord[r]) {
        coord[i] = (int)s;
        found = true;
        break;
      }
    }
    if (!found) {
      coord[i] = (int)slot_rep.size();
      slot_rep.push_back(i);
    }
  }

  if constexpr (std::is_same_v<F, MetricFragment>) {
    FinMetricSpace cand;
    for (PointId p : base) cand.add_point(frag.label(p));
    for (size_t i = 0; i < base.size(); ++i) {
      for (size_t j = i + 1; j < base.size(); ++j) {
        cand.set_distance(PointId{(uint32_t)i}, PointId{(uint32_t)j},
                          frag.universe().distance(base[i], base[j]));
      }
    }
    std::vector<PointId> slot_pt;
    for (size_t s = 0; s < slot_rep.size(); ++s) {
      slot_pt.push_back(cand.add_point("m" + std::to_string(s)));
    }
    auto require = [&](PointId cp, PointId cq, const Rational& v, const char* side) {
      const Rational& have = cand.distance(cp, cq);
      if (cp != cq && have.is_zero()) {
        cand.set_distance(cp, cq, v);
        return true;
      }
      if (have != v) {
        failure = Json{{"reason", "conflicting distance requirements"},
                       {"side", side},
                       {"a", cand.label(cp)},
                       {"b", cand.label(cq)},
                       {"have", have.str()},
                       {"want", v.str()}};
        return false;
      }
      return true;
    };
    auto apply_template = [&](const typename F::Template& t, const char* side) {
      for (size_t i = 0; i < arity; ++i) {
        size_t pi = t.coord[i] < 0 ? (size_t)(-t.coord[i] - 1)
                                   : t.base.size() + (size_t)t.coord[i];
        // requirements of coordinate i against the template's base
        for (size_t j = 0; j < t.base.size(); ++j) {
          const Rational& v = t.pattern.distance(PointId{(uint32_t)pi}, PointId{(uint32_t)j});
          PointId cq = *cand.find(frag.label(t.base[j]));
          PointId cp;
          if (pinned[i]) {
            // concrete point: the fragment must already satisfy it
            const Rational& have = frag.universe().distance(*pinned[i], t.base[j]);
            if (have != v) {
              failure = Json{{"reason", "pinned coordinate violates a requirement"},
                             {"side", side},
                             {"point", frag.label(*pinned[i])},
                             {"base", frag.label(t.base[j])},
                             {"have", have.str()},
                             {"want", v.str()}};
              return false;
            }
            continue;
          }
          cp = slot_pt[(size_t)coord[i]];
          if (!require(cp, cq, v, side)) return false;
        }
        // intra-tuple requirements
        for (size_t j = 0; j < i; ++j) {
          size_t pj = t.coord[j] < 0 ? (size_t)(-t.coord[j] - 1)
                                     : t.base.size() + (size_t)t.coord[j];
          const Rational& v = t.pattern.distance(PointId{(uint32_t)pi}, PointId{(uint32_t)pj});
          if (pinned[i] && pinned[j]) {
            if (frag.universe().distance(*pinned[i], *pinned[j]) != v) {
              failure = Json{{"reason", "pinned pair violates the tuple pattern"},
                             {"side", side}};
              return false;
            }
            continue;
          }
          PointId cp = pinned[i] ? *cand.find(frag.label(*pinned[i]))
                                 : slot_pt[(size_t)coord[i]];
          PointId cq = pinned[j] ? *cand.find(frag.label(*pinned[j]))
                                 : slot_pt[(size_t)coord[j]];
          if (cp == cq) continue;
          if (!require(cp, cq, v, side)) return false;
        }
      }
      return true;
    };
    if (!apply_template(t1, "forward") || !apply_template(t2, "backward")) return false;
    auto report = validate_metric(cand);
    if (!report.ok()) {
      const auto& viol = report.violations[0];
      failure = Json{{"reason", "merged placement is not a metric"},
                     {"points", viol.points}};
      return false;
    }
    typename F::Template merged{base, cand, coord};
    out_middle = frag.realize(merged);
    return true;
  } else {
    RelStructure cand = frag.universe().restrict(base);
    std::vector<PointId> slot_pt;
    for (size_t s = 0; s < slot_rep.size(); ++s) {
      slot_pt.push_back(cand.add_point("m" + std::to_string(s)));
    }
    auto cand_point = [&](const typename F::Template& t, size_t idx,
                          size_t i) -> std::optional<PointId> {
      // idx indexes t.pattern points; translate into the candidate
      if (idx < t.base.size()) return cand.find(frag.label(t.base[idx]));
      (void)i;
      // find which coordinate carries this slot
      for (size_t c = 0; c < arity; ++c) {
        if (t.coord[c] == (int)(idx - t.base.size())) {
          return pinned[c] ? cand.find(frag.label(*pinned[c]))
                           : std::optional<PointId>(slot_pt[(size_t)coord[c]]);
        }
      }
      return std::nullopt;
    };
    auto apply_template = [&](const typename F::Template& t, const char* side) {
      for (const auto& r : t.pattern.signature().relations) {
        for (const auto& tp : t.pattern.tuples(r.name)) {
          std::vector<PointId> mapped;
          bool all_base = true;
          for (uint32_t v : tp) {
            auto cp = cand_point(t, v, 0);
            if (!cp) {
              failure = Json{{"reason", "untranslatable tuple"}, {"side", side}};
              return false;
            }
            if (cp->v >= base.size()) all_base = false;
            mapped.push_back(*cp);
          }
          if (all_base) {
            if (!cand.has_tuple(r.name, mapped)) {
              failure = Json{{"reason", "required base tuple is absent"}, {"side", side}};
              return false;
            }
            continue;
          }
          cand.add_tuple(r.name, mapped);
        }
      }
      return true;
    };
    if (!apply_template(t1, "forward") || !apply_template(t2, "backward")) return false;
    // pinned coordinates must already satisfy both requirement sets exactly
    auto pattern_consistent = [&](const typename F::Template& t, const char* side) {
      for (const auto& r : t.pattern.signature().relations) {
        if (r.arity != 2) continue;
        for (size_t i = 0; i < arity; ++i) {
          if (!pinned[i]) continue;
          for (size_t j = 0; j < t.base.size(); ++j) {
            size_t pi = t.coord[i] < 0 ? (size_t)(-t.coord[i] - 1)
                                       : t.base.size() + (size_t)t.coord[i];
            bool want = t.pattern.has_tuple(
                r.name, {PointId{(uint32_t)pi}, PointId{(uint32_t)j}});
            bool have = frag.universe().has_tuple(r.name, {*pinned[i], t.base[j]});
            if (want != have) {
              failure = Json{{"reason", "pinned coordinate violates an incidence"},
                             {"side", side}};
              return false;
            }
          }
        }
      }
      return true;
    };
    if (!pattern_consistent(t1, "forward") || !pattern_consistent(t2, "backward")) {
      return false;
    }
    auto violations = validate_rel(cand, frag.cls().constraints());
    if (!violations.empty()) {
      failure = Json{{"reason", "merged placement violates the class constraint"},
                     {"what", violations[0].what}};
      return false;
    }
    typename F::Template merged{base, cand, coord};
    out_middle = frag.realize(merged);
    return true;
  }
}

template <class F>
EightOut<F> eight_factor_search(F& frag, DirectMover<F>& g, const PartialAutomorphism& f,
                                int attempts) {
  Checker<F> ck(frag);
  ck.require(frag.map_valid(f), "target is not a partial automorphism");
  EightOut<F> out;

  PointSet fdom, fimg;
  for (const auto& [p, q] : f.pairs) {
    fdom.push_back(p);
    fimg.push_back(q);
  }

  const bool is_identity =
      std::all_of(f.pairs.begin(), f.pairs.end(), [](auto& pr) { return pr.first == pr.second; });
  bool inside_g = !f.pairs.empty();
  for (const auto& [p, q] : f.pairs) {
    auto img = g.underlying().image(p);
    if (!img || *img != q) inside_g = false;
  }

  auto push_identity_slot = [&](bool positive, std::span<const PointId> carrier) {
    ChainSlotRecord s;
    s.positive = positive;
    s.conj = PartialAutomorphism::identity_on(carrier);
    out.slots.push_back(std::move(s));
  };

  if (is_identity) {
    // Four cancelling conjugate pairs.
    PointSet carrier = fdom;
    for (PointId p : fdom) carrier.push_back(g.apply(frag, p, false));
    carrier = sorted_unique(carrier);
    for (int i = 0; i < 4; ++i) {
      push_identity_slot(true, carrier);
      push_identity_slot(false, carrier);
    }
  } else if (inside_g) {
    // One live slot, three cancelling pairs, and a final inverse slot
    // conjugated onto buffered fixed points so it acts as the identity here.
    PointSet S;
    for (PointId p : fdom) S.push_back(*g.underlying().image(p));
    PointSet carrier = sorted_unique(set_union(fdom, S));
    push_identity_slot(true, carrier);
    for (int i = 0; i < 3; ++i) {
      push_identity_slot(false, carrier);
      push_identity_slot(true, carrier);
    }
    PointSet anchors = detail::adjoin_far_fixed(frag, g.underlying(), S);
    ChainSlotRecord last;
    last.positive = false;
    for (size_t i = 0; i < S.size(); ++i) last.conj.add(S[i], anchors[i]);
    if (!frag.map_valid(last.conj)) {
      throw Error(ErrorKind::Internal, "anchor conjugator is not an isometry");
    }
    out.slots.push_back(std::move(last));
  } else {
    // General search: place a middle image of dom(f) compatible with both a
    // forward chain from dom(f) and a backward chain onto f's images.
    for (int attempt = 0; attempt < attempts && !out.success; ++attempt) {
      std::array<const PartialAutomorphism*, 4> empty_u{nullptr, nullptr, nullptr, nullptr};
      DensityRun<F> fwd(frag, g, empty_u);
      InverseMover<F> ginv(g);
      DensityRun<F> bwd(frag, ginv, empty_u);

      auto t_fwd = frag.type_of(fdom, fwd.Y()[0]);
      for (Mover<F>* m : fwd.chain_movers()) {
        t_fwd = transport_template<F>(
            t_fwd, [&](PointId p) { return m->apply(frag, p, false); });
      }
      auto t_bwd = frag.type_of(fimg, bwd.Y()[4]);
      {
        auto movers = bwd.chain_movers();
        for (int i = 3; i >= 0; --i) {
          t_bwd = transport_template<F>(t_bwd, [&](PointId p) {
            return movers[(size_t)i]->apply(frag, p, true);
          });
        }
      }
      // Both templates constrain the same middle tuple; merge and validate.
      Json failure;
      PointSet middle;
      if (!merge_and_realize(frag, t_fwd, t_bwd, middle, failure)) {
        out.failure = failure;
        continue;
      }
      PartialAutomorphism target_fwd = fwd.base_map();
      PartialAutomorphism target_bwd = bwd.base_map();
      for (size_t i = 0; i < fdom.size(); ++i) {
        if (!target_fwd.image(fdom[i])) target_fwd.add(fdom[i], middle[i]);
        if (!target_bwd.image(middle[i])) target_bwd.add(middle[i], fimg[i]);
      }
      if (!frag.map_valid(target_fwd) || !frag.map_valid(target_bwd)) {
        out.failure = Json{{"reason", "glued target is not an isometry"},
                           {"attempt", attempt}};
        continue;
      }
      DensityOut<F> fo = fwd.finish(&target_fwd);
      DensityOut<F> bo = bwd.finish(&target_bwd);
      ck.merge(fo.checks);
      ck.merge(bo.checks);
      for (auto& k : fo.factors) {
        ChainSlotRecord s;
        s.positive = true;
        s.conj = k;
        out.slots.push_back(std::move(s));
      }
      for (auto& k : bo.factors) {
        ChainSlotRecord s;
        s.positive = false;
        s.conj = k;
        out.slots.push_back(std::move(s));
      }
      out.success = true;
    }
    if (!out.success) {
      out.checks = ck.take();
      return out;
    }
  }

  Word word;
  Word gw = g.word();
  for (const auto& s : out.slots) {
    word.emplace_back(&s.conj, false);
    if (s.positive) {
      for (auto w : gw) word.push_back(w);
    } else {
      for (auto it = gw.rbegin(); it != gw.rend(); ++it) {
        word.emplace_back(it->first, !it->second);
      }
    }
    word.emplace_back(&s.conj, true);
  }
  // Warm up the evaluation so pure lookups succeed, then verify pointwise.
  for (size_t i = 0; i < fdom.size(); ++i) {
    PointId cur = fdom[i];
    for (auto& s : out.slots) {
      cur = extend_map(frag, s.conj, cur, false);
      cur = g.apply(frag, cur, !s.positive);
      cur = extend_map(frag, s.conj, cur, true);
    }
  }
  out.success = ck.word_maps(word, fdom, fimg);
  out.checks = ck.take();
  if (!out.success && out.failure.empty()) {
    out.failure = Json{{"reason", "final pointwise verification failed"}};
  }
  return out;
}

// ---------------------------------------------------------------------------
// Growing a map that moves requested types maximally

template <class F>
struct GrowMaxOut {
  std::vector<MaxMoveResult<F>> moves;
  CheckList checks;
};

template <class F>
GrowMaxOut<F> grow_max_moving(F& frag, Mover<F>& g,
                              const std::vector<std::pair<PointSet, typename F::Template>>& targets) {
  Checker<F> ck(frag);
  GrowMaxOut<F> out;
  for (const auto& [X, p] : targets) {
    auto mm = g.max_move(frag, X, p, false);
    PointSet Y = g.apply_tuple(frag, X, false);
    ck.pair_indep(mm.witness, X, Y, mm.image);
    out.moves.push_back(std::move(mm));
  }
  out.checks = ck.take();
  return out;
}

// ---------------------------------------------------------------------------
// Brute-force saturation oracle: which small types over small subsets have
// realizations in the fragment right now.

struct ExtensionReport {
  size_t subsets = 0;
  size_t types = 0;
  size_t realized = 0;
  std::vector<Json> missing;  // capped descriptor list
  bool all_present() const { return types == realized; }
  Json to_json() const {
    Json j;
    j["subsets"] = subsets;
    j["types"] = types;
    j["realized"] = realized;
    j["missing"] = missing;
    j["all_present"] = all_present();
    return j;
  }
};

namespace detail {

template <class Fn>
void for_each_subset(size_t n, size_t max_size, Fn&& fn) {
  std::vector<uint32_t> chosen;
  auto rec = [&](auto&& self, uint32_t start) -> void {
    if (!chosen.empty()) fn(chosen);
    if (chosen.size() == max_size) return;
    for (uint32_t v = start; v < n; ++v) {
      chosen.push_back(v);
      self(self, v + 1);
      chosen.pop_back();
    }
  };
  rec(rec, 0);
}

}  // namespace detail

inline ExtensionReport certify_extension_property(const MetricFragment& frag, size_t k,
                                                  long long q, long long span,
                                                  long long budget) {
  ExtensionReport report;
  long long used = 0;
  detail::for_each_subset(frag.size(), k, [&](const std::vector<uint32_t>& subset) {
    ++report.subsets;
    PointSet S;
    for (uint32_t v : subset) S.push_back(PointId{v});
    std::vector<Rational> values(S.size());
    auto rec = [&](auto&& self, size_t i) -> void {
      if (i == S.size()) {
        ++report.types;
        bool found = false;
        for (PointId w : frag.points()) {
          if (contains(S, w)) continue;
          bool match = true;
          for (size_t j = 0; j < S.size() && match; ++j) {
            match = frag.universe().distance(w, S[j]) == values[j];
          }
          if (match) {
            found = true;
            break;
          }
        }
        if (found) {
          ++report.realized;
        } else if (report.missing.size() < 32) {
          Json m;
          m["base"] = labels_json(frag, S);
          auto vals = Json::array();
          for (const auto& v : values) vals.push_back(v.str());
          m["values"] = vals;
          report.missing.push_back(m);
        }
        return;
      }
      for (long long num = 1; num <= span * q; ++num) {
        if (++used > budget) {
          throw Error(ErrorKind::BudgetExceeded, "extension-property enumeration budget");
        }
        Rational v(num, q);
        bool ok = true;
        for (size_t j = 0; j < i && ok; ++j) {
          const Rational& d = frag.universe().distance(S[i], S[j]);
          ok = (v - values[j]).abs() <= d && d <= v + values[j];
        }
        if (frag.cls().kind == ClassConfig::Kind::BoundedMetric && v > frag.cls().cap) {
          ok = false;
        }
        if (!ok) continue;
        values[i] = v;
        self(self, i + 1);
      }
    };
    rec(rec, 0);
  });
  return report;
}

inline ExtensionReport certify_extension_property(const RelFragment& frag, size_t k,
                                                  long long budget) {
  ExtensionReport report;
  long long used = 0;
  const int arity = frag.universe().signature().relations[0].arity;
  detail::for_each_subset(frag.size(), k, [&](const std::vector<uint32_t>& subset) {
    ++report.subsets;
    PointSet S;
    for (uint32_t v : subset) S.push_back(PointId{v});
    // every sub-multiset of the (arity-1)-subsets of S is one adjacency
    // pattern for a fresh vertex
    std::vector<std::vector<PointId>> faces;
    std::vector<uint32_t> pick;
    auto build = [&](auto&& self, size_t start) -> void {
      if ((int)pick.size() == arity - 1) {
        std::vector<PointId> face;
        for (uint32_t i : pick) face.push_back(S[i]);
        faces.push_back(face);
        return;
      }
      for (size_t v = start; v < S.size(); ++v) {
        pick.push_back((uint32_t)v);
        self(self, v + 1);
        pick.pop_back();
      }
    };
    build(build, 0);
    const size_t npat = (size_t)1 << faces.size();
    for (size_t mask = 0; mask < npat; ++mask) {
      if (++used > budget) {
        throw Error(ErrorKind::BudgetExceeded, "extension-property enumeration budget");
      }
      // skip patterns forbidden by the class: the selected faces together
      // with the fresh vertex must not force a forbidden clique
      if (frag.cls().kind == ClassConfig::Kind::KnFree) {
        PointSet nbrs;
        for (size_t f = 0; f < faces.size(); ++f) {
          if (mask & (size_t(1) << f)) nbrs.push_back(faces[f][0]);
        }
        nbrs = sorted_unique(nbrs);
        RelStructure probe = frag.universe().restrict(nbrs);
        if (has_clique(probe, "E", frag.cls().forbid_n - 1)) continue;
      }
      ++report.types;
      bool found = false;
      for (PointId w : frag.points()) {
        if (contains(S, w)) continue;
        bool match = true;
        for (size_t f = 0; f < faces.size() && match; ++f) {
          std::vector<PointId> tuple = faces[f];
          tuple.push_back(w);
          bool want = (mask & (size_t(1) << f)) != 0;
          match = frag.universe().has_tuple("E", tuple) == want;
        }
        if (match) {
          found = true;
          break;
        }
      }
      if (found) {
        ++report.realized;
      } else if (report.missing.size() < 32) {
        Json m;
        m["base"] = labels_json(frag, S);
        m["pattern_mask"] = mask;
        report.missing.push_back(m);
      }
    }
  });
  return report;
}

}  // namespace uryforge
