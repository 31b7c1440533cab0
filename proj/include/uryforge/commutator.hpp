#pragma once

#include "uryforge/engine.hpp"

namespace uryforge {

// Back-and-forth commutator constructions: grow a finite h so that [g,h]
// moves requested 1-types maximally, either under the no-fixed-type
// hypothesis on g or under an almost-maximal promise.

template <class F>
struct FixedTypeReport {
  bool single_realization = false;
  bool movable_found = false;   // some realization not forced fixed by g
  size_t realizations_seen = 0;
  PointSet fixed_found;

  // the lemma hypothesis survives the budgeted refutation attempt
  bool hypothesis_holds() const { return single_realization || movable_found; }

  Json to_json(const std::function<std::string(PointId)>& label) const {
    Json j;
    j["single_realization"] = single_realization;
    j["movable_found"] = movable_found;
    j["realizations_seen"] = realizations_seen;
    auto arr = Json::array();
    for (PointId p : fixed_found) arr.push_back(label(p));
    j["fixed"] = arr;
    j["hypothesis_holds"] = hypothesis_holds();
    return j;
  }
};

/// Budgeted refutation engine for "some type with many realizations is fixed
/// pointwise by g": scans existing realizations of p and grows fresh ones;
/// identity-policy maps fix everything, generic maps never pin fresh points.
template <class F>
FixedTypeReport<F> fixed_type_check(F& frag, PartialAutomorphism& g,
                                    const typename F::Template& p, long long budget) {
  FixedTypeReport<F> report;
  if (p.slots() == 0) {
    report.single_realization = true;
    report.realizations_seen = 1;
    return report;
  }
  if (p.slots() != 1) {
    throw Error(ErrorKind::PreconditionFailed, "fixed-type check takes 1-types");
  }
  auto fixed_by_extension = [&](PointId r) {
    auto img = g.image(r);
    if (img) return *img == r;
    return g.policy == PartialAutomorphism::Policy::Identity;
  };
  long long used = 0;
  for (PointId r : frag.points()) {
    if (++used > budget) throw Error(ErrorKind::BudgetExceeded, "fixed-type scan budget");
    if (!frag.realizes(PointSet{r}, p)) continue;
    ++report.realizations_seen;
    if (fixed_by_extension(r)) {
      report.fixed_found.push_back(r);
    } else {
      report.movable_found = true;
    }
  }
  if (!report.movable_found) {
    // one fresh growth settles it for generic maps
    if (++used > budget) throw Error(ErrorKind::BudgetExceeded, "fixed-type scan budget");
    PointId fresh = frag.realize(p)[0];
    ++report.realizations_seen;
    if (fixed_by_extension(fresh)) {
      report.fixed_found.push_back(fresh);
    } else {
      report.movable_found = true;
    }
  }
  return report;
}

enum class CommutatorMode { FreeHypothesis, AlmostMax };

template <class F>
struct CommutatorStep {
  PointSet witness;  // the moved realization a
  PointSet image;    // [g,h](a)
  PairIndependenceCertificate cert;
};

/// One extension round of the construction: after it, [g,h] moves some
/// realization of p (over X) maximally. Extends both h and g.
template <class F>
CommutatorStep<F> commutator_move_step(F& frag, PartialAutomorphism& g,
                                       PartialAutomorphism& h, const PointSet& X,
                                       const typename F::Template& p, CommutatorMode mode,
                                       Checker<F>& ck) {
  if (mode == CommutatorMode::FreeHypothesis) {
    auto rep = fixed_type_check(frag, g, p, 10000);
    if (!rep.hypothesis_holds()) {
      throw Error(ErrorKind::HypothesisFailed, "g pins a type with many realizations");
    }
  }
  DirectMover<F> gm(g);
  DirectMover<F> hm(h);
  auto comm_apply = [&](PointId x) {
    PointId t = hm.apply(frag, x, false);
    t = gm.apply(frag, t, false);
    t = hm.apply(frag, t, true);
    return gm.apply(frag, t, true);
  };

  CommutatorStep<F> out;
  if (p.slots() == 0) {
    // unique realization: every map moves it maximally over its own base
    out.witness = frag.realize(p);
    for (PointId x : out.witness) out.image.push_back(comm_apply(x));
    PointSet commX;
    for (PointId x : X) commX.push_back(comm_apply(x));
    out.cert = frag.pair_indep(out.witness, X, sorted_unique(commX), out.image);
    ck.pair_indep(out.witness, X, sorted_unique(commX), out.image);
    return out;
  }

  // make [g,h] defined on X with h⁻¹gh(X) inside dom(h)
  PointSet commX;
  for (PointId x : X) commX.push_back(comm_apply(x));
  commX = sorted_unique(commX);
  PointSet U = sorted_unique(h.domain());
  PointSet gX = sorted_unique(gm.apply_tuple(frag, X, false));
  PointSet Xpp = set_union(set_union(U, gX), commX);

  // a: fresh realization of p independent from everything over X
  PointSet a = frag.realize(p);
  ck.indep(a, X, Xpp);
  PointId ga = gm.apply(frag, a[0], false);
  ck.require(ga != a[0], "the fresh realization must be moved by g");

  PointSet V = sorted_unique(hm.apply_tuple(frag, U, false));
  PointSet gsiV = sorted_unique(gm.apply_tuple(frag, V, true));

  // b realizing the h-transport of tp(a/U), independent from g⁻¹(V) over V
  PointId b{};
  {
    auto ta = frag.type_of(a, U);
    auto q = transport_template<F>(ta, [&](PointId u) { return *h.image(u); });
    if (mode == CommutatorMode::AlmostMax) {
      // realize over V ∪ g⁻¹(V) through a maximal move so that g(b) is
      // independent from b over that base
      PointSet W = set_union(V, gsiV);
      PointSet fresh_b = frag.realize(q);
      auto qraw = frag.type_of(fresh_b, W);
      auto mm = gm.max_move(frag, W, qraw, false);
      b = mm.witness[0];
      ck.indep(PointSet{b}, V, gsiV);
      ck.indep(PointSet{b}, W, mm.image);
    } else {
      b = frag.realize(q)[0];
      ck.indep(PointSet{b}, V, gsiV);
    }
  }
  ck.require(frag.pair_extension_ok(h, a[0], b), "extension h(a) = b must stay an isomorphism");
  h.add(a[0], b);
  PointId gb = gm.apply(frag, b, false);
  if (mode == CommutatorMode::FreeHypothesis) {
    ck.require(gb != b, "the image realization must be moved by g");
  }

  // c realizing the h⁻¹-transport of tp(g(b)/V∪b), placed independent from
  // g(a) and g(X) over U∪a
  PointSet Vb = set_union(V, PointSet{b});
  auto tgb = frag.type_of(PointSet{gb}, Vb);
  auto back = transport_template<F>(tgb, [&](PointId v) { return *h.preimage(v); });
  PointId c = frag.realize(back)[0];
  PointSet Ua = set_union(U, a);
  PointSet gaX = set_union(PointSet{ga}, gX);
  ck.indep(PointSet{c}, Ua, gaX);
  ck.require(frag.pair_extension_ok(h, c, gb), "extension h(c) = g(b) must stay an isomorphism");
  h.add(c, gb);
  PointId ca = gm.apply(frag, c, true);

  out.witness = a;
  out.image = {ca};
  Word word{{&h, false}, {&g, false}, {&h, true}, {&g, true}};
  ck.word_maps(word, a, out.image);
  out.cert = frag.pair_indep(out.witness, X, commX, out.image);
  ck.pair_indep(out.witness, X, commX, out.image);
  return out;
}

template <class F>
struct CommutatorOut {
  PartialAutomorphism h;
  std::vector<CommutatorStep<F>> steps;
  CheckList checks;
  bool one_h_for_all = true;
};

template <class F>
CommutatorOut<F> commutator_max_mover(F& frag, PartialAutomorphism& g,
                                      const std::vector<std::pair<PointSet, typename F::Template>>& targets,
                                      CommutatorMode mode) {
  Checker<F> ck(frag);
  CommutatorOut<F> out;
  for (const auto& [X, p] : targets) {
    out.steps.push_back(commutator_move_step(frag, g, out.h, X, p, mode, ck));
  }
  out.checks = ck.take();
  out.one_h_for_all = out.checks.verified;
  return out;
}

/// The commutator [g,h] as a mover, with maximal moves supplied by running
/// the construction round for the requested type (the inverse orientation
/// swaps the two maps).
template <class F>
class CommutatorMover : public Mover<F> {
 public:
  CommutatorMover(PartialAutomorphism& g, PartialAutomorphism& h, CommutatorMode mode)
      : g_(&g), h_(&h), mode_(mode) {}

  PointId apply(F& frag, PointId x, bool inverse) override {
    DirectMover<F> gm(*g_);
    DirectMover<F> hm(*h_);
    if (!inverse) {
      PointId t = hm.apply(frag, x, false);
      t = gm.apply(frag, t, false);
      t = hm.apply(frag, t, true);
      return gm.apply(frag, t, true);
    }
    PointId t = gm.apply(frag, x, false);
    t = hm.apply(frag, t, false);
    t = gm.apply(frag, t, true);
    return hm.apply(frag, t, true);
  }

  MaxMoveResult<F> max_move(F& frag, std::span<const PointId> X,
                            const typename F::Template& p, bool inverse) override {
    Checker<F> ck(frag);
    PointSet Xv(X.begin(), X.end());
    CommutatorStep<F> step =
        inverse ? commutator_move_step(frag, *h_, *g_, Xv, p, CommutatorMode::AlmostMax, ck)
                : commutator_move_step(frag, *g_, *h_, Xv, p, mode_, ck);
    if (!ck.verified()) {
      throw Error(ErrorKind::Internal, "commutator move failed its certificate");
    }
    MaxMoveResult<F> res;
    res.witness = step.witness;
    res.image = step.image;
    res.cert = step.cert;
    return res;
  }

  Word word() const override {
    return {{h_, false}, {g_, false}, {h_, true}, {g_, true}};
  }

 private:
  PartialAutomorphism* g_;
  PartialAutomorphism* h_;
  CommutatorMode mode_;
};

}  // namespace uryforge
