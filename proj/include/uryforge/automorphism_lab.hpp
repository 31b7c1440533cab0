#pragma once

#include "uryforge/engine.hpp"

namespace uryforge {

// Constructive toolkit for unbounded partial isometries of metric fragments:
// displacement growth, geodesic reflection, displacement-aware type
// realization, and maximally-moved realizations.

struct DisplacementWitness {
  PointId point;
  PointId image;
  Rational value;
};

using MetricMover = DirectMover<MetricFragment>;

/// Exact displacement d(x, g(x)); throws when x has no image.
DisplacementWitness displacement(const MetricFragment& frag, const PartialAutomorphism& g,
                                 PointId x);

/// A 1-type over X as a realization template.
MetricTemplate template_from_katetov(const MetricFragment& frag, const KatetovFunction& f);

/// The type with every distance shifted up by d; Katetov for any d >= 0.
KatetovFunction prolongation(const KatetovFunction& p, const Rational& d);

struct GrowUnboundedOut {
  DisplacementWitness witness;
  CheckList checks;
};

/// Extend g with a witness of displacement at least R via the doubling step:
/// a fresh point at distance N from an anchor of displacement D, moved
/// maximally, lands at displacement exactly D + 2N.
GrowUnboundedOut grow_unbounded(MetricFragment& frag, MetricMover& g, const Rational& R);

struct ReflectionPrepOut {
  PointId y;
  CheckList checks;
};

/// y with (y, x1, x2) geodesic and displacement at least R.
ReflectionPrepOut reflection_prep(MetricFragment& frag, MetricMover& g, PointId x1,
                                  PointId x2, const Rational& R);

struct ReflectionOut {
  PointId z;
  CheckList checks;
};

/// z with (z, x, x^g, z^g) geodesic and displacement at least R.
ReflectionOut reflection(MetricFragment& frag, MetricMover& g, PointId x, const Rational& R);

struct RealizeDisplacedOut {
  PointId y;
  Rational bound;  // 2 d(p,X) - 2 diam(X)
  CheckList checks;
};

/// A realization of p over X whose displacement beats 2 d(p,X) - 2 diam(X).
RealizeDisplacedOut realize_with_displacement(MetricFragment& frag, MetricMover& g,
                                              const KatetovFunction& p);

struct MaxMoveRealizationOut {
  PointId z;
  PairIndependenceCertificate cert;
  CheckList checks;
  bool reused_existing = false;
};

/// A realization of p over X moved maximally by g, built through the
/// prolongation + reflection pipeline (reuses an already certified
/// realization when one exists).
MaxMoveRealizationOut max_move_realization(MetricFragment& frag, MetricMover& g,
                                           const KatetovFunction& p);

}  // namespace uryforge
