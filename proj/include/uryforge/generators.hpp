#pragma once

#include "uryforge/fragment.hpp"

namespace uryforge {

// Seeded instance generators for the property suites. Every sampled distance
// is a multiple of 1/grid so fragments stay inside the configured denominator
// bound; failures reproduce from (class, seed) alone.

/// Largest k with k/grid <= v, and smallest k with k/grid >= v.
long long grid_floor(const Rational& v, long long grid);
long long grid_ceil(const Rational& v, long long grid);

/// A Katetov function over all current points, sampled sequentially inside
/// the exact feasibility interval of each point.
KatetovFunction random_katetov(const MetricFragment& frag, Rng& rng, long long span);

MetricFragment random_metric_fragment(const ClassConfig& cls, uint64_t seed, size_t n,
                                      long long grid, long long span);

RelFragment random_rel_fragment(const ClassConfig& cls, uint64_t seed, size_t n);

PointSet random_subset(Rng& rng, std::span<const PointId> pool, size_t max_size,
                       bool nonempty);

}  // namespace uryforge
