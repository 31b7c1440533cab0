#pragma once

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "uryforge/json.hpp"

#include "uryforge/certificate.hpp"
#include "uryforge/error.hpp"
#include "uryforge/metric.hpp"
#include "uryforge/relational.hpp"

namespace uryforge {

struct ClassConfig {
  enum class Kind { Metric, BoundedMetric, RandomGraph, KnFree, Hypergraph };
  Kind kind = Kind::Metric;
  Rational cap{1};  // bounded metric diameter cap
  int forbid_n = 3; // knfree(n)
  int arity = 3;    // hypergraph(k)

  bool is_metric() const {
    return kind == Kind::Metric || kind == Kind::BoundedMetric;
  }
  // Classes whose independence relation is defined only over nonempty bases.
  bool local() const { return kind == Kind::Metric; }

  std::string name() const;
  static ClassConfig parse(const std::string& s);

  RelSignature signature() const;
  RelConstraints constraints() const;
};

/// splitmix64; self-contained so artifacts are reproducible across platforms.
class Rng {
 public:
  explicit Rng(uint64_t seed) : s_(seed ^ 0x9e3779b97f4a7c15ULL) {}

  uint64_t next() {
    uint64_t z = (s_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  uint64_t below(uint64_t n) { return n == 0 ? 0 : next() % n; }
  bool coin() { return next() & 1; }

 private:
  uint64_t s_;
};

/// Finite structure-preserving partial bijection, stored as explicit pairs in
/// insertion order. Identity-policy maps extend as the identity everywhere;
/// generic maps are extended by the engine with fresh witnesses.
struct PartialAutomorphism {
  enum class Policy { Generic, Identity };
  Policy policy = Policy::Generic;
  std::vector<std::pair<PointId, PointId>> pairs;

  std::optional<PointId> image(PointId x) const;
  std::optional<PointId> preimage(PointId y) const;
  void add(PointId x, PointId y);

  PointSet domain() const;
  PointSet range() const;
  bool defined_on(std::span<const PointId> pts) const;
  bool fixes(std::span<const PointId> pts) const;
  size_t size() const { return pairs.size(); }

  static PartialAutomorphism identity_on(std::span<const PointId> pts);
  PartialAutomorphism inverse() const;

  Json to_json(const std::function<std::string(PointId)>& label) const;
};

/// A tuple type over a finite base: the induced structure on base ∪ slots,
/// plus the coordinate map back onto the original enumeration. Coordinates
/// falling inside the base are "kept": a realization returns those very
/// points. The base is always sorted by point id.
template <class S>
struct TupleTemplate {
  PointSet base;
  S pattern;               // points: base order first, then one per slot
  std::vector<int> coord;  // >= 0: slot index; < 0: -(base index + 1)

  size_t arity() const { return coord.size(); }
  size_t slots() const { return pattern.size() - base.size(); }
};

using MetricTemplate = TupleTemplate<FinMetricSpace>;
using RelTemplate = TupleTemplate<RelStructure>;

PointSet sorted_unique(std::span<const PointId> pts);
PointSet set_union(std::span<const PointId> a, std::span<const PointId> b);
bool contains(std::span<const PointId> set, PointId p);

/// Growing finite approximation of the metric homogeneous structure. Every
/// adjoin is logged with its full distance vector, so replaying the log from
/// empty reproduces the universe bit-exactly.
class MetricFragment {
 public:
  using Structure = FinMetricSpace;
  using Template = MetricTemplate;

  MetricFragment(ClassConfig cls, uint64_t seed, long long max_denominator = 64);

  const ClassConfig& cls() const { return cls_; }
  const FinMetricSpace& universe() const { return space_; }
  Rng& rng() { return rng_; }
  uint64_t seed() const { return seed_; }

  size_t size() const { return space_.size(); }
  const std::string& label(PointId p) const { return space_.label(p); }
  PointSet points() const { return space_.all_points(); }
  std::optional<PointId> find(std::string_view l) const { return space_.find(l); }

  PointId adjoin(const KatetovFunction& f);  // full vector over current points
  PointId adjoin_isolated();                 // first point of an empty fragment

  Template type_of(std::span<const PointId> tuple, std::span<const PointId> base) const;
  PointSet realize(const Template& t);
  bool realizes(std::span<const PointId> tuple, const Template& t) const;
  bool template_equal(const Template& a, const Template& b) const;

  IndependenceCertificate indep(std::span<const PointId> A, std::span<const PointId> B,
                                std::span<const PointId> C) const;
  PairIndependenceCertificate pair_indep(std::span<const PointId> x,
                                         std::span<const PointId> A,
                                         std::span<const PointId> B,
                                         std::span<const PointId> y) const;

  bool map_valid(const PartialAutomorphism& g) const;
  bool pair_extension_ok(const PartialAutomorphism& g, PointId x, PointId y) const;

  /// Fresh canonical witness for extending g at x (backward: a preimage).
  PointId extend_witness(const PartialAutomorphism& g, PointId x, bool backward);

  // Denominator grid: every distance stays a multiple of 1/grid. Values that
  // need a finer grid double it unless the config pinned it.
  long long grid() const { return grid_; }
  void pin_grid(bool pinned) { grid_pinned_ = pinned; }
  void require_on_grid(const Rational& v);

  const Json& log() const { return log_; }
  static MetricFragment replay(ClassConfig cls, uint64_t seed, const Json& log,
                               long long max_denominator = 64);

 private:
  ClassConfig cls_;
  uint64_t seed_;
  FinMetricSpace space_;
  Rng rng_;
  long long grid_;
  bool grid_pinned_ = false;
  Json log_ = Json::array();
  uint64_t next_label_ = 0;

  Rational canonical_value(const Template& t, size_t slot, PointId other) const;
};

/// Relational counterpart; the universe is a RelStructure and independence is
/// the no-spanning-tuple predicate (the base may be empty).
class RelFragment {
 public:
  using Structure = RelStructure;
  using Template = RelTemplate;

  RelFragment(ClassConfig cls, uint64_t seed);

  const ClassConfig& cls() const { return cls_; }
  const RelStructure& universe() const { return structure_; }
  Rng& rng() { return rng_; }
  uint64_t seed() const { return seed_; }

  size_t size() const { return structure_.size(); }
  const std::string& label(PointId p) const { return structure_.label(p); }
  PointSet points() const { return structure_.all_points(); }
  std::optional<PointId> find(std::string_view l) const { return structure_.find(l); }

  // Adjoin one vertex whose incident tuples (within the existing universe)
  // are listed explicitly; slot -1 in a tuple row marks the new vertex.
  PointId adjoin(const std::vector<std::pair<std::string, std::vector<int>>>& incident);
  PointId adjoin_isolated();

  Template type_of(std::span<const PointId> tuple, std::span<const PointId> base) const;
  PointSet realize(const Template& t);
  bool realizes(std::span<const PointId> tuple, const Template& t) const;
  bool template_equal(const Template& a, const Template& b) const;

  IndependenceCertificate indep(std::span<const PointId> A, std::span<const PointId> B,
                                std::span<const PointId> C) const;
  PairIndependenceCertificate pair_indep(std::span<const PointId> x,
                                         std::span<const PointId> A,
                                         std::span<const PointId> B,
                                         std::span<const PointId> y) const;

  bool map_valid(const PartialAutomorphism& g) const;
  bool pair_extension_ok(const PartialAutomorphism& g, PointId x, PointId y) const;

  /// Fresh free witness for extending g at x (backward: a preimage).
  PointId extend_witness(const PartialAutomorphism& g, PointId x, bool backward);

  const Json& log() const { return log_; }
  static RelFragment replay(ClassConfig cls, uint64_t seed, const Json& log);

 private:
  ClassConfig cls_;
  uint64_t seed_;
  RelStructure structure_;
  Rng rng_;
  Json log_ = Json::array();
  uint64_t next_label_ = 0;

};

}  // namespace uryforge
