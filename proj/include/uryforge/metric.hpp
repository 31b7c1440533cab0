#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "uryforge/json.hpp"

#include "uryforge/error.hpp"
#include "uryforge/rational.hpp"

namespace uryforge {

struct PointId {
  uint32_t v = 0;
  friend auto operator<=>(const PointId&, const PointId&) = default;
};

using PointSet = std::vector<PointId>;

/// Finite point set with exact rational pairwise distances. Points are
/// identified by opaque ids; labels are the serialization names. The distance
/// matrix is stored symmetrically, d(x,x) = 0 implicitly.
class FinMetricSpace {
 public:
  PointId add_point(std::string label);

  size_t size() const { return labels_.size(); }
  const std::string& label(PointId p) const;
  std::optional<PointId> find(std::string_view label) const;
  PointSet all_points() const;

  void set_distance(PointId a, PointId b, const Rational& d);
  const Rational& distance(PointId a, PointId b) const;

  Rational diameter() const;
  Rational diameter_of(std::span<const PointId> pts) const;

  /// Induced subspace on `pts`, in the given order, labels preserved.
  FinMetricSpace restrict(std::span<const PointId> pts) const;

  Json to_json() const;
  static FinMetricSpace from_json(const Json& j);

 private:
  std::vector<std::string> labels_;
  std::map<std::string, uint32_t, std::less<>> index_;
  std::vector<Rational> tri_;  // row-major lower triangle, d(i,j) for i > j

  size_t cell(PointId a, PointId b) const;
  void check(PointId p) const;
  static const Rational kZero;
};

struct MetricViolation {
  enum class Kind { NegativeDistance, ZeroDistance, TriangleInequality };
  Kind kind;
  std::vector<std::string> points;  // the offending pair or triple
};

struct ValidationReport {
  std::vector<MetricViolation> violations;
  bool ok() const { return violations.empty(); }
};

/// Total check of every metric space invariant; lists all violations.
ValidationReport validate_metric(const FinMetricSpace& s);

/// A distance assignment over a subset of a space, the representation of a
/// metric 1-type. Realizable iff |f(x)-f(y)| <= d(x,y) <= f(x)+f(y) holds on
/// every pair of the base.
struct KatetovFunction {
  PointSet base;
  std::vector<Rational> values;

  const Rational& at(PointId p) const;
  Rational min_value() const;  // distance of the type to its base
};

bool is_katetov(const FinMetricSpace& s, const KatetovFunction& f,
                std::string* why = nullptr);

/// One-point extension realizing f; f must cover every point of the space.
/// `full_check` runs the complete pairwise realizability test; callers whose
/// vectors are valid by construction may skip it on large spaces.
PointId adjoin_point(FinMetricSpace& s, const KatetovFunction& f, std::string label,
                     bool full_check = true);

/// Shortest-path amalgam of two extensions of a common nonempty base: cross
/// distances are min over the base of the path sums. Inputs meet exactly in
/// the base (matched by label).
FinMetricSpace canonical_amalgam(const FinMetricSpace& ab, const FinMetricSpace& cb);

/// Diameter-capped variant; the base may be empty, cross distances are
/// min(path sums, cap).
FinMetricSpace bounded_amalgam(const FinMetricSpace& ab, const FinMetricSpace& cb,
                               const Rational& cap = Rational(1));

struct MinAmalgamResult {
  FinMetricSpace space;
  bool identified = false;  // the two fresh points coincided and were merged
  Rational yz;              // max_x |d1(y,x) - d2(z,x)|
  std::string y_label;
  std::string z_label;  // equals y_label when identified
};

/// Two one-point extensions of the same space glued at the least possible
/// distance; the fresh points are identified when that distance is zero.
MinAmalgamResult min_distance_amalgam(const FinMetricSpace& x,
                                      const KatetovFunction& d1,
                                      const KatetovFunction& d2,
                                      std::string y_label, std::string z_label);

/// True iff the end-to-end distance equals the sum of consecutive distances.
bool is_geodesic(const FinMetricSpace& s, std::span<const PointId> seq);

}  // namespace uryforge
