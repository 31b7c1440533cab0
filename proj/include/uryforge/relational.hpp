#pragma once

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "uryforge/json.hpp"

#include "uryforge/error.hpp"
#include "uryforge/metric.hpp"  // PointId / PointSet

namespace uryforge {

struct RelSignature {
  struct Relation {
    std::string name;
    int arity = 2;
    bool symmetric = true;  // tuples stored sorted when set
  };
  std::vector<Relation> relations;

  const Relation& get(const std::string& name) const;
};

struct RelConstraints {
  // Forbid complete subgraphs of this size on the named binary relation.
  std::optional<int> forbid_clique;
  std::string clique_relation = "E";
};

/// Finite relational structure: labelled points plus named tuple sets.
/// Symmetric relations keep tuples in sorted canonical form; graphs are
/// loop-free by construction.
class RelStructure {
 public:
  explicit RelStructure(RelSignature sig = {{{"E", 2, true}}});

  PointId add_point(std::string label);
  size_t size() const { return labels_.size(); }
  const std::string& label(PointId p) const;
  std::optional<PointId> find(std::string_view label) const;
  PointSet all_points() const;

  const RelSignature& signature() const { return sig_; }

  void add_tuple(const std::string& rel, std::vector<PointId> tuple);
  bool has_tuple(const std::string& rel, std::vector<PointId> tuple) const;
  const std::set<std::vector<uint32_t>>& tuples(const std::string& rel) const;

  RelStructure restrict(std::span<const PointId> pts) const;

  Json to_json(const RelConstraints* constraints = nullptr) const;
  static RelStructure from_json(const Json& j);

 private:
  RelSignature sig_;
  std::vector<std::string> labels_;
  std::map<std::string, uint32_t, std::less<>> index_;
  std::map<std::string, std::set<std::vector<uint32_t>>> tuples_;

  std::vector<uint32_t> canon(const std::string& rel, std::vector<PointId> tuple) const;
};

/// True iff the structure contains a complete subgraph of size k on `rel`.
bool has_clique(const RelStructure& s, const std::string& rel, int k);

struct RelViolation {
  std::string what;
  std::vector<std::string> points;
};

std::vector<RelViolation> validate_rel(const RelStructure& s,
                                       const RelConstraints& constraints);

/// Union of two structures meeting exactly in their common labels, with no
/// new tuples across the two sides. The base may be empty.
RelStructure free_amalgam(const RelStructure& ab, const RelStructure& cb,
                          const RelConstraints& constraints);

}  // namespace uryforge
