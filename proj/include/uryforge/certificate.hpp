#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "uryforge/json.hpp"

namespace uryforge {

// Witness label used when a cross distance is realized by the diameter cap of
// the bounded class rather than by a base point. '#' never occurs in point
// labels.
inline constexpr const char* kCapWitness = "#cap";

/// Replayable record of one independence query: the three sets, an exhaustive
/// witness list when the verdict is true, and the first witnessless pair (or
/// spanning tuple, for relational classes) when it is false.
struct IndependenceCertificate {
  std::vector<std::string> A, B, C;
  // Rows (a, c, b) with d(a,c) = d(a,b) + d(b,c); every witness is recorded,
  // not just one per pair.
  std::vector<std::array<std::string, 3>> witnesses;
  bool verdict = false;
  std::optional<std::array<std::string, 2>> missing_pair;
  std::vector<std::string> violating_tuple;  // relational failure evidence

  Json to_json() const;
  static IndependenceCertificate from_json(const Json& j);
};

/// The two-part certificate for "x independent from y over A;B".
struct PairIndependenceCertificate {
  IndependenceCertificate left;   // x over A against B∪y
  IndependenceCertificate right;  // x∪A over B against y
  bool verdict = false;

  Json to_json() const;
  static PairIndependenceCertificate from_json(const Json& j);
};

}  // namespace uryforge
