#pragma once

#include <string>
#include <tuple>
#include <vector>

#include "uryforge/fragment.hpp"
#include "uryforge/generators.hpp"

namespace uryforge::testing {

inline FinMetricSpace make_space(
    const std::vector<std::string>& labels,
    const std::vector<std::tuple<std::string, std::string, Rational>>& dists) {
  FinMetricSpace s;
  for (const auto& l : labels) s.add_point(l);
  for (const auto& [a, b, d] : dists) s.set_distance(*s.find(a), *s.find(b), d);
  return s;
}

inline KatetovFunction over(const FinMetricSpace& s,
                            const std::vector<std::pair<std::string, Rational>>& vals) {
  KatetovFunction f;
  for (const auto& [l, v] : vals) {
    f.base.push_back(*s.find(l));
    f.values.push_back(v);
  }
  return f;
}

inline PointSet named(const auto& frag_or_space, const std::vector<std::string>& labels) {
  PointSet out;
  for (const auto& l : labels) out.push_back(*frag_or_space.find(l));
  return out;
}

}  // namespace uryforge::testing
