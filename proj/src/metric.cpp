#include "uryforge/metric.hpp"

#include <algorithm>
#include <map>

#include "uryforge/json.hpp"

namespace uryforge {

const Rational FinMetricSpace::kZero{0};

PointId FinMetricSpace::add_point(std::string label) {
  if (find(label)) throw Error(ErrorKind::BaseMismatch, "duplicate label " + label);
  PointId p{(uint32_t)labels_.size()};
  index_.emplace(label, p.v);
  labels_.push_back(std::move(label));
  tri_.resize(tri_.size() + p.v, Rational(0));
  return p;
}

const std::string& FinMetricSpace::label(PointId p) const {
  check(p);
  return labels_[p.v];
}

std::optional<PointId> FinMetricSpace::find(std::string_view label) const {
  auto it = index_.find(label);
  if (it == index_.end()) return std::nullopt;
  return PointId{it->second};
}

PointSet FinMetricSpace::all_points() const {
  PointSet out;
  out.reserve(size());
  for (uint32_t i = 0; i < size(); ++i) out.push_back(PointId{i});
  return out;
}

size_t FinMetricSpace::cell(PointId a, PointId b) const {
  auto [lo, hi] = std::minmax(a.v, b.v);
  return (size_t)hi * (hi - 1) / 2 + lo;
}

void FinMetricSpace::check(PointId p) const {
  if (p.v >= labels_.size()) {
    throw Error(ErrorKind::UnknownPoint, "point id out of range");
  }
}

void FinMetricSpace::set_distance(PointId a, PointId b, const Rational& d) {
  check(a);
  check(b);
  if (a == b) {
    if (!d.is_zero()) throw Error(ErrorKind::KatetovViolation, "nonzero self distance");
    return;
  }
  tri_[cell(a, b)] = d;
}

const Rational& FinMetricSpace::distance(PointId a, PointId b) const {
  check(a);
  check(b);
  if (a == b) return kZero;
  return tri_[cell(a, b)];
}

Rational FinMetricSpace::diameter() const {
  Rational best(0);
  for (const auto& d : tri_) best = max(best, d);
  return best;
}

Rational FinMetricSpace::diameter_of(std::span<const PointId> pts) const {
  Rational best(0);
  for (size_t i = 0; i < pts.size(); ++i) {
    for (size_t j = i + 1; j < pts.size(); ++j) {
      best = max(best, distance(pts[i], pts[j]));
    }
  }
  return best;
}

FinMetricSpace FinMetricSpace::restrict(std::span<const PointId> pts) const {
  FinMetricSpace out;
  for (PointId p : pts) out.add_point(label(p));
  for (size_t i = 0; i < pts.size(); ++i) {
    for (size_t j = i + 1; j < pts.size(); ++j) {
      out.set_distance(PointId{(uint32_t)i}, PointId{(uint32_t)j},
                       distance(pts[i], pts[j]));
    }
  }
  return out;
}

Json FinMetricSpace::to_json() const {
  Json j;
  j["points"] = labels_;
  auto dist = Json::array();
  for (uint32_t b = 1; b < labels_.size(); ++b) {
    for (uint32_t a = 0; a < b; ++a) {
      dist.push_back({labels_[a], labels_[b],
                      distance(PointId{a}, PointId{b}).str()});
    }
  }
  j["dist"] = dist;
  return j;
}

FinMetricSpace FinMetricSpace::from_json(const Json& j) {
  FinMetricSpace s;
  for (const auto& l : j.at("points")) s.add_point(l.get<std::string>());
  for (const auto& row : j.at("dist")) {
    auto a = s.find(row.at(0).get<std::string>());
    auto b = s.find(row.at(1).get<std::string>());
    if (!a || !b) throw Error(ErrorKind::UnknownPoint, "dist row names unknown point");
    s.set_distance(*a, *b, Rational::parse(row.at(2).get<std::string>()));
  }
  return s;
}

ValidationReport validate_metric(const FinMetricSpace& s) {
  ValidationReport report;
  const auto pts = s.all_points();
  for (size_t i = 0; i < pts.size(); ++i) {
    for (size_t j = i + 1; j < pts.size(); ++j) {
      const Rational& d = s.distance(pts[i], pts[j]);
      if (d.is_negative()) {
        report.violations.push_back({MetricViolation::Kind::NegativeDistance,
                                     {s.label(pts[i]), s.label(pts[j])}});
      } else if (d.is_zero()) {
        report.violations.push_back({MetricViolation::Kind::ZeroDistance,
                                     {s.label(pts[i]), s.label(pts[j])}});
      }
    }
  }
  for (size_t i = 0; i < pts.size(); ++i) {
    for (size_t j = i + 1; j < pts.size(); ++j) {
      for (size_t k = j + 1; k < pts.size(); ++k) {
        const Rational& dij = s.distance(pts[i], pts[j]);
        const Rational& djk = s.distance(pts[j], pts[k]);
        const Rational& dik = s.distance(pts[i], pts[k]);
        if (dik > dij + djk || dij > dik + djk || djk > dij + dik) {
          report.violations.push_back(
              {MetricViolation::Kind::TriangleInequality,
               {s.label(pts[i]), s.label(pts[j]), s.label(pts[k])}});
        }
      }
    }
  }
  return report;
}

const Rational& KatetovFunction::at(PointId p) const {
  for (size_t i = 0; i < base.size(); ++i) {
    if (base[i] == p) return values[i];
  }
  throw Error(ErrorKind::UnknownPoint, "point not in katetov base");
}

Rational KatetovFunction::min_value() const {
  if (base.empty()) throw Error(ErrorKind::EmptyBase, "type over empty base has no distance");
  Rational best = values[0];
  for (const auto& v : values) best = min(best, v);
  return best;
}

bool is_katetov(const FinMetricSpace& s, const KatetovFunction& f, std::string* why) {
  if (f.base.size() != f.values.size()) {
    throw Error(ErrorKind::KatetovViolation, "base/value length mismatch");
  }
  for (PointId p : f.base) (void)s.label(p);  // throws UnknownPoint
  for (size_t i = 0; i < f.base.size(); ++i) {
    if (f.values[i].is_negative()) {
      if (why) *why = "negative value at " + s.label(f.base[i]);
      return false;
    }
    for (size_t j = i + 1; j < f.base.size(); ++j) {
      const Rational& d = s.distance(f.base[i], f.base[j]);
      const Rational diff = (f.values[i] - f.values[j]).abs();
      if (diff > d || d > f.values[i] + f.values[j]) {
        if (why) {
          *why = "pair (" + s.label(f.base[i]) + "," + s.label(f.base[j]) + ")";
        }
        return false;
      }
    }
  }
  return true;
}

PointId adjoin_point(FinMetricSpace& s, const KatetovFunction& f, std::string label,
                     bool full_check) {
  if (f.base.size() != s.size()) {
    throw Error(ErrorKind::KatetovViolation, "adjoin needs a value for every point");
  }
  if (full_check) {
    std::string why;
    if (!is_katetov(s, f, &why)) {
      throw Error(ErrorKind::KatetovViolation, "adjoin " + label + ": " + why);
    }
  } else {
    for (const auto& v : f.values) {
      if (v.is_negative()) throw Error(ErrorKind::KatetovViolation, "negative distance");
    }
  }
  for (size_t i = 0; i < f.base.size(); ++i) {
    if (f.values[i].is_zero()) {
      throw Error(ErrorKind::KatetovViolation,
                  "adjoin would identify with " + s.label(f.base[i]));
    }
  }
  PointId fresh = s.add_point(std::move(label));
  for (size_t i = 0; i < f.base.size(); ++i) {
    s.set_distance(fresh, f.base[i], f.values[i]);
  }
  return fresh;
}

namespace {

// Shared glue for the two amalgam operators: B is the label intersection,
// output points are ordered B, then A\B, then C\B.
struct AmalgamParts {
  std::vector<std::string> base;  // common labels
  std::vector<PointId> b_in_ab, b_in_cb;
  std::vector<PointId> a_only, c_only;
};

AmalgamParts split(const FinMetricSpace& ab, const FinMetricSpace& cb) {
  AmalgamParts parts;
  for (PointId p : ab.all_points()) {
    if (auto q = cb.find(ab.label(p))) {
      parts.base.push_back(ab.label(p));
      parts.b_in_ab.push_back(p);
      parts.b_in_cb.push_back(*q);
    } else {
      parts.a_only.push_back(p);
    }
  }
  for (PointId q : cb.all_points()) {
    if (!ab.find(cb.label(q))) parts.c_only.push_back(q);
  }
  for (size_t i = 0; i < parts.base.size(); ++i) {
    for (size_t j = i + 1; j < parts.base.size(); ++j) {
      if (ab.distance(parts.b_in_ab[i], parts.b_in_ab[j]) !=
          cb.distance(parts.b_in_cb[i], parts.b_in_cb[j])) {
        throw Error(ErrorKind::BaseMismatch,
                    "inputs disagree on base pair (" + parts.base[i] + "," +
                        parts.base[j] + ")");
      }
    }
  }
  return parts;
}

FinMetricSpace glue(const FinMetricSpace& ab, const FinMetricSpace& cb,
                    const AmalgamParts& parts,
                    const std::optional<Rational>& cap) {
  FinMetricSpace out;
  std::vector<PointId> base_out, a_out, c_out;
  for (const auto& l : parts.base) base_out.push_back(out.add_point(l));
  for (PointId p : parts.a_only) a_out.push_back(out.add_point(ab.label(p)));
  for (PointId q : parts.c_only) c_out.push_back(out.add_point(cb.label(q)));

  auto copy_block = [&](const FinMetricSpace& src, const std::vector<PointId>& src_base,
                        const std::vector<PointId>& src_own,
                        const std::vector<PointId>& dst_own) {
    for (size_t i = 0; i < src_base.size(); ++i) {
      for (size_t j = 0; j < src_own.size(); ++j) {
        out.set_distance(base_out[i], dst_own[j], src.distance(src_base[i], src_own[j]));
      }
    }
    for (size_t i = 0; i < src_own.size(); ++i) {
      for (size_t j = i + 1; j < src_own.size(); ++j) {
        out.set_distance(dst_own[i], dst_own[j], src.distance(src_own[i], src_own[j]));
      }
    }
  };
  for (size_t i = 0; i < base_out.size(); ++i) {
    for (size_t j = i + 1; j < base_out.size(); ++j) {
      out.set_distance(base_out[i], base_out[j],
                       ab.distance(parts.b_in_ab[i], parts.b_in_ab[j]));
    }
  }
  copy_block(ab, parts.b_in_ab, parts.a_only, a_out);
  copy_block(cb, parts.b_in_cb, parts.c_only, c_out);

  for (size_t i = 0; i < parts.a_only.size(); ++i) {
    for (size_t j = 0; j < parts.c_only.size(); ++j) {
      std::optional<Rational> best;
      for (size_t k = 0; k < parts.base.size(); ++k) {
        Rational via = ab.distance(parts.a_only[i], parts.b_in_ab[k]) +
                       cb.distance(parts.c_only[j], parts.b_in_cb[k]);
        if (!best || via < *best) best = via;
      }
      if (cap && (!best || *cap < *best)) best = *cap;
      out.set_distance(a_out[i], c_out[j], *best);
    }
  }
  return out;
}

}  // namespace

FinMetricSpace canonical_amalgam(const FinMetricSpace& ab, const FinMetricSpace& cb) {
  AmalgamParts parts = split(ab, cb);
  if (parts.base.empty()) {
    throw Error(ErrorKind::EmptyBase, "canonical amalgam needs a nonempty base");
  }
  return glue(ab, cb, parts, std::nullopt);
}

FinMetricSpace bounded_amalgam(const FinMetricSpace& ab, const FinMetricSpace& cb,
                               const Rational& cap) {
  for (const FinMetricSpace* s : {&ab, &cb}) {
    if (s->diameter() > cap) {
      throw Error(ErrorKind::CapExceeded, "input exceeds the diameter cap");
    }
  }
  AmalgamParts parts = split(ab, cb);
  return glue(ab, cb, parts, cap);
}

MinAmalgamResult min_distance_amalgam(const FinMetricSpace& x,
                                      const KatetovFunction& d1,
                                      const KatetovFunction& d2,
                                      std::string y_label, std::string z_label) {
  for (const KatetovFunction* f : {&d1, &d2}) {
    std::string why;
    if (f->base.size() != x.size() || !is_katetov(x, *f, &why)) {
      throw Error(ErrorKind::KatetovViolation, "extension is not a metric 1-type: " + why);
    }
  }
  MinAmalgamResult res;
  res.yz = Rational(0);
  for (size_t i = 0; i < d1.base.size(); ++i) {
    res.yz = max(res.yz, (d1.values[i] - d2.at(d1.base[i])).abs());
  }
  res.space = x;
  res.y_label = y_label;
  if (res.yz.is_zero()) {
    // The extensions agree pointwise: one fresh point realizes both and the
    // z name becomes an alias of y.
    res.identified = true;
    res.z_label = y_label;
    adjoin_point(res.space, d1, y_label);
    return res;
  }
  res.z_label = z_label;
  PointId y = adjoin_point(res.space, d1, std::move(y_label));
  KatetovFunction d2_full;
  d2_full.base = res.space.all_points();
  for (PointId p : d2_full.base) {
    d2_full.values.push_back(p == y ? res.yz : d2.at(p));
  }
  adjoin_point(res.space, d2_full, std::move(z_label));
  return res;
}

bool is_geodesic(const FinMetricSpace& s, std::span<const PointId> seq) {
  if (seq.size() < 2) return true;
  Rational total(0);
  for (size_t i = 0; i + 1 < seq.size(); ++i) {
    total += s.distance(seq[i], seq[i + 1]);
  }
  return s.distance(seq.front(), seq.back()) == total;
}

}  // namespace uryforge
