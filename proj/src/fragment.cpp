#include "uryforge/fragment.hpp"

#include <algorithm>
#include <numeric>

namespace uryforge {

std::string ClassConfig::name() const {
  switch (kind) {
    case Kind::Metric: return "metric";
    case Kind::BoundedMetric: return "bounded_metric";
    case Kind::RandomGraph: return "random_graph";
    case Kind::KnFree: return "knfree(" + std::to_string(forbid_n) + ")";
    case Kind::Hypergraph: return "hypergraph(" + std::to_string(arity) + ")";
  }
  return "?";
}

ClassConfig ClassConfig::parse(const std::string& s) {
  ClassConfig c;
  auto arg_of = [&](const std::string& prefix) -> std::optional<int> {
    if (s.rfind(prefix + "(", 0) == 0 && s.back() == ')') {
      return std::stoi(s.substr(prefix.size() + 1, s.size() - prefix.size() - 2));
    }
    return std::nullopt;
  };
  if (s == "metric") {
    c.kind = Kind::Metric;
  } else if (s == "bounded_metric") {
    c.kind = Kind::BoundedMetric;
  } else if (s == "random_graph") {
    c.kind = Kind::RandomGraph;
  } else if (auto n = arg_of("knfree")) {
    if (*n < 3) throw Error(ErrorKind::ConfigError, "knfree needs n >= 3");
    c.kind = Kind::KnFree;
    c.forbid_n = *n;
  } else if (auto k = arg_of("hypergraph")) {
    if (*k < 2) throw Error(ErrorKind::ConfigError, "hypergraph needs arity >= 2");
    c.kind = Kind::Hypergraph;
    c.arity = *k;
  } else {
    throw Error(ErrorKind::ConfigError, "unknown class " + s);
  }
  return c;
}

RelSignature ClassConfig::signature() const {
  if (kind == Kind::Hypergraph) return {{{"E", arity, true}}};
  return {{{"E", 2, true}}};
}

RelConstraints ClassConfig::constraints() const {
  RelConstraints c;
  if (kind == Kind::KnFree) c.forbid_clique = forbid_n;
  return c;
}

std::optional<PointId> PartialAutomorphism::image(PointId x) const {
  for (const auto& [a, b] : pairs) {
    if (a == x) return b;
  }
  return std::nullopt;
}

std::optional<PointId> PartialAutomorphism::preimage(PointId y) const {
  for (const auto& [a, b] : pairs) {
    if (b == y) return a;
  }
  return std::nullopt;
}

void PartialAutomorphism::add(PointId x, PointId y) {
  if (auto img = image(x)) {
    if (*img == y) return;
    throw Error(ErrorKind::Internal, "map already defined at the point");
  }
  if (preimage(y)) throw Error(ErrorKind::Internal, "map not injective");
  pairs.emplace_back(x, y);
}

PointSet PartialAutomorphism::domain() const {
  PointSet out;
  for (const auto& [a, b] : pairs) out.push_back(a);
  return out;
}

PointSet PartialAutomorphism::range() const {
  PointSet out;
  for (const auto& [a, b] : pairs) out.push_back(b);
  return out;
}

bool PartialAutomorphism::defined_on(std::span<const PointId> pts) const {
  for (PointId p : pts) {
    if (!image(p)) return false;
  }
  return true;
}

bool PartialAutomorphism::fixes(std::span<const PointId> pts) const {
  for (PointId p : pts) {
    auto img = image(p);
    if (!img || *img != p) return false;
  }
  return true;
}

PartialAutomorphism PartialAutomorphism::identity_on(std::span<const PointId> pts) {
  PartialAutomorphism g;
  for (PointId p : sorted_unique(pts)) g.add(p, p);
  return g;
}

PartialAutomorphism PartialAutomorphism::inverse() const {
  PartialAutomorphism g;
  g.policy = policy;
  for (const auto& [a, b] : pairs) g.add(b, a);
  return g;
}

Json PartialAutomorphism::to_json(
    const std::function<std::string(PointId)>& label) const {
  auto rows = Json::array();
  for (const auto& [a, b] : pairs) rows.push_back({label(a), label(b)});
  Json j;
  j["pairs"] = rows;
  return j;
}

PointSet sorted_unique(std::span<const PointId> pts) {
  PointSet out(pts.begin(), pts.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

PointSet set_union(std::span<const PointId> a, std::span<const PointId> b) {
  PointSet out(a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return sorted_unique(out);
}

bool contains(std::span<const PointId> set, PointId p) {
  return std::find(set.begin(), set.end(), p) != set.end();
}

// ---------------------------------------------------------------------------
// MetricFragment

MetricFragment::MetricFragment(ClassConfig cls, uint64_t seed, long long max_denominator)
    : cls_(std::move(cls)), seed_(seed), rng_(seed), grid_(max_denominator) {
  if (!cls_.is_metric()) {
    throw Error(ErrorKind::ConfigError, "metric fragment needs a metric class");
  }
  if (grid_ <= 0) throw Error(ErrorKind::ConfigError, "max_denominator must be positive");
}


PointId MetricFragment::adjoin(const KatetovFunction& f) {
  if (cls_.kind == ClassConfig::Kind::BoundedMetric) {
    for (const auto& v : f.values) {
      if (v > cls_.cap) throw Error(ErrorKind::CapExceeded, "distance above the class cap");
    }
  }
  std::string label = "p" + std::to_string(next_label_);
  Json type = Json::object();
  for (size_t i = 0; i < f.base.size(); ++i) {
    type[space_.label(f.base[i])] = f.values[i].str();
  }
  // Full pairwise validation at desk scale; machinery-grown fragments beyond
  // that rely on the constructions plus the certificate checkers.
  PointId p = adjoin_point(space_, f, label, space_.size() <= 96);
  ++next_label_;
  Json entry;
  entry["adjoin"] = label;
  entry["type"] = type;
  log_.push_back(entry);
  return p;
}

PointId MetricFragment::adjoin_isolated() {
  if (size() != 0) {
    throw Error(ErrorKind::Internal, "isolated adjoin only on an empty fragment");
  }
  return adjoin(KatetovFunction{});
}

void MetricFragment::require_on_grid(const Rational& v) {
  long long den = v.den();
  if (grid_ % den == 0) return;
  if (grid_pinned_) {
    throw Error(ErrorKind::ParityObstruction,
                "value " + v.str() + " off the pinned 1/" + std::to_string(grid_) + " grid");
  }
  long long g = std::gcd(grid_, den);
  grid_ = grid_ / g * den;
  Json entry;
  entry["grid"] = grid_;
  log_.push_back(entry);
}

MetricFragment::Template MetricFragment::type_of(std::span<const PointId> tuple,
                                                 std::span<const PointId> base) const {
  Template t;
  t.base = sorted_unique(base);
  PointSet slot_points;
  for (PointId p : tuple) {
    auto it = std::find(t.base.begin(), t.base.end(), p);
    if (it != t.base.end()) {
      t.coord.push_back(-(int)(it - t.base.begin()) - 1);
      continue;
    }
    auto sit = std::find(slot_points.begin(), slot_points.end(), p);
    if (sit == slot_points.end()) {
      slot_points.push_back(p);
      t.coord.push_back((int)slot_points.size() - 1);
    } else {
      t.coord.push_back((int)(sit - slot_points.begin()));
    }
  }
  PointSet order = t.base;
  order.insert(order.end(), slot_points.begin(), slot_points.end());
  t.pattern = space_.restrict(order);
  return t;
}

Rational MetricFragment::canonical_value(const Template& t, size_t slot,
                                         PointId other) const {
  // Shortest path through the base; the bounded class additionally caps it.
  std::optional<Rational> best;
  PointId slot_pt{(uint32_t)(t.base.size() + slot)};
  for (size_t i = 0; i < t.base.size(); ++i) {
    Rational via = t.pattern.distance(slot_pt, PointId{(uint32_t)i}) +
                   space_.distance(t.base[i], other);
    if (!best || via < *best) best = via;
  }
  if (cls_.kind == ClassConfig::Kind::BoundedMetric) {
    if (!best || cls_.cap < *best) best = cls_.cap;
  }
  if (!best) throw Error(ErrorKind::EmptyBase, "canonical extension over the empty base");
  return *best;
}

PointSet MetricFragment::realize(const Template& t) {
  for (size_t i = 0; i < t.base.size(); ++i) {
    for (size_t j = i + 1; j < t.base.size(); ++j) {
      if (t.pattern.distance(PointId{(uint32_t)i}, PointId{(uint32_t)j}) !=
          space_.distance(t.base[i], t.base[j])) {
        throw Error(ErrorKind::InconsistentType, "template disagrees with the fragment base");
      }
    }
  }
  if (t.slots() > 0 && t.base.empty() && cls_.local()) {
    throw Error(ErrorKind::EmptyBase, "type realization over the empty base");
  }
  std::vector<PointId> fresh;
  for (size_t s = 0; s < t.slots(); ++s) {
    PointId slot_pt{(uint32_t)(t.base.size() + s)};
    KatetovFunction f;
    f.base = points();
    for (PointId w : f.base) {
      auto bit = std::find(t.base.begin(), t.base.end(), w);
      if (bit != t.base.end()) {
        f.values.push_back(t.pattern.distance(
            slot_pt, PointId{(uint32_t)(bit - t.base.begin())}));
        continue;
      }
      auto fit = std::find(fresh.begin(), fresh.end(), w);
      if (fit != fresh.end()) {
        size_t j = fit - fresh.begin();
        f.values.push_back(t.pattern.distance(slot_pt, PointId{(uint32_t)(t.base.size() + j)}));
        continue;
      }
      f.values.push_back(canonical_value(t, s, w));
    }
    fresh.push_back(adjoin(f));
  }
  PointSet out;
  for (int c : t.coord) {
    out.push_back(c < 0 ? t.base[(size_t)(-c - 1)] : fresh[(size_t)c]);
  }
  return out;
}

bool MetricFragment::realizes(std::span<const PointId> tuple, const Template& t) const {
  if (tuple.size() != t.coord.size()) return false;
  Template have = type_of(tuple, t.base);
  return template_equal(have, t);
}

bool MetricFragment::template_equal(const Template& a, const Template& b) const {
  if (a.base != b.base || a.coord != b.coord) return false;
  if (a.pattern.size() != b.pattern.size()) return false;
  for (uint32_t i = 0; i < a.pattern.size(); ++i) {
    for (uint32_t j = i + 1; j < a.pattern.size(); ++j) {
      if (a.pattern.distance(PointId{i}, PointId{j}) !=
          b.pattern.distance(PointId{i}, PointId{j})) {
        return false;
      }
    }
  }
  return true;
}

IndependenceCertificate MetricFragment::indep(std::span<const PointId> A,
                                              std::span<const PointId> B,
                                              std::span<const PointId> C) const {
  const bool bounded = cls_.kind == ClassConfig::Kind::BoundedMetric;
  if (B.empty() && !bounded) {
    throw Error(ErrorKind::EmptyBase, "independence over the empty base is not defined");
  }
  IndependenceCertificate cert;
  PointSet sa = sorted_unique(A), sb = sorted_unique(B), sc = sorted_unique(C);
  for (PointId p : sa) cert.A.push_back(label(p));
  for (PointId p : sb) cert.B.push_back(label(p));
  for (PointId p : sc) cert.C.push_back(label(p));
  cert.verdict = true;
  for (PointId a : sa) {
    for (PointId c : sc) {
      const Rational& target = space_.distance(a, c);
      bool found = false;
      for (PointId b : sb) {
        if (space_.distance(a, b) + space_.distance(b, c) == target) {
          cert.witnesses.push_back({label(a), label(c), label(b)});
          found = true;
        }
      }
      if (bounded && target == cls_.cap) {
        cert.witnesses.push_back({label(a), label(c), kCapWitness});
        found = true;
      }
      if (!found) {
        cert.verdict = false;
        cert.missing_pair = {{label(a), label(c)}};
        return cert;
      }
    }
  }
  return cert;
}

PairIndependenceCertificate MetricFragment::pair_indep(std::span<const PointId> x,
                                                       std::span<const PointId> A,
                                                       std::span<const PointId> B,
                                                       std::span<const PointId> y) const {
  PairIndependenceCertificate cert;
  cert.left = indep(x, A, set_union(B, y));
  cert.right = indep(set_union(x, A), B, y);
  cert.verdict = cert.left.verdict && cert.right.verdict;
  return cert;
}

bool MetricFragment::map_valid(const PartialAutomorphism& g) const {
  for (size_t i = 0; i < g.pairs.size(); ++i) {
    for (size_t j = i + 1; j < g.pairs.size(); ++j) {
      if (space_.distance(g.pairs[i].first, g.pairs[j].first) !=
          space_.distance(g.pairs[i].second, g.pairs[j].second)) {
        return false;
      }
    }
  }
  return true;
}

bool MetricFragment::pair_extension_ok(const PartialAutomorphism& g, PointId x,
                                       PointId y) const {
  if (g.image(x) || g.preimage(y)) return false;
  for (const auto& [u, v] : g.pairs) {
    if (space_.distance(x, u) != space_.distance(y, v)) return false;
  }
  return true;
}

PointId MetricFragment::extend_witness(const PartialAutomorphism& g, PointId x,
                                       bool backward) {
  KatetovFunction f;
  f.base = points();
  const bool bounded = cls_.kind == ClassConfig::Kind::BoundedMetric;
  for (PointId w : f.base) {
    // transported value where w sits on the image side, shortest path
    // through the image side otherwise
    std::optional<Rational> best;
    for (const auto& [u, v] : g.pairs) {
      PointId src = backward ? v : u;
      PointId dst = backward ? u : v;
      if (dst == w) {
        best = space_.distance(x, src);
        break;
      }
      Rational via = space_.distance(x, src) + space_.distance(dst, w);
      if (!best || via < *best) best = via;
    }
    if (bounded && (!best || cls_.cap < *best)) best = cls_.cap;
    if (!best) throw Error(ErrorKind::EmptyBase, "extension of an empty map");
    f.values.push_back(*best);
  }
  return adjoin(f);
}

MetricFragment MetricFragment::replay(ClassConfig cls, uint64_t seed,
                                      const Json& log, long long max_denominator) {
  MetricFragment frag(cls, seed, max_denominator);
  for (const auto& entry : log) {
    if (entry.contains("grid")) {
      frag.grid_ = entry["grid"].get<long long>();
      frag.log_.push_back(entry);
      continue;
    }
    KatetovFunction f;
    for (const auto& [lbl, val] : entry.at("type").items()) {
      auto p = frag.space_.find(lbl);
      if (!p) throw Error(ErrorKind::UnknownPoint, "log references unknown point " + lbl);
      f.base.push_back(*p);
      f.values.push_back(Rational::parse(val.get<std::string>()));
    }
    // Re-adjoin through the logging path so labels and the log rebuild
    // identically.
    std::string expect = entry.at("adjoin").get<std::string>();
    KatetovFunction full;
    full.base = frag.points();
    for (PointId w : full.base) full.values.push_back(f.at(w));
    if (frag.size() == 0) full = KatetovFunction{};
    PointId p = frag.adjoin(full);
    if (frag.label(p) != expect) {
      throw Error(ErrorKind::Internal, "replay produced label " + frag.label(p) +
                                           " instead of " + expect);
    }
  }
  return frag;
}

// ---------------------------------------------------------------------------
// RelFragment

RelFragment::RelFragment(ClassConfig cls, uint64_t seed)
    : cls_(std::move(cls)), seed_(seed), structure_(cls_.signature()), rng_(seed) {
  if (cls_.is_metric()) {
    throw Error(ErrorKind::ConfigError, "relational fragment needs a relational class");
  }
}


PointId RelFragment::adjoin(
    const std::vector<std::pair<std::string, std::vector<int>>>& incident) {
  std::string lbl = "v" + std::to_string(next_label_);
  RelStructure candidate = structure_;
  PointId fresh = candidate.add_point(lbl);
  Json type = Json::object();
  for (const auto& r : structure_.signature().relations) type[r.name] = Json::array();
  for (const auto& [rel, row] : incident) {
    std::vector<PointId> tuple;
    auto names = Json::array();
    for (int v : row) {
      PointId p = v < 0 ? fresh : PointId{(uint32_t)v};
      tuple.push_back(p);
      names.push_back(candidate.label(p));
    }
    candidate.add_tuple(rel, tuple);
    type[rel].push_back(names);
  }
  auto violations = validate_rel(candidate, cls_.constraints());
  if (!violations.empty()) {
    throw Error(ErrorKind::ConstraintViolation, violations[0].what);
  }
  structure_ = std::move(candidate);
  ++next_label_;
  Json entry;
  entry["adjoin"] = lbl;
  entry["type"] = type;
  log_.push_back(entry);
  return fresh;
}

PointId RelFragment::adjoin_isolated() { return adjoin({}); }

RelFragment::Template RelFragment::type_of(std::span<const PointId> tuple,
                                           std::span<const PointId> base) const {
  Template t;
  t.base = sorted_unique(base);
  PointSet slot_points;
  for (PointId p : tuple) {
    auto it = std::find(t.base.begin(), t.base.end(), p);
    if (it != t.base.end()) {
      t.coord.push_back(-(int)(it - t.base.begin()) - 1);
      continue;
    }
    auto sit = std::find(slot_points.begin(), slot_points.end(), p);
    if (sit == slot_points.end()) {
      slot_points.push_back(p);
      t.coord.push_back((int)slot_points.size() - 1);
    } else {
      t.coord.push_back((int)(sit - slot_points.begin()));
    }
  }
  PointSet order = t.base;
  order.insert(order.end(), slot_points.begin(), slot_points.end());
  t.pattern = structure_.restrict(order);
  return t;
}

PointSet RelFragment::realize(const Template& t) {
  // Base block must agree with the universe.
  RelStructure base_block = structure_.restrict(t.base);
  for (const auto& r : base_block.signature().relations) {
    for (const auto& tp : base_block.tuples(r.name)) {
      std::vector<PointId> idx;
      for (uint32_t v : tp) idx.push_back(PointId{v});
      if (!t.pattern.has_tuple(r.name, idx)) {
        throw Error(ErrorKind::InconsistentType, "template disagrees with the fragment base");
      }
    }
  }
  for (const auto& r : t.pattern.signature().relations) {
    for (const auto& tp : t.pattern.tuples(r.name)) {
      bool in_base = std::all_of(tp.begin(), tp.end(),
                                 [&](uint32_t v) { return v < t.base.size(); });
      if (!in_base) continue;
      std::vector<PointId> idx;
      for (uint32_t v : tp) idx.push_back(PointId{v});
      if (!base_block.has_tuple(r.name, idx)) {
        throw Error(ErrorKind::InconsistentType, "template disagrees with the fragment base");
      }
    }
  }
  std::vector<PointId> fresh;
  for (size_t s = 0; s < t.slots(); ++s) {
    uint32_t slot_idx = (uint32_t)(t.base.size() + s);
    std::vector<std::pair<std::string, std::vector<int>>> incident;
    for (const auto& r : t.pattern.signature().relations) {
      for (const auto& tp : t.pattern.tuples(r.name)) {
        uint32_t max_idx = *std::max_element(tp.begin(), tp.end());
        if (max_idx != slot_idx) continue;
        std::vector<int> row;
        for (uint32_t v : tp) {
          if (v == slot_idx) {
            row.push_back(-1);
          } else if (v < t.base.size()) {
            row.push_back((int)t.base[v].v);
          } else {
            row.push_back((int)fresh[v - t.base.size()].v);
          }
        }
        incident.emplace_back(r.name, row);
      }
    }
    fresh.push_back(adjoin(incident));
  }
  PointSet out;
  for (int c : t.coord) {
    out.push_back(c < 0 ? t.base[(size_t)(-c - 1)] : fresh[(size_t)c]);
  }
  return out;
}

bool RelFragment::realizes(std::span<const PointId> tuple, const Template& t) const {
  if (tuple.size() != t.coord.size()) return false;
  Template have = type_of(tuple, t.base);
  return template_equal(have, t);
}

bool RelFragment::template_equal(const Template& a, const Template& b) const {
  if (a.base != b.base || a.coord != b.coord) return false;
  if (a.pattern.size() != b.pattern.size()) return false;
  for (const auto& r : a.pattern.signature().relations) {
    if (a.pattern.tuples(r.name) != b.pattern.tuples(r.name)) return false;
  }
  return true;
}

IndependenceCertificate RelFragment::indep(std::span<const PointId> A,
                                           std::span<const PointId> B,
                                           std::span<const PointId> C) const {
  IndependenceCertificate cert;
  PointSet sa = sorted_unique(A), sb = sorted_unique(B), sc = sorted_unique(C);
  for (PointId p : sa) cert.A.push_back(label(p));
  for (PointId p : sb) cert.B.push_back(label(p));
  for (PointId p : sc) cert.C.push_back(label(p));
  cert.verdict = true;
  PointSet ba = set_union(sb, sa);
  PointSet bc = set_union(sb, sc);
  PointSet all = set_union(ba, sc);
  for (const auto& r : structure_.signature().relations) {
    for (const auto& tp : structure_.tuples(r.name)) {
      bool in_scope = true, in_ba = true, in_bc = true;
      for (uint32_t v : tp) {
        PointId p{v};
        if (!contains(all, p)) in_scope = false;
        if (!contains(ba, p)) in_ba = false;
        if (!contains(bc, p)) in_bc = false;
      }
      if (in_scope && !in_ba && !in_bc) {
        cert.verdict = false;
        for (uint32_t v : tp) cert.violating_tuple.push_back(label(PointId{v}));
        return cert;
      }
    }
  }
  return cert;
}

PairIndependenceCertificate RelFragment::pair_indep(std::span<const PointId> x,
                                                    std::span<const PointId> A,
                                                    std::span<const PointId> B,
                                                    std::span<const PointId> y) const {
  PairIndependenceCertificate cert;
  cert.left = indep(x, A, set_union(B, y));
  cert.right = indep(set_union(x, A), B, y);
  cert.verdict = cert.left.verdict && cert.right.verdict;
  return cert;
}

bool RelFragment::map_valid(const PartialAutomorphism& g) const {
  PointSet dom = sorted_unique(g.domain());
  PointSet ran = sorted_unique(g.range());
  for (const auto& r : structure_.signature().relations) {
    for (const auto& tp : structure_.tuples(r.name)) {
      bool in_dom = true, in_ran = true;
      for (uint32_t v : tp) {
        if (!contains(dom, PointId{v})) in_dom = false;
        if (!contains(ran, PointId{v})) in_ran = false;
      }
      if (in_dom) {
        std::vector<PointId> img;
        for (uint32_t v : tp) img.push_back(*g.image(PointId{v}));
        if (!structure_.has_tuple(r.name, img)) return false;
      }
      if (in_ran) {
        std::vector<PointId> pre;
        for (uint32_t v : tp) pre.push_back(*g.preimage(PointId{v}));
        if (!structure_.has_tuple(r.name, pre)) return false;
      }
    }
  }
  return true;
}

PointId RelFragment::extend_witness(const PartialAutomorphism& g, PointId x,
                                    bool backward) {
  std::vector<std::pair<std::string, std::vector<int>>> incident;
  for (const auto& r : structure_.signature().relations) {
    for (const auto& tp : structure_.tuples(r.name)) {
      bool has_x = false, ok = true;
      std::vector<int> row;
      for (uint32_t v : tp) {
        PointId p{v};
        if (p == x) {
          has_x = true;
          row.push_back(-1);
          continue;
        }
        auto img = backward ? g.preimage(p) : g.image(p);
        if (!img) {
          ok = false;
          break;
        }
        row.push_back((int)img->v);
      }
      if (has_x && ok) incident.push_back({r.name, row});
    }
  }
  return adjoin(incident);
}

bool RelFragment::pair_extension_ok(const PartialAutomorphism& g, PointId x,
                                    PointId y) const {
  if (g.image(x) || g.preimage(y)) return false;
  PartialAutomorphism h = g;
  h.add(x, y);
  PointSet dom = sorted_unique(h.domain());
  PointSet ran = sorted_unique(h.range());
  for (const auto& r : structure_.signature().relations) {
    for (const auto& tp : structure_.tuples(r.name)) {
      bool touches_x = false, touches_y = false, in_dom = true, in_ran = true;
      for (uint32_t v : tp) {
        PointId p{v};
        if (p == x) touches_x = true;
        if (p == y) touches_y = true;
        if (!contains(dom, p)) in_dom = false;
        if (!contains(ran, p)) in_ran = false;
      }
      if (touches_x && in_dom) {
        std::vector<PointId> img;
        for (uint32_t v : tp) img.push_back(*h.image(PointId{v}));
        if (!structure_.has_tuple(r.name, img)) return false;
      }
      if (touches_y && in_ran) {
        std::vector<PointId> pre;
        for (uint32_t v : tp) pre.push_back(*h.preimage(PointId{v}));
        if (!structure_.has_tuple(r.name, pre)) return false;
      }
    }
  }
  return true;
}

RelFragment RelFragment::replay(ClassConfig cls, uint64_t seed, const Json& log) {
  RelFragment frag(cls, seed);
  for (const auto& entry : log) {
    std::string expect = entry.at("adjoin").get<std::string>();
    std::vector<std::pair<std::string, std::vector<int>>> incident;
    for (const auto& [rel, rows] : entry.at("type").items()) {
      for (const auto& row : rows) {
        std::vector<int> idx;
        for (const auto& name : row) {
          std::string n = name.get<std::string>();
          if (n == expect) {
            idx.push_back(-1);
          } else {
            auto p = frag.find(n);
            if (!p) throw Error(ErrorKind::UnknownPoint, "log references unknown vertex " + n);
            idx.push_back((int)p->v);
          }
        }
        incident.emplace_back(rel, idx);
      }
    }
    PointId p = frag.adjoin(incident);
    if (frag.label(p) != expect) {
      throw Error(ErrorKind::Internal, "replay produced label " + frag.label(p) +
                                           " instead of " + expect);
    }
  }
  return frag;
}

}  // namespace uryforge
