#pragma once

#include <string>
#include <vector>

#include "uryforge/fragment.hpp"
#include "uryforge/json.hpp"

namespace uryforge {

/// One verified postcondition: an evaluator name plus label-based arguments.
/// Certificates are lists of these; re-checking a certificate re-runs the
/// same evaluators against the replayed fragment, with no construction code.
struct Check {
  std::string name;
  Json args;
  bool ok = false;
};

struct CheckList {
  std::vector<Check> checks;
  bool verified = true;

  void push(Check c) {
    verified = verified && c.ok;
    checks.push_back(std::move(c));
  }
  void merge(const CheckList& other) {
    for (const auto& c : other.checks) push(c);
  }
  Json to_json() const {
    auto arr = Json::array();
    for (const auto& c : checks) {
      Json j;
      j["check"] = c.name;
      j["args"] = c.args;
      j["ok"] = c.ok;
      arr.push_back(j);
    }
    return arr;
  }
};

template <class F>
Json labels_json(const F& frag, std::span<const PointId> pts) {
  auto arr = Json::array();
  for (PointId p : pts) arr.push_back(frag.label(p));
  return arr;
}

template <class F>
PointSet points_from(const F& frag, const Json& arr) {
  PointSet out;
  for (const auto& l : arr) {
    auto p = frag.find(l.template get<std::string>());
    if (!p) throw Error(ErrorKind::UnknownPoint, "certificate names unknown point");
    out.push_back(*p);
  }
  return out;
}

template <class F>
Json map_json(const F& frag, const PartialAutomorphism& g) {
  return g.to_json([&](PointId p) { return frag.label(p); });
}

template <class F>
PartialAutomorphism map_from(const F& frag, const Json& j) {
  PartialAutomorphism g;
  for (const auto& row : j.at("pairs")) {
    auto a = frag.find(row.at(0).template get<std::string>());
    auto b = frag.find(row.at(1).template get<std::string>());
    if (!a || !b) throw Error(ErrorKind::UnknownPoint, "map names unknown point");
    g.add(*a, *b);
  }
  return g;
}

template <class F>
bool eval_check(const F& frag, const std::string& name, const Json& args);

/// Evaluates-and-records against a single fragment.
template <class F>
class Checker {
 public:
  explicit Checker(F& frag) : frag_(frag) {}

  CheckList take() { return std::move(list_); }
  const CheckList& list() const { return list_; }
  bool verified() const { return list_.verified; }
  void merge(const CheckList& other) { list_.merge(other); }

  bool run(const std::string& name, Json args) {
    bool ok = eval_check(frag_, name, args);
    list_.push({name, std::move(args), ok});
    return ok;
  }

  bool indep(std::span<const PointId> A, std::span<const PointId> B,
             std::span<const PointId> C, bool expect = true) {
    Json a;
    a["A"] = labels_json(frag_, A);
    a["B"] = labels_json(frag_, B);
    a["C"] = labels_json(frag_, C);
    a["expect"] = expect;
    return run("indep", std::move(a));
  }

  bool pair_indep(std::span<const PointId> x, std::span<const PointId> A,
                  std::span<const PointId> B, std::span<const PointId> y) {
    Json a;
    a["x"] = labels_json(frag_, x);
    a["A"] = labels_json(frag_, A);
    a["B"] = labels_json(frag_, B);
    a["y"] = labels_json(frag_, y);
    return run("pair_indep", std::move(a));
  }

  bool points_equal(std::span<const PointId> l, std::span<const PointId> r) {
    Json a;
    a["left"] = labels_json(frag_, l);
    a["right"] = labels_json(frag_, r);
    return run("points_equal", std::move(a));
  }

  bool subset(std::span<const PointId> sub, std::span<const PointId> sup) {
    Json a;
    a["sub"] = labels_json(frag_, sub);
    a["sup"] = labels_json(frag_, sup);
    return run("subset", std::move(a));
  }

  bool map_fixes(const PartialAutomorphism& g, std::span<const PointId> set) {
    Json a;
    a["map"] = map_json(frag_, g);
    a["set"] = labels_json(frag_, set);
    return run("map_fixes", std::move(a));
  }

  bool map_valid(const PartialAutomorphism& g) {
    Json a;
    a["map"] = map_json(frag_, g);
    return run("map_valid", std::move(a));
  }

  bool map_extends(const PartialAutomorphism& g, const PartialAutomorphism& sub) {
    Json a;
    a["map"] = map_json(frag_, g);
    a["sub"] = map_json(frag_, sub);
    return run("map_extends", std::move(a));
  }

  // factors apply first to last; inverse factors look up preimages
  bool word_maps(const std::vector<std::pair<const PartialAutomorphism*, bool>>& word,
                 std::span<const PointId> from, std::span<const PointId> to) {
    Json a;
    auto factors = Json::array();
    for (const auto& [m, inv] : word) {
      Json f;
      f["pairs"] = map_json(frag_, *m)["pairs"];
      f["inverse"] = inv;
      factors.push_back(f);
    }
    a["factors"] = factors;
    a["from"] = labels_json(frag_, from);
    a["to"] = labels_json(frag_, to);
    return run("word_maps", std::move(a));
  }

  bool type_equal(std::span<const PointId> t1, std::span<const PointId> b1,
                  std::span<const PointId> t2, std::span<const PointId> b2) {
    Json a;
    a["tuple1"] = labels_json(frag_, t1);
    a["base1"] = labels_json(frag_, b1);
    a["tuple2"] = labels_json(frag_, t2);
    a["base2"] = labels_json(frag_, b2);
    return run("type_equal", std::move(a));
  }

  bool geodesic(std::span<const PointId> seq) {
    Json a;
    a["seq"] = labels_json(frag_, seq);
    return run("geodesic", std::move(a));
  }

  bool dist_cmp(PointId x, PointId y, const std::string& rel, const Rational& bound) {
    Json a;
    a["a"] = frag_.label(x);
    a["b"] = frag_.label(y);
    a["rel"] = rel;
    a["bound"] = bound.str();
    return run("dist_cmp", std::move(a));
  }

  void require(bool ok, const std::string& what) {
    if (!ok) throw Error(ErrorKind::PreconditionFailed, what);
  }

 private:
  F& frag_;
  CheckList list_;
};

// Pure evaluation of a serialized check against a (replayed) fragment. This
// is the single evaluator used both when a lemma runs and when a certificate
// is re-checked from disk.
template <class F>
bool eval_check(const F& frag, const std::string& name, const Json& args) {
  auto get_pts = [&](const char* key) { return points_from(frag, args.at(key)); };
  if (name == "indep") {
    bool expect = args.value("expect", true);
    return frag.indep(get_pts("A"), get_pts("B"), get_pts("C")).verdict == expect;
  }
  if (name == "pair_indep") {
    return frag.pair_indep(get_pts("x"), get_pts("A"), get_pts("B"), get_pts("y")).verdict;
  }
  if (name == "points_equal") {
    return get_pts("left") == get_pts("right");
  }
  if (name == "subset") {
    PointSet sup = sorted_unique(get_pts("sup"));
    for (PointId p : get_pts("sub")) {
      if (!contains(sup, p)) return false;
    }
    return true;
  }
  if (name == "map_fixes") {
    return map_from(frag, args.at("map")).fixes(get_pts("set"));
  }
  if (name == "map_valid") {
    return frag.map_valid(map_from(frag, args.at("map")));
  }
  if (name == "map_extends") {
    PartialAutomorphism g = map_from(frag, args.at("map"));
    for (const auto& [a, b] : map_from(frag, args.at("sub")).pairs) {
      auto img = g.image(a);
      if (!img || *img != b) return false;
    }
    return true;
  }
  if (name == "word_maps") {
    std::vector<std::pair<PartialAutomorphism, bool>> word;
    for (const auto& f : args.at("factors")) {
      word.emplace_back(map_from(frag, f), f.at("inverse").template get<bool>());
    }
    PointSet from = get_pts("from"), to = get_pts("to");
    if (from.size() != to.size()) return false;
    for (size_t i = 0; i < from.size(); ++i) {
      PointId cur = from[i];
      for (const auto& [m, inv] : word) {
        auto next = inv ? m.preimage(cur) : m.image(cur);
        if (!next) return false;
        cur = *next;
      }
      if (cur != to[i]) return false;
    }
    return true;
  }
  if (name == "type_equal") {
    auto t1 = frag.type_of(get_pts("tuple1"), get_pts("base1"));
    auto t2 = frag.type_of(get_pts("tuple2"), get_pts("base2"));
    if (t1.coord != t2.coord) return false;
    if (t1.pattern.size() != t2.pattern.size()) return false;
    // Bases may name different points; only the induced patterns and the
    // coordinate shapes must agree.
    if constexpr (std::is_same_v<F, MetricFragment>) {
      for (uint32_t i = 0; i < t1.pattern.size(); ++i) {
        for (uint32_t j = i + 1; j < t1.pattern.size(); ++j) {
          if (t1.pattern.distance(PointId{i}, PointId{j}) !=
              t2.pattern.distance(PointId{i}, PointId{j})) {
            return false;
          }
        }
      }
      return true;
    } else {
      for (const auto& r : t1.pattern.signature().relations) {
        if (t1.pattern.tuples(r.name) != t2.pattern.tuples(r.name)) return false;
      }
      return true;
    }
  }
  if constexpr (std::is_same_v<F, MetricFragment>) {
    if (name == "geodesic") {
      return is_geodesic(frag.universe(), get_pts("seq"));
    }
    if (name == "dist_cmp") {
      PointSet a = points_from(frag, Json::array({args.at("a")}));
      PointSet b = points_from(frag, Json::array({args.at("b")}));
      const Rational bound = Rational::parse(args.at("bound").template get<std::string>());
      const Rational& d = frag.universe().distance(a[0], b[0]);
      std::string rel = args.at("rel").template get<std::string>();
      if (rel == "eq") return d == bound;
      if (rel == "ge") return d >= bound;
      if (rel == "gt") return d > bound;
      throw Error(ErrorKind::Internal, "unknown dist_cmp relation " + rel);
    }
    if (name == "fragment_valid") {
      return validate_metric(frag.universe()).ok();
    }
    if (name == "template_realizes") {
      typename F::Template t;
      t.base = get_pts("base");
      t.pattern = FinMetricSpace::from_json(args.at("pattern"));
      for (const auto& c : args.at("coord")) t.coord.push_back(c.template get<int>());
      return frag.realizes(get_pts("tuple"), t);
    }
  } else {
    if (name == "fragment_valid") {
      return validate_rel(frag.universe(), frag.cls().constraints()).empty();
    }
    if (name == "template_realizes") {
      typename F::Template t;
      t.base = get_pts("base");
      t.pattern = RelStructure::from_json(args.at("pattern"));
      for (const auto& c : args.at("coord")) t.coord.push_back(c.template get<int>());
      return frag.realizes(get_pts("tuple"), t);
    }
  }
  throw Error(ErrorKind::Internal, "unknown check evaluator " + name);
}

}  // namespace uryforge
