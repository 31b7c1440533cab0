#include "uryforge/relational.hpp"

#include <algorithm>

#include "uryforge/json.hpp"

namespace uryforge {

const RelSignature::Relation& RelSignature::get(const std::string& name) const {
  for (const auto& r : relations) {
    if (r.name == name) return r;
  }
  throw Error(ErrorKind::UnknownPoint, "unknown relation " + name);
}

RelStructure::RelStructure(RelSignature sig) : sig_(std::move(sig)) {
  for (const auto& r : sig_.relations) tuples_[r.name];
}

PointId RelStructure::add_point(std::string label) {
  if (find(label)) throw Error(ErrorKind::BaseMismatch, "duplicate label " + label);
  PointId p{(uint32_t)labels_.size()};
  index_.emplace(label, p.v);
  labels_.push_back(std::move(label));
  return p;
}

const std::string& RelStructure::label(PointId p) const {
  if (p.v >= labels_.size()) throw Error(ErrorKind::UnknownPoint, "point id out of range");
  return labels_[p.v];
}

std::optional<PointId> RelStructure::find(std::string_view label) const {
  auto it = index_.find(label);
  if (it == index_.end()) return std::nullopt;
  return PointId{it->second};
}

PointSet RelStructure::all_points() const {
  PointSet out;
  for (uint32_t i = 0; i < labels_.size(); ++i) out.push_back(PointId{i});
  return out;
}

std::vector<uint32_t> RelStructure::canon(const std::string& rel,
                                          std::vector<PointId> tuple) const {
  const auto& r = sig_.get(rel);
  if ((int)tuple.size() != r.arity) {
    throw Error(ErrorKind::ConstraintViolation, "arity mismatch for " + rel);
  }
  std::vector<uint32_t> t;
  for (PointId p : tuple) {
    (void)label(p);
    t.push_back(p.v);
  }
  if (r.symmetric) std::sort(t.begin(), t.end());
  for (size_t i = 0; i + 1 < t.size(); ++i) {
    if (r.symmetric && t[i] == t[i + 1]) {
      throw Error(ErrorKind::ConstraintViolation, rel + " tuple repeats a point");
    }
  }
  return t;
}

void RelStructure::add_tuple(const std::string& rel, std::vector<PointId> tuple) {
  tuples_.at(rel).insert(canon(rel, std::move(tuple)));
}

bool RelStructure::has_tuple(const std::string& rel, std::vector<PointId> tuple) const {
  return tuples_.at(rel).count(canon(rel, std::move(tuple))) > 0;
}

const std::set<std::vector<uint32_t>>& RelStructure::tuples(const std::string& rel) const {
  return tuples_.at(rel);
}

RelStructure RelStructure::restrict(std::span<const PointId> pts) const {
  RelStructure out(sig_);
  std::map<uint32_t, PointId> remap;
  for (PointId p : pts) remap[p.v] = out.add_point(label(p));
  for (const auto& [rel, set] : tuples_) {
    for (const auto& t : set) {
      std::vector<PointId> mapped;
      bool inside = true;
      for (uint32_t v : t) {
        auto it = remap.find(v);
        if (it == remap.end()) {
          inside = false;
          break;
        }
        mapped.push_back(it->second);
      }
      if (inside) out.add_tuple(rel, mapped);
    }
  }
  return out;
}

Json RelStructure::to_json(const RelConstraints* constraints) const {
  Json j;
  j["vertices"] = labels_;
  Json rels = Json::object();
  for (const auto& [rel, set] : tuples_) {
    auto arr = Json::array();
    for (const auto& t : set) {
      auto row = Json::array();
      for (uint32_t v : t) row.push_back(labels_[v]);
      arr.push_back(row);
    }
    rels[rel] = arr;
  }
  j["relations"] = rels;
  if (constraints && constraints->forbid_clique) {
    j["constraints"] = {{"forbid_clique", *constraints->forbid_clique}};
  }
  return j;
}

RelStructure RelStructure::from_json(const Json& j) {
  RelSignature sig;
  for (const auto& [rel, arr] : j.at("relations").items()) {
    int arity = 2;
    if (!arr.empty()) arity = (int)arr.at(0).size();
    sig.relations.push_back({rel, arity, true});
  }
  if (sig.relations.empty()) sig.relations.push_back({"E", 2, true});
  RelStructure s(sig);
  for (const auto& l : j.at("vertices")) s.add_point(l.get<std::string>());
  for (const auto& [rel, arr] : j.at("relations").items()) {
    for (const auto& row : arr) {
      std::vector<PointId> tuple;
      for (const auto& l : row) {
        auto p = s.find(l.get<std::string>());
        if (!p) throw Error(ErrorKind::UnknownPoint, "tuple names unknown vertex");
        tuple.push_back(*p);
      }
      s.add_tuple(rel, tuple);
    }
  }
  return s;
}

bool has_clique(const RelStructure& s, const std::string& rel, int k) {
  const auto n = s.size();
  if ((size_t)k > n) return false;
  std::vector<uint32_t> chosen;
  auto adjacent = [&](uint32_t a, uint32_t b) {
    return s.has_tuple(rel, {PointId{a}, PointId{b}});
  };
  // Depth-first over increasing vertex ids; fragments stay small enough for
  // the naive scan.
  auto rec = [&](auto&& self, uint32_t start) -> bool {
    if ((int)chosen.size() == k) return true;
    for (uint32_t v = start; v < n; ++v) {
      bool ok = true;
      for (uint32_t c : chosen) {
        if (!adjacent(c, v)) {
          ok = false;
          break;
        }
      }
      if (!ok) continue;
      chosen.push_back(v);
      if (self(self, v + 1)) return true;
      chosen.pop_back();
    }
    return false;
  };
  return rec(rec, 0);
}

std::vector<RelViolation> validate_rel(const RelStructure& s,
                                       const RelConstraints& constraints) {
  std::vector<RelViolation> out;
  if (constraints.forbid_clique &&
      has_clique(s, constraints.clique_relation, *constraints.forbid_clique)) {
    out.push_back({"forbidden clique of size " + std::to_string(*constraints.forbid_clique),
                   {}});
  }
  return out;
}

RelStructure free_amalgam(const RelStructure& ab, const RelStructure& cb,
                          const RelConstraints& constraints) {
  RelStructure out(ab.signature());
  std::map<uint32_t, PointId> from_ab, from_cb;
  for (PointId p : ab.all_points()) from_ab[p.v] = out.add_point(ab.label(p));
  for (PointId q : cb.all_points()) {
    if (auto shared = out.find(cb.label(q))) {
      from_cb[q.v] = *shared;
    } else {
      from_cb[q.v] = out.add_point(cb.label(q));
    }
  }
  // Base agreement: the induced structures on the shared labels must match.
  for (const auto& r : ab.signature().relations) {
    for (const auto& t : ab.tuples(r.name)) {
      bool in_base = true;
      std::vector<PointId> in_cb;
      for (uint32_t v : t) {
        auto q = cb.find(ab.label(PointId{v}));
        if (!q) {
          in_base = false;
          break;
        }
        in_cb.push_back(*q);
      }
      if (in_base && !cb.has_tuple(r.name, in_cb)) {
        throw Error(ErrorKind::BaseMismatch, "inputs disagree on base tuple in " + r.name);
      }
    }
  }
  auto copy = [&](const RelStructure& src, std::map<uint32_t, PointId>& remap) {
    for (const auto& r : src.signature().relations) {
      for (const auto& t : src.tuples(r.name)) {
        std::vector<PointId> mapped;
        for (uint32_t v : t) mapped.push_back(remap[v]);
        out.add_tuple(r.name, mapped);
      }
    }
  };
  copy(ab, from_ab);
  copy(cb, from_cb);
  auto violations = validate_rel(out, constraints);
  if (!violations.empty()) {
    throw Error(ErrorKind::ConstraintViolation,
                "free amalgam violates the class constraint: " + violations[0].what);
  }
  return out;
}

}  // namespace uryforge
