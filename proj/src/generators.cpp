#include "uryforge/generators.hpp"

#include <algorithm>

namespace uryforge {

long long grid_floor(const Rational& v, long long grid) {
  __int128 num = (__int128)v.num() * grid;
  long long q = (long long)(num / v.den());
  if (num < 0 && num % v.den() != 0) --q;
  return q;
}

long long grid_ceil(const Rational& v, long long grid) {
  __int128 num = (__int128)v.num() * grid;
  long long q = (long long)(num / v.den());
  if (num > 0 && num % v.den() != 0) ++q;
  return q;
}

KatetovFunction random_katetov(const MetricFragment& frag, Rng& rng, long long span) {
  const long long grid = frag.grid();
  KatetovFunction f;
  f.base = frag.points();
  Rational hi_cap = frag.cls().kind == ClassConfig::Kind::BoundedMetric
                        ? min(frag.cls().cap, Rational(span))
                        : Rational(span);
  for (size_t i = 0; i < f.base.size(); ++i) {
    Rational lo(1, grid);
    Rational hi = hi_cap;
    for (size_t j = 0; j < i; ++j) {
      const Rational& d = frag.universe().distance(f.base[i], f.base[j]);
      lo = max(lo, (f.values[j] - d).abs());
      lo = max(lo, d - f.values[j]);
      hi = min(hi, f.values[j] + d);
    }
    // The interval is nonempty by the triangle inequality on assigned pairs;
    // the span cap may cut it, in which case we take the floor value.
    long long klo = grid_ceil(lo, grid);
    long long khi = grid_floor(hi, grid);
    long long k = khi < klo ? klo : klo + (long long)rng.below((uint64_t)(khi - klo + 1));
    f.values.push_back(Rational(k, grid));
  }
  return f;
}

MetricFragment random_metric_fragment(const ClassConfig& cls, uint64_t seed, size_t n,
                                      long long grid, long long span) {
  MetricFragment frag(cls, seed, grid);
  for (size_t i = 0; i < n; ++i) {
    frag.adjoin(random_katetov(frag, frag.rng(), span));
  }
  return frag;
}

RelFragment random_rel_fragment(const ClassConfig& cls, uint64_t seed, size_t n) {
  RelFragment frag(cls, seed);
  const int arity = cls.signature().relations[0].arity;
  for (size_t i = 0; i < n; ++i) {
    std::vector<std::pair<std::string, std::vector<int>>> incident;
    PointSet existing = frag.points();
    if ((int)existing.size() >= arity - 1) {
      // Every (arity-1)-subset of existing vertices is a coin flip.
      std::vector<size_t> idx(arity - 1);
      auto rec = [&](auto&& self, size_t start, size_t depth) -> void {
        if (depth == idx.size()) {
          if (frag.rng().coin()) {
            std::vector<int> row;
            for (size_t d : idx) row.push_back((int)existing[d].v);
            row.push_back(-1);
            incident.emplace_back("E", row);
          }
          return;
        }
        for (size_t v = start; v < existing.size(); ++v) {
          idx[depth] = v;
          self(self, v + 1, depth + 1);
        }
      };
      rec(rec, 0, 0);
    }
    // Constraint rejection: drop sampled tuples until the vertex fits.
    while (true) {
      try {
        frag.adjoin(incident);
        break;
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::ConstraintViolation || incident.empty()) throw;
        incident.erase(incident.begin() + (ptrdiff_t)frag.rng().below(incident.size()));
      }
    }
  }
  return frag;
}

PointSet random_subset(Rng& rng, std::span<const PointId> pool, size_t max_size,
                       bool nonempty) {
  if (pool.empty()) {
    if (nonempty) throw Error(ErrorKind::Internal, "subset of an empty pool");
    return {};
  }
  size_t lo = nonempty ? 1 : 0;
  size_t size = lo + (size_t)rng.below(std::min(max_size, pool.size()) - lo + 1);
  PointSet shuffled(pool.begin(), pool.end());
  for (size_t i = shuffled.size(); i > 1; --i) {
    std::swap(shuffled[i - 1], shuffled[rng.below(i)]);
  }
  shuffled.resize(size);
  return sorted_unique(shuffled);
}

}  // namespace uryforge
