#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "haarforge/common.hpp"

namespace haarforge {

// A dyadic interval [(i-1)/2^j, i/2^j) or the symbol for h_emptyset = chi_[0,1).
struct DyadicIndex {
  bool empty = false;
  int level = 0;
  std::int64_t position = 1;

  static DyadicIndex interval(int j, std::int64_t i) {
    if (j < 0 || j > 40 || i < 1 || i > (std::int64_t{1} << j))
      fail(Errc::invalid_argument, "dyadic interval out of range: level " + std::to_string(j) +
                                       " position " + std::to_string(i));
    return DyadicIndex{false, j, i};
  }
  static DyadicIndex emptyset() { return DyadicIndex{true, 0, 0}; }

  // |I|; the empty symbol lives on [0,1) and gets measure 1
  Measure measure() const { return empty ? Measure::one() : Measure::pow2(level); }
  double length() const { return measure().value(); }
  Measure lo() const { return empty ? Measure{} : Measure::pow2(level) * (position - 1); }
  Measure hi() const { return empty ? Measure::one() : Measure::pow2(level) * position; }

  DyadicIndex left() const { return empty ? interval(0, 1) : interval(level + 1, 2 * position - 1); }
  DyadicIndex right() const { return interval(level + 1, 2 * position); }
  DyadicIndex parent() const {
    if (empty || level == 0) fail(Errc::invalid_argument, "no parent");
    return interval(level - 1, (position + 1) / 2);
  }

  // other is a subset of *this
  bool contains(const DyadicIndex& o) const {
    if (empty) return true;
    if (o.empty) return false;
    if (o.level < level) return false;
    return ((o.position - 1) >> (o.level - level)) == position - 1;
  }
  bool disjoint(const DyadicIndex& o) const { return !contains(o) && !o.contains(*this); }

  bool operator==(const DyadicIndex& o) const {
    return empty == o.empty && (empty || (level == o.level && position == o.position));
  }
  std::string str() const {
    if (empty) return "E";
    return std::to_string(level) + ":" + std::to_string(position);
  }
};

inline std::int64_t interval_index(const DyadicIndex& I) {
  if (I.empty) fail(Errc::invalid_argument, "no order position for the empty symbol");
  return (std::int64_t{1} << I.level) + I.position - 1;
}

inline DyadicIndex interval_from_index(std::int64_t n) {
  if (n < 1) fail(Errc::invalid_argument, "interval index must be positive");
  int j = 63 - __builtin_clzll(static_cast<unsigned long long>(n));
  return DyadicIndex::interval(j, n - (std::int64_t{1} << j) + 1);
}

// Order with the empty symbol first, then by interval_index.
inline bool index_less(const DyadicIndex& a, const DyadicIndex& b) {
  if (a.empty || b.empty) return a.empty && !b.empty;
  return interval_index(a) < interval_index(b);
}

struct DyadicIndexHash {
  std::size_t operator()(const DyadicIndex& I) const {
    return I.empty ? 0 : static_cast<std::size_t>(interval_index(I));
  }
};

inline std::int64_t pairing(std::int64_t m, std::int64_t n) {
  if (m < 0 || n < 0) fail(Errc::invalid_argument, "pairing takes nonnegative arguments");
  return m < n ? n * n + m : m * m + m + n;
}

inline std::pair<std::int64_t, std::int64_t> unpairing(std::int64_t k) {
  if (k < 0) fail(Errc::invalid_argument, "unpairing takes a nonnegative argument");
  std::int64_t s = static_cast<std::int64_t>(std::sqrt(static_cast<double>(k)));
  while (s * s > k) --s;
  while ((s + 1) * (s + 1) <= k) ++s;
  std::int64_t r = k - s * s;
  if (r < s) return {r, s};
  return {s, r - s};
}

struct DyadicRect {
  std::vector<DyadicIndex> factors;

  std::size_t dims() const { return factors.size(); }
  Measure measure() const {
    int total = 0;
    for (const auto& f : factors) total += f.level;
    return Measure::pow2(total);
  }
  bool contains(const DyadicRect& o) const {
    for (std::size_t a = 0; a < factors.size(); ++a)
      if (!factors[a].contains(o.factors[a])) return false;
    return true;
  }
  bool operator==(const DyadicRect& o) const { return factors == o.factors; }
  std::string str() const {
    std::string s;
    for (std::size_t a = 0; a < factors.size(); ++a) s += (a ? "x" : "") + factors[a].str();
    return s;
  }
};

inline DyadicRect rect(std::vector<DyadicIndex> f) {
  for (const auto& I : f)
    if (I.empty) fail(Errc::invalid_argument, "rectangles never use the empty symbol");
  return DyadicRect{std::move(f)};
}

// Iterated pairing of the level vector; equals the plain pairing for d = 2.
inline std::int64_t level_key(const DyadicRect& R) {
  std::int64_t k = R.factors.at(0).level;
  if (R.dims() == 1) return k;
  k = pairing(R.factors[0].level, R.factors[1].level);
  for (std::size_t a = 2; a < R.dims(); ++a) k = pairing(k, R.factors[a].level);
  return k;
}

// Lexicographic on (level key, inf I_1, ..., inf I_d).
inline bool rect_less(const DyadicRect& a, const DyadicRect& b) {
  auto ka = level_key(a), kb = level_key(b);
  if (ka != kb) return ka < kb;
  for (std::size_t s = 0; s < a.dims(); ++s)
    if (a.factors[s].lo() != b.factors[s].lo()) return a.factors[s].lo() < b.factors[s].lo();
  return false;
}

inline std::int64_t rect_index(const DyadicRect& R) {
  if (R.dims() != 2) fail(Errc::unsupported, "rect_index is defined for d = 2 only");
  std::int64_t key = pairing(R.factors[0].level, R.factors[1].level);
  std::int64_t rank = 0;
  for (std::int64_t k = 0; k < key; ++k) {
    auto [m, n] = unpairing(k);
    rank += std::int64_t{1} << (m + n);
  }
  return rank + (R.factors[0].position - 1) * (std::int64_t{1} << R.factors[1].level) +
         (R.factors[1].position - 1);
}

inline DyadicRect rect_from_index(std::int64_t r) {
  for (std::int64_t k = 0;; ++k) {
    auto [m, n] = unpairing(k);
    std::int64_t block = std::int64_t{1} << (m + n);
    if (r < block) {
      return rect({DyadicIndex::interval(int(m), r / (std::int64_t{1} << n) + 1),
                   DyadicIndex::interval(int(n), r % (std::int64_t{1} << n) + 1)});
    }
    r -= block;
  }
}

// A union of grid cells of [0,1) at a fixed resolution.
struct CellSet {
  int resolution = 0;
  std::vector<std::uint8_t> cells;

  explicit CellSet(int res = 0) : resolution(res), cells(std::size_t{1} << res, 0) {}
  static CellSet full(int res) {
    CellSet s(res);
    std::fill(s.cells.begin(), s.cells.end(), 1);
    return s;
  }

  std::pair<std::size_t, std::size_t> span(const DyadicIndex& I) const {
    if (I.empty) return {0, cells.size()};
    if (I.level > resolution) fail(Errc::resolution, "interval finer than cell grid");
    std::size_t w = std::size_t{1} << (resolution - I.level);
    return {(I.position - 1) * w, I.position * w};
  }
  void add(const DyadicIndex& I) {
    auto [a, b] = span(I);
    std::fill(cells.begin() + a, cells.begin() + b, 1);
  }
  bool covers(const DyadicIndex& I) const {
    auto [a, b] = span(I);
    return std::all_of(cells.begin() + a, cells.begin() + b, [](auto c) { return c != 0; });
  }
  Measure measure() const {
    std::int64_t n = std::count(cells.begin(), cells.end(), std::uint8_t{1});
    return Measure::pow2(resolution) * n;
  }
  CellSet operator&(const CellSet& o) const {
    CellSet r(resolution);
    for (std::size_t c = 0; c < cells.size(); ++c) r.cells[c] = cells[c] & o.cells[c];
    return r;
  }
  CellSet operator|(const CellSet& o) const {
    CellSet r(resolution);
    for (std::size_t c = 0; c < cells.size(); ++c) r.cells[c] = cells[c] | o.cells[c];
    return r;
  }
  bool subset_of(const CellSet& o) const {
    for (std::size_t c = 0; c < cells.size(); ++c)
      if (cells[c] && !o.cells[c]) return false;
    return true;
  }
  bool operator==(const CellSet& o) const = default;
};

class IntervalCollection {
 public:
  IntervalCollection(std::vector<DyadicIndex> members, int depth_cap) : depth_cap_(depth_cap) {
    if (depth_cap < 0 || depth_cap > 30) fail(Errc::invalid_argument, "depth_cap out of range");
    for (const auto& I : members) {
      if (I.empty) fail(Errc::invalid_collection, "collections hold intervals only");
      if (I.level > depth_cap) fail(Errc::invalid_collection, "member " + I.str() + " exceeds depth_cap");
    }
    std::sort(members.begin(), members.end(), index_less);
    members.erase(std::unique(members.begin(), members.end()), members.end());
    members_ = std::move(members);
  }

  static IntervalCollection full(int depth_cap, int from_level = 0) {
    std::vector<DyadicIndex> m;
    for (int j = from_level; j <= depth_cap; ++j)
      for (std::int64_t i = 1; i <= (std::int64_t{1} << j); ++i) m.push_back(DyadicIndex::interval(j, i));
    return IntervalCollection(std::move(m), depth_cap);
  }

  const std::vector<DyadicIndex>& members() const& { return members_; }
  std::vector<DyadicIndex> members() && { return std::move(members_); }
  int depth_cap() const { return depth_cap_; }
  int resolution() const { return depth_cap_ + 1; }
  bool empty() const { return members_.empty(); }
  bool has(const DyadicIndex& I) const { return std::find(members_.begin(), members_.end(), I) != members_.end(); }

  CellSet star() const { return star_of(members_, resolution()); }

  static CellSet star_of(const std::vector<DyadicIndex>& v, int res) {
    CellSet s(res);
    for (const auto& I : v) s.add(I);
    return s;
  }

 private:
  std::vector<DyadicIndex> members_;
  int depth_cap_;
};

struct Generations {
  std::vector<std::vector<DyadicIndex>> layers;
  std::vector<Measure> layer_measure;
  CellSet persistent;

  // generation index of I, or -1
  int layer_of(const DyadicIndex& I) const {
    for (std::size_t k = 0; k < layers.size(); ++k)
      if (std::find(layers[k].begin(), layers[k].end(), I) != layers[k].end()) return int(k);
    return -1;
  }
  const std::vector<DyadicIndex>& layer(int k) const {
    static const std::vector<DyadicIndex> none;
    return k >= 0 && std::size_t(k) < layers.size() ? layers[k] : none;
  }
};

// G_0 = maximal members; G_{n+1} = maximal members of what remains.
inline Generations generations(const IntervalCollection& A) {
  Generations g;
  int res = A.resolution();
  std::vector<DyadicIndex> remaining = A.members();
  while (!remaining.empty()) {
    std::unordered_set<DyadicIndex, DyadicIndexHash> alive(remaining.begin(), remaining.end());
    std::vector<DyadicIndex> layer, rest;
    for (const auto& I : remaining) {
      bool maximal = true;
      for (DyadicIndex P = I; P.level > 0;) {
        P = P.parent();
        if (alive.count(P)) { maximal = false; break; }
      }
      (maximal ? layer : rest).push_back(I);
    }
    g.layers.push_back(layer);
    remaining = std::move(rest);
  }
  g.persistent = g.layers.empty() ? CellSet(res) : CellSet::full(res);
  for (const auto& L : g.layers) {
    CellSet s = IntervalCollection::star_of(L, res);
    g.layer_measure.push_back(s.measure());
    g.persistent = g.persistent & s;
  }
  return g;
}

struct PruneResult {
  IntervalCollection pruned;
  std::vector<DyadicIndex> dropped;
};

// Removes the subtrees (within A) of the candidate roots, in order, whenever the removal keeps
// G_k(pruned) inside G_k(A), loses at most kappa/2^{k+1} of layer k, and keeps the persistent
// measure within kappa of the original. Candidates that would break a bound are skipped.
inline PruneResult prune_collection(const IntervalCollection& A, double kappa,
                                    const std::vector<DyadicIndex>& candidates = {}) {
  if (!(kappa > 0.0) || kappa >= 1.0) fail(Errc::invalid_argument, "kappa must lie in (0,1)");
  Generations base = generations(A);
  PruneResult out{A, {}};
  for (const auto& c : candidates) {
    std::vector<DyadicIndex> kept;
    for (const auto& I : out.pruned.members())
      if (!c.contains(I)) kept.push_back(I);
    if (kept.size() == out.pruned.members().size()) continue;
    IntervalCollection trial(kept, A.depth_cap());
    Generations g = generations(trial);
    bool ok = g.persistent.measure().value() >= base.persistent.measure().value() - kappa;
    for (std::size_t k = 0; ok && k < g.layers.size(); ++k) {
      for (const auto& I : g.layers[k])
        if (base.layer_of(I) != int(k)) { ok = false; break; }
      if (ok && (base.layer_measure[k] - g.layer_measure[k]).value() > kappa / double(std::int64_t{2} << k))
        ok = false;
    }
    for (std::size_t k = g.layers.size(); ok && k < base.layers.size(); ++k)
      if (base.layer_measure[k].value() > kappa / double(std::int64_t{2} << k)) ok = false;
    if (!ok) continue;
    out.pruned = std::move(trial);
    out.dropped.push_back(c);
  }
  return out;
}

inline void require_disjoint(const std::vector<DyadicIndex>& H) {
  for (std::size_t a = 0; a < H.size(); ++a)
    for (std::size_t b = a + 1; b < H.size(); ++b)
      if (!H[a].disjoint(H[b]))
        fail(Errc::invalid_collection, "overlapping members " + H[a].str() + " and " + H[b].str());
}

// [sum eps_I h_I = +1] and [= -1] as cell sets.
inline std::pair<CellSet, CellSet> sign_sets(const std::vector<DyadicIndex>& H, const std::vector<int>& eps, int res) {
  if (H.size() != eps.size()) fail(Errc::invalid_argument, "one sign per member required");
  require_disjoint(H);
  CellSet plus(res), minus(res);
  for (std::size_t a = 0; a < H.size(); ++a) {
    if (H[a].empty) fail(Errc::invalid_collection, "sign split needs intervals");
    (eps[a] > 0 ? plus : minus).add(H[a].left());
    (eps[a] > 0 ? minus : plus).add(H[a].right());
  }
  return {plus, minus};
}

struct EpsilonSplit {
  CellSet plus, minus;
  std::vector<DyadicIndex> succ_plus, succ_minus;
};

inline EpsilonSplit epsilon_split(const std::vector<DyadicIndex>& H, const std::vector<int>& eps, int k,
                                  const IntervalCollection& A, const Generations& g) {
  auto [plus, minus] = sign_sets(H, eps, A.resolution());
  EpsilonSplit out{plus, minus, {}, {}};
  for (const auto& I : g.layer(k)) {
    if (plus.covers(I)) out.succ_plus.push_back(I);
    else if (minus.covers(I)) out.succ_minus.push_back(I);
  }
  return out;
}

inline EpsilonSplit epsilon_split(const std::vector<DyadicIndex>& H, const std::vector<int>& eps, int k,
                                  const IntervalCollection& A) {
  return epsilon_split(H, eps, k, A, generations(A));
}

inline int eventual_choice_k0(const IntervalCollection& A, const std::vector<DyadicIndex>& H,
                              const std::vector<int>& eps, double delta) {
  if (!(delta > 0.0)) fail(Errc::invalid_argument, "delta must be positive");
  if (H.empty()) fail(Errc::invalid_argument, "H must be nonempty");
  Generations g = generations(A);
  int res = A.resolution();
  CellSet Hs = IntervalCollection::star_of(H, res);
  if (!((Hs & g.persistent).measure().value() > 0.5 * Hs.measure().value()))
    fail(Errc::precondition, "H does not meet the persistent set in more than half its measure");
  int n = 0;
  for (const auto& I : H) n = std::max(n, g.layer_of(I));
  auto good = [&](int k) {
    auto s = epsilon_split(H, eps, k, A, g);
    for (const auto* side : {&s.succ_plus, &s.succ_minus}) {
      CellSet C = IntervalCollection::star_of(*side, res);
      if ((C & g.persistent).measure().value() < (1.0 - delta) * C.measure().value()) return false;
    }
    return true;
  };
  int cap = A.depth_cap();
  if (n + 1 > cap || !good(cap))
    fail(Errc::depth_exhausted, "no eventual level within depth_cap " + std::to_string(cap));
  int k0 = cap;
  while (k0 - 1 >= n + 1 && good(k0 - 1)) --k0;
  return k0;
}

inline void to_json(nlohmann::json& j, const DyadicIndex& I) {
  if (I.empty) j = {{"kind", "empty"}};
  else j = {{"level", I.level}, {"position", I.position}};
}

inline void from_json(const nlohmann::json& j, DyadicIndex& I) {
  if (j.contains("kind") && j.at("kind") == "empty") I = DyadicIndex::emptyset();
  else I = DyadicIndex::interval(j.at("level").get<int>(), j.at("position").get<std::int64_t>());
}

inline void to_json(nlohmann::json& j, const DyadicRect& R) { j = R.factors; }

inline void to_json(nlohmann::json& j, const IntervalCollection& A) { j = A.members(); }

}  // namespace haarforge
