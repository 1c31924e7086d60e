#pragma once

#include <cmath>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "haarforge/common.hpp"
#include "haarforge/dyadic.hpp"
#include "haarforge/game.hpp"
#include "haarforge/space.hpp"

namespace haarforge {

// delta_n = kappa 2^{-(n+2)}, so prod (1 + delta_n) <= e^{kappa/2}
inline double gg_delta(double kappa, int n) { return kappa * std::ldexp(1.0, -(n + 2)); }

// A candidate block in game coordinates.
struct Block {
  std::vector<std::size_t> E;
  std::vector<double> lambda, mu;
  int side = 1;
  double rho = 1;  // lambda*mu mass kept after restricting to one side
};

// Keeps the side carrying the larger lambda*mu mass and rescales both weights by rho^{-1/2},
// rho being that side's share, so the kept block has the original sum lambda*mu.
inline Block restrict_to_side(const Block& b, const std::vector<int>& partition) {
  double mass[3] = {0, 0, 0};
  for (std::size_t i = 0; i < b.E.size(); ++i) mass[partition[b.E[i]]] += b.lambda[i] * b.mu[i];
  Block out;
  out.side = mass[2] > mass[1] ? 2 : 1;
  if (mass[out.side] == 0) return b;
  out.rho = mass[out.side] / (mass[1] + mass[2]);
  double scale = 1.0 / std::sqrt(out.rho);
  for (std::size_t i = 0; i < b.E.size(); ++i)
    if (partition[b.E[i]] == out.side) {
      out.E.push_back(b.E[i]);
      out.lambda.push_back(b.lambda[i] * scale);
      out.mu.push_back(b.mu[i] * scale);
    }
  return out;
}

// Worst-case functional values over all sign choices on a block:
// sum lambda |g_i| / ||g||* for W and sum mu |a_i| / ||a|| for G.
class DecayTest {
 public:
  DecayTest(const GameSpace& gs, const AdversaryMove& m) : eta_(m.eta) {
    auto load = [&](const std::vector<Eigen::VectorXd>& list, const GameSpace::NormFn& nf,
                    std::vector<Eigen::VectorXd>& out) {
      std::vector<double> norms(list.size());
      parallel_for(list.size(), [&](std::size_t i) { norms[i] = nf(list[i]); });
      for (std::size_t i = 0; i < list.size(); ++i)
        if (norms[i] > 0) out.push_back(list[i].cwiseAbs() / norms[i]);
    };
    load(m.W, gs.dual_norm, w_);
    load(m.G, gs.norm, g_);
  }

  double worst(const Block& b) const {
    double v = 0;
    for (const auto& g : w_) {
      double s = 0;
      for (std::size_t i = 0; i < b.E.size(); ++i) s += b.lambda[i] * g(Eigen::Index(b.E[i]));
      v = std::max(v, s);
    }
    for (const auto& a : g_) {
      double s = 0;
      for (std::size_t i = 0; i < b.E.size(); ++i) s += b.mu[i] * a(Eigen::Index(b.E[i]));
      v = std::max(v, s);
    }
    return v;
  }
  bool passes(const Block& b) const { return worst(b) < eta_; }

 private:
  double eta_;
  std::vector<Eigen::VectorXd> w_, g_;
};

inline std::vector<int> round_signs(const GameTranscript& t, std::size_t round) { return t.rounds.at(round).adv.signs; }

inline const Space& require_space(const GameSpace& gs, const char* who) {
  if (!gs.space) fail(Errc::unsupported, std::string(who) + " needs a single Haar space");
  return *gs.space;
}

inline double mu_exponent(double p) { return std::isinf(dual_exponent(p)) ? 0.0 : 1.0 / dual_exponent(p); }

// ---------------------------------------------------------------- one-parameter GG

// Convention D, d = 1, Lp or Hp. Round I takes one full level inside X_I, where X_[0,1) = [0,1)
// and X_{J+}, X_{J-} = [b_J = 1], [b_J = -1]. Levels strictly increase from round to round.
class GGStrategy : public Strategy {
 public:
  explicit GGStrategy(int min_level = 0) : min_level_(min_level) {}
  std::string name() const override { return "gg"; }

  void begin(const GameSpace& gs, const GameConfig&, const std::vector<int>& partition) override {
    const Space& s = require_space(gs, "gg strategy");
    auto kind = s.norm().kind;
    if (s.dims() != 1 || s.convention() != Convention::D || (kind != NormSpec::Kind::Lp && kind != NormSpec::Kind::Hp))
      fail(Errc::unsupported, "gg strategy needs d = 1, convention D and an Lp or Hp norm");
    space_ = s;
    gs_ = gs;
    partition_ = partition;
    p_ = s.norm().p[0];
    last_level_ = min_level_ - 1;
    rounds_.clear();
  }

  ResponderMove respond(int k, const AdversaryMove& adv, const GameTranscript& t) override {
    DyadicIndex I = space_.index(gs_.order.at(std::size_t(k)))[0];
    CellSet X = region(I, t);
    DecayTest decay(gs_, adv);
    for (int j = std::max(last_level_ + 1, I.level); j <= space_.depth(); ++j) {
      Block b;
      std::vector<DyadicIndex> H;
      for (std::int64_t i = 1; i <= (std::int64_t{1} << j); ++i) {
        auto K = DyadicIndex::interval(j, i);
        if (!X.covers(K)) continue;
        double r = K.length() / I.length();
        H.push_back(K);
        b.E.push_back(space_.position({K}));
        b.lambda.push_back(std::pow(r, 1.0 / p_));
        b.mu.push_back(std::pow(r, mu_exponent(p_)));
      }
      if (b.E.empty()) continue;
      b = restrict_to_side(b, partition_);
      if (!decay.passes(b)) continue;
      std::vector<DyadicIndex> kept;
      for (auto e : b.E) kept.push_back(space_.index(e)[0]);
      last_level_ = j;
      rounds_.push_back({I, kept, j, b.rho});
      return {b.side, b.E, b.lambda, b.mu};
    }
    fail(Errc::depth_exhausted, "no level up to " + std::to_string(space_.depth()) + " passes the decay test for " + I.str());
  }

  std::unique_ptr<Strategy> clone() const override { return std::make_unique<GGStrategy>(*this); }

  nlohmann::json info() const override {
    nlohmann::json r = nlohmann::json::array();
    for (const auto& x : rounds_) r.push_back({{"I", x.I}, {"level", x.level}, {"rho", x.rho}});
    return {{"rounds", r}};
  }

 private:
  struct Played {
    DyadicIndex I;
    std::vector<DyadicIndex> H;
    int level;
    double rho;
  };

  CellSet region(const DyadicIndex& I, const GameTranscript& t) const {
    int res = space_.resolution();
    if (I.level == 0) return CellSet::full(res);
    DyadicIndex J = I.parent();
    for (std::size_t r = 0; r < rounds_.size(); ++r)
      if (rounds_[r].I == J) {
        auto [plus, minus] = sign_sets(rounds_[r].H, round_signs(t, r), res);
        return I == J.left() ? plus : minus;
      }
    fail(Errc::precondition, "parent of " + I.str() + " was not played");
  }

  int min_level_;
  Space space_;
  GameSpace gs_;
  std::vector<int> partition_;
  double p_ = 1;
  int last_level_ = -1;
  std::vector<Played> rounds_;
};

// ---------------------------------------------------------------- L1 (D+)

// Band-aligned finite version of the generation structure of one partition side.
struct BandedCollection {
  int side = 1;
  std::vector<std::pair<int, int>> bands;  // inclusive level ranges
  std::vector<std::vector<DyadicIndex>> layers;
  CellSet persistent;
  double persistent_measure = 0;
};

inline void to_json(nlohmann::json& j, const BandedCollection& b) {
  nlohmann::json bands = nlohmann::json::array();
  for (auto [lo, hi] : b.bands) bands.push_back({lo, hi});
  std::vector<std::size_t> sizes;
  for (const auto& L : b.layers) sizes.push_back(L.size());
  j = {{"side", b.side}, {"bands", bands}, {"layer_sizes", sizes}, {"persistent_measure", b.persistent_measure}};
}

// Layer b holds the maximal side-s intervals with level in band b inside the star of layer b-1.
// A point is persistent iff every band contains a side-s ancestor, so the search over band
// compositions only needs the histogram of per-point ancestor masks. The band count is the
// largest one reaching min_persistent, but never below min_bands.
inline BandedCollection banded_collection(const std::vector<int>& side_of_index, int depth, double min_persistent,
                                          int min_bands = 1) {
  int res = depth + 1, L = depth + 1;
  std::size_t ncell = std::size_t{1} << res;
  auto in_side = [&](int s, int j, std::int64_t pos) {
    std::int64_t idx = (std::int64_t{1} << j) + pos - 1;
    return side_of_index.at(std::size_t(idx)) == s;
  };
  std::map<std::uint32_t, std::int64_t> hist[3];
  for (int s = 1; s <= 2; ++s)
    for (std::size_t c = 0; c < ncell; ++c) {
      std::uint32_t mask = 0;
      for (int j = 0; j <= depth; ++j)
        if (in_side(s, j, std::int64_t(c >> (res - j)) + 1)) mask |= 1u << j;
      ++hist[s][mask];
    }

  struct Best {
    std::int64_t count = -1;
    int side = 1;
    std::vector<int> cuts;
  };
  auto masks_of = [&](const std::vector<int>& cuts) {
    std::vector<std::uint32_t> m;
    int lo = 0;
    for (std::size_t b = 0; b <= cuts.size(); ++b) {
      int hi = b < cuts.size() ? cuts[b] - 1 : L - 1;
      m.push_back(((hi + 1 >= 32 ? 0xffffffffu : (1u << (hi + 1)) - 1)) & ~((1u << lo) - 1));
      lo = hi + 1;
    }
    return m;
  };
  Best chosen;
  for (int H = L; H >= 1; --H) {
    Best best;
    for (int s = 1; s <= 2; ++s) {
      // cut points 1 <= c_1 < ... < c_{H-1} <= L-1, enumerated lexicographically
      std::vector<int> cuts(std::size_t(H - 1));
      for (int i = 0; i < H - 1; ++i) cuts[std::size_t(i)] = i + 1;
      while (true) {
        auto bm = masks_of(cuts);
        std::int64_t count = 0;
        for (const auto& [mask, n] : hist[s]) {
          bool ok = true;
          for (auto m : bm)
            if (!(mask & m)) { ok = false; break; }
          if (ok) count += n;
        }
        if (count > best.count) best = {count, s, cuts};
        int i = H - 2;
        while (i >= 0 && cuts[std::size_t(i)] == L - 1 - (H - 2 - i)) --i;
        if (i < 0) break;
        ++cuts[std::size_t(i)];
        for (int t = i + 1; t < H - 1; ++t) cuts[std::size_t(t)] = cuts[std::size_t(t - 1)] + 1;
      }
    }
    if (double(best.count) >= min_persistent * double(ncell) || H <= min_bands) {
      chosen = best;
      break;
    }
  }

  BandedCollection out;
  out.side = chosen.side;
  int lo = 0;
  for (std::size_t b = 0; b <= chosen.cuts.size(); ++b) {
    int hi = b < chosen.cuts.size() ? chosen.cuts[b] - 1 : L - 1;
    out.bands.push_back({lo, hi});
    lo = hi + 1;
  }
  CellSet prev = CellSet::full(res);
  out.persistent = CellSet::full(res);
  for (auto [blo, bhi] : out.bands) {
    std::vector<DyadicIndex> layer;
    CellSet cur(res);
    for (int j = blo; j <= bhi; ++j)
      for (std::int64_t i = 1; i <= (std::int64_t{1} << j); ++i) {
        auto I = DyadicIndex::interval(j, i);
        if (!in_side(chosen.side, j, i) || !prev.covers(I) || cur.covers(I)) continue;
        layer.push_back(I);
        cur.add(I);
      }
    out.layers.push_back(layer);
    out.persistent = out.persistent & cur;
    prev = cur;
  }
  out.persistent_measure = out.persistent.measure().value();
  return out;
}

struct L1Config {
  double kappa = 0.1;
  double min_persistent = 0.5;
  // require the persistence condition; otherwise take the first layer passing the decay test,
  // keep one band per round, and record the achieved ratios
  bool strict = true;
};

// Convention D+, d = 1, L1. Blocks are whole layers for the empty symbol and [0,1), and sign
// split successors of the parent block (signs twisted by b_empty) for every other interval.
class L1Strategy : public Strategy {
 public:
  explicit L1Strategy(L1Config cfg = {}) : cfg_(cfg) {}
  std::string name() const override { return "l1"; }

  void begin(const GameSpace& gs, const GameConfig& cfg, const std::vector<int>& partition) override {
    const Space& s = require_space(gs, "l1 strategy");
    if (s.dims() != 1 || s.convention() != Convention::Dplus || !detail::is_l1(s.norm()))
      fail(Errc::unsupported, "l1 strategy needs d = 1, convention D+ and the L1 norm");
    space_ = s;
    gs_ = gs;
    partition_ = partition;
    std::vector<int> side_of_index(std::size_t{1} << s.resolution(), 0);
    for (std::size_t k = 1; k < s.size(); ++k) side_of_index[std::size_t(interval_index(s.index(k)[0]))] = partition[k];
    bands_ = banded_collection(side_of_index, s.depth(), cfg_.min_persistent,
                               cfg_.strict ? 1 : std::min(cfg.rounds, s.depth() + 1));
    std::vector<DyadicIndex> all;
    for (const auto& L : bands_.layers) all.insert(all.end(), L.begin(), L.end());
    coll_ = IntervalCollection(all, s.depth());
    gens_ = generations(*coll_);
    last_m_ = -1;
    rounds_.clear();
  }

  ResponderMove respond(int k, const AdversaryMove& adv, const GameTranscript& t) override {
    const IndexTuple& idx = space_.index(gs_.order.at(std::size_t(k)));
    DyadicIndex I = idx[0];
    int res = space_.resolution();
    DecayTest decay(gs_, adv);
    int n = I.empty ? 0 : I.level;
    double need = 1.0 - gg_delta(cfg_.kappa, n + 1) / 2;
    bool persistence_blocked = false;
    for (int m = last_m_ + 1; m < int(gens_.layers.size()); ++m) {
      std::vector<DyadicIndex> H;
      if (I.empty || I.level == 0) {
        H = gens_.layer(m);
      } else {
        const Played& par = played(I.parent());
        auto split = epsilon_split(par.H, tilde_signs(par, t), m, *coll_, gens_);
        H = I == I.parent().left() ? split.succ_plus : split.succ_minus;
      }
      if (H.empty()) continue;
      CellSet star = IntervalCollection::star_of(H, res);
      double mass = star.measure().value();
      Block b;
      for (const auto& L : H) {
        b.E.push_back(space_.position({L}));
        b.lambda.push_back(L.length() / mass);
        b.mu.push_back(1.0);
      }
      b.side = bands_.side;
      if (!decay.passes(b)) continue;
      double ratio = (star & gens_.persistent).measure().value() / mass;
      Played p{I, H, m, ratio, mass};
      if (!(ratio > need) && cfg_.strict) {
        persistence_blocked = true;
        continue;
      }
      return accept(p, b);
    }
    if (persistence_blocked)
      fail(Errc::persistence_unattainable, "no layer meets the persistence condition for " + I.str());
    fail(Errc::depth_exhausted, "layers exhausted at " + I.str() + " (" + std::to_string(gens_.layers.size()) + " layers)");
  }

  std::unique_ptr<Strategy> clone() const override { return std::make_unique<L1Strategy>(*this); }

  nlohmann::json info() const override {
    nlohmann::json r = nlohmann::json::array();
    for (const auto& x : rounds_) r.push_back({{"I", x.I}, {"layer", x.m}, {"persistence_ratio", x.ratio}, {"mass", x.mass}});
    return {{"collection", bands_}, {"rounds", r}, {"strict", cfg_.strict}, {"kappa", cfg_.kappa}};
  }

  const BandedCollection& bands() const { return bands_; }
  const Generations& generations_used() const { return gens_; }

 private:
  struct Played {
    DyadicIndex I;
    std::vector<DyadicIndex> H;
    int m;
    double ratio, mass;
  };

  ResponderMove accept(const Played& p, const Block& b) {
    last_m_ = p.m;
    rounds_.push_back(p);
    return {b.side, b.E, b.lambda, b.mu};
  }

  const Played& played(const DyadicIndex& I) const {
    for (const auto& r : rounds_)
      if (r.I == I) return r;
    fail(Errc::precondition, "interval " + I.str() + " was not played");
  }

  // signs of b_empty * b_J on the members of H_J
  std::vector<int> tilde_signs(const Played& J, const GameTranscript& t) const {
    std::size_t rj = index_of(J.I), r0 = index_of(DyadicIndex::emptyset());
    std::vector<int> eps = round_signs(t, rj);
    if (J.I.empty) return eps;
    const auto& H0 = rounds_[r0].H;
    auto e0 = round_signs(t, r0);
    for (std::size_t a = 0; a < J.H.size(); ++a) {
      const auto& L = J.H[a];
      for (std::size_t b = 0; b < H0.size(); ++b)
        if (H0[b].contains(L) && !(H0[b] == L)) {
          eps[a] *= e0[b] * (H0[b].left().contains(L) ? 1 : -1);
          break;
        }
    }
    return eps;
  }

  std::size_t index_of(const DyadicIndex& I) const {
    for (std::size_t r = 0; r < rounds_.size(); ++r)
      if (rounds_[r].I == I) return r;
    fail(Errc::precondition, "interval " + I.str() + " was not played");
  }

  L1Config cfg_;
  Space space_;
  GameSpace gs_;
  std::vector<int> partition_;
  BandedCollection bands_;
  std::optional<IntervalCollection> coll_;
  Generations gens_;
  int last_m_ = -1;
  std::vector<Played> rounds_;
};

// ---------------------------------------------------------------- GG validation

struct GGEntry {
  DyadicIndex I;
  std::vector<DyadicIndex> H;
  std::vector<int> signs, tilde;
  double star = 0;
};

struct GGReport {
  std::vector<GGEntry> system;
  double scale = 1;  // |H*_empty| on D+, 1 otherwise
  double kappa = 0;
  bool a = true, b = true, c = true;
  std::optional<bool> d;
  std::vector<double> c_ratio;  // |H*_I| / (|H*_J| / 2) for every played child
  std::vector<std::string> failures;

  bool all() const { return a && b && c && d.value_or(true); }
};

inline void to_json(nlohmann::json& j, const GGReport& r) {
  nlohmann::json sys = nlohmann::json::array();
  for (const auto& e : r.system) sys.push_back({{"I", e.I}, {"H", e.H}, {"signs", e.signs}, {"scale", r.scale}});
  j = {{"system", sys},
       {"kappa", r.kappa},
       {"a", r.a},
       {"b", r.b},
       {"c", r.c},
       {"d", r.d ? nlohmann::json(*r.d) : nlohmann::json("n/a")},
       {"c_ratio", r.c_ratio},
       {"failures", r.failures},
       {"pass", r.all()}};
}

// Rebuilds (H_I, signs) from a one-parameter transcript and checks conditions (a)-(d) with exact
// cell measures. On D+ the signs are twisted by b_empty as in the L1 construction.
inline GGReport validate_gg(const GameTranscript& t, double kappa) {
  const Space& s = require_space(t.space, "gg validation");
  if (s.dims() != 1) fail(Errc::unsupported, "gg validation is one-parameter");
  int res = s.resolution();
  GGReport r;
  r.kappa = kappa;
  for (std::size_t k = 0; k < t.rounds.size(); ++k) {
    GGEntry e;
    e.I = s.index(t.space.order[k])[0];
    for (auto c : t.rounds[k].resp.E) e.H.push_back(s.index(c)[0]);
    e.signs = e.tilde = t.rounds[k].adv.signs;
    e.star = IntervalCollection::star_of(e.H, res).measure().value();
    r.system.push_back(e);
  }
  auto find = [&](const DyadicIndex& I) -> const GGEntry* {
    for (const auto& e : r.system)
      if (e.I == I) return &e;
    return nullptr;
  };
  bool dplus = s.convention() == Convention::Dplus;
  const GGEntry* root = dplus ? find(DyadicIndex::emptyset()) : nullptr;
  if (root) {
    r.scale = root->star;
    bool inside_all = true;
    for (auto& e : r.system) {
      if (e.I.empty) continue;
      for (std::size_t a = 0; a < e.H.size(); ++a) {
        bool inside = false;
        for (std::size_t b = 0; b < root->H.size(); ++b)
          if (root->H[b].contains(e.H[a]) && !(root->H[b] == e.H[a])) {
            e.tilde[a] *= root->signs[b] * (root->H[b].left().contains(e.H[a]) ? 1 : -1);
            inside = true;
          }
        if (!inside) {
          inside_all = false;
          r.failures.push_back("(d) " + e.H[a].str() + " of " + e.I.str() + " is not strictly inside a member of H_empty");
        }
      }
    }
    bool big = true;
    if (const GGEntry* top = find(DyadicIndex::interval(0, 1))) {
      CellSet a = IntervalCollection::star_of(top->H, res), b = IntervalCollection::star_of(root->H, res);
      big = a.subset_of(b) && top->star >= (1 - gg_delta(kappa, 1)) * root->star;
      if (!big) r.failures.push_back("(d) H*_[0,1) is not a large subset of H*_empty");
    }
    r.d = inside_all && big;
  }
  for (std::size_t x = 0; x < r.system.size(); ++x)
    for (std::size_t y = x + 1; y < r.system.size(); ++y) {
      const auto &A = r.system[x], &B = r.system[y];
      if (A.I.empty || B.I.empty || !A.I.disjoint(B.I)) continue;
      auto meet = IntervalCollection::star_of(A.H, res) & IntervalCollection::star_of(B.H, res);
      if (meet.measure().units != 0) {
        r.a = false;
        r.failures.push_back("(a) supports of " + A.I.str() + " and " + B.I.str() + " meet");
      }
    }
  for (const auto& e : r.system) {
    if (e.I.empty || e.I.level == 0) continue;
    const GGEntry* par = find(e.I.parent());
    if (!par) continue;
    auto [plus, minus] = sign_sets(par->H, par->tilde, res);
    CellSet supp = IntervalCollection::star_of(e.H, res);
    if (!supp.subset_of(e.I == e.I.parent().left() ? plus : minus)) {
      r.b = false;
      r.failures.push_back("(b) support of " + e.I.str() + " leaves its sign set");
    }
    double half = par->star / 2, dn = gg_delta(kappa, e.I.level);
    r.c_ratio.push_back(e.star / half);
    if (e.star < (1 - dn) * half || e.star > (1 + dn) * half) {
      r.c = false;
      r.failures.push_back("(c) |H*| of " + e.I.str() + " is " + std::to_string(e.star / half) + " times half the parent's");
    }
  }
  return r;
}

// ---------------------------------------------------------------- two-parameter Hardy

// Convention D, d = 2, HpHq(p,q). Rectangles with |I| < |J| (V1) are disjointified along the
// first axis, the others (V2) along the second. The free axis keeps its interval.
class HpHqStrategy : public Strategy {
 public:
  std::string name() const override { return "hphq"; }

  void begin(const GameSpace& gs, const GameConfig&, const std::vector<int>& partition) override {
    const Space& s = require_space(gs, "hphq strategy");
    if (s.dims() != 2 || s.convention() != Convention::D || s.norm().kind != NormSpec::Kind::HpHq)
      fail(Errc::unsupported, "hphq strategy needs d = 2, convention D and an HpHq norm");
    space_ = s;
    gs_ = gs;
    partition_ = partition;
    rounds_.clear();
  }

  ResponderMove respond(int k, const AdversaryMove& adv, const GameTranscript& t) override {
    const IndexTuple& R = space_.index(gs_.order.at(std::size_t(k)));
    // axis a is refined, axis o keeps its interval
    int a = R[0].level > R[1].level ? 0 : 1, o = 1 - a;
    const DyadicIndex &A = R[a], &O = R[o];
    // the tree along axis a lives on the rounds whose other factor is [0,1)
    auto [X, floor] = region(a, A, t);
    int lowest = std::max(floor, a == 0 ? O.level + 1 : O.level);
    double p = space_.norm().p[a];
    DecayTest decay(gs_, adv);
    for (int j = lowest; j <= space_.depth(); ++j) {
      if (blocked(a, A, O, j)) continue;
      Block b;
      std::vector<DyadicIndex> H;
      for (std::int64_t i = 1; i <= (std::int64_t{1} << j); ++i) {
        auto K = DyadicIndex::interval(j, i);
        if (!X.covers(K)) continue;
        IndexTuple idx(2);
        idx[a] = K;
        idx[o] = O;
        double r = K.length() / A.length();
        H.push_back(K);
        b.E.push_back(space_.position(idx));
        b.lambda.push_back(std::pow(r, 1.0 / p));
        b.mu.push_back(std::pow(r, mu_exponent(p)));
      }
      if (b.E.empty()) continue;
      b = restrict_to_side(b, partition_);
      if (!decay.passes(b)) continue;
      std::vector<DyadicIndex> kept;
      for (auto e : b.E) kept.push_back(space_.index(e)[a]);
      rounds_.push_back({a, A, O, kept, j});
      return {b.side, b.E, b.lambda, b.mu};
    }
    fail(Errc::depth_exhausted, "axis " + std::to_string(a) + " exhausted at " + DyadicRect{R}.str());
  }

  std::unique_ptr<Strategy> clone() const override { return std::make_unique<HpHqStrategy>(*this); }

  nlohmann::json info() const override {
    nlohmann::json r = nlohmann::json::array();
    for (const auto& x : rounds_) r.push_back({{"axis", x.axis}, {"refined", x.A}, {"kept", x.O}, {"level", x.level}});
    return {{"rounds", r}};
  }

 private:
  struct Played {
    int axis;
    DyadicIndex A, O;
    std::vector<DyadicIndex> H;
    int level;
  };

  const Played* find(int axis, const DyadicIndex& A, const DyadicIndex& O) const {
    for (const auto& r : rounds_)
      if (r.axis == axis && r.A == A && r.O == O) return &r;
    return nullptr;
  }

  // X_A on axis a, and the coarsest admissible level inside it
  std::pair<CellSet, int> region(int a, const DyadicIndex& A, const GameTranscript& t) const {
    int res = space_.resolution();
    auto top = DyadicIndex::interval(0, 1);
    // V1 roots are the level-one intervals (with [0,1) on the free axis), V2 has the root [0,1)
    bool root = a == 0 ? A.level == 1 : A.level == 0;
    if (root) {
      CellSet X(res);
      X.add(A);
      return {X, A.level};
    }
    const Played* self = find(a, A, top);
    if (self) {
      return {IntervalCollection::star_of(self->H, res), self->level};
    }
    DyadicIndex P = A.parent();
    const Played* par = find(a, P, top);
    if (!par) fail(Errc::precondition, "parent block along axis " + std::to_string(a) + " was not played");
    std::size_t r = std::size_t(par - rounds_.data());
    auto [plus, minus] = sign_sets(par->H, round_signs(t, r), res);
    return {A == P.left() ? plus : minus, par->level + 1};
  }

  // a level is reused only by blocks that cannot share Haar terms
  bool blocked(int a, const DyadicIndex& A, const DyadicIndex& O, int j) const {
    for (const auto& r : rounds_)
      if (r.axis == a && r.O == O && r.level == j && (r.A.contains(A) || A.contains(r.A))) return true;
    return false;
  }

  Space space_;
  GameSpace gs_;
  std::vector<int> partition_;
  std::vector<Played> rounds_;
};

// ---------------------------------------------------------------- multi-parameter Lebesgue

// Full product grids D_{k_1} x ... x D_{k_d} inside the target rectangle; the level vector is
// monotone along the rounds and strictly increases on axes where the target shrinks.
class MixedLpStrategy : public Strategy {
 public:
  std::string name() const override { return "mixed-lp"; }

  void begin(const GameSpace& gs, const GameConfig&, const std::vector<int>& partition) override {
    const Space& s = require_space(gs, "mixed-lp strategy");
    auto kind = s.norm().kind;
    if (s.convention() != Convention::D ||
        (kind != NormSpec::Kind::Mixed && kind != NormSpec::Kind::Triple && kind != NormSpec::Kind::Lp))
      fail(Errc::unsupported, "mixed-lp strategy needs convention D and a Mixed, Triple or Lp norm");
    space_ = s;
    gs_ = gs;
    partition_ = partition;
    for (int a = 0; a < s.dims(); ++a) p_.push_back(s.norm().p.size() == 1 ? s.norm().p[0] : s.norm().p[std::size_t(a)]);
    rounds_.clear();
  }

  ResponderMove respond(int k, const AdversaryMove& adv, const GameTranscript&) override {
    const IndexTuple& R = space_.index(gs_.order.at(std::size_t(k)));
    int d = space_.dims();
    std::vector<int> base(std::size_t(d), 0);
    for (int a = 0; a < d; ++a) {
      int& v = base[std::size_t(a)];
      v = R[std::size_t(a)].level;
      for (const auto& r : rounds_) {
        v = std::max(v, r.levels[std::size_t(a)]);
        const auto &mine = R[std::size_t(a)], &theirs = r.R[std::size_t(a)];
        if (theirs.contains(mine) && !(theirs == mine)) v = std::max(v, r.levels[std::size_t(a)] + 1);
      }
    }
    DecayTest decay(gs_, adv);
    for (int shift = 0;; ++shift) {
      std::vector<int> lv = base;
      for (int& v : lv) v += shift;
      if (*std::max_element(lv.begin(), lv.end()) > space_.depth())
        fail(Errc::depth_exhausted, "no level vector within depth for " + DyadicRect{R}.str());
      Block b = grid_block(R, lv);
      b = restrict_to_side(b, partition_);
      if (!decay.passes(b)) continue;
      rounds_.push_back({R, lv});
      return {b.side, b.E, b.lambda, b.mu};
    }
  }

  std::unique_ptr<Strategy> clone() const override { return std::make_unique<MixedLpStrategy>(*this); }

  nlohmann::json info() const override {
    nlohmann::json r = nlohmann::json::array();
    for (const auto& x : rounds_) r.push_back({{"rect", x.R}, {"levels", x.levels}});
    return {{"rounds", r}};
  }

 private:
  struct Played {
    IndexTuple R;
    std::vector<int> levels;
  };

  Block grid_block(const IndexTuple& R, const std::vector<int>& lv) const {
    int d = space_.dims();
    Block b;
    std::vector<std::int64_t> count(static_cast<std::size_t>(d)), first(static_cast<std::size_t>(d));
    std::int64_t total = 1;
    for (int a = 0; a < d; ++a) {
      auto sa = std::size_t(a);
      count[sa] = std::int64_t{1} << (lv[sa] - R[sa].level);
      first[sa] = (R[sa].position - 1) * count[sa] + 1;
      total *= count[sa];
    }
    for (std::int64_t n = 0; n < total; ++n) {
      IndexTuple idx(std::size_t(d), DyadicIndex{});
      std::int64_t rem = n;
      double lam = 1, mu = 1;
      for (int a = d - 1; a >= 0; --a) {
        auto sa = std::size_t(a);
        idx[sa] = DyadicIndex::interval(lv[sa], first[sa] + rem % count[sa]);
        rem /= count[sa];
        double r = idx[sa].length() / R[sa].length();
        lam *= std::pow(r, 1.0 / p_[sa]);
        mu *= std::pow(r, mu_exponent(p_[sa]));
      }
      b.E.push_back(space_.position(idx));
      b.lambda.push_back(lam);
      b.mu.push_back(mu);
    }
    return b;
  }

  Space space_;
  GameSpace gs_;
  std::vector<int> partition_;
  std::vector<double> p_;
  std::vector<Played> rounds_;
};

// ---------------------------------------------------------------- l^p sums

// Routes round k to the part owning coordinate order[k]; the part sees the adversary's
// functionals through the coordinate projection onto its block.
class SumStrategy : public Strategy {
 public:
  explicit SumStrategy(std::vector<std::unique_ptr<Strategy>> parts) : parts_(std::move(parts)) {}
  SumStrategy(const SumStrategy& o) : local_(o.local_), gs_(o.gs_), synced_(o.synced_), owner_(o.owner_) {
    for (const auto& p : o.parts_) parts_.push_back(p->clone());
  }
  std::string name() const override { return "sum"; }

  void begin(const GameSpace& gs, const GameConfig& cfg, const std::vector<int>& partition) override {
    if (!gs.sum || gs.sum->parts.size() != parts_.size()) fail(Errc::invalid_argument, "one strategy per summand required");
    gs_ = gs;
    local_.clear();
    owner_.clear();
    synced_ = 0;
    for (std::size_t i = 0; i < parts_.size(); ++i) {
      GameSpace part = GameSpace::of(gs.sum->parts[i]);
      auto o = gs.sum->offset(i);
      std::vector<int> slice(partition.begin() + long(o), partition.begin() + long(o + part.n));
      local_.push_back(GameTranscript{part, cfg, slice, {}, "", parts_[i]->name()});
      parts_[i]->begin(part, cfg, slice);
    }
  }

  ResponderMove respond(int k, const AdversaryMove& adv, const GameTranscript& t) override {
    sync(t);
    auto [part, local] = gs_.locate(gs_.order.at(std::size_t(k)));
    (void)local;
    auto off = Eigen::Index(gs_.sum->offset(part));
    auto len = Eigen::Index(gs_.sum->parts[part].size());
    AdversaryMove sub{adv.eta, {}, {}, {}};
    for (const auto& g : adv.W)
      if (g.segment(off, len).cwiseAbs().maxCoeff() > 0) sub.W.push_back(g.segment(off, len));
    for (const auto& a : adv.G)
      if (a.segment(off, len).cwiseAbs().maxCoeff() > 0) sub.G.push_back(a.segment(off, len));
    int lk = int(local_[part].rounds.size());
    ResponderMove m = parts_[part]->respond(lk, sub, local_[part]);
    for (auto& e : m.E) e += std::size_t(off);
    owner_.push_back(part);
    return m;
  }

  std::unique_ptr<Strategy> clone() const override { return std::make_unique<SumStrategy>(*this); }

  nlohmann::json info() const override {
    nlohmann::json parts = nlohmann::json::array();
    for (const auto& p : parts_) parts.push_back({{"strategy", p->name()}, {"info", p->info()}});
    return {{"parts", parts}};
  }

 private:
  // copy completed global rounds into the owning part's transcript
  void sync(const GameTranscript& t) {
    for (; synced_ < t.rounds.size(); ++synced_) {
      std::size_t part = owner_.at(synced_);
      auto off = gs_.sum->offset(part);
      auto len = Eigen::Index(gs_.sum->parts[part].size());
      Round r = t.rounds[synced_];
      for (auto& e : r.resp.E) e -= off;
      r.x = r.x.segment(Eigen::Index(off), len).eval();
      r.xstar = r.xstar.segment(Eigen::Index(off), len).eval();
      r.adv.W.clear();
      r.adv.G.clear();
      local_[part].rounds.push_back(std::move(r));
    }
  }

  std::vector<std::unique_ptr<Strategy>> parts_;
  std::vector<GameTranscript> local_;
  GameSpace gs_;
  std::size_t synced_ = 0;
  std::vector<std::size_t> owner_;
};

}  // namespace haarforge
