#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "haarforge/common.hpp"
#include "haarforge/norms.hpp"
#include "haarforge/operators.hpp"
#include "haarforge/space.hpp"

namespace haarforge {

// Everything the engine needs from a space: coordinates are e-coordinates for vectors and
// e*-coordinates for functionals, so the duality pairing is the dot product.
struct GameSpace {
  using NormFn = std::function<double(const Eigen::VectorXd&)>;

  std::string name;
  std::size_t n = 0;
  NormFn norm;
  NormFn dual_norm;        // dominates the true dual norm; used by distance proxies
  NormFn probe_dual_norm;  // the norm the dual-side equivalence probe is reported in
  std::vector<std::string> labels;
  std::vector<int> level;        // finest level among the index factors
  std::vector<std::int64_t> key;  // interval_index for d = 1, position otherwise
  std::vector<std::size_t> order;  // round k is played against coordinate order[k]
  bool hilbert = false;
  std::optional<Space> space;
  std::optional<SumSpace> sum;

  static GameSpace of(const Space& s) {
    GameSpace g;
    g.name = s.norm().name() + (s.convention() == Convention::Dplus ? "/D+" : "/D") + " d=" +
             std::to_string(s.dims()) + " depth=" + std::to_string(s.depth());
    g.n = s.size();
    g.norm = [s](const Eigen::VectorXd& c) { return s.norm_of(c); };
    Space d = s.dual();
    g.dual_norm = [d](const Eigen::VectorXd& c) { return d.norm_of(c); };
    const NormSpec& ns = s.norm();
    bool l1ish = (ns.kind == NormSpec::Kind::Lp || ns.kind == NormSpec::Kind::Hp) && ns.p[0] == 1.0;
    if (l1ish) {
      // same e*-normalization, measured in the sup norm
      g.probe_dual_norm = [d](const Eigen::VectorXd& c) { return norm_eval(d.function(c), NormSpec::Sup()); };
    } else {
      g.probe_dual_norm = g.dual_norm;
    }
    g.hilbert = ns.kind != NormSpec::Kind::Sup && ns.kind != NormSpec::Kind::James &&
                std::all_of(ns.p.begin(), ns.p.end(), [](double p) { return p == 2.0; });
    for (std::size_t k = 0; k < s.size(); ++k) {
      const auto& idx = s.index(k);
      g.labels.push_back(tuple_key(idx));
      int lev = 0;
      for (const auto& I : idx)
        if (!I.empty) lev = std::max(lev, I.level);
      g.level.push_back(lev);
      g.key.push_back(s.dims() == 1 ? (idx[0].empty ? 0 : interval_index(idx[0])) : std::int64_t(k));
      g.order.push_back(k);
    }
    g.space = s;
    return g;
  }

  // Rounds visit the parts round-robin, each part in its own basis order.
  static GameSpace of(const SumSpace& ss) {
    if (ss.parts.empty()) fail(Errc::invalid_argument, "sum of no spaces");
    GameSpace g;
    std::vector<GameSpace> parts;
    for (const auto& s : ss.parts) parts.push_back(of(s));
    g.name = "l" + (std::isinf(ss.p) ? std::string("inf") : nlohmann::json(ss.p).dump()) + "-sum[";
    for (std::size_t i = 0; i < parts.size(); ++i) g.name += (i ? "; " : "") + parts[i].name;
    g.name += "]";
    g.n = ss.size();
    double p = ss.p, q = dual_exponent(ss.p);
    auto lift = [ss, parts](double r, GameSpace::NormFn GameSpace::*which) {
      return [ss, parts, r, which](const Eigen::VectorXd& z) {
        double acc = 0;
        for (std::size_t i = 0; i < parts.size(); ++i) {
          double y = (parts[i].*which)(ss.block(z, i));
          acc = std::isinf(r) ? std::max(acc, y) : acc + std::pow(y, r);
        }
        return std::isinf(r) ? acc : std::pow(acc, 1.0 / r);
      };
    };
    g.norm = lift(p, &GameSpace::norm);
    g.dual_norm = lift(q, &GameSpace::dual_norm);
    g.probe_dual_norm = lift(q, &GameSpace::probe_dual_norm);
    g.hilbert = p == 2.0 && std::all_of(parts.begin(), parts.end(), [](const GameSpace& x) { return x.hilbert; });
    for (std::size_t i = 0; i < parts.size(); ++i)
      for (std::size_t k = 0; k < parts[i].n; ++k) {
        g.labels.push_back(std::to_string(i) + "/" + parts[i].labels[k]);
        g.level.push_back(parts[i].level[k]);
        g.key.push_back(std::int64_t(ss.offset(i) + k));
      }
    std::vector<std::size_t> next(parts.size(), 0);
    for (bool more = true; more;) {
      more = false;
      for (std::size_t i = 0; i < parts.size(); ++i)
        if (next[i] < parts[i].n) {
          g.order.push_back(ss.offset(i) + parts[i].order[next[i]++]);
          more = true;
        }
    }
    g.sum = ss;
    return g;
  }

  // part owning a coordinate of a sum space, and its local coordinate
  std::pair<std::size_t, std::size_t> locate(std::size_t coord) const {
    if (!sum) return {0, coord};
    for (std::size_t i = 0; i < sum->parts.size(); ++i)
      if (coord < sum->offset(i) + sum->parts[i].size()) return {i, coord - sum->offset(i)};
    fail(Errc::invalid_argument, "coordinate outside the sum");
  }

  Eigen::VectorXd unit(std::size_t k) const {
    Eigen::VectorXd u = Eigen::VectorXd::Zero(Eigen::Index(n));
    u(Eigen::Index(k)) = 1.0;
    return u;
  }
};

struct GameConfig {
  int rounds = 7;
  double C = 1.0;
  double eta = 0.1;
};

struct AdversaryMove {
  double eta = 0;
  std::vector<Eigen::VectorXd> W;  // functionals whose common kernel is W_k
  std::vector<Eigen::VectorXd> G;  // vectors whose annihilator is G_k
  std::vector<int> signs;          // filled in step 3
};

struct ResponderMove {
  int side = 1;
  std::vector<std::size_t> E;
  std::vector<double> lambda, mu;

  double lambda_mu() const {
    double s = 0;
    for (std::size_t i = 0; i < E.size(); ++i) s += lambda[i] * mu[i];
    return s;
  }
};

struct Round {
  AdversaryMove adv;
  ResponderMove resp;
  Eigen::VectorXd x, xstar;
};

struct GameTranscript {
  GameSpace space;
  GameConfig config;
  std::vector<int> partition;  // side (1 or 2) of every coordinate
  std::vector<Round> rounds;
  std::string adversary, strategy;
};

class Adversary {
 public:
  virtual ~Adversary() = default;
  virtual std::string name() const = 0;
  virtual std::vector<int> partition(const GameSpace& gs) { return std::vector<int>(gs.n, 1); }
  virtual AdversaryMove step1(int k, const GameTranscript& t) = 0;
  virtual std::vector<int> step3(int /*k*/, const ResponderMove& r, const GameTranscript& /*t*/) {
    return std::vector<int>(r.E.size(), 1);
  }
};

class Strategy {
 public:
  virtual ~Strategy() = default;
  virtual std::string name() const = 0;
  virtual void begin(const GameSpace& gs, const GameConfig& cfg, const std::vector<int>& partition) = 0;
  // the transcript holds rounds 0..k-1 complete, with their signs
  virtual ResponderMove respond(int k, const AdversaryMove& adv, const GameTranscript& t) = 0;
  virtual std::unique_ptr<Strategy> clone() const = 0;
  // strategy-specific bookkeeping for reports
  virtual nlohmann::json info() const { return nlohmann::json::object(); }
};

inline Eigen::VectorXd block_vector(std::size_t n, const ResponderMove& r, const std::vector<int>& signs,
                                    const std::vector<double>& w) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(Eigen::Index(n));
  for (std::size_t i = 0; i < r.E.size(); ++i) v(Eigen::Index(r.E[i])) += signs[i] * w[i];
  return v;
}

inline void check_move(const GameTranscript& t, int k, const ResponderMove& r, double eta) {
  auto bad = [&](const std::string& why) { fail(Errc::invalid_argument, "round " + std::to_string(k) + ": " + why); };
  if (r.side != 1 && r.side != 2) bad("side must be 1 or 2");
  if (r.E.empty()) bad("empty block");
  if (r.lambda.size() != r.E.size() || r.mu.size() != r.E.size()) bad("weights do not match the block");
  std::vector<char> seen(t.space.n, 0);
  for (std::size_t i = 0; i < r.E.size(); ++i) {
    if (r.E[i] >= t.space.n) bad("block index outside the space");
    if (seen[r.E[i]]++) bad("repeated block index");
    if (t.partition[r.E[i]] != r.side) bad("block index " + t.space.labels[r.E[i]] + " not on the chosen side");
    if (!(r.lambda[i] >= 0) || !(r.mu[i] >= 0) || !std::isfinite(r.lambda[i]) || !std::isfinite(r.mu[i]))
      bad("weights must be finite and nonnegative");
  }
  double s = r.lambda_mu();
  if (!(s > 1 - eta && s < 1 + eta)) bad("sum lambda*mu = " + std::to_string(s) + " outside (1-eta, 1+eta)");
}

// Partition, then per round: adversary step 1, responder step 2, adversary step 3.
inline GameTranscript run_game(const GameSpace& gs, Adversary& adv, Strategy& strat, const GameConfig& cfg) {
  if (cfg.rounds < 0 || std::size_t(cfg.rounds) > gs.order.size())
    fail(Errc::invalid_argument, "round count exceeds the truncated basis");
  if (!(cfg.eta > 0) || !(cfg.C >= 1)) fail(Errc::invalid_argument, "need eta > 0 and C >= 1");
  GameTranscript t{gs, cfg, adv.partition(gs), {}, adv.name(), strat.name()};
  if (t.partition.size() != gs.n) fail(Errc::invalid_argument, "partition size differs from the space");
  for (int s : t.partition)
    if (s != 1 && s != 2) fail(Errc::invalid_argument, "partition labels must be 1 or 2");
  strat.begin(gs, cfg, t.partition);
  for (int k = 0; k < cfg.rounds; ++k) {
    try {
      Round r;
      r.adv = adv.step1(k, t);
      if (!(r.adv.eta > 0)) fail(Errc::invalid_argument, "eta_k must be positive");
      for (const auto* list : {&r.adv.W, &r.adv.G})
        for (const auto& v : *list)
          if (std::size_t(v.size()) != gs.n) fail(Errc::invalid_argument, "functional of the wrong size");
      r.resp = strat.respond(k, r.adv, t);
      check_move(t, k, r.resp, cfg.eta);
      r.adv.signs = adv.step3(k, r.resp, t);
      if (r.adv.signs.size() != r.resp.E.size()) fail(Errc::invalid_argument, "one sign per block index");
      for (int s : r.adv.signs)
        if (s != 1 && s != -1) fail(Errc::invalid_argument, "signs must be +-1");
      r.x = block_vector(gs.n, r.resp, r.adv.signs, r.resp.lambda);
      r.xstar = block_vector(gs.n, r.resp, r.adv.signs, r.resp.mu);
      t.rounds.push_back(std::move(r));
    } catch (const Error& e) {
      std::string what = e.what();
      if (what.rfind("round ", 0) == 0) throw;
      throw Error(e.code(), "round " + std::to_string(k) + ": " + what);
    }
  }
  return t;
}

// max_j |<x, g_j>| / ||g_j||, a lower bound for the distance from x to the common kernel.
inline double dist_proxy(const Eigen::VectorXd& x, const std::vector<Eigen::VectorXd>& gs,
                         const GameSpace::NormFn& dual_norm) {
  double best = 0;
  for (const auto& g : gs) {
    if (g.size() != x.size()) fail(Errc::invalid_argument, "functional of the wrong size");
    double ng = dual_norm(g);
    if (!(ng > 0)) fail(Errc::invalid_argument, "zero functional");
    best = std::max(best, std::abs(x.dot(g)) / ng);
  }
  return best;
}

inline double dist_proxy(const HaarCoefficients& x, const std::vector<StepFunction>& gs, const NormSpec& dual) {
  if (gs.empty()) return 0.0;
  StepFunction f = synthesize(x, std::max(gs[0].resolution, x.max_level() + 1));
  double best = 0;
  for (const auto& g : gs) {
    double ng = norm_eval(g, dual);
    if (!(ng > 0)) fail(Errc::invalid_argument, "zero functional");
    best = std::max(best, std::abs(pairing(f, g)) / ng);
  }
  return best;
}

// Exact distance from x to the common kernel when the coordinates are orthonormal.
inline double exact_distance_l2(const Eigen::VectorXd& x, const std::vector<Eigen::VectorXd>& gs) {
  if (gs.empty()) return 0.0;
  Eigen::MatrixXd G(x.size(), Eigen::Index(gs.size()));
  for (std::size_t j = 0; j < gs.size(); ++j) G.col(Eigen::Index(j)) = gs[j];
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(G);
  Eigen::VectorXd coef = cod.solve(x);
  return (G * coef).norm();
}

struct WinReport {
  int rounds = 0;
  double C = 1, eta = 0;
  RatioReport primal, dual;
  bool primal_pass = false, dual_pass = false;
  std::vector<double> eta_k, w_proxy, g_proxy, lambda_mu;
  bool proxy_pass = true, sum_pass = true;
  Eigen::MatrixXd biorth;
  double offdiag_max = 0;
  bool biorth_pass = false;

  bool all() const { return primal_pass && dual_pass && proxy_pass && sum_pass && biorth_pass; }
};

inline void to_json(nlohmann::json& j, const WinReport& r) {
  std::vector<double> diag;
  for (Eigen::Index k = 0; k < r.biorth.rows(); ++k) diag.push_back(r.biorth(k, k));
  j = {{"rounds_cap", r.rounds},
       {"C", r.C},
       {"eta", r.eta},
       {"equivalence",
        {{"primal", r.primal},
         {"dual", r.dual},
         {"window", {std::pow(r.C + r.eta, -0.5), std::pow(r.C + r.eta, 0.5)}},
         {"primal_verdict", r.primal_pass ? "probe-pass" : "fail"},
         {"dual_verdict", r.dual_pass ? "probe-pass" : "fail"}}},
       {"distance", {{"eta_k", r.eta_k}, {"w_proxy", r.w_proxy}, {"g_proxy", r.g_proxy}, {"pass", r.proxy_pass}}},
       {"lambda_mu", {{"values", r.lambda_mu}, {"pass", r.sum_pass}}},
       {"biorthogonality", {{"diagonal", diag}, {"offdiag_max", r.offdiag_max}, {"pass", r.biorth_pass}}},
       {"pass", r.all()}};
}

inline WinReport check_win(const GameTranscript& t, int trials = 1000, std::uint64_t seed = 1) {
  const GameSpace& gs = t.space;
  WinReport r;
  r.rounds = int(t.rounds.size());
  r.C = t.config.C;
  r.eta = t.config.eta;
  std::size_t K = t.rounds.size();
  if (K == 0) {
    r.primal_pass = r.dual_pass = r.biorth_pass = true;
    return r;
  }
  Eigen::MatrixXd X(Eigen::Index(gs.n), Eigen::Index(K)), Xs = X, E = Eigen::MatrixXd::Zero(X.rows(), X.cols());
  for (std::size_t k = 0; k < K; ++k) {
    X.col(Eigen::Index(k)) = t.rounds[k].x;
    Xs.col(Eigen::Index(k)) = t.rounds[k].xstar;
    E(Eigen::Index(gs.order[k]), Eigen::Index(k)) = 1.0;
  }
  auto probe = [&](const Eigen::MatrixXd& B, const GameSpace::NormFn& nf, std::uint64_t sd) {
    return ratio_probe(K, trials, sd, [&](const std::vector<double>& a) {
      Eigen::Map<const Eigen::VectorXd> v(a.data(), Eigen::Index(K));
      double den = nf(E * v);
      if (!(den > 0)) return -1.0;
      return nf(B * v) / den;
    });
  };
  double window = t.config.C + t.config.eta;
  r.primal = probe(X, gs.norm, split_seed(seed, 1));
  r.dual = probe(Xs, gs.probe_dual_norm, split_seed(seed, 2));
  r.primal_pass = r.primal.within(window);
  r.dual_pass = r.dual.within(window);

  for (const auto& rd : t.rounds) {
    r.eta_k.push_back(rd.adv.eta);
    r.w_proxy.push_back(dist_proxy(rd.x, rd.adv.W, gs.dual_norm));
    r.g_proxy.push_back(dist_proxy(rd.xstar, rd.adv.G, gs.norm));
    r.lambda_mu.push_back(rd.resp.lambda_mu());
    if (!(r.w_proxy.back() < rd.adv.eta && r.g_proxy.back() < rd.adv.eta)) r.proxy_pass = false;
    double s = r.lambda_mu.back();
    if (!(s > 1 - r.eta && s < 1 + r.eta)) r.sum_pass = false;
  }
  r.biorth = Xs.transpose() * X;
  for (std::size_t a = 0; a < K; ++a)
    for (std::size_t b = 0; b < K; ++b)
      if (a != b) r.offdiag_max = std::max(r.offdiag_max, std::abs(r.biorth(Eigen::Index(a), Eigen::Index(b))));
  r.biorth_pass = r.offdiag_max <= 1e-12;
  return r;
}

// ---- serialization

inline nlohmann::json sparse_json(const GameSpace& gs, const Eigen::VectorXd& v) {
  nlohmann::json j = nlohmann::json::object();
  for (Eigen::Index k = 0; k < v.size(); ++k)
    if (v(k) != 0.0) j[gs.labels[std::size_t(k)]] = v(k);
  return j;
}

inline void to_json(nlohmann::json& j, const GameTranscript& t) {
  nlohmann::json rounds = nlohmann::json::array(), xs = nlohmann::json::array(), xss = nlohmann::json::array();
  for (const auto& r : t.rounds) {
    nlohmann::json W = nlohmann::json::array(), G = nlohmann::json::array(), E = nlohmann::json::array();
    for (const auto& v : r.adv.W) W.push_back(sparse_json(t.space, v));
    for (const auto& v : r.adv.G) G.push_back(sparse_json(t.space, v));
    for (auto e : r.resp.E) E.push_back(t.space.labels[e]);
    rounds.push_back({{"eta", r.adv.eta},
                      {"W", W},
                      {"G", G},
                      {"side", r.resp.side},
                      {"E", E},
                      {"lambda", r.resp.lambda},
                      {"mu", r.resp.mu},
                      {"signs", r.adv.signs}});
    xs.push_back(sparse_json(t.space, r.x));
    xss.push_back(sparse_json(t.space, r.xstar));
  }
  j = {{"config",
        {{"space", t.space.name},
         {"rounds", t.config.rounds},
         {"C", t.config.C},
         {"eta", t.config.eta},
         {"adversary", t.adversary},
         {"strategy", t.strategy}}},
       {"partition", t.partition},
       {"rounds", rounds},
       {"derived", {{"xs", xs}, {"xstars", xss}}}};
}

// ---- built-in adversaries

enum class PartitionPolicy { trivial, parity, random };

inline std::vector<int> make_partition(const GameSpace& gs, PartitionPolicy p, std::uint64_t seed) {
  std::vector<int> out(gs.n, 1);
  Rng rng(split_seed(seed, 0x5eed));
  for (std::size_t k = 0; k < gs.n; ++k) {
    if (p == PartitionPolicy::parity) out[k] = 1 + int(gs.key[k] % 2);
    if (p == PartitionPolicy::random) out[k] = rademacher(rng) > 0 ? 1 : 2;
  }
  return out;
}

inline double default_eta(double eta, int k) { return eta * std::ldexp(1.0, -(k + 1)); }

class NullAdversary : public Adversary {
 public:
  explicit NullAdversary(double eta = 0.1, PartitionPolicy p = PartitionPolicy::trivial, std::uint64_t seed = 1)
      : eta_(eta), policy_(p), seed_(seed) {}
  std::string name() const override { return "null"; }
  std::vector<int> partition(const GameSpace& gs) override { return make_partition(gs, policy_, seed_); }
  AdversaryMove step1(int k, const GameTranscript&) override { return {default_eta(eta_, k), {}, {}, {}}; }

 private:
  double eta_;
  PartitionPolicy policy_;
  std::uint64_t seed_;
};

// Seeded random functionals whose coefficients decay like 4^{-level}, plus random signs.
class RandomFunctionalAdversary : public Adversary {
 public:
  RandomFunctionalAdversary(std::uint64_t seed, double eta = 0.1, int per_round = 2,
                            PartitionPolicy p = PartitionPolicy::trivial)
      : seed_(seed), eta_(eta), per_round_(per_round), policy_(p) {}
  std::string name() const override { return "random-functional"; }
  std::vector<int> partition(const GameSpace& gs) override { return make_partition(gs, policy_, seed_); }

  AdversaryMove step1(int k, const GameTranscript& t) override {
    Rng rng(split_seed(seed_, 2 * std::uint64_t(k) + 1));
    AdversaryMove m{default_eta(eta_, k), {}, {}, {}};
    auto draw = [&] {
      Eigen::VectorXd v(Eigen::Index(t.space.n));
      for (std::size_t i = 0; i < t.space.n; ++i)
        v(Eigen::Index(i)) = gaussian(rng) * std::ldexp(1.0, -2 * t.space.level[i]);
      return v;
    };
    for (int j = 0; j < per_round_; ++j) m.W.push_back(draw());
    for (int j = 0; j < per_round_; ++j) m.G.push_back(draw());
    return m;
  }
  std::vector<int> step3(int k, const ResponderMove& r, const GameTranscript&) override {
    Rng rng(split_seed(seed_, 2 * std::uint64_t(k) + 2));
    std::vector<int> s;
    for (std::size_t i = 0; i < r.E.size(); ++i) s.push_back(rademacher(rng));
    return s;
  }

 private:
  std::uint64_t seed_;
  double eta_;
  int per_round_;
  PartitionPolicy policy_;
};

// The factorization adversary: annihilates the history x_j, T x_j and the basis vectors
// e_i, T e_i below the last used position, with the dual counterparts on the other side.
class HistoryAdversary : public Adversary {
 public:
  using EtaFn = std::function<double(int)>;
  using SignFn = std::function<std::vector<int>(int, const ResponderMove&)>;

  HistoryAdversary(std::optional<Eigen::MatrixXd> T, EtaFn eta, SignFn signs = {})
      : T_(std::move(T)), eta_(std::move(eta)), signs_(std::move(signs)) {}
  std::string name() const override { return "history"; }

  // side 1 where e*_n(T e_n) >= 0, side 2 otherwise
  std::vector<int> partition(const GameSpace& gs) override {
    std::vector<int> out(gs.n, 1);
    if (T_)
      for (std::size_t k = 0; k < gs.n; ++k) out[k] = (*T_)(Eigen::Index(k), Eigen::Index(k)) >= 0 ? 1 : 2;
    return out;
  }

  AdversaryMove step1(int k, const GameTranscript& t) override {
    AdversaryMove m{eta_(k), {}, {}, {}};
    std::size_t ln = 0;
    bool any = false;
    auto push = [](std::vector<Eigen::VectorXd>& list, const Eigen::VectorXd& v) {
      if (v.cwiseAbs().maxCoeff() > 0) list.push_back(v);
    };
    for (const auto& r : t.rounds) {
      push(m.G, r.x);
      push(m.W, r.xstar);
      if (T_) {
        push(m.G, *T_ * r.x);
        push(m.W, T_->transpose() * r.xstar);
      }
      for (auto e : r.resp.E) ln = std::max(ln, e), any = true;
    }
    if (any)
      for (std::size_t i = 0; i <= ln; ++i) {
        push(m.G, t.space.unit(i));
        push(m.W, t.space.unit(i));
        if (T_) {
          push(m.G, T_->col(Eigen::Index(i)));
          push(m.W, T_->row(Eigen::Index(i)).transpose());
        }
      }
    return m;
  }

  std::vector<int> step3(int k, const ResponderMove& r, const GameTranscript&) override {
    return signs_ ? signs_(k, r) : std::vector<int>(r.E.size(), 1);
  }

 private:
  std::optional<Eigen::MatrixXd> T_;
  EtaFn eta_;
  SignFn signs_;
};

// Replays a fixed list of responder moves; used for identity transcripts and mutation tests.
class ScriptedStrategy : public Strategy {
 public:
  explicit ScriptedStrategy(std::vector<ResponderMove> moves) : moves_(std::move(moves)) {}
  std::string name() const override { return "scripted"; }
  void begin(const GameSpace&, const GameConfig&, const std::vector<int>&) override {}
  ResponderMove respond(int k, const AdversaryMove&, const GameTranscript&) override { return moves_.at(std::size_t(k)); }
  std::unique_ptr<Strategy> clone() const override { return std::make_unique<ScriptedStrategy>(*this); }

 private:
  std::vector<ResponderMove> moves_;
};

// Round k answers with the single coordinate order[k], so x_k = e_k.
inline std::vector<ResponderMove> identity_moves(const GameSpace& gs, int rounds, const std::vector<int>& partition) {
  std::vector<ResponderMove> out;
  for (int k = 0; k < rounds; ++k) {
    std::size_t c = gs.order.at(std::size_t(k));
    out.push_back({partition.at(c), {c}, {1.0}, {1.0}});
  }
  return out;
}

}  // namespace haarforge
