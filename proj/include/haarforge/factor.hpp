#pragma once

#include <chrono>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "haarforge/common.hpp"
#include "haarforge/game.hpp"
#include "haarforge/operators.hpp"
#include "haarforge/space.hpp"
#include "haarforge/strategies.hpp"

namespace haarforge {

// ---------------------------------------------------------------- norms of maps between spaces

// U maps e-coordinates of `from` to e-coordinates of `to`.
inline NormBounds map_norm(const Eigen::MatrixXd& U, const Space& from, const Space& to, int trials = 200,
                           std::uint64_t seed = 1) {
  if (U.rows() != Eigen::Index(to.size()) || U.cols() != Eigen::Index(from.size()))
    fail(Errc::invalid_argument, "map shape differs from the spaces");
  if (detail::all_two(from.norm()) && detail::all_two(to.norm())) {
    double v = U.size() ? Eigen::BDCSVD<Eigen::MatrixXd>(U).singularValues()(0) : 0.0;
    return {v, v, true, "spectral", -1};
  }
  if (detail::is_l1(from.norm()) && detail::is_l1(to.norm()) && from.complete()) {
    // extreme points of the unit ball are the normalized cell indicators
    Eigen::MatrixXd V = to.cell_values(U * from.cell_coords());
    double vol_to = std::ldexp(1.0, -to.resolution() * to.dims());
    double vol_from = std::ldexp(1.0, -from.resolution() * from.dims());
    Eigen::Index at = 0;
    double v = V.cwiseAbs().colwise().sum().maxCoeff(&at) * vol_to / vol_from;
    return {v, v, true, "l1-extreme-points", long(at)};
  }
  NormBounds b;
  b.method = "probe+column-relaxation";
  Space dual = from.dual();
  double upper = 0;
  for (Eigen::Index k = 0; k < U.cols(); ++k) {
    double col = to.norm_of(U.col(k));
    if (col == 0.0) continue;
    Eigen::VectorXd unit = Eigen::VectorXd::Zero(U.cols());
    unit(k) = 1.0;
    upper += col * dual.norm_of(unit);
  }
  RatioReport r = ratio_probe(from.size(), trials, seed, [&](const std::vector<double>& a) {
    Eigen::Map<const Eigen::VectorXd> x(a.data(), Eigen::Index(a.size()));
    double den = from.norm_of(x);
    if (!(den > 0)) return -1.0;
    return to.norm_of(U * x) / den;
  });
  b.upper = upper;
  b.lower = std::min(r.max_ratio, upper);
  return b;
}

inline Eigen::MatrixXd eye(std::size_t n) { return Eigen::MatrixXd::Identity(Eigen::Index(n), Eigen::Index(n)); }

// ---------------------------------------------------------------- sign selection

struct SignSelection {
  std::vector<int> signs;
  double value = 0;  // sum_{i,j} eps_i eps_j mu_i lambda_j a_ij
  double mean = 0;   // its Rademacher mean, the weighted diagonal
  std::string method;
};

inline double bilinear_value(const Eigen::MatrixXd& a, const std::vector<double>& lambda, const std::vector<double>& mu,
                             const std::vector<int>& eps) {
  double v = 0;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      v += eps[std::size_t(i)] * eps[std::size_t(j)] * mu[std::size_t(i)] * lambda[std::size_t(j)] * a(i, j);
  return v;
}

// Fixes the signs one index at a time, never letting the conditional mean move away from zero.
inline std::vector<int> derandomized_signs(const Eigen::MatrixXd& a, const std::vector<double>& lambda,
                                           const std::vector<double>& mu, int sigma) {
  std::size_t n = lambda.size();
  std::vector<int> eps(n, 1);
  for (std::size_t k = 1; k < n; ++k) {
    double gain = 0;
    for (std::size_t j = 0; j < k; ++j)
      gain += eps[j] * (mu[k] * lambda[j] * a(Eigen::Index(k), Eigen::Index(j)) +
                        mu[j] * lambda[k] * a(Eigen::Index(j), Eigen::Index(k)));
    eps[k] = sigma * gain >= 0 ? 1 : -1;
  }
  return eps;
}

inline std::vector<int> exhaustive_signs(const Eigen::MatrixXd& a, const std::vector<double>& lambda,
                                         const std::vector<double>& mu) {
  std::size_t n = lambda.size();
  if (n > 20) fail(Errc::invalid_argument, "exhaustive sign search is limited to 20 indices");
  std::vector<int> best(n, 1), eps(n);
  double top = -1;
  for (std::uint64_t m = 0; m < (std::uint64_t{1} << n); m += 2) {  // eps_0 = +1 by symmetry
    for (std::size_t i = 0; i < n; ++i) eps[i] = (m >> i) & 1 ? -1 : 1;
    double v = std::abs(bilinear_value(a, lambda, mu, eps));
    if (v > top) top = v, best = eps;
  }
  return best;
}

enum class SignMethod { automatic, derandomized, exhaustive };

// a(i,j) = e*_{E_i}(T e_{E_j}); the diagonal must carry one sign and be at least delta in size.
inline SignSelection sign_select(const Eigen::MatrixXd& a, const std::vector<double>& lambda,
                                 const std::vector<double>& mu, double eta, double delta,
                                 SignMethod method = SignMethod::automatic) {
  std::size_t n = lambda.size();
  if (n == 0 || mu.size() != n || a.rows() != Eigen::Index(n) || a.cols() != Eigen::Index(n))
    fail(Errc::invalid_argument, "sign selection needs one weight pair per block index");
  double lm = 0;
  for (std::size_t i = 0; i < n; ++i) lm += lambda[i] * mu[i];
  if (!(lm > 1 - eta && lm < 1 + eta)) fail(Errc::precondition, "sum lambda*mu outside (1-eta, 1+eta)");
  int sigma = a(0, 0) >= 0 ? 1 : -1;
  SignSelection s;
  for (std::size_t i = 0; i < n; ++i) {
    double d = a(Eigen::Index(i), Eigen::Index(i));
    if ((d >= 0 ? 1 : -1) != sigma) fail(Errc::precondition, "diagonal changes sign on the block");
    if (std::abs(d) < delta * (1 - 1e-12)) fail(Errc::precondition, "diagonal entry below delta");
    s.mean += mu[i] * lambda[i] * d;
  }
  bool brute = method == SignMethod::exhaustive || (method == SignMethod::automatic && n <= 12);
  s.signs = brute ? exhaustive_signs(a, lambda, mu) : derandomized_signs(a, lambda, mu, sigma);
  s.method = brute ? "exhaustive" : "derandomized";
  s.value = bilinear_value(a, lambda, mu, s.signs);
  return s;
}

inline SignSelection sign_select(const std::vector<std::size_t>& E, const std::vector<double>& lambda,
                                 const std::vector<double>& mu, const OperatorMatrix& T, double eta, double delta,
                                 SignMethod method = SignMethod::automatic) {
  Eigen::MatrixXd a(Eigen::Index(E.size()), Eigen::Index(E.size()));
  for (std::size_t i = 0; i < E.size(); ++i)
    for (std::size_t j = 0; j < E.size(); ++j) a(Eigen::Index(i), Eigen::Index(j)) = T.M(Eigen::Index(E[i]), Eigen::Index(E[j]));
  return sign_select(a, lambda, mu, eta, delta, method);
}

// ---------------------------------------------------------------- transfer operators

struct Transfer {
  Space source;       // spanned by the first K basis vectors
  Eigen::MatrixXd A;  // e_n -> x_n, (n_X x K)
  Eigen::MatrixXd B;  // y -> sum x*_n(y) e_n, (K x n_X)
  Eigen::MatrixXd BTA;
  std::vector<double> diagonal;
  double offdiag_sum = 0;
  double biorth_error = 0;
};

// The source space is the truncation whose basis is the first K positions of the ambient order.
inline Space source_space(const Space& X, int depth) {
  Space M = Space::make(X.norm(), X.dims(), depth, X.convention());
  if (M.size() > X.size()) fail(Errc::invalid_argument, "source deeper than the ambient space");
  for (std::size_t k = 0; k < M.size(); ++k)
    if (!(M.index(k) == X.index(k))) fail(Errc::precondition, "source basis is not an initial segment of the order");
  return M;
}

inline Transfer assemble_transfer(const GameTranscript& t, const OperatorMatrix& T, const Space& source) {
  std::size_t K = source.size(), n = T.size();
  if (t.rounds.size() < K) fail(Errc::precondition, "transcript shorter than the source space");
  for (std::size_t k = 0; k < K; ++k)
    if (t.space.order[k] != k) fail(Errc::precondition, "round order differs from the basis order");
  Transfer r;
  r.source = source;
  r.A.resize(Eigen::Index(n), Eigen::Index(K));
  r.B.resize(Eigen::Index(K), Eigen::Index(n));
  for (std::size_t k = 0; k < K; ++k) {
    r.A.col(Eigen::Index(k)) = t.rounds[k].x;
    r.B.row(Eigen::Index(k)) = t.rounds[k].xstar.transpose();
  }
  r.biorth_error = (r.B * r.A - eye(K)).cwiseAbs().maxCoeff();
  if (r.biorth_error >= 1e-8) fail(Errc::corrupt_transcript, "x*_m(x_n) differs from delta_mn by " + std::to_string(r.biorth_error));
  r.BTA = r.B * T.M * r.A;
  for (std::size_t k = 0; k < K; ++k) r.diagonal.push_back(r.BTA(Eigen::Index(k), Eigen::Index(k)));
  for (Eigen::Index i = 0; i < r.BTA.rows(); ++i)
    for (Eigen::Index j = 0; j < r.BTA.cols(); ++j)
      if (i != j) r.offdiag_sum += std::abs(r.BTA(i, j));
  return r;
}

// ---------------------------------------------------------------- Neumann correction

struct NeumannReport {
  Eigen::MatrixXd B_tilde;
  NormBounds defect;             // ||I - Q||
  double series_bound = kInf;    // 1 / (1 - ||I - Q||)
  NormBounds inverse;            // ||Q^{-1}||
};

inline void to_json(nlohmann::json& j, const NeumannReport& r) {
  j = {{"defect", r.defect}, {"series_bound", r.series_bound}, {"inverse", r.inverse}};
}

// Q acts on `space`; pre_B maps into it.
inline NeumannReport neumann_correct(const OperatorMatrix& Q, const Eigen::MatrixXd& pre_B) {
  NeumannReport r;
  std::size_t n = Q.size();
  r.defect = operator_norm(OperatorMatrix{Q.space, eye(n) - Q.M}, NormMode::estimate);
  if (!(r.defect.upper < 1))
    fail(Errc::not_contractive, "||I - Q|| <= " + std::to_string(r.defect.upper) + " is not below 1");
  r.series_bound = 1 / (1 - r.defect.upper);
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(Q.M);
  r.B_tilde = lu.solve(pre_B);
  r.inverse = operator_norm(OperatorMatrix{Q.space, lu.inverse()}, NormMode::estimate);
  return r;
}

// ---------------------------------------------------------------- diagonal factorization

// The identity of `target` factors as B_hat D A_hat, with D the multiplier on `source`.
struct DiagFactor {
  std::string route;
  Space source, target;
  Eigen::MatrixXd A_hat, B_hat;  // (source x target), (target x source)
  double K_lower = 0, K_upper = kInf;
  std::optional<DyadicIndex> root;
  double root_entry = 0, variation = 0, variation_target = 0;
  bool stabilized = true;
  std::optional<NeumannReport> neumann;
};

inline void to_json(nlohmann::json& j, const DiagFactor& d) {
  j = {{"route", d.route},
       {"target_depth", d.target.depth()},
       {"K", {{"lower", d.K_lower}, {"upper", d.K_upper}}}};
  if (d.root) {
    j["root"] = *d.root;
    j["root_entry"] = d.root_entry;
    j["variation"] = d.variation;
    j["variation_target"] = d.variation_target;
    j["stabilized"] = d.stabilized;
  }
  if (d.neumann) j["neumann"] = *d.neumann;
}

inline void check_entries(const std::vector<double>& c, double delta) {
  for (double v : c)
    if (std::abs(v) < delta * (1 - 1e-12)) fail(Errc::precondition, "diagonal entry " + std::to_string(v) + " below delta");
}

inline DiagFactor diag_factor_unconditional(const Space& M, const std::vector<double>& c, double delta) {
  if (c.size() != M.size()) fail(Errc::invalid_argument, "one entry per basis vector");
  check_entries(c, delta);
  DiagFactor d;
  d.route = "unconditional";
  d.source = d.target = M;
  d.A_hat = eye(M.size());
  d.B_hat = Eigen::MatrixXd::Zero(Eigen::Index(M.size()), Eigen::Index(M.size()));
  for (std::size_t k = 0; k < c.size(); ++k) d.B_hat(Eigen::Index(k), Eigen::Index(k)) = 1 / c[k];
  auto nb = map_norm(d.B_hat, M, M);
  d.K_lower = nb.lower;
  d.K_upper = nb.upper;
  return d;
}

inline MultiplierEntries entries_of(const Space& M, const std::vector<double>& c) {
  MultiplierEntries out;
  for (std::size_t k = 0; k < M.size(); ++k) out[M.index(k)] = c.at(k);
  return out;
}

struct Stabilization {
  DyadicIndex root;
  double variation = 0;
  int depth = 0;
  bool met = true;
};

// Shallowest interval (then smallest interval_index) whose subtree chains vary by at most eps/4.
// Leaves always qualify; max_level limits the search when room below the root is needed.
inline Stabilization l1_stabilize(const MultiplierEntries& c, double eps, int max_level = -1) {
  int depth = entries_depth(c);
  if (depth < 0) fail(Errc::invalid_argument, "no interval entries");
  if (max_level < 0 || max_level > depth) max_level = depth;
  std::optional<Stabilization> best;
  for (std::int64_t n = 1; n < (std::int64_t{2} << max_level); ++n) {
    DyadicIndex I = interval_from_index(n);
    if (!c.count(IndexTuple{I})) continue;
    double v = chain_variation(c, I);
    if (v <= eps / 4) return {I, v, depth, true};
    if (!best || v < best->variation) best = Stabilization{I, v, depth, false};
  }
  if (!best) fail(Errc::depth_exhausted, "no candidate root within the allowed levels");
  return *best;
}

// Isometric embedding of L1(target) onto the functions in Y_root that are antisymmetric
// under the swap of the two halves of root, and the norm one projection onto that image.
struct RootEmbedding {
  Eigen::MatrixXd A;     // target -> source
  Eigen::MatrixXd Ainv;  // source -> target, A^{-1} on the image
  Eigen::MatrixXd P;     // source -> source
};

inline RootEmbedding root_embedding(const Space& M, const Space& F, const DyadicIndex& root) {
  int rM = M.resolution(), rF = F.resolution();
  if (rM - root.level - 1 != rF) fail(Errc::depth_exhausted, "target grid does not fit below the root");
  std::size_t a = std::size_t(root.position - 1) << (rM - root.level), half = std::size_t{1} << rF;
  double len = root.length();
  RootEmbedding e;
  // cell maps, then coordinates
  Eigen::MatrixXd Acell = Eigen::MatrixXd::Zero(Eigen::Index(M.cells()), Eigen::Index(F.cells()));
  Eigen::MatrixXd Ainv_cell = Eigen::MatrixXd::Zero(Eigen::Index(F.cells()), Eigen::Index(M.cells()));
  Eigen::MatrixXd Pcell = Eigen::MatrixXd::Zero(Eigen::Index(M.cells()), Eigen::Index(M.cells()));
  for (std::size_t j = 0; j < half; ++j) {
    auto l = Eigen::Index(a + j), r = Eigen::Index(a + half + j), f = Eigen::Index(j);
    Acell(l, f) = 1 / len;
    Acell(r, f) = -1 / len;
    Ainv_cell(f, l) = len;
    Pcell(l, l) = Pcell(r, r) = 0.5;
    Pcell(l, r) = Pcell(r, l) = -0.5;
  }
  e.A = M.cell_coords() * Acell * F.cell_values(eye(F.size()));
  e.Ainv = F.cell_coords() * Ainv_cell * M.cell_values(eye(M.size()));
  e.P = M.cell_coords() * Pcell * M.cell_values(eye(M.size()));
  return e;
}

// L1 (D+) route: stabilize the multiplier on a subtree, embed L1 of a coarser grid below the root,
// and invert the compressed diagonal exactly.
inline DiagFactor diag_factor_l1(const Space& M, const std::vector<double>& c, double delta, double eps) {
  if (M.dims() != 1 || M.convention() != Convention::Dplus || !detail::is_l1(M.norm()))
    fail(Errc::unsupported, "the L1 diagonal route needs d = 1, convention D+ and the L1 norm");
  if (c.size() != M.size()) fail(Errc::invalid_argument, "one entry per basis vector");
  check_entries(c, delta);
  DiagFactor d;
  d.route = "l1";
  d.source = M;
  d.variation_target = delta * eps / (1 + eps);
  auto st = l1_stabilize(entries_of(M, c), d.variation_target);
  d.root = st.root;
  d.variation = st.variation;
  d.stabilized = st.met;
  d.root_entry = c[M.position({st.root})];
  d.target = Space::make(M.norm(), 1, M.depth() - st.root.level - 1, Convention::Dplus);
  auto e = root_embedding(M, d.target, st.root);
  Eigen::MatrixXd Dm = Eigen::Map<const Eigen::VectorXd>(c.data(), Eigen::Index(c.size())).asDiagonal();
  d.A_hat = e.A;
  Eigen::MatrixXd pre = e.Ainv * e.P / d.root_entry;
  auto nr = neumann_correct(OperatorMatrix{d.target, pre * Dm * e.A}, pre);
  d.B_hat = nr.B_tilde;
  d.neumann = nr;
  auto na = map_norm(d.A_hat, d.target, M), nb = map_norm(d.B_hat, M, d.target);
  d.K_lower = na.lower * nb.lower;
  d.K_upper = na.upper * nb.upper;
  return d;
}

// ---------------------------------------------------------------- test operators

// Entries uniform in [lo, hi], with a random sign when `signed_entries`.
inline MultiplierEntries random_entries(const Space& s, double lo, double hi, bool signed_entries, std::uint64_t seed) {
  Rng rng(seed);
  MultiplierEntries c;
  for (const auto& idx : s.basis()) {
    double v = uniform(rng, lo, hi);
    c[idx] = signed_entries ? rademacher(rng) * v : v;
  }
  return c;
}

// Diagonal in [lo, hi] plus off-diagonal noise of size at most noise * 2^-(level_m + level_k).
inline OperatorMatrix noisy_operator(const Space& s, double lo, double hi, double noise, std::uint64_t seed) {
  auto level = [&](std::size_t k) {
    int l = 0;
    for (const auto& I : s.index(k)) l += I.empty ? 0 : I.level;
    return l;
  };
  OperatorMatrix T = build_multiplier(s, random_entries(s, lo, hi, false, seed));
  Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
  for (std::size_t m = 0; m < s.size(); ++m)
    for (std::size_t k = 0; k < s.size(); ++k)
      if (m != k) T.M(Eigen::Index(m), Eigen::Index(k)) = noise * std::ldexp(uniform(rng, -1, 1), -(level(m) + level(k)));
  return T;
}

// ---------------------------------------------------------------- pipeline

struct FactorConfig {
  int source_depth = 1;  // the factorization runs on the first basis vectors up to this depth
  double eta = 0.01;
  double C = 1;
  double eps = 0.1;  // L1 stabilization budget
  bool strict_l1 = false;
  std::uint64_t seed = 1;
};

struct FactorCertificate {
  std::string route;
  Space ambient, source, target;
  Eigen::MatrixXd A_tilde, B_tilde;  // (ambient x target), (target x ambient)
  std::vector<double> diagonal;
  double offdiag_sum = 0, biorth_error = 0;
  NormBounds residual, norm_A, norm_B, norm_T;
  double product_lower = 0, product_upper = kInf;
  double predicted_bound = kInf;
  double eta_used = 0, delta = 0;
  int retries = 0;
  DiagFactor diag;
  NeumannReport neumann;
  GameTranscript transcript;
  nlohmann::json strategy_info;
  nlohmann::json timings = nlohmann::json::object();
  nlohmann::json extra = nlohmann::json::object();
};

inline void to_json(nlohmann::json& j, const FactorCertificate& c) {
  j = {{"route", c.route},
       {"ambient", c.ambient.norm().name() + " depth=" + std::to_string(c.ambient.depth())},
       {"source_size", c.source.size()},
       {"target_size", c.target.size()},
       {"delta", c.delta},
       {"eta", c.eta_used},
       {"retries", c.retries},
       {"diagonal", c.diagonal},
       {"offdiag_sum", c.offdiag_sum},
       {"biorth_error", c.biorth_error},
       {"residual", c.residual},
       {"norm_A", c.norm_A},
       {"norm_B", c.norm_B},
       {"norm_T", c.norm_T},
       {"norm_product", {{"lower", c.product_lower}, {"upper", c.product_upper}}},
       {"predicted_bound", c.predicted_bound},
       {"diag_factor", c.diag},
       {"neumann", c.neumann},
       {"strategy", c.strategy_info},
       {"transcript", {{"rounds", c.transcript.rounds.size()}, {"strategy", c.transcript.strategy}}},
       {"timings", c.timings}};
  for (auto& [k, v] : c.extra.items()) j[k] = v;
}

inline std::unique_ptr<Strategy> strategy_for(const Space& X, const FactorConfig& cfg) {
  using K = NormSpec::Kind;
  auto kind = X.norm().kind;
  if (X.dims() == 1 && X.convention() == Convention::Dplus && detail::is_l1(X.norm())) {
    L1Config l;
    l.strict = cfg.strict_l1;
    return std::make_unique<L1Strategy>(l);
  }
  if (X.dims() == 1 && X.convention() == Convention::D && (kind == K::Lp || kind == K::Hp))
    return std::make_unique<GGStrategy>();
  if (X.dims() == 2 && X.convention() == Convention::D && kind == K::HpHq) return std::make_unique<HpHqStrategy>();
  if (X.convention() == Convention::D && (kind == K::Mixed || kind == K::Triple || kind == K::Lp))
    return std::make_unique<MixedLpStrategy>();
  fail(Errc::unsupported, "no strategy registered for " + X.norm().name());
}

// lambda K (C + eta)^2 / (1 - 2 lambda K eta), with basis constant lambda = 1 for the Haar system
inline double predicted_bound(double K, double C, double eta) {
  double den = 1 - 2 * K * eta;
  return den > 0 ? K * (C + eta) * (C + eta) / den : kInf;
}

namespace detail {

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline FactorCertificate factor_once(const OperatorMatrix& T, double delta, const FactorConfig& cfg, double eta) {
  auto stage = [](const char* name, auto&& f) -> decltype(f()) {
    try {
      return f();
    } catch (const Error& e) {
      throw Error(e.code(), std::string(name) + ": " + e.what());
    }
  };
  FactorCertificate c;
  const Space& X = T.space;
  c.ambient = X;
  c.delta = delta;
  c.eta_used = eta;
  auto t0 = std::chrono::steady_clock::now();
  for (std::size_t k = 0; k < T.size(); ++k)
    if (std::abs(T.M(Eigen::Index(k), Eigen::Index(k))) < delta * (1 - 1e-12))
      fail(Errc::precondition, "diagonal entry " + std::to_string(k) + " below delta");
  c.norm_T = stage("norm", [&] { return operator_norm(T, NormMode::estimate, 200, cfg.seed); });
  c.source = stage("source", [&] { return source_space(X, cfg.source_depth); });
  c.timings["norm"] = seconds_since(t0);

  t0 = std::chrono::steady_clock::now();
  double normT = std::max(c.norm_T.upper, 1e-300), C = cfg.C;
  HistoryAdversary adv(
      T.M, [=](int k) { return eta / (normT * (k + 1) * std::ldexp(1.0, k + 1) * std::sqrt(C + eta)); },
      [&](int, const ResponderMove& r) { return sign_select(r.E, r.lambda, r.mu, T, eta, delta).signs; });
  auto strat = stage("game", [&] { return strategy_for(X, cfg); });
  GameSpace gs = GameSpace::of(X);
  c.transcript = stage("game", [&] { return run_game(gs, adv, *strat, {int(c.source.size()), C, eta}); });
  c.strategy_info = strat->info();
  c.timings["game"] = seconds_since(t0);

  t0 = std::chrono::steady_clock::now();
  Transfer tr = stage("transfer", [&] { return assemble_transfer(c.transcript, T, c.source); });
  c.diagonal = tr.diagonal;
  c.offdiag_sum = tr.offdiag_sum;
  c.biorth_error = tr.biorth_error;
  double dmin = kInf;
  for (double v : tr.diagonal) dmin = std::min(dmin, std::abs(v));
  c.timings["transfer"] = seconds_since(t0);

  t0 = std::chrono::steady_clock::now();
  bool l1 = detail::is_l1(X.norm()) && X.convention() == Convention::Dplus;
  c.diag = stage("diagonal", [&] {
    return l1 ? diag_factor_l1(c.source, tr.diagonal, dmin, cfg.eps) : diag_factor_unconditional(c.source, tr.diagonal, dmin);
  });
  c.route = c.diag.route;
  c.target = c.diag.target;
  c.timings["diagonal"] = seconds_since(t0);

  t0 = std::chrono::steady_clock::now();
  Eigen::MatrixXd pre = c.diag.B_hat * tr.B;
  Eigen::MatrixXd Q = pre * T.M * tr.A * c.diag.A_hat;
  c.neumann = stage("neumann", [&] { return neumann_correct(OperatorMatrix{c.target, Q}, pre); });
  c.B_tilde = c.neumann.B_tilde;
  c.A_tilde = tr.A * c.diag.A_hat;
  c.timings["neumann"] = seconds_since(t0);

  t0 = std::chrono::steady_clock::now();
  c.residual = map_norm(c.B_tilde * T.M * c.A_tilde - eye(c.target.size()), c.target, c.target);
  c.norm_A = map_norm(c.A_tilde, c.target, X);
  c.norm_B = map_norm(c.B_tilde, X, c.target);
  c.product_lower = c.norm_A.lower * c.norm_B.lower;
  c.product_upper = c.norm_A.upper * c.norm_B.upper;
  double Kd = l1 ? (1 + cfg.eps) / (delta - eta) : 1 / (delta - eta);
  c.predicted_bound = predicted_bound(Kd, C, eta);
  c.timings["certify"] = seconds_since(t0);
  return c;
}

}  // namespace detail

// One retry at eta/10 when the Neumann step is not contractive.
inline FactorCertificate factor_pipeline(const OperatorMatrix& T, double delta, const FactorConfig& cfg = {}) {
  if (!(delta > 0) || !(cfg.eta > 0) || cfg.eta >= delta) fail(Errc::invalid_argument, "need 0 < eta < delta");
  try {
    return detail::factor_once(T, delta, cfg, cfg.eta);
  } catch (const Error& e) {
    if (e.code() != Errc::not_contractive) throw;
    auto c = detail::factor_once(T, delta, cfg, cfg.eta / 10);
    c.retries = 1;
    return c;
  }
}

// Recomputes the residual from the stored operators.
inline double recompute_residual(const FactorCertificate& c, const OperatorMatrix& T) {
  return map_norm(c.B_tilde * T.M * c.A_tilde - eye(c.target.size()), c.target, c.target).upper;
}

// ---------------------------------------------------------------- tensor lift

struct TensorCompression {
  Space line;                 // one-parameter L1 on the second axis
  OperatorMatrix compressed;  // P T P on [h_empty x h_I], read on the line
  Eigen::MatrixXd J;          // line -> plane, h_I -> h_empty x h_I
  Eigen::MatrixXd P;          // P_[0,1) x I on the plane
};

inline TensorCompression tensor_compress(const OperatorMatrix& T) {
  const Space& S = T.space;
  if (S.dims() != 2 || S.convention() != Convention::Dplus || !detail::is_l1(S.norm()))
    fail(Errc::unsupported, "tensor lift needs d = 2, convention D+ and the L1 norm");
  TensorCompression tc;
  tc.line = Space::make(NormSpec::Lp(1), 1, S.depth(), Convention::Dplus);
  tc.J = Eigen::MatrixXd::Zero(Eigen::Index(S.size()), Eigen::Index(tc.line.size()));
  for (std::size_t k = 0; k < tc.line.size(); ++k)
    tc.J(Eigen::Index(S.position({DyadicIndex::emptyset(), tc.line.index(k)[0]})), Eigen::Index(k)) = 1;
  tc.P = tc.J * tc.J.transpose();
  tc.compressed = {tc.line, tc.J.transpose() * T.M * tc.J};
  return tc;
}

inline FactorCertificate tensor_factor_l1l1(const OperatorMatrix& T, double delta, const FactorConfig& cfg = {}) {
  auto tc = tensor_compress(T);
  FactorCertificate line = factor_pipeline(tc.compressed, delta, cfg);
  FactorCertificate c = line;
  c.route = "tensor-" + line.route;
  c.ambient = T.space;
  c.A_tilde = tc.J * line.A_tilde;
  c.B_tilde = line.B_tilde * tc.J.transpose() * tc.P;
  c.residual = map_norm(c.B_tilde * T.M * c.A_tilde - eye(c.target.size()), c.target, c.target);
  c.norm_A = map_norm(c.A_tilde, c.target, T.space);
  c.norm_B = map_norm(c.B_tilde, T.space, c.target);
  c.norm_T = operator_norm(T, NormMode::estimate);
  c.product_lower = c.norm_A.lower * c.norm_B.lower;
  c.product_upper = c.norm_A.upper * c.norm_B.upper;
  c.extra["projection_norm"] = operator_norm(OperatorMatrix{T.space, tc.P}, NormMode::exact);
  c.extra["line_residual"] = line.residual;
  return c;
}

}  // namespace haarforge
