// One PASS/FAIL line per acceptance criterion.
#include <chrono>
#include <cstdio>
#include <functional>
#include <set>

#include "haarforge/factor.hpp"

using namespace haarforge;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
  std::string digest;  // serialized results of the randomized parts
};

void need(Outcome& o, bool ok, const std::string& what) {
  if (!ok) {
    o.pass = false;
    if (o.detail.size() < 300) o.detail += " [" + what + "]";
  }
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

DyadicIndex iv(int j, std::int64_t i) { return DyadicIndex::interval(j, i); }

// ---------------------------------------------------------------- 1

Outcome orders() {
  Outcome o;
  std::set<std::int64_t> seen;
  for (int j = 0; j <= 10; ++j)
    for (std::int64_t i = 1; i <= (std::int64_t{1} << j); ++i) {
      auto n = interval_index(iv(j, i));
      need(o, n == (std::int64_t{1} << j) + i - 1 && interval_from_index(n) == iv(j, i), "interval_index " + iv(j, i).str());
      seen.insert(n);
    }
  need(o, seen.size() == 2047 && *seen.rbegin() == 2047, "interval_index range");

  std::set<std::int64_t> keys;
  for (std::int64_t m = 0; m < 64; ++m)
    for (std::int64_t n = 0; n < 64; ++n) {
      keys.insert(pairing(m, n));
      need(o, unpairing(pairing(m, n)) == std::pair<std::int64_t, std::int64_t>(m, n), "unpairing");
    }
  need(o, keys.size() == 4096 && *keys.rbegin() == 4095, "pairing bijective on [0,64)^2");
  need(o, pairing(0, 0) == 0, "origin first");
  for (std::int64_t k = 1; k < 63; ++k) {
    for (std::int64_t m = 0; m < k; ++m) need(o, pairing(m, k) == k * k + m, "column k before row k");
    need(o, pairing(k, 0) == pairing(k - 1, k) + 1, "row k follows column k");
    for (std::int64_t n = 0; n <= k; ++n) need(o, pairing(k, n) == k * k + k + n, "row k in order");
    need(o, pairing(0, k + 1) == pairing(k, k) + 1, "next shell follows the diagonal");
  }

  std::set<std::int64_t> ranks, first;
  for (int m = 0; m <= 3; ++m)
    for (int n = 0; n <= 3; ++n)
      for (std::int64_t i = 1; i <= (1 << m); ++i)
        for (std::int64_t j = 1; j <= (1 << n); ++j) {
          auto R = rect({iv(m, i), iv(n, j)});
          auto r = rect_index(R);
          ranks.insert(r);
          need(o, rect_from_index(r) == R, "rect_from_index");
          if (m <= 2 && n <= 2) first.insert(r);
        }
  need(o, ranks.size() == 225 && *ranks.rbegin() == 224, "rect_index bijective");
  need(o, first.size() == 49 && *first.begin() == 0 && *first.rbegin() == 48, "first 49 rectangles");
  o.detail = "2047 intervals, 4096 pairs, 49 leading rectangles" + o.detail;
  return o;
}

// ---------------------------------------------------------------- 2

double max_diff(const StepFunction& a, const StepFunction& b) {
  double w = 0;
  for (std::size_t c = 0; c < a.cells(); ++c) w = std::max(w, std::abs(a.values[c] - b.values[c]));
  return w;
}

Outcome round_trip() {
  Outcome o;
  Rng rng(101);
  double worst = 0;
  for (int t = 0; t < 1000; ++t) {
    auto f = StepFunction::zeros(1, 9);
    for (double& v : f.values) v = uniform(rng, -1, 1);
    worst = std::max(worst, max_diff(synthesize(analyze(f, Convention::Dplus), 9), f));
  }
  for (int t = 0; t < 1000; ++t) {
    auto f = StepFunction::zeros(2, 5);
    for (double& v : f.values) v = uniform(rng, -1, 1);
    // two-parameter spaces use the mean-zero convention: strip the empty symbol first
    f = synthesize(analyze(f, Convention::D, 1e300), 5);
    worst = std::max(worst, max_diff(synthesize(analyze(f, Convention::D), 5), f));
  }
  need(o, worst <= 1e-12, "round trip");
  o.detail = "max error " + num(worst);
  o.digest = num(worst);
  return o;
}

// ---------------------------------------------------------------- 3

double james_enumerate(const std::vector<double>& a) {
  std::size_t n = a.size();
  double best = 0;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << (n - 1)); ++mask) {
    double total = 0, blk = 0;
    for (std::size_t i = 0; i < n; ++i) {
      blk += a[i];
      if (i + 1 == n || (mask >> i) & 1) total += blk * blk, blk = 0;
    }
    best = std::max(best, total);
  }
  return std::sqrt(best);
}

Outcome norm_identities() {
  Outcome o;
  Rng rng(8);
  double tm = 0, jd = 0;
  for (int t = 0; t < 300; ++t) {
    int n = 1 + int(rng() % 5);
    auto f = StepFunction::zeros(2, n);
    for (double& v : f.values) v = uniform(rng, -1, 1);
    f = synthesize(analyze(f, Convention::D, 1e300), n);
    tm = std::max(tm, std::abs(norm_eval(f, NormSpec::Triple({2, 2})) - norm_eval(f, NormSpec::Mixed({2, 2}))));
  }
  for (int n = 1; n <= 12; ++n)
    for (int t = 0; t < 30; ++t) {
      std::vector<double> a(std::size_t(n), 0.0);
      for (double& x : a) x = t % 2 ? gaussian(rng) : double(rademacher(rng));
      jd = std::max(jd, std::abs(james_norm(a) - james_enumerate(a)));
    }
  need(o, tm <= 1e-12, "Triple(2,2) = Mixed(2,2)");
  need(o, jd <= 1e-12, "James DP = enumeration");
  need(o, std::abs(james_norm({1, 1}) - 2) <= 1e-15 && std::abs(james_enumerate({1, 1}) - 2) <= 1e-15, "James (1,1)");
  need(o, std::abs(james_norm({1, -1}) - std::sqrt(2.0)) <= 1e-15 && std::abs(james_enumerate({1, -1}) - std::sqrt(2.0)) <= 1e-15,
       "James (1,-1)");
  o.detail = "triple-mixed " + num(tm) + ", james " + num(jd) + o.detail;
  o.digest = num(tm) + num(jd);
  return o;
}

// ---------------------------------------------------------------- 4

Outcome sandwich() {
  Outcome o;
  int held = 0;
  double worst_low = kInf, worst_high = kInf;
  nlohmann::json runs = nlohmann::json::array();
  for (int t = 0; t < 100; ++t) {
    auto s = Space::make(NormSpec::Lp(1), 1, 1 + t % 6, Convention::Dplus);
    auto r = sandwich_check(s, random_entries(s, -1, 1, false, split_seed(4, std::uint64_t(t))));
    held += r.holds();
    worst_low = std::min(worst_low, r.exact - 0.25 * r.w_norm);
    worst_high = std::min(worst_high, r.w_norm + 3 * r.sup - r.exact);
    runs.push_back(r);
  }
  need(o, held == 100, "sandwich");
  o.detail = std::to_string(held) + "/100, slack " + num(worst_low) + " / " + num(worst_high) + o.detail;
  o.digest = runs.dump();
  return o;
}

// ---------------------------------------------------------------- 5

Outcome gg_systems() {
  Outcome o;
  nlohmann::json all = nlohmann::json::array();
  double pmin = kInf, pmax = 0, dual_dev = 0, off = 0;
  struct Case {
    const char* name;
    Space s;
    bool random;
  };
  std::vector<Case> cases{{"h1/null", Space::make(NormSpec::Hp(1), 1, 12, Convention::D), false},
                          {"h1/random", Space::make(NormSpec::Hp(1), 1, 12, Convention::D), true},
                          {"l1/null", Space::make(NormSpec::Lp(1), 1, 12, Convention::Dplus), false},
                          {"l1/random", Space::make(NormSpec::Lp(1), 1, 12, Convention::Dplus), true}};
  for (auto& c : cases) {
    auto gs = GameSpace::of(c.s);
    NullAdversary null(0.1);
    RandomFunctionalAdversary rnd(4, 0.1);
    Adversary& adv = c.random ? static_cast<Adversary&>(rnd) : static_cast<Adversary&>(null);
    std::unique_ptr<Strategy> strat;
    if (c.s.convention() == Convention::Dplus) strat = std::make_unique<L1Strategy>();
    else strat = std::make_unique<GGStrategy>();
    GameTranscript t;
    try {
      t = run_game(gs, adv, *strat, {7, 1.0, 0.1});
    } catch (const Error& e) {
      need(o, false, std::string(c.name) + ": " + e.what());
      continue;
    }
    auto v = validate_gg(t, 0.1);
    need(o, v.all(), std::string(c.name) + " (a)-(d)");
    if (c.s.convention() == Convention::Dplus) need(o, v.d.has_value() && *v.d, std::string(c.name) + " (d)");
    auto w = check_win(t, 1000, 2);
    need(o, w.all(), std::string(c.name) + " win checks");
    dual_dev = std::max({dual_dev, std::abs(w.dual.min_ratio - 1), std::abs(w.dual.max_ratio - 1)});
    off = std::max(off, w.offdiag_max);
    for (const auto& r : t.rounds) need(o, std::abs(r.resp.lambda_mu() - 1) < 0.1, std::string(c.name) + " sum lambda mu");
    if (c.s.convention() == Convention::Dplus) {
      pmin = std::min(pmin, w.primal.min_ratio);
      pmax = std::max(pmax, w.primal.max_ratio);
    }
    nlohmann::json j = t;
    all.push_back({{"transcript", j}, {"gg", v}, {"win", w}});
  }
  need(o, dual_dev <= 1e-12, "Sup probe ratio");
  need(o, pmin >= 1 / std::sqrt(1.1) && pmax <= std::sqrt(1.1), "L1 probe window");
  need(o, off <= 1e-12, "biorthogonality");
  o.detail = "L1 primal [" + num(pmin) + ", " + num(pmax) + "], dual dev " + num(dual_dev) + ", offdiag " + num(off) + o.detail;
  o.digest = all.dump();
  return o;
}

// ---------------------------------------------------------------- 6

Outcome sign_selection() {
  Outcome o;
  Rng rng(6);
  double slack = kInf;
  std::string digest;
  for (int t = 0; t < 100; ++t) {
    std::size_t n = 1 + std::size_t(t % 12);
    std::vector<double> l(n), m(n);
    for (auto& v : l) v = uniform(rng, 0.2, 1);
    for (auto& v : m) v = uniform(rng, 0.2, 1);
    double s = 0;
    for (std::size_t i = 0; i < n; ++i) s += l[i] * m[i];
    for (auto& v : m) v /= s;
    int sigma = t % 2 ? -1 : 1;
    Eigen::MatrixXd a(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      for (Eigen::Index j = 0; j < a.cols(); ++j) a(i, j) = sigma * (i == j ? uniform(rng, 0.3, 1) : uniform(rng, -0.5, 0.5));
    auto d = sign_select(a, l, m, 0.01, 0.3, SignMethod::derandomized);
    // enumeration oracle over all 2^n sign vectors
    double mean = 0, best = 0;
    for (std::uint64_t bits = 0; bits < (std::uint64_t{1} << n); ++bits) {
      double v = 0;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
          v += ((bits >> i) & 1 ? -1 : 1) * ((bits >> j) & 1 ? -1 : 1) * m[i] * l[j] * a(Eigen::Index(i), Eigen::Index(j));
      mean += v;
      best = std::max(best, std::abs(v));
    }
    mean /= double(std::uint64_t{1} << n);
    double diag = 0;
    for (std::size_t i = 0; i < n; ++i) diag += l[i] * m[i] * a(Eigen::Index(i), Eigen::Index(i));
    need(o, std::abs(mean - diag) <= 1e-12, "Rademacher mean is the diagonal");
    need(o, sigma * d.value >= sigma * diag - 1e-12, "derandomized below the mean");
    need(o, std::abs(d.value) <= best + 1e-12, "derandomized above the enumeration maximum");
    need(o, std::abs(d.value) >= (1 - 0.01) * 0.3, "value below (1-eta) delta");
    slack = std::min(slack, sigma * (d.value - diag));
    for (int e : d.signs) digest += e > 0 ? '+' : '-';
    digest += ' ';
  }
  o.detail = "min gain over the mean " + num(slack) + o.detail;
  o.digest = digest;
  return o;
}

// ---------------------------------------------------------------- 7

std::string certificate_digest(const FactorCertificate& c) {
  nlohmann::json j = c;
  j.erase("timings");
  return j.dump();
}

Outcome end_to_end() {
  Outcome o;
  Space X = Space::make(NormSpec::Lp(1), 1, 10, Convention::Dplus);
  OperatorMatrix T = build_multiplier(X, random_entries(X, 0.3, 1, true, 7));
  FactorConfig cfg;
  cfg.eta = 0.01;
  cfg.seed = 7;
  auto c = factor_pipeline(T, 0.3, cfg);
  need(o, c.residual.exact && c.residual.upper <= 0.05, "residual");
  need(o, c.norm_A.exact && c.norm_B.exact && c.product_upper <= 1.1 / 0.3, "norm product");
  need(o, std::abs(recompute_residual(c, T) - c.residual.upper) <= 1e-10, "residual recomputation");
  auto s = factor_pipeline({X, 0.3 * eye(X.size())}, 0.3, cfg);
  need(o, std::abs(s.product_upper - 1 / 0.3) <= 1e-9, "delta I");
  o.detail = "residual " + num(c.residual.upper) + ", norm_product " + num(c.product_upper) + " (target dim " +
             std::to_string(c.target.size()) + "), delta I product " + num(s.product_upper) + o.detail;
  o.digest = certificate_digest(c) + certificate_digest(s);
  return o;
}

// ---------------------------------------------------------------- 8

Outcome p2_pipeline() {
  Outcome o;
  Space X = Space::make(NormSpec::Lp(2), 1, 8, Convention::D);
  OperatorMatrix T = noisy_operator(X, 0.3, 1, 1e-3, 3);
  FactorConfig cfg;
  cfg.eta = 0.01;
  auto c = factor_pipeline(T, 0.3, cfg);
  need(o, c.residual.exact && c.residual.upper <= 0.05, "residual");
  need(o, c.norm_A.exact && c.norm_B.exact && c.product_upper <= c.predicted_bound, "predicted bound");
  o.detail = "residual " + num(c.residual.upper) + ", norm_product " + num(c.product_upper) + " <= " + num(c.predicted_bound) + o.detail;
  o.digest = certificate_digest(c);
  return o;
}

// ---------------------------------------------------------------- 9

Outcome tensor_lift() {
  Outcome o;
  Space S = Space::make(NormSpec::Lp(1), 2, 4, Convention::Dplus);
  auto tc = tensor_compress(OperatorMatrix::identity(S));
  auto pn = operator_norm(OperatorMatrix{S, tc.P}, NormMode::exact);
  need(o, pn.exact && pn.upper == 1.0, "projection norm");
  double worst = 0;
  std::string digest;
  for (std::uint64_t seed : {1, 2, 3}) {
    OperatorMatrix T = build_multiplier(S, random_entries(S, 0.3, 1, true, seed));
    auto c = tensor_factor_l1l1(T, 0.3);
    need(o, c.product_upper <= 1.1 / 0.3, "norm product");
    need(o, c.residual.upper <= 0.05, "residual");
    worst = std::max(worst, c.product_upper);
    digest += certificate_digest(c);
  }
  o.detail = "||P|| = " + num(pn.upper) + ", worst norm_product " + num(worst) + o.detail;
  o.digest = digest;
  return o;
}

struct Criterion {
  int id;
  const char* name;
  double budget;  // seconds
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  std::vector<Criterion> cs{{1, "orders", 1, orders},
                            {2, "transform round trip", 5, round_trip},
                            {3, "norm identities", 5, norm_identities},
                            {4, "sandwich inequality", 30, sandwich},
                            {5, "GG systems", 60, gg_systems},
                            {6, "sign selection", 10, sign_selection},
                            {7, "end-to-end factorization", 120, end_to_end},
                            {8, "p = 2 pipeline", 60, p2_pipeline},
                            {9, "tensor lift", 60, tensor_lift}};
  bool all = true;
  std::vector<std::string> digests;
  for (auto& c : cs) {
    auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("error: ") + e.what();
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs >= c.budget) o.pass = false, o.detail += " [over the " + num(c.budget) + " s budget]";
    std::printf("%s %d %s: %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs);
    std::fflush(stdout);
    all = all && o.pass;
    digests.push_back(o.digest);
  }
  // 10: rerun every randomized criterion and compare serialized results
  bool same = true;
  std::string which;
  auto t0 = std::chrono::steady_clock::now();
  for (std::size_t k = 1; k < cs.size(); ++k) {
    std::string again;
    try {
      again = cs[k].run().digest;
    } catch (const std::exception&) {
      again = "error";
    }
    if (again != digests[k]) same = false, which += " " + std::to_string(cs[k].id);
  }
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("%s 10 determinism: %s (%.2f s)\n", same ? "PASS" : "FAIL",
              same ? "criteria 2-9 rerun byte-identically" : ("differs in" + which).c_str(), secs);
  all = all && same;
  return all ? 0 : 1;
}
