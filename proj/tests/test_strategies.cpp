#include <gtest/gtest.h>

#include <set>

#include "haarforge/strategies.hpp"

using namespace haarforge;

namespace {

// Puts the target coordinate itself into W, so the identity move never passes the decay test.
class TargetAdversary : public NullAdversary {
 public:
  AdversaryMove step1(int k, const GameTranscript& t) override {
    AdversaryMove m = NullAdversary::step1(k, t);
    m.W.push_back(t.space.unit(t.space.order[std::size_t(k)]));
    return m;
  }
};

// flips every sign on one round
class FlipRound : public NullAdversary {
 public:
  explicit FlipRound(int r) : r_(r) {}
  std::vector<int> step3(int k, const ResponderMove& m, const GameTranscript& t) override {
    auto s = NullAdversary::step3(k, m, t);
    if (k == r_)
      for (auto& x : s) x = -x;
    return s;
  }

 private:
  int r_;
};

GameSpace h1(int depth) { return GameSpace::of(Space::make(NormSpec::Hp(1), 1, depth, Convention::D)); }
GameSpace l1(int depth) { return GameSpace::of(Space::make(NormSpec::Lp(1), 1, depth, Convention::Dplus)); }

std::set<int> block_levels(const GameTranscript& t, std::size_t k) {
  std::set<int> out;
  for (auto c : t.rounds[k].resp.E) out.insert(t.space.level[c]);
  return out;
}

StepFunction block_function(const GameTranscript& t, std::size_t k) {
  const Space& s = *t.space.space;
  auto f = StepFunction::zeros(s.dims(), s.resolution());
  const auto& r = t.rounds[k];
  for (std::size_t i = 0; i < r.resp.E.size(); ++i) f += haar_function(s.index(r.resp.E[i]), s.resolution()) * double(r.adv.signs[i]);
  return f;
}

}  // namespace

TEST(Strategies, side_restriction_keeps_the_pairing) {
  Block b{{0, 1, 2, 3}, {0.25, 0.25, 0.25, 0.25}, {1, 1, 1, 1}, 1, 1};
  std::vector<int> part{1, 2, 2, 2};
  auto r = restrict_to_side(b, part);
  EXPECT_EQ(r.side, 2);
  EXPECT_EQ(r.E, (std::vector<std::size_t>{1, 2, 3}));
  EXPECT_DOUBLE_EQ(r.rho, 0.75);
  double s = 0;
  for (std::size_t i = 0; i < r.E.size(); ++i) s += r.lambda[i] * r.mu[i];
  EXPECT_NEAR(s, 1.0, 1e-15);
  // ties go to side 1
  EXPECT_EQ(restrict_to_side(b, {1, 1, 2, 2}).side, 1);
}

TEST(Strategies, gg_opening_is_a_full_level) {
  auto gs = h1(8);
  NullAdversary adv;
  GGStrategy g;
  auto t = run_game(gs, adv, g, {7, 1.0, 0.1});
  for (std::size_t k = 0; k < 7; ++k) {
    double s = 0;
    for (double v : t.rounds[k].resp.mu) EXPECT_EQ(v, 1.0);
    for (double v : t.rounds[k].resp.lambda) s += v;
    EXPECT_NEAR(s, 1.0, 1e-15);
  }
  // round 1 covers [0,1) with one level
  const auto& E = t.rounds[0].resp.E;
  auto lv = block_levels(t, 0);
  ASSERT_EQ(lv.size(), 1u);
  EXPECT_EQ(E.size(), std::size_t{1} << *lv.begin());
}

TEST(Strategies, gg_against_target_functionals) {
  auto gs = h1(9);
  TargetAdversary adv;
  GGStrategy g;
  auto t = run_game(gs, adv, g, {7, 1.0, 0.1});
  for (std::size_t k = 0; k < 7; ++k) {
    EXPECT_EQ(std::count(t.rounds[k].resp.E.begin(), t.rounds[k].resp.E.end(), gs.order[k]), 0);
    // strictly fresh levels
    for (std::size_t j = 0; j < k; ++j) EXPECT_GT(*block_levels(t, k).begin(), *block_levels(t, j).rbegin());
  }
  auto v = validate_gg(t, 0.1);
  EXPECT_TRUE(v.all()) << nlohmann::json(v).dump();
  EXPECT_FALSE(v.d.has_value());
  auto w = check_win(t, 500, 3);
  EXPECT_TRUE(w.all());
  EXPECT_NEAR(w.dual.min_ratio, 1.0, 1e-12);
  EXPECT_NEAR(w.dual.max_ratio, 1.0, 1e-12);
  EXPECT_LE(w.offdiag_max, 1e-12);
}

TEST(Strategies, gg_random_adversary_lp) {
  auto gs = GameSpace::of(Space::make(NormSpec::Lp(3), 1, 11, Convention::D));
  RandomFunctionalAdversary adv(9);
  GGStrategy g;
  auto t = run_game(gs, adv, g, {6, 1.0, 0.1});
  EXPECT_TRUE(validate_gg(t, 0.1).all());
  auto w = check_win(t, 300, 1);
  EXPECT_TRUE(w.proxy_pass);
  EXPECT_TRUE(w.sum_pass);
  EXPECT_TRUE(w.biorth_pass);
}

TEST(Strategies, gg_depth_exhausted) {
  auto gs = h1(3);
  TargetAdversary adv;
  GGStrategy g;
  try {
    run_game(gs, adv, g, {7, 1.0, 0.1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::depth_exhausted);
  }
}

TEST(Strategies, corrupted_sign_breaks_nesting) {
  auto gs = h1(8);
  TargetAdversary adv;
  GGStrategy g;
  auto t = run_game(gs, adv, g, {5, 1.0, 0.1});
  ASSERT_TRUE(validate_gg(t, 0.1).all());
  auto bad = t;
  bad.rounds[0].adv.signs[0] = -bad.rounds[0].adv.signs[0];
  auto v = validate_gg(bad, 0.1);
  EXPECT_FALSE(v.b);
  EXPECT_FALSE(v.all());
  EXPECT_FALSE(v.failures.empty());
}

TEST(Strategies, sign_flip_is_equivariant) {
  auto gs = h1(8);
  Eigen::VectorXd diag = Eigen::VectorXd::LinSpaced(Eigen::Index(gs.n), 0.5, 2.0);
  for (int r = 0; r < 4; ++r) {
    NullAdversary plain;
    FlipRound flip(r);
    GGStrategy a, b;
    auto ta = run_game(gs, plain, a, {4, 1.0, 0.1});
    auto tb = run_game(gs, flip, b, {4, 1.0, 0.1});
    auto k = std::size_t(r);
    EXPECT_EQ(ta.rounds[k].x, -tb.rounds[k].x);
    EXPECT_EQ(ta.rounds[k].xstar, -tb.rounds[k].xstar);
    double va = ta.rounds[k].xstar.dot(diag.cwiseProduct(ta.rounds[k].x));
    double vb = tb.rounds[k].xstar.dot(diag.cwiseProduct(tb.rounds[k].x));
    EXPECT_NEAR(std::abs(va), std::abs(vb), 1e-14);
  }
}

TEST(Strategies, l1_trivial_partition_is_isometric) {
  auto gs = l1(12);
  for (int which = 0; which < 2; ++which) {
    NullAdversary null;
    RandomFunctionalAdversary rnd(4);
    Adversary& adv = which ? static_cast<Adversary&>(rnd) : static_cast<Adversary&>(null);
    L1Strategy s;
    auto t = run_game(gs, adv, s, {7, 1.0, 0.1});
    auto v = validate_gg(t, 0.1);
    EXPECT_TRUE(v.all()) << nlohmann::json(v).dump();
    ASSERT_TRUE(v.d.has_value());
    EXPECT_TRUE(*v.d);
    auto w = check_win(t, 1000, 2);
    EXPECT_TRUE(w.all());
    EXPECT_NEAR(w.dual.min_ratio, 1.0, 1e-12);
    EXPECT_NEAR(w.dual.max_ratio, 1.0, 1e-12);
    EXPECT_GE(w.primal.min_ratio, 1 / std::sqrt(1.1));
    EXPECT_LE(w.primal.max_ratio, std::sqrt(1.1));
    // m_k strictly increasing
    auto info = s.info();
    for (std::size_t k = 1; k < 7; ++k) EXPECT_GT(info["rounds"][k]["layer"], info["rounds"][k - 1]["layer"]);
    for (const auto& r : t.rounds) EXPECT_NEAR(r.resp.lambda_mu(), 1.0, 1e-12);
  }
}

TEST(Strategies, l1_parity_partition) {
  auto gs = l1(12);
  NullAdversary adv(0.1, PartitionPolicy::parity);
  L1Strategy strict;
  try {
    run_game(gs, adv, strict, {7, 1.0, 0.1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_TRUE(e.code() == Errc::depth_exhausted || e.code() == Errc::persistence_unattainable);
  }
  L1Config cfg;
  cfg.strict = false;
  L1Strategy report(cfg);
  auto t = run_game(gs, adv, report, {7, 1.0, 0.1});
  auto w = check_win(t, 300, 1);
  // the sup side stays isometric; the L1 side is only reported
  EXPECT_NEAR(w.dual.min_ratio, 1.0, 1e-12);
  EXPECT_NEAR(w.dual.max_ratio, 1.0, 1e-12);
  EXPECT_TRUE(w.biorth_pass);
  EXPECT_TRUE(w.sum_pass);
  auto info = report.info();
  EXPECT_EQ(info["rounds"].size(), 7u);
  EXPECT_LT(info["collection"]["persistent_measure"].get<double>(), 0.5);
  for (const auto& r : t.rounds)
    for (auto c : r.resp.E) EXPECT_EQ(t.partition[c], r.resp.side);
}

TEST(Strategies, band_search_matches_brute_force) {
  // persistent measure of the chosen bands, recomputed from the layers
  Rng rng(2);
  for (int trial = 0; trial < 5; ++trial) {
    int depth = 6;
    std::vector<int> side(std::size_t{1} << (depth + 1), 0);
    for (std::size_t i = 1; i < side.size(); ++i) side[i] = 1 + int(rng() % 2);
    auto b = banded_collection(side, depth, 0.5);
    std::vector<DyadicIndex> all;
    for (const auto& L : b.layers) all.insert(all.end(), L.begin(), L.end());
    IntervalCollection A(all, depth);
    auto g = generations(A);
    ASSERT_EQ(g.layers.size(), b.layers.size());
    EXPECT_EQ(g.persistent, b.persistent);
    EXPECT_GE(b.persistent_measure, 0.5);
    for (const auto& I : all) EXPECT_EQ(side[std::size_t(interval_index(I))], b.side);
  }
}

TEST(Strategies, gg_json_system) {
  auto gs = l1(8);
  NullAdversary adv;
  L1Strategy s;
  auto t = run_game(gs, adv, s, {3, 1.0, 0.1});
  nlohmann::json j = validate_gg(t, 0.1);
  ASSERT_EQ(j["system"].size(), 3u);
  for (const auto& e : j["system"]) {
    EXPECT_TRUE(e.contains("H"));
    EXPECT_EQ(e["signs"].size(), e["H"].size());
    EXPECT_EQ(e["scale"], 1.0);
  }
  EXPECT_EQ(j["pass"], true);
}

TEST(Strategies, hphq_blocks) {
  for (auto [p, q] : {std::pair{2.0, 2.0}, std::pair{1.5, 3.0}}) {
    auto gs = GameSpace::of(Space::make(NormSpec::HpHq(p, q), 2, 6, Convention::D));
    const Space& s = *gs.space;
    TargetAdversary adv;
    HpHqStrategy h;
    auto t = run_game(gs, adv, h, {10, 1.0, 0.1});
    for (std::size_t k = 0; k < t.rounds.size(); ++k) {
      const auto& R = s.index(gs.order[k]);
      const auto& m = t.rounds[k].resp;
      double sum = 0;
      for (std::size_t i = 0; i < m.E.size(); ++i) {
        const auto& KL = s.index(m.E[i]);
        double area = KL[0].length() * KL[1].length() / (R[0].length() * R[1].length());
        EXPECT_NEAR(m.lambda[i] * m.mu[i], area, 1e-14);
        sum += m.lambda[i] * m.mu[i];
      }
      EXPECT_NEAR(sum, 1.0, 1e-12);
    }
    auto w = check_win(t, 100, 5);
    EXPECT_TRUE(w.biorth_pass);
    if (p == 2.0 && q == 2.0) {
      EXPECT_TRUE(w.all()) << nlohmann::json(w).dump();
    }
  }
}

TEST(Strategies, hphq_opening_collection) {
  auto gs = GameSpace::of(Space::make(NormSpec::HpHq(2, 2), 2, 6, Convention::D));
  const Space& s = *gs.space;
  TargetAdversary adv;
  HpHqStrategy h;
  auto t = run_game(gs, adv, h, {4, 1.0, 0.1});
  // the first rectangle with a proper first factor is [0,1/2) x [0,1)
  std::size_t k = 0;
  while (s.index(gs.order[k])[0].level == 0) ++k;
  ASSERT_LT(k, t.rounds.size());
  auto half = DyadicIndex::interval(1, 1), top = DyadicIndex::interval(0, 1);
  EXPECT_EQ(s.index(gs.order[k])[0], half);
  for (auto c : t.rounds[k].resp.E) {
    EXPECT_TRUE(half.contains(s.index(c)[0]));
    EXPECT_EQ(s.index(c)[1], top);
  }
}

TEST(Strategies, mixed_blocks_have_haar_modulus) {
  auto gs = GameSpace::of(Space::make(NormSpec::Triple({2.0, 3.0}), 2, 5, Convention::D));
  const Space& s = *gs.space;
  TargetAdversary adv;
  MixedLpStrategy m;
  auto t = run_game(gs, adv, m, {8, 1.0, 0.1});
  for (std::size_t k = 0; k < t.rounds.size(); ++k) {
    auto b = block_function(t, k);
    auto h = haar_function(s.index(gs.order[k]), s.resolution());
    for (std::size_t c = 0; c < b.cells(); ++c) EXPECT_EQ(std::abs(b.values[c]), std::abs(h.values[c]));
  }
  auto w = check_win(t, 300, 2);
  EXPECT_NEAR(w.primal.min_ratio, 1.0, 1e-12);
  EXPECT_NEAR(w.primal.max_ratio, 1.0, 1e-12);
  EXPECT_TRUE(w.all());
}

TEST(Strategies, mixed_in_one_dimension_is_gg_shaped) {
  auto gs = GameSpace::of(Space::make(NormSpec::Lp(2), 1, 9, Convention::D));
  TargetAdversary adv;
  MixedLpStrategy m;
  auto t = run_game(gs, adv, m, {7, 1.0, 0.1});
  for (std::size_t k = 0; k < 7; ++k) {
    const auto& I = gs.space->index(gs.order[k])[0];
    auto lv = block_levels(t, k);
    ASSERT_EQ(lv.size(), 1u);
    // the whole level inside I, with lambda = (|K|/|I|)^{1/2}
    EXPECT_EQ(t.rounds[k].resp.E.size(), std::size_t{1} << (*lv.begin() - I.level));
    double ratio = std::ldexp(1.0, I.level - *lv.begin());
    for (double l : t.rounds[k].resp.lambda) EXPECT_NEAR(l, std::sqrt(ratio), 1e-15);
  }
  EXPECT_TRUE(check_win(t, 200, 1).all());
}

TEST(Strategies, single_part_sum_matches_bare_strategy) {
  auto s = Space::make(NormSpec::Hp(1), 1, 8, Convention::D);
  SumSpace ss{{s}, 2};
  std::vector<std::unique_ptr<Strategy>> parts;
  parts.push_back(std::make_unique<GGStrategy>());
  SumStrategy sum(std::move(parts));
  GGStrategy bare;
  TargetAdversary a1, a2;
  auto ts = run_game(GameSpace::of(ss), a1, sum, {6, 1.0, 0.1});
  auto tb = run_game(GameSpace::of(s), a2, bare, {6, 1.0, 0.1});
  for (std::size_t k = 0; k < 6; ++k) {
    EXPECT_EQ(ts.rounds[k].resp.E, tb.rounds[k].resp.E);
    EXPECT_EQ(ts.rounds[k].resp.lambda, tb.rounds[k].resp.lambda);
    EXPECT_EQ(ts.rounds[k].x, tb.rounds[k].x);
  }
}

TEST(Strategies, two_h1_copies) {
  auto s = Space::make(NormSpec::Hp(1), 1, 9, Convention::D);
  SumSpace ss{{s, s}, 2};
  auto gs = GameSpace::of(ss);
  std::vector<std::unique_ptr<Strategy>> parts;
  parts.push_back(std::make_unique<GGStrategy>());
  parts.push_back(std::make_unique<GGStrategy>());
  SumStrategy sum(std::move(parts));
  TargetAdversary adv;
  auto t = run_game(gs, adv, sum, {8, 1.0, 0.1});
  auto w = check_win(t, 300, 1);
  EXPECT_TRUE(w.all());
  // the sum proxy never exceeds the proxy seen by the owning part
  for (std::size_t k = 1; k < t.rounds.size(); ++k) {
    auto [part, local] = gs.locate(gs.order[k]);
    (void)local;
    auto off = Eigen::Index(ss.offset(part)), len = Eigen::Index(s.size());
    std::vector<Eigen::VectorXd> W;
    for (const auto& g : t.rounds[k].adv.W)
      if (g.segment(off, len).cwiseAbs().maxCoeff() > 0) W.push_back(g.segment(off, len));
    if (W.empty()) continue;
    Eigen::VectorXd x = t.rounds[k].x.segment(off, len);
    auto part_gs = GameSpace::of(s);
    EXPECT_LE(dist_proxy(t.rounds[k].x, t.rounds[k].adv.W, gs.dual_norm), dist_proxy(x, W, part_gs.dual_norm) + 1e-12);
  }
}

TEST(Strategies, wrong_space_is_rejected) {
  NullAdversary adv;
  GGStrategy g;
  L1Strategy l;
  HpHqStrategy h;
  auto expect_unsupported = [&](const GameSpace& gs, Strategy& s) {
    try {
      run_game(gs, adv, s, {1, 1.0, 0.1});
      ADD_FAILURE();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::unsupported);
    }
  };
  expect_unsupported(l1(4), g);
  expect_unsupported(h1(4), l);
  expect_unsupported(h1(4), h);
}
