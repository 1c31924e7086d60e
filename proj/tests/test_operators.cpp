#include <gtest/gtest.h>

#include "haarforge/operators.hpp"

using namespace haarforge;

namespace {

DyadicIndex iv(int j, std::int64_t i) { return DyadicIndex::interval(j, i); }

MultiplierEntries random_entries(Rng& rng, const Space& s, double lo, double hi) {
  MultiplierEntries c;
  for (const auto& idx : s.basis()) c[idx] = uniform(rng, lo, hi);
  return c;
}

// all descending chains (not necessarily consecutive) by explicit recursion over subsets
double chains_enumerate(const MultiplierEntries& c, const DyadicIndex& root, int depth) {
  std::vector<DyadicIndex> nodes;
  if (root.empty) nodes.push_back(root);
  for (int j = 0; j <= depth; ++j)
    for (std::int64_t i = 1; i <= (std::int64_t{1} << j); ++i)
      if (root.contains(iv(j, i))) nodes.push_back(iv(j, i));
  double best = 0;
  auto go = [&](auto&& self, const DyadicIndex& cur, double acc) -> void {
    best = std::max(best, acc);
    for (const auto& N : nodes)
      if (!(N == cur) && cur.contains(N)) self(self, N, acc + std::abs(c.at({cur}) - c.at({N})));
  };
  for (const auto& start : nodes) go(go, start, 0.0);
  return best;
}

}  // namespace

TEST(Operators, multiplier_examples) {
  auto s = Space::make(NormSpec::Lp(1), 1, 3, Convention::Dplus);
  auto I = build_multiplier(s, constant_entries(s, 1.0));
  EXPECT_EQ(I.M, OperatorMatrix::identity(s).M);
  auto D = build_multiplier(s, constant_entries(s, 0.4));
  EXPECT_EQ(D.M.diagonal().minCoeff(), 0.4);
  MultiplierEntries partial{{IndexTuple{iv(0, 1)}, 1.0}};
  EXPECT_THROW(build_multiplier(s, partial), Error);
}

TEST(Operators, sign_multiplier_is_hphq_isometry) {
  Rng rng(4);
  auto s = Space::make(NormSpec::HpHq(1.5, 3), 2, 3, Convention::D);
  MultiplierEntries gamma;
  for (const auto& idx : s.basis()) gamma[idx] = rademacher(rng);
  auto M = build_multiplier(s, gamma);
  for (int t = 0; t < 20; ++t) {
    Eigen::VectorXd x = Eigen::VectorXd::Random(Eigen::Index(s.size()));
    EXPECT_NEAR(s.norm_of(M.M * x), s.norm_of(x), 1e-12);
  }
}

TEST(Operators, bounded_multiplier_shrinks_square_function) {
  Rng rng(5);
  auto s = Space::make(NormSpec::HpHq(2, 1.5), 2, 3, Convention::D);
  auto M = build_multiplier(s, random_entries(rng, s, -1, 1));
  for (int t = 0; t < 20; ++t) {
    Eigen::VectorXd x = Eigen::VectorXd::Random(Eigen::Index(s.size()));
    auto Sx = square_function(s.haar(x), s.resolution());
    auto SMx = square_function(s.haar(M.M * x), s.resolution());
    for (std::size_t c = 0; c < Sx.cells(); ++c) EXPECT_LE(SMx.values[c], Sx.values[c] + 1e-15);
  }
}

TEST(Operators, chain_variation_examples) {
  auto s = Space::make(NormSpec::Lp(1), 1, 3, Convention::Dplus);
  EXPECT_EQ(chain_variation(constant_entries(s, 0.7), DyadicIndex::emptyset()), 0.0);
  auto c = constant_entries(s, 0.5);
  c[{DyadicIndex::emptyset()}] = 1.0;
  EXPECT_DOUBLE_EQ(chain_variation(c, DyadicIndex::emptyset()), 0.5);
  EXPECT_DOUBLE_EQ(chains_enumerate(c, DyadicIndex::emptyset(), 3), 0.5);
}

TEST(Operators, chain_variation_matches_enumeration) {
  Rng rng(6);
  for (int t = 0; t < 30; ++t) {
    int depth = 1 + t % 4;
    auto s = Space::make(NormSpec::Lp(1), 1, depth, Convention::Dplus);
    auto c = random_entries(rng, s, -1, 1);
    EXPECT_NEAR(chain_variation(c, DyadicIndex::emptyset()), chains_enumerate(c, DyadicIndex::emptyset(), depth), 1e-12);
    EXPECT_NEAR(chain_variation(c, iv(1, 2)), chains_enumerate(c, iv(1, 2), depth), 1e-12);
  }
}

TEST(Operators, sandwich_identity) {
  auto s = Space::make(NormSpec::Lp(1), 1, 3, Convention::Dplus);
  auto r = sandwich_check(s, constant_entries(s, 1.0));
  EXPECT_EQ(r.w_norm, 0.0);
  EXPECT_NEAR(r.exact, 1.0, 1e-14);
  EXPECT_TRUE(r.holds());
}

TEST(Operators, sandwich_random_multipliers) {
  Rng rng(7);
  for (int t = 0; t < 30; ++t) {
    auto s = Space::make(NormSpec::Lp(1), 1, 1 + t % 6, Convention::Dplus);
    EXPECT_TRUE(sandwich_check(s, random_entries(rng, s, -1, 1)).holds());
  }
}

TEST(Operators, apply_compose_adjoint) {
  Rng rng(8);
  auto s = Space::make(NormSpec::Lp(1), 1, 3, Convention::Dplus);
  HaarCoefficients x{1, {}};
  x.add({iv(1, 2)}, 0.5);
  x.add({DyadicIndex::emptyset()}, -2);
  auto y = apply(OperatorMatrix::identity(s), x);
  for (const auto& [k, v] : x.entries) EXPECT_NEAR(y.get(k), v, 1e-15);

  auto D = build_multiplier(s, random_entries(rng, s, -1, 1));
  EXPECT_EQ(adjoint(D).M, D.M);

  OperatorMatrix S{s, Eigen::MatrixXd::Random(16, 16)}, T{s, Eigen::MatrixXd::Random(16, 16)};
  Eigen::VectorXd v = Eigen::VectorXd::Random(16);
  EXPECT_LE((compose(S, T).M * v - S.M * (T.M * v)).cwiseAbs().maxCoeff(), 1e-12);

  HaarCoefficients far{1, {}};
  far.add({iv(5, 1)}, 1.0);
  EXPECT_THROW(apply(T, far), Error);
}

TEST(Operators, adjoint_duality_pairing) {
  auto s = Space::make(NormSpec::Lp(1), 1, 3, Convention::Dplus);
  OperatorMatrix T{s, Eigen::MatrixXd::Random(16, 16)};
  auto Ta = adjoint(T);
  for (int t = 0; t < 20; ++t) {
    Eigen::VectorXd x = Eigen::VectorXd::Random(16), g = Eigen::VectorXd::Random(16);
    double lhs = pairing(s.function(T.M * x), s.functional(g));
    double rhs = pairing(s.function(x), Ta.space.function(Ta.M * g));
    EXPECT_NEAR(lhs, rhs, 1e-12);
  }
}

TEST(Operators, raw_haar_reweighting) {
  auto s = Space::make(NormSpec::Lp(1), 1, 2, Convention::Dplus);
  OperatorMatrix T{s, Eigen::MatrixXd::Random(8, 8)};
  auto R = raw_haar_matrix(T);
  for (std::size_t m = 0; m < 8; ++m)
    for (std::size_t k = 0; k < 8; ++k) {
      auto hk = haar_function(s.index(k), 3);
      auto Thk = s.function(T.M * s.coords(hk));
      double expect = pairing(haar_function(s.index(m), 3), Thk) / s.support(m);
      EXPECT_NEAR(R(Eigen::Index(m), Eigen::Index(k)), expect, 1e-12);
    }
}

TEST(Operators, direct_sum_examples) {
  auto a = Space::make(NormSpec::Lp(2), 1, 2, Convention::D);
  auto b = Space::make(NormSpec::Hp(2), 1, 3, Convention::D);
  auto Z = direct_sum({OperatorMatrix::identity(a), OperatorMatrix::identity(b)}, 2);
  auto n = operator_norm(Z, 300, 1);
  EXPECT_NEAR(n.lower, 1.0, 1e-12);
  EXPECT_NEAR(n.upper, 1.0, 1e-12);

  OperatorMatrix A{a, OperatorMatrix::identity(a).M * 0.5}, B{b, OperatorMatrix::identity(b).M * 1.5};
  auto Y = direct_sum({A, B}, 2);
  auto m = operator_norm(Y, 300, 1);
  EXPECT_NEAR(m.upper, 1.5, 1e-12);
  EXPECT_NEAR(m.lower, 1.5, 1e-12);

  for (std::size_t k = 0; k < 2; ++k) {
    auto P = sum_projection(Z.space, k);
    auto pn = operator_norm(P, 300, 2);
    EXPECT_NEAR(pn.lower, 1.0, 1e-12);
    EXPECT_LE(pn.lower, 1.0 + 1e-12);
  }
  EXPECT_THROW(direct_sum({}, 2), Error);
}

TEST(Operators, james_shift_demo) {
  auto d = james_shift_demo(12, 1000, 3);
  for (double v : d.diagonal) EXPECT_EQ(v, 1.0);
  EXPECT_LE(d.probe_max, 2.0 + 1e-12);
  EXPECT_LE(d.spreading_max_dev, 1e-12);
  EXPECT_THROW(james_shift_demo(1), Error);
}
