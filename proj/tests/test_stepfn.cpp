#include <gtest/gtest.h>

#include "haarforge/stepfn.hpp"

using namespace haarforge;

namespace {

DyadicIndex iv(int j, std::int64_t i) { return DyadicIndex::interval(j, i); }

double max_abs_diff(const StepFunction& a, const StepFunction& b) {
  double m = 0;
  for (std::size_t c = 0; c < a.cells(); ++c) m = std::max(m, std::abs(a.values[c] - b.values[c]));
  return m;
}

StepFunction random_mean_zero(Rng& rng, int d, int n) {
  auto f = StepFunction::zeros(d, n);
  for (double& v : f.values) v = uniform(rng, -1, 1);
  // strip every component carrying the empty symbol so the axis means vanish
  auto c = analyze(f, Convention::D, 1e300);
  return synthesize(c, n);
}

double dot(const StepFunction& a, const StepFunction& b) {
  double s = 0;
  for (std::size_t c = 0; c < a.cells(); ++c) s += a.values[c] * b.values[c];
  return s * a.cell_volume();
}

}  // namespace

TEST(StepFn, haar_function_examples) {
  EXPECT_EQ(haar_function(iv(0, 1), 1).values, (std::vector<double>{1, -1}));
  EXPECT_EQ(haar_function(DyadicIndex::emptyset(), 1).values, (std::vector<double>{1, 1}));
  EXPECT_EQ(haar_function(IndexTuple{iv(0, 1), iv(0, 1)}, 1).values, (std::vector<double>{1, -1, -1, 1}));
  EXPECT_THROW(haar_function(iv(2, 1), 2), Error);
}

TEST(StepFn, haar_functions_integrals_and_squares) {
  for (const auto& I : IntervalCollection::full(4).members()) {
    auto h = haar_function(I, 5);
    EXPECT_EQ(h.integral(), 0.0);
    auto sq = pointwise_mul(h, h);
    for (std::size_t c = 0; c < sq.cells(); ++c) {
      double x = (c + 0.5) / 32.0;
      EXPECT_EQ(sq.values[c], (I.lo().value() <= x && x < I.hi().value()) ? 1.0 : 0.0);
    }
  }
  EXPECT_EQ(haar_function(DyadicIndex::emptyset(), 3).integral(), 1.0);
}

TEST(StepFn, tensor_haar_orthogonal) {
  std::vector<IndexTuple> idx;
  for (int m = 0; m <= 2; ++m)
    for (int n = 0; n <= 2; ++n)
      for (std::int64_t i = 1; i <= (1 << m); ++i)
        for (std::int64_t j = 1; j <= (1 << n); ++j) idx.push_back({iv(m, i), iv(n, j)});
  for (std::size_t a = 0; a < idx.size(); ++a)
    for (std::size_t b = 0; b < idx.size(); ++b) {
      double p = dot(haar_function(idx[a], 3), haar_function(idx[b], 3));
      double expect = a == b ? idx[a][0].length() * idx[a][1].length() : 0.0;
      EXPECT_EQ(p, expect);
    }
}

TEST(StepFn, analyze_examples) {
  auto c = analyze(haar_function(iv(1, 1), 3));
  ASSERT_EQ(c.entries.size(), 1u);
  EXPECT_EQ(c.get({iv(1, 1)}), 1.0);

  auto one = analyze(StepFunction::constant(1, 4, 1.0), Convention::Dplus);
  ASSERT_EQ(one.entries.size(), 1u);
  EXPECT_EQ(one.get({DyadicIndex::emptyset()}), 1.0);

  EXPECT_THROW(analyze(StepFunction::constant(1, 3, 1.0), Convention::D), Error);
  EXPECT_THROW(analyze(StepFunction::constant(2, 2, 0.0), Convention::Dplus), Error);
}

TEST(StepFn, synthesize_examples) {
  HaarCoefficients c{1, {}};
  c.add({iv(0, 1)}, 2.0);
  EXPECT_EQ(synthesize(c, 1).values, (std::vector<double>{2, -2}));
  EXPECT_THROW(synthesize(c, 0), Error);

  // a signed sum over disjoint intervals takes values in {-1,0,1}
  HaarCoefficients b{1, {}};
  b.add({iv(3, 1)}, 1);
  b.add({iv(3, 4)}, -1);
  b.add({iv(2, 4)}, 1);
  for (double v : synthesize(b, 5).values) EXPECT_TRUE(v == 0 || v == 1 || v == -1);
}

TEST(StepFn, round_trip_one_parameter_depth_8) {
  Rng rng(101);
  double worst = 0;
  for (int t = 0; t < 1000; ++t) {
    auto f = StepFunction::zeros(1, 9);
    for (double& v : f.values) v = uniform(rng, -1, 1);
    worst = std::max(worst, max_abs_diff(synthesize(analyze(f, Convention::Dplus), 9), f));
  }
  EXPECT_LE(worst, 1e-12);
}

TEST(StepFn, round_trip_two_parameter_depth_4) {
  Rng rng(102);
  double worst = 0;
  for (int t = 0; t < 1000; ++t) {
    auto f = random_mean_zero(rng, 2, 5);
    worst = std::max(worst, max_abs_diff(synthesize(analyze(f), 5), f));
  }
  EXPECT_LE(worst, 1e-12);
}

TEST(StepFn, coefficient_side_identity) {
  Rng rng(7);
  HaarCoefficients c{2, {}};
  for (int m = 0; m <= 3; ++m)
    for (int n = 0; n <= 3; ++n)
      for (std::int64_t i = 1; i <= (1 << m); ++i)
        for (std::int64_t j = 1; j <= (1 << n); ++j) c.add({iv(m, i), iv(n, j)}, uniform(rng, -1, 1));
  auto back = analyze(synthesize(c, 4));
  ASSERT_EQ(back.entries.size(), c.entries.size());
  for (const auto& [k, v] : c.entries) EXPECT_NEAR(back.get(k), v, 1e-14);
}

TEST(StepFn, pointwise_mul_and_refine) {
  Rng rng(9);
  auto f = StepFunction::zeros(1, 3);
  for (double& v : f.values) v = uniform(rng, -1, 1);
  auto one = StepFunction::constant(1, 5, 1.0);
  auto g = pointwise_mul(f, one);
  EXPECT_EQ(g.resolution, 5);
  EXPECT_EQ(g, f.refine(5));
  EXPECT_EQ(g.integral(), f.integral());
  auto h = haar_function(iv(0, 1), 2);
  auto sq = pointwise_mul(h, h);
  EXPECT_EQ(sq.values, StepFunction::constant(1, 2, 1.0).values);
}

TEST(StepFn, refine_two_parameter_preserves_values) {
  auto f = StepFunction::zeros(2, 1);
  f.values = {1, 2, 3, 4};
  auto g = f.refine(2);
  EXPECT_EQ(g.values, (std::vector<double>{1, 1, 2, 2, 1, 1, 2, 2, 3, 3, 4, 4, 3, 3, 4, 4}));
}
