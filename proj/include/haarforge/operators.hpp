#pragma once

#include <cmath>
#include <map>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "haarforge/common.hpp"
#include "haarforge/norms.hpp"
#include "haarforge/space.hpp"

namespace haarforge {

using MultiplierEntries = std::map<IndexTuple, double, TupleLess>;

inline OperatorMatrix build_multiplier(const Space& s, const MultiplierEntries& c) {
  Eigen::VectorXd d(Eigen::Index(s.size()));
  for (std::size_t k = 0; k < s.size(); ++k) {
    auto it = c.find(s.index(k));
    if (it == c.end()) fail(Errc::incomplete_multiplier, "no multiplier entry for " + tuple_key(s.index(k)));
    d(Eigen::Index(k)) = it->second;
  }
  return {s, d.asDiagonal()};
}

inline MultiplierEntries constant_entries(const Space& s, double v) {
  MultiplierEntries c;
  for (const auto& idx : s.basis()) c[idx] = v;
  return c;
}

inline MultiplierEntries diagonal_entries(const OperatorMatrix& T) {
  MultiplierEntries c;
  for (std::size_t k = 0; k < T.size(); ++k) c[T.space.index(k)] = T.M(Eigen::Index(k), Eigen::Index(k));
  return c;
}

inline double entry(const MultiplierEntries& c, const DyadicIndex& I) {
  auto it = c.find(IndexTuple{I});
  if (it == c.end()) fail(Errc::incomplete_multiplier, "no multiplier entry for " + I.str());
  return it->second;
}

inline int entries_depth(const MultiplierEntries& c) {
  int depth = -1;
  for (const auto& [k, v] : c)
    for (const auto& I : k)
      if (!I.empty) depth = std::max(depth, I.level);
  return depth;
}

// max over descending chains below `root` of sum |c_{I_n} - c_{I_{n+1}}|; consecutive
// refinements dominate by the triangle inequality, so a tree walk suffices
inline double chain_variation(const MultiplierEntries& c, const DyadicIndex& root) {
  int depth = entries_depth(c);
  auto walk = [&](auto&& self, const DyadicIndex& I) -> double {
    std::vector<DyadicIndex> kids;
    if (I.empty) kids.push_back(DyadicIndex::interval(0, 1));
    else if (I.level < depth) kids = {I.left(), I.right()};
    double best = 0, here = entry(c, I);
    for (const auto& K : kids) {
      if (!c.count(IndexTuple{K})) continue;
      best = std::max(best, std::abs(here - entry(c, K)) + self(self, K));
    }
    return best;
  };
  return walk(walk, root);
}

inline double sup_entry(const MultiplierEntries& c) {
  double m = 0;
  for (const auto& [k, v] : c) m = std::max(m, std::abs(v));
  return m;
}

inline HaarCoefficients apply(const OperatorMatrix& T, const HaarCoefficients& x) {
  return T.space.haar(T.M * T.space.from_haar(x));
}

inline OperatorMatrix compose(const OperatorMatrix& S, const OperatorMatrix& T) {
  if (!S.space.same_shape(T.space)) fail(Errc::invalid_argument, "composition across different spaces");
  return {T.space, S.M * T.M};
}

// On the dual space, in the dual normalized basis (e*_k with e_k as its biorthogonal
// functionals) the adjoint is the transpose.
inline OperatorMatrix adjoint(const OperatorMatrix& T) { return {T.space.dual(), T.M.transpose()}; }

// Raw Haar-coordinate matrix: entry (m,k) = <h_m, T h_k> / |support_m|.
inline Eigen::MatrixXd raw_haar_matrix(const OperatorMatrix& T) {
  Eigen::MatrixXd R = T.M;
  for (std::size_t m = 0; m < T.size(); ++m)
    for (std::size_t k = 0; k < T.size(); ++k)
      R(Eigen::Index(m), Eigen::Index(k)) *= T.space.weight(k) / T.space.weight(m);
  return R;
}

// l^p sum of finitely many spaces with block coordinates.
struct SumSpace {
  std::vector<Space> parts;
  double p = 2;

  std::size_t size() const {
    std::size_t n = 0;
    for (const auto& s : parts) n += s.size();
    return n;
  }
  std::size_t offset(std::size_t part) const {
    std::size_t n = 0;
    for (std::size_t i = 0; i < part; ++i) n += parts[i].size();
    return n;
  }
  Eigen::VectorXd block(const Eigen::VectorXd& z, std::size_t part) const {
    return z.segment(Eigen::Index(offset(part)), Eigen::Index(parts[part].size()));
  }
  double norm_of(const Eigen::VectorXd& z) const {
    double acc = 0;
    for (std::size_t i = 0; i < parts.size(); ++i) {
      double y = parts[i].norm_of(block(z, i));
      acc = std::isinf(p) ? std::max(acc, y) : acc + std::pow(y, p);
    }
    return std::isinf(p) ? acc : std::pow(acc, 1.0 / p);
  }
};

struct SumOperator {
  SumSpace space;
  Eigen::MatrixXd M;
};

inline SumOperator direct_sum(const std::vector<OperatorMatrix>& parts, double p) {
  if (parts.empty()) fail(Errc::invalid_argument, "direct sum of no parts");
  SumOperator out;
  out.space.p = p;
  for (const auto& T : parts) out.space.parts.push_back(T.space);
  std::size_t n = out.space.size();
  out.M = Eigen::MatrixXd::Zero(Eigen::Index(n), Eigen::Index(n));
  for (std::size_t i = 0; i < parts.size(); ++i) {
    auto o = Eigen::Index(out.space.offset(i));
    out.M.block(o, o, parts[i].M.rows(), parts[i].M.cols()) = parts[i].M;
  }
  return out;
}

inline SumOperator sum_projection(const SumSpace& s, std::size_t part) {
  SumOperator P{s, Eigen::MatrixXd::Zero(Eigen::Index(s.size()), Eigen::Index(s.size()))};
  auto o = Eigen::Index(s.offset(part));
  auto n = Eigen::Index(s.parts.at(part).size());
  P.M.block(o, o, n, n).setIdentity();
  return P;
}

inline NormBounds operator_norm(const SumOperator& T, int trials = 500, std::uint64_t seed = 1) {
  RatioReport r = ratio_probe(T.space.size(), trials, seed, [&](const std::vector<double>& a) {
    Eigen::Map<const Eigen::VectorXd> z(a.data(), Eigen::Index(a.size()));
    double den = T.space.norm_of(z);
    if (!(den > 0)) return -1.0;
    return T.space.norm_of(T.M * z) / den;
  });
  // block diagonal on an l^p sum: the norm is the largest block norm
  double upper = 0;
  bool block_diagonal = true;
  for (std::size_t i = 0; i < T.space.parts.size(); ++i) {
    auto o = Eigen::Index(T.space.offset(i));
    auto n = Eigen::Index(T.space.parts[i].size());
    Eigen::MatrixXd off = T.M.middleRows(o, n);
    off.middleCols(o, n).setZero();
    if (off.cwiseAbs().maxCoeff() != 0.0) block_diagonal = false;
    OperatorMatrix part{T.space.parts[i], T.M.block(o, o, n, n)};
    upper = std::max(upper, operator_norm(part, NormMode::estimate, trials, seed).upper);
  }
  NormBounds b;
  b.method = "sum-probe";
  b.lower = r.max_ratio;
  b.upper = block_diagonal ? std::max(upper, b.lower) : kInf;
  return b;
}

struct JamesShiftDemo {
  Eigen::MatrixXd T;  // I - S on the first n coordinates
  std::vector<double> diagonal;
  double probe_max = 0;          // max ||T a||_J / ||a||_J
  double spreading_max_dev = 0;  // max | ||S a||_J - ||a||_J |
  int trials = 0;
};

inline std::vector<double> shift_right(const std::vector<double>& a) {
  std::vector<double> s(a.size() + 1, 0.0);
  std::copy(a.begin(), a.end(), s.begin() + 1);
  return s;
}

inline JamesShiftDemo james_shift_demo(int n, int trials = 1000, std::uint64_t seed = 1) {
  if (n < 2) fail(Errc::invalid_argument, "james demo needs n >= 2");
  JamesShiftDemo d;
  d.T = Eigen::MatrixXd::Identity(n, n);
  for (int i = 0; i + 1 < n; ++i) d.T(i + 1, i) = -1.0;
  for (int i = 0; i < n; ++i) d.diagonal.push_back(d.T(i, i));
  d.trials = trials;
  std::vector<double> ratio(trials), dev(trials);
  parallel_for(std::size_t(trials), [&](std::size_t t) {
    Rng rng(split_seed(seed, t));
    std::vector<double> a(n);
    for (double& x : a) x = gaussian(rng);
    double na = james_norm(a);
    Eigen::VectorXd Ta = d.T * Eigen::Map<Eigen::VectorXd>(a.data(), n);
    ratio[t] = james_norm(std::vector<double>(Ta.data(), Ta.data() + n)) / na;
    dev[t] = std::abs(james_norm(shift_right(a)) - na);
  });
  for (int t = 0; t < trials; ++t) {
    d.probe_max = std::max(d.probe_max, ratio[t]);
    d.spreading_max_dev = std::max(d.spreading_max_dev, dev[t]);
  }
  return d;
}

struct SandwichReport {
  double w_norm = 0, sup = 0, exact = 0;
  bool holds() const { return 0.25 * w_norm <= exact * (1 + 1e-12) && exact <= (w_norm + 3 * sup) * (1 + 1e-12); }
};

inline void to_json(nlohmann::json& j, const SandwichReport& r) {
  j = {{"w_norm", r.w_norm}, {"sup", r.sup}, {"exact_l1", r.exact}, {"holds", r.holds()}};
}

// 1/4 ||D||_W <= ||D||_{L1->L1} <= ||D||_W + 3 ||D||_inf with the exact extreme-point norm
inline SandwichReport sandwich_check(const Space& s, const MultiplierEntries& c) {
  SandwichReport r;
  r.w_norm = chain_variation(c, DyadicIndex::emptyset());
  r.sup = sup_entry(c);
  r.exact = operator_norm(build_multiplier(s, c), NormMode::exact).upper;
  return r;
}

inline void to_json(nlohmann::json& j, const OperatorMatrix& T) {
  nlohmann::json basis = nlohmann::json::array();
  for (const auto& idx : T.space.basis()) basis.push_back(idx);
  std::vector<double> entries;
  for (Eigen::Index m = 0; m < T.M.rows(); ++m)
    for (Eigen::Index k = 0; k < T.M.cols(); ++k) entries.push_back(T.M(m, k));
  j = {{"basis", basis}, {"entries", entries}};
}

inline void to_json(nlohmann::json& j, const MultiplierEntries& c) {
  j = nlohmann::json::object();
  for (const auto& [k, v] : c) j[tuple_key(k)] = v;
}

}  // namespace haarforge
