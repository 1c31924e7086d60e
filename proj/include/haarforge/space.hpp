#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "haarforge/common.hpp"
#include "haarforge/dyadic.hpp"
#include "haarforge/norms.hpp"
#include "haarforge/stepfn.hpp"

namespace haarforge {

// A truncated Haar space: norm, grid, ordered basis, and the normalization e = h / w,
// e* = h / w* with w w* = |support|, so that e*_m(e_k) = delta_mk.
class Space {
 public:
  Space() = default;

  static Space make(NormSpec norm, int dims, int depth, Convention conv) {
    // depth -1 under D+ is the line of constants
    if (dims < 1 || depth < (conv == Convention::Dplus ? -1 : 0) || (depth + 1) * dims > 24)
      fail(Errc::invalid_argument, "space grid out of range");
    if (norm.kind == NormSpec::Kind::James) fail(Errc::unsupported, "the James space is sequence based");
    Space s;
    s.norm_ = std::move(norm);
    s.dims_ = dims;
    s.depth_ = depth;
    s.conv_ = conv;
    s.build_basis();
    return s;
  }

  const NormSpec& norm() const { return norm_; }
  int dims() const { return dims_; }
  int depth() const { return depth_; }
  int resolution() const { return depth_ + 1; }
  Convention convention() const { return conv_; }
  bool dual_side() const { return dual_; }
  std::size_t size() const { return basis_.size(); }
  std::size_t cells() const { return std::size_t{1} << (resolution() * dims_); }
  const std::vector<IndexTuple>& basis() const { return basis_; }
  const IndexTuple& index(std::size_t k) const { return basis_.at(k); }
  // every grid cell indicator lies in the span (the empty symbol is present on each axis)
  bool complete() const { return conv_ == Convention::Dplus; }

  // the dual space: dual norm, roles of w and w* swapped
  Space dual() const {
    Space s = *this;
    s.norm_ = norm_.dual();
    s.dual_ = !dual_;
    return s;
  }

  double weight(std::size_t k) const { return dual_ ? support(k) / primal_weight(k) : primal_weight(k); }
  double dual_weight(std::size_t k) const { return support(k) / weight(k); }
  double support(std::size_t k) const {
    double m = 1;
    for (const auto& I : basis_[k]) m *= I.length();
    return m;
  }

  std::size_t position(const IndexTuple& idx) const {
    std::size_t flat = flat_slot(idx);
    if (flat >= slot_to_pos_.size() || slot_to_pos_[flat] < 0)
      fail(Errc::support, "index " + tuple_key(idx) + " outside the truncation");
    return std::size_t(slot_to_pos_[flat]);
  }
  bool contains(const IndexTuple& idx) const {
    for (const auto& I : idx)
      if (!I.empty && I.level > depth_) return false;
    if (int(idx.size()) != dims_) return false;
    std::size_t flat = flat_slot(idx);
    return slot_to_pos_[flat] >= 0;
  }

  StepFunction e(std::size_t k) const { return haar_function(basis_.at(k), resolution()) * (1.0 / weight(k)); }
  StepFunction estar(std::size_t k) const { return haar_function(basis_.at(k), resolution()) * (1.0 / dual_weight(k)); }

  // f = sum c_k e_k
  StepFunction function(const Eigen::VectorXd& c) const {
    std::vector<double> slots(cells(), 0.0);
    for (std::size_t k = 0; k < size(); ++k) slots[pos_to_slot_[k]] = c(Eigen::Index(k)) / weight(k);
    StepFunction f = StepFunction::zeros(dims_, resolution());
    f.values = std::move(slots);
    for (int a = 0; a < dims_; ++a) detail::haar_inverse_axis(f.values, dims_, resolution(), a);
    return f;
  }
  // functional g = sum d_k e*_k
  StepFunction functional(const Eigen::VectorXd& d) const { return dual().function(d); }

  // c_k = e*_k(f); components outside the basis are dropped
  Eigen::VectorXd coords(const StepFunction& f) const {
    StepFunction g = f.refine(resolution());
    if (f.resolution > resolution()) fail(Errc::resolution, "function finer than the space grid");
    auto slots = detail::full_transform(g);
    Eigen::VectorXd c(size());
    for (std::size_t k = 0; k < size(); ++k) c(Eigen::Index(k)) = slots[pos_to_slot_[k]] * weight(k);
    return c;
  }
  // d_k = g(e_k)
  Eigen::VectorXd dual_coords(const StepFunction& g) const { return dual().coords(g); }

  HaarCoefficients haar(const Eigen::VectorXd& c) const {
    HaarCoefficients h{dims_, {}};
    for (std::size_t k = 0; k < size(); ++k)
      if (c(Eigen::Index(k)) != 0.0) h.entries.emplace(basis_[k], c(Eigen::Index(k)) / weight(k));
    return h;
  }
  Eigen::VectorXd from_haar(const HaarCoefficients& h) const {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(Eigen::Index(size()));
    for (const auto& [k, a] : h.entries) c(Eigen::Index(position(k))) += a * weight(position(k));
    return c;
  }

  double norm_of(const Eigen::VectorXd& c) const { return norm_eval(function(c), norm_); }

  // cell values of the functions whose coordinates are the columns of C
  Eigen::MatrixXd cell_values(const Eigen::MatrixXd& C) const {
    Eigen::MatrixXd out(Eigen::Index(cells()), C.cols());
    parallel_for(std::size_t(C.cols()), [&](std::size_t j) {
      StepFunction f = function(C.col(Eigen::Index(j)));
      out.col(Eigen::Index(j)) = Eigen::Map<const Eigen::VectorXd>(f.values.data(), Eigen::Index(f.cells()));
    });
    return out;
  }

  // column j holds the coordinates of the indicator of cell j
  Eigen::MatrixXd cell_coords() const {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(size()), static_cast<Eigen::Index>(cells()));
    parallel_for(cells(), [&](std::size_t j) {
      StepFunction chi = StepFunction::zeros(dims_, resolution());
      chi.values[j] = 1.0;
      out.col(Eigen::Index(j)) = coords(chi);
    });
    return out;
  }

  bool same_shape(const Space& o) const {
    return dims_ == o.dims_ && depth_ == o.depth_ && conv_ == o.conv_ && dual_ == o.dual_ &&
           norm_.kind == o.norm_.kind && norm_.p == o.norm_.p;
  }

 private:
  // w = prod |I_s|^{1/p_s} with the exponents of the primal norm
  double primal_weight(std::size_t k) const {
    const auto& idx = basis_[k];
    double w = 1;
    for (int s = 0; s < dims_; ++s)
      if (!idx[s].empty) w *= std::pow(idx[s].length(), 1.0 / exponents_[s]);
    return w;
  }

  std::size_t flat_slot(const IndexTuple& idx) const {
    std::size_t side = std::size_t{1} << resolution(), flat = 0;
    for (const auto& I : idx) flat = flat * side + detail::slot_of(I);
    return flat;
  }

  void build_basis() {
    if (norm_.kind == NormSpec::Kind::Mixed || norm_.kind == NormSpec::Kind::Triple || norm_.kind == NormSpec::Kind::HpHq)
      if (int(norm_.p.size()) != dims_) fail(Errc::invalid_argument, "exponent count differs from dims");
    exponents_.assign(dims_, kInf);
    if (norm_.kind != NormSpec::Kind::Sup)
      for (int a = 0; a < dims_; ++a) exponents_[a] = norm_.p.size() == 1 ? norm_.p[0] : norm_.p.at(a);
    std::size_t side = std::size_t{1} << resolution();
    std::vector<IndexTuple> b;
    for (std::size_t flat = 0; flat < cells(); ++flat) {
      IndexTuple idx(dims_);
      std::size_t rem = flat;
      bool any_empty = false;
      for (int a = dims_ - 1; a >= 0; --a) {
        std::size_t p = rem % side;
        rem /= side;
        idx[a] = detail::slot_index(p);
        if (p == 0) any_empty = true;
      }
      if (any_empty && conv_ == Convention::D) continue;
      b.push_back(idx);
    }
    if (dims_ == 1 || conv_ == Convention::Dplus) {
      std::sort(b.begin(), b.end(), TupleLess{});
    } else if (dims_ == 2) {
      std::sort(b.begin(), b.end(), [](const IndexTuple& x, const IndexTuple& y) {
        return rect_index(DyadicRect{x}) < rect_index(DyadicRect{y});
      });
    } else {
      std::sort(b.begin(), b.end(), [](const IndexTuple& x, const IndexTuple& y) {
        return rect_less(DyadicRect{x}, DyadicRect{y});
      });
    }
    basis_ = std::move(b);
    slot_to_pos_.assign(cells(), -1);
    pos_to_slot_.resize(basis_.size());
    for (std::size_t k = 0; k < basis_.size(); ++k) {
      pos_to_slot_[k] = flat_slot(basis_[k]);
      slot_to_pos_[pos_to_slot_[k]] = long(k);
    }
  }

  NormSpec norm_;
  int dims_ = 1, depth_ = 0;
  Convention conv_ = Convention::D;
  bool dual_ = false;
  std::vector<double> exponents_;
  std::vector<IndexTuple> basis_;
  std::vector<std::size_t> pos_to_slot_;
  std::vector<long> slot_to_pos_;
};

// Entry (m,k) = e*_m(T e_k) in the normalized basis of `space`.
struct OperatorMatrix {
  Space space;
  Eigen::MatrixXd M;

  static OperatorMatrix identity(const Space& s) {
    return {s, Eigen::MatrixXd::Identity(Eigen::Index(s.size()), Eigen::Index(s.size()))};
  }
  std::size_t size() const { return space.size(); }
  Eigen::VectorXd diagonal() const { return M.diagonal(); }
};

struct NormBounds {
  double lower = 0, upper = kInf;
  bool exact = false;
  std::string method;
  long witness = -1;  // extreme cell for the exact L1 / Linf oracles
};

inline void to_json(nlohmann::json& j, const NormBounds& b) {
  j = {{"lower", b.lower}, {"upper", b.upper}, {"exact", b.exact}, {"method", b.method}};
}

// Matrix of T acting on grid-cell values (cells x cells); for an incomplete basis this is
// T composed with the projection onto the span.
inline Eigen::MatrixXd cell_operator(const OperatorMatrix& T) {
  return T.space.cell_values(T.M * T.space.cell_coords());
}

enum class NormMode { exact, estimate };

namespace detail {

inline bool all_two(const NormSpec& s) {
  if (s.kind == NormSpec::Kind::Sup || s.kind == NormSpec::Kind::James) return false;
  return std::all_of(s.p.begin(), s.p.end(), [](double p) { return p == 2.0; });
}

inline bool is_l1(const NormSpec& s) {
  return (s.kind == NormSpec::Kind::Lp || s.kind == NormSpec::Kind::Mixed) &&
         std::all_of(s.p.begin(), s.p.end(), [](double p) { return p == 1.0; });
}

inline NormBounds cell_norm_exact(const OperatorMatrix& T, bool columns) {
  Eigen::MatrixXd C = cell_operator(T);
  Eigen::VectorXd sums = columns ? Eigen::VectorXd(C.cwiseAbs().colwise().sum().transpose())
                                 : Eigen::VectorXd(C.cwiseAbs().rowwise().sum());
  Eigen::Index at = 0;
  double v = sums.maxCoeff(&at);
  return {v, v, true, columns ? "l1-extreme-points" : "linf-row-sums", long(at)};
}

}  // namespace detail

// Exact for L1 and Sup on complete grids (extreme points / row sums) and for all-2 exponents
// (orthonormal basis, spectral norm). Otherwise bounds from probes and a column-sum relaxation.
inline NormBounds operator_norm(const OperatorMatrix& T, NormMode mode = NormMode::exact, int trials = 200,
                                std::uint64_t seed = 1) {
  const NormSpec& s = T.space.norm();
  bool l1 = detail::is_l1(s), sup = s.kind == NormSpec::Kind::Sup;
  if (detail::all_two(s)) {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(T.M);
    double v = T.M.size() ? svd.singularValues()(0) : 0.0;
    return {v, v, true, "spectral", -1};
  }
  if ((l1 || sup) && T.space.complete()) return detail::cell_norm_exact(T, l1);
  if (mode == NormMode::exact)
    fail(Errc::unsupported, "exact operator norm is available for L1, Sup and p = 2 only");

  NormBounds b;
  b.method = "probe+column-relaxation";
  Space dual = T.space.dual();
  double upper = 0;
  for (std::size_t k = 0; k < T.size(); ++k) {
    double col = T.space.norm_of(T.M.col(Eigen::Index(k)));
    if (col == 0.0) continue;
    Eigen::VectorXd unit = Eigen::VectorXd::Zero(Eigen::Index(T.size()));
    unit(Eigen::Index(k)) = 1.0;
    upper += col * dual.norm_of(unit);
  }
  b.upper = upper;
  if (s.kind == NormSpec::Kind::Lp && s.p[0] > 1.0) {
    Eigen::MatrixXd C = cell_operator(T);
    double n1 = C.cwiseAbs().colwise().sum().maxCoeff(), ninf = C.cwiseAbs().rowwise().sum().maxCoeff();
    double p = s.p[0];
    b.upper = std::min(b.upper, std::pow(n1, 1.0 / p) * std::pow(ninf, 1.0 - 1.0 / p));
  }
  RatioReport r = ratio_probe(T.size(), trials, seed, [&](const std::vector<double>& a) {
    Eigen::Map<const Eigen::VectorXd> x(a.data(), Eigen::Index(a.size()));
    double den = T.space.norm_of(x);
    if (!(den > 0)) return -1.0;
    return T.space.norm_of(T.M * x) / den;
  });
  b.lower = std::min(r.max_ratio, b.upper);
  return b;
}

}  // namespace haarforge
