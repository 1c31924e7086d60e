#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "haarforge/common.hpp"
#include "haarforge/stepfn.hpp"

namespace haarforge {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline double dual_exponent(double p) {
  if (p == 1.0) return kInf;
  if (std::isinf(p)) return 1.0;
  return p / (p - 1.0);
}

struct NormSpec {
  enum class Kind { Lp, Mixed, Sup, Hp, HpHq, Triple, James };
  Kind kind = Kind::Lp;
  std::vector<double> p;

  static NormSpec Lp(double p) {
    if (std::isinf(p)) return Sup();
    check_exponent(p);
    return {Kind::Lp, {p}};
  }
  static NormSpec Mixed(std::vector<double> ps) {
    for (double q : ps) check_exponent(q);
    return {Kind::Mixed, std::move(ps)};
  }
  static NormSpec Sup() { return {Kind::Sup, {}}; }
  // square function norms; p = infinity gives the sup of the square function
  static NormSpec Hp(double p) {
    check_exponent(p);
    return {Kind::Hp, {p}};
  }
  static NormSpec HpHq(double p, double q) {
    check_exponent(p);
    check_exponent(q);
    return {Kind::HpHq, {p, q}};
  }
  static NormSpec Triple(std::vector<double> ps) {
    for (double q : ps) check_exponent(q);
    return {Kind::Triple, std::move(ps)};
  }
  static NormSpec James() { return {Kind::James, {}}; }

  bool square_function() const { return kind == Kind::Hp || kind == Kind::HpHq || kind == Kind::Triple; }

  // evaluation is allowed, but the equivalence theorem assumes every exponent in (1, inf)
  bool outside_hypothesis() const {
    if (kind != Kind::Triple) return false;
    for (double q : p)
      if (q <= 1.0 || std::isinf(q)) return true;
    return false;
  }

  // Exact dual for Lp, Mixed, Sup. For the square-function norms the returned norm dominates
  // the true dual norm (pointwise Cauchy-Schwarz plus Hoelder), which is what distance lower
  // bounds need.
  NormSpec dual() const {
    std::vector<double> q;
    for (double e : p) q.push_back(dual_exponent(e));
    switch (kind) {
      case Kind::Lp: return p[0] == 1.0 ? Sup() : Lp(q[0]);
      case Kind::Sup: return Lp(1.0);
      case Kind::Mixed: return Mixed(q);
      case Kind::Hp: return Hp(q[0]);
      case Kind::HpHq: return HpHq(q[0], q[1]);
      case Kind::Triple: return Triple(q);
      case Kind::James: break;
    }
    fail(Errc::unsupported, "no dual for the James norm");
  }

  std::string name() const {
    auto e = [](double x) { return std::isinf(x) ? std::string("inf") : nlohmann::json(x).dump(); };
    std::string args;
    for (std::size_t i = 0; i < p.size(); ++i) args += (i ? "," : "") + e(p[i]);
    switch (kind) {
      case Kind::Lp: return "Lp(" + args + ")";
      case Kind::Mixed: return "Mixed(" + args + ")";
      case Kind::Sup: return "Sup";
      case Kind::Hp: return "Hp(" + args + ")";
      case Kind::HpHq: return "HpHq(" + args + ")";
      case Kind::Triple: return "Triple(" + args + ")";
      case Kind::James: return "James";
    }
    return "?";
  }

 private:
  static void check_exponent(double p) {
    if (!(p >= 1.0)) fail(Errc::invalid_argument, "exponents must lie in [1, inf]");
  }
};

namespace detail {

inline double lp_mean(const double* v, std::size_t n, std::size_t stride, double p) {
  if (std::isinf(p)) {
    double m = 0;
    for (std::size_t t = 0; t < n; ++t) m = std::max(m, std::abs(v[t * stride]));
    return m;
  }
  double s = 0;
  if (p == 1.0) {
    for (std::size_t t = 0; t < n; ++t) s += std::abs(v[t * stride]);
    return s / double(n);
  }
  if (p == 2.0) {
    for (std::size_t t = 0; t < n; ++t) s += v[t * stride] * v[t * stride];
    return std::sqrt(s / double(n));
  }
  for (std::size_t t = 0; t < n; ++t) s += std::pow(std::abs(v[t * stride]), p);
  return std::pow(s / double(n), 1.0 / p);
}

// Iterated norm: axis d innermost, axis 1 outermost.
inline double mixed_norm(const StepFunction& f, const std::vector<double>& ps) {
  if (int(ps.size()) != f.dims) fail(Errc::invalid_argument, "exponent count differs from dims");
  std::vector<double> cur = f.values;
  std::size_t side = f.side();
  for (int a = f.dims - 1; a >= 0; --a) {
    std::size_t outer = cur.size() / side;
    std::vector<double> next(outer);
    for (std::size_t o = 0; o < outer; ++o) next[o] = lp_mean(cur.data() + o * side, side, 1, ps[a]);
    cur.swap(next);
  }
  return cur[0];
}

// Full tensor Haar transform (empty-symbol slot included on every axis).
inline std::vector<double> full_transform(const StepFunction& f) {
  std::vector<double> v = f.values;
  for (int a = 0; a < f.dims; ++a) haar_forward_axis(v, f.dims, f.resolution, a);
  return v;
}

// S^2 = sum a^2 h^2 evaluated per cell from a slot array (slot 0 = empty symbol).
inline StepFunction square_function_from_slots(const std::vector<double>& slots, int d, int n) {
  StepFunction S = StepFunction::zeros(d, n);
  std::size_t side = S.side();
  std::vector<std::vector<std::size_t>> chains(d);
  for (std::size_t cell = 0; cell < S.cells(); ++cell) {
    std::size_t rem = cell;
    for (int a = d - 1; a >= 0; --a) {
      std::size_t t = rem % side;
      rem /= side;
      auto& ch = chains[a];
      ch.clear();
      ch.push_back(0);
      for (int j = 0; j < n; ++j) ch.push_back((std::size_t{1} << j) + (t >> (n - j)));
    }
    double acc = 0;
    std::vector<std::size_t> pos(d, 0);
    while (true) {
      std::size_t flat = 0;
      for (int a = 0; a < d; ++a) flat = flat * side + chains[a][pos[a]];
      acc += slots[flat] * slots[flat];
      int a = d - 1;
      while (a >= 0 && ++pos[a] == chains[a].size()) pos[a--] = 0;
      if (a < 0) break;
    }
    S.values[cell] = std::sqrt(acc);
  }
  return S;
}

inline std::vector<double> slots_of(const HaarCoefficients& c, int resolution) {
  std::size_t side = std::size_t{1} << resolution;
  std::size_t total = 1;
  for (int a = 0; a < c.dims; ++a) total *= side;
  std::vector<double> slots(total, 0.0);
  for (const auto& [k, a] : c.entries) {
    require_resolution(k, resolution);
    std::size_t pos = 0;
    for (int s = 0; s < c.dims; ++s) pos = pos * side + slot_of(k[s]);
    slots[pos] += a;
  }
  return slots;
}

}  // namespace detail

inline StepFunction square_function(const StepFunction& f) {
  return detail::square_function_from_slots(detail::full_transform(f), f.dims, f.resolution);
}

inline StepFunction square_function(const HaarCoefficients& c, int resolution) {
  return detail::square_function_from_slots(detail::slots_of(c, resolution), c.dims, resolution);
}

inline double lp_norm(const StepFunction& f, double p) {
  return detail::lp_mean(f.values.data(), f.cells(), 1, p);
}

inline double norm_eval(const StepFunction& f, const NormSpec& s) {
  using K = NormSpec::Kind;
  switch (s.kind) {
    case K::Lp: return lp_norm(f, s.p[0]);
    case K::Sup: return lp_norm(f, kInf);
    case K::Mixed: return detail::mixed_norm(f, s.p);
    case K::Hp: return lp_norm(square_function(f), s.p[0]);
    case K::HpHq:
      if (f.dims != 2) fail(Errc::invalid_argument, "HpHq needs two parameters");
      return detail::mixed_norm(square_function(f), s.p);
    case K::Triple: return detail::mixed_norm(square_function(f), s.p);
    case K::James: break;
  }
  fail(Errc::unsupported, "the James norm acts on sequences; use james_norm");
}

inline double norm_eval(const HaarCoefficients& c, const NormSpec& s, int resolution = -1) {
  if (resolution < 0) resolution = std::max(0, c.max_level() + 1);
  if (s.square_function()) {
    StepFunction S = square_function(c, resolution);
    if (s.kind == NormSpec::Kind::Hp) return lp_norm(S, s.p[0]);
    if (s.kind == NormSpec::Kind::HpHq && c.dims != 2) fail(Errc::invalid_argument, "HpHq needs two parameters");
    return detail::mixed_norm(S, s.p);
  }
  return norm_eval(synthesize(c, resolution), s);
}

inline double pairing(const StepFunction& f, const StepFunction& g) {
  if (f.dims != g.dims) fail(Errc::invalid_argument, "dimension mismatch");
  if (f.resolution != g.resolution) {
    int n = std::max(f.resolution, g.resolution);
    return pairing(f.refine(n), g.refine(n));
  }
  double s = 0;
  for (std::size_t c = 0; c < f.cells(); ++c) s += f.values[c] * g.values[c];
  return s * f.cell_volume();
}

// sup over successive-interval partitions of sum (block sums)^2, square-rooted
inline double james_norm(const std::vector<double>& a) {
  std::size_t n = a.size();
  std::vector<double> prefix(n + 1, 0.0), best(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + a[i];
  for (std::size_t k = 1; k <= n; ++k) {
    double b = 0;
    for (std::size_t j = 0; j < k; ++j) {
      double blk = prefix[k] - prefix[j];
      b = std::max(b, best[j] + blk * blk);
    }
    best[k] = b;
  }
  return std::sqrt(best[n]);
}

struct RatioReport {
  double min_ratio = kInf;
  double max_ratio = 0;
  int trials = 0;
  int degenerate = 0;
  std::vector<double> witness_min, witness_max;

  bool within(double C) const {
    double s = std::sqrt(C);
    return trials > 0 && min_ratio >= 1.0 / s && max_ratio <= s;
  }
  double worst_log_deviation() const {
    return std::max(std::abs(std::log(min_ratio)), std::abs(std::log(max_ratio)));
  }
};

inline void to_json(nlohmann::json& j, const RatioReport& r) {
  j = {{"min_ratio", r.min_ratio}, {"max_ratio", r.max_ratio}, {"trials", r.trials},
       {"degenerate", r.degenerate}, {"witness_min", r.witness_min}, {"witness_max", r.witness_max}};
}

// Probe i of a report seeded with `seed`: unit vectors first, then a fixed rotation of
// Gaussian, Rademacher and sparse (support <= 3) vectors.
inline std::vector<double> probe_vector(std::size_t dim, std::size_t i, std::uint64_t seed) {
  std::vector<double> a(dim, 0.0);
  if (i < dim) {
    a[i] = 1.0;
    return a;
  }
  std::size_t t = i - dim;
  Rng rng(split_seed(seed, t));
  switch (t % 3) {
    case 0:
      for (double& x : a) x = gaussian(rng);
      break;
    case 1:
      for (double& x : a) x = rademacher(rng);
      break;
    default: {
      std::size_t support = 1 + rng() % std::min<std::size_t>(3, dim);
      for (std::size_t s = 0; s < support; ++s) a[rng() % dim] = gaussian(rng);
    }
  }
  return a;
}

template <class Vec>
RatioReport ratio_probe(std::size_t dim, int trials, std::uint64_t seed, Vec&& ratio_of) {
  std::size_t total = dim + std::size_t(std::max(trials, 0));
  std::vector<double> ratio(total, -1.0);
  parallel_for(total, [&](std::size_t i) { ratio[i] = ratio_of(probe_vector(dim, i, seed)); });
  RatioReport r;
  std::size_t imin = total, imax = total;
  for (std::size_t i = 0; i < total; ++i) {
    if (ratio[i] < 0) {
      ++r.degenerate;
      continue;
    }
    ++r.trials;
    if (ratio[i] < r.min_ratio) r.min_ratio = ratio[i], imin = i;
    if (ratio[i] > r.max_ratio) r.max_ratio = ratio[i], imax = i;
  }
  if (imin < total) r.witness_min = probe_vector(dim, imin, seed);
  if (imax < total) r.witness_max = probe_vector(dim, imax, seed);
  return r;
}

inline StepFunction combine(const std::vector<StepFunction>& basis, const std::vector<double>& a) {
  StepFunction f = StepFunction::zeros(basis.at(0).dims, basis[0].resolution);
  for (std::size_t i = 0; i < basis.size(); ++i)
    if (a[i] != 0.0) f.axpy(a[i], basis[i]);
  return f;
}

// Ratios ||sum a_i x_i||_X / ||sum a_i y_i||_Y over unit vectors plus `trials` random probes.
inline RatioReport equivalence_probe(const std::vector<StepFunction>& X, const std::vector<StepFunction>& Y,
                                     const NormSpec& sx, const NormSpec& sy, int trials, std::uint64_t seed) {
  if (X.size() != Y.size() || X.empty()) fail(Errc::invalid_argument, "probe needs equal nonempty bases");
  return ratio_probe(X.size(), trials, seed, [&](const std::vector<double>& a) {
    double den = norm_eval(combine(Y, a), sy);
    if (!(den > 0.0)) return -1.0;
    return norm_eval(combine(X, a), sx) / den;
  });
}

}  // namespace haarforge
