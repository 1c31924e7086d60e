#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include <json.hpp>

#include "haarforge/common.hpp"
#include "haarforge/dyadic.hpp"

namespace haarforge {

using IndexTuple = std::vector<DyadicIndex>;

struct TupleLess {
  bool operator()(const IndexTuple& a, const IndexTuple& b) const {
    if (a.size() != b.size()) return a.size() < b.size();
    for (std::size_t s = 0; s < a.size(); ++s) {
      if (index_less(a[s], b[s])) return true;
      if (index_less(b[s], a[s])) return false;
    }
    return false;
  }
};

enum class Convention { D, Dplus };

// Piecewise constant on the 2^{n d} cells of [0,1)^d; row-major, axis 1 outermost.
struct StepFunction {
  int dims = 1;
  int resolution = 0;
  std::vector<double> values;

  static StepFunction zeros(int d, int n) {
    if (d < 1 || n < 0 || n * d > 28) fail(Errc::invalid_argument, "step function grid out of range");
    return StepFunction{d, n, std::vector<double>(std::size_t{1} << (n * d), 0.0)};
  }
  static StepFunction constant(int d, int n, double v) {
    auto f = zeros(d, n);
    std::fill(f.values.begin(), f.values.end(), v);
    return f;
  }
  std::size_t cells() const { return values.size(); }
  std::size_t side() const { return std::size_t{1} << resolution; }
  double cell_volume() const { return std::ldexp(1.0, -resolution * dims); }
  bool operator==(const StepFunction&) const = default;

  double integral() const {
    double s = 0;
    for (double v : values) s += v;
    return s * cell_volume();
  }

  // finer grid, same function
  StepFunction refine(int n) const {
    if (n < resolution) fail(Errc::resolution, "refine cannot coarsen");
    if (n == resolution) return *this;
    StepFunction g = zeros(dims, n);
    int shift = n - resolution;
    std::size_t fs = g.side();
    for (std::size_t c = 0; c < g.cells(); ++c) {
      std::size_t rem = c, src = 0;
      std::size_t stride = 1;
      for (int a = dims - 1; a >= 0; --a) {
        std::size_t coord = rem % fs;
        rem /= fs;
        src += (coord >> shift) * stride;
        stride *= side();
      }
      g.values[c] = values[src];
    }
    return g;
  }

  StepFunction& operator+=(const StepFunction& o) {
    check_same(o);
    for (std::size_t c = 0; c < cells(); ++c) values[c] += o.values[c];
    return *this;
  }
  StepFunction operator+(const StepFunction& o) const { auto r = *this; return r += o; }
  StepFunction operator-(const StepFunction& o) const {
    check_same(o);
    auto r = *this;
    for (std::size_t c = 0; c < cells(); ++c) r.values[c] -= o.values[c];
    return r;
  }
  StepFunction operator*(double s) const {
    auto r = *this;
    for (double& v : r.values) v *= s;
    return r;
  }
  void axpy(double s, const StepFunction& o) {
    check_same(o);
    for (std::size_t c = 0; c < cells(); ++c) values[c] += s * o.values[c];
  }

 private:
  void check_same(const StepFunction& o) const {
    if (dims != o.dims || resolution != o.resolution) fail(Errc::invalid_argument, "step function shape mismatch");
  }
};

struct HaarCoefficients {
  int dims = 1;
  std::map<IndexTuple, double, TupleLess> entries;

  double get(const IndexTuple& k) const {
    auto it = entries.find(k);
    return it == entries.end() ? 0.0 : it->second;
  }
  void add(const IndexTuple& k, double v) { entries[k] += v; }
  int max_level() const {
    int m = -1;
    for (const auto& [k, v] : entries)
      for (const auto& I : k)
        if (!I.empty) m = std::max(m, I.level);
    return m;
  }
};

namespace detail {

// 1-d fast Haar analysis along one axis of a d-dimensional array; the slot for position p
// holds the empty-symbol mean at p = 0 and a_I at p = interval_index(I).
inline void haar_forward_axis(std::vector<double>& v, int d, int n, int axis) {
  std::size_t side = std::size_t{1} << n;
  std::size_t inner = 1;
  for (int a = axis + 1; a < d; ++a) inner *= side;
  std::size_t outer = v.size() / (inner * side);
  std::vector<double> line(side), out(side);
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t in = 0; in < inner; ++in) {
      std::size_t base = o * side * inner + in;
      for (std::size_t t = 0; t < side; ++t) line[t] = v[base + t * inner];
      for (int j = n - 1; j >= 0; --j) {
        std::size_t cnt = std::size_t{1} << j;
        for (std::size_t i = 0; i < cnt; ++i) {
          double l = line[2 * i], r = line[2 * i + 1];
          out[cnt + i] = 0.5 * (l - r);
          line[i] = 0.5 * (l + r);
        }
      }
      out[0] = line[0];
      for (std::size_t t = 0; t < side; ++t) v[base + t * inner] = out[t];
    }
}

inline void haar_inverse_axis(std::vector<double>& v, int d, int n, int axis) {
  std::size_t side = std::size_t{1} << n;
  std::size_t inner = 1;
  for (int a = axis + 1; a < d; ++a) inner *= side;
  std::size_t outer = v.size() / (inner * side);
  std::vector<double> line(side), coef(side);
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t in = 0; in < inner; ++in) {
      std::size_t base = o * side * inner + in;
      for (std::size_t t = 0; t < side; ++t) coef[t] = v[base + t * inner];
      line[0] = coef[0];
      for (int j = 0; j < n; ++j) {
        std::size_t cnt = std::size_t{1} << j;
        for (std::size_t i = cnt; i-- > 0;) {
          double m = line[i], a = coef[cnt + i];
          line[2 * i] = m + a;
          line[2 * i + 1] = m - a;
        }
      }
      for (std::size_t t = 0; t < side; ++t) v[base + t * inner] = line[t];
    }
}

inline DyadicIndex slot_index(std::size_t p) {
  return p == 0 ? DyadicIndex::emptyset() : interval_from_index(static_cast<std::int64_t>(p));
}

inline std::size_t slot_of(const DyadicIndex& I) {
  return I.empty ? 0 : static_cast<std::size_t>(interval_index(I));
}

}  // namespace detail

inline HaarCoefficients analyze(const StepFunction& f, Convention conv = Convention::D, double zero_tol = 1e-12) {
  if (conv == Convention::Dplus && f.dims != 1) fail(Errc::unsupported, "convention D+ is one-parameter only");
  std::vector<double> v = f.values;
  for (int a = 0; a < f.dims; ++a) detail::haar_forward_axis(v, f.dims, f.resolution, a);
  double scale = 0;
  for (double x : f.values) scale = std::max(scale, std::abs(x));
  HaarCoefficients c{f.dims, {}};
  std::size_t side = f.side();
  for (std::size_t cell = 0; cell < v.size(); ++cell) {
    IndexTuple key(f.dims);
    bool has_empty = false;
    std::size_t rem = cell;
    for (int a = f.dims - 1; a >= 0; --a) {
      std::size_t p = rem % side;
      rem /= side;
      key[a] = detail::slot_index(p);
      has_empty = has_empty || p == 0;
    }
    if (has_empty && conv == Convention::D) {
      if (std::abs(v[cell]) > zero_tol * std::max(1.0, scale))
        fail(Errc::mean_not_zero, "convention D needs zero axis means");
      continue;
    }
    if (v[cell] != 0.0) c.entries.emplace(std::move(key), v[cell]);
  }
  return c;
}

inline void require_resolution(const IndexTuple& k, int resolution) {
  for (const auto& I : k)
    if (!I.empty && I.level + 1 > resolution)
      fail(Errc::resolution, "resolution " + std::to_string(resolution) + " does not resolve " + I.str());
}

inline StepFunction synthesize(const HaarCoefficients& c, int resolution) {
  StepFunction f = StepFunction::zeros(c.dims, resolution);
  std::size_t side = f.side();
  for (const auto& [k, a] : c.entries) {
    if (int(k.size()) != c.dims) fail(Errc::invalid_argument, "index tuple length differs from dims");
    require_resolution(k, resolution);
    std::size_t pos = 0;
    for (int s = 0; s < c.dims; ++s) pos = pos * side + detail::slot_of(k[s]);
    f.values[pos] += a;
  }
  for (int a = 0; a < f.dims; ++a) detail::haar_inverse_axis(f.values, f.dims, f.resolution, a);
  return f;
}

inline StepFunction haar_function(const IndexTuple& idx, int resolution) {
  require_resolution(idx, resolution);
  int d = int(idx.size());
  StepFunction f = StepFunction::zeros(d, resolution);
  std::size_t side = f.side();
  std::vector<std::vector<double>> axis(d, std::vector<double>(side, 0.0));
  for (int s = 0; s < d; ++s) {
    const auto& I = idx[s];
    if (I.empty) {
      std::fill(axis[s].begin(), axis[s].end(), 1.0);
      continue;
    }
    std::size_t w = side >> I.level, lo = (I.position - 1) * w;
    for (std::size_t t = 0; t < w; ++t) axis[s][lo + t] = t < w / 2 ? 1.0 : -1.0;
  }
  for (std::size_t cell = 0; cell < f.cells(); ++cell) {
    std::size_t rem = cell;
    double v = 1.0;
    for (int s = d - 1; s >= 0 && v != 0.0; --s) {
      v *= axis[s][rem % side];
      rem /= side;
    }
    f.values[cell] = v;
  }
  return f;
}

inline StepFunction haar_function(const DyadicIndex& I, int resolution) { return haar_function(IndexTuple{I}, resolution); }

inline StepFunction pointwise_mul(const StepFunction& f, const StepFunction& g) {
  if (f.dims != g.dims) fail(Errc::invalid_argument, "dimension mismatch");
  int n = std::max(f.resolution, g.resolution);
  StepFunction a = f.refine(n), b = g.refine(n);
  for (std::size_t c = 0; c < a.cells(); ++c) a.values[c] *= b.values[c];
  return a;
}

inline void to_json(nlohmann::json& j, const StepFunction& f) {
  j = {{"dims", f.dims}, {"resolution", f.resolution}, {"values", f.values}};
}

inline std::string tuple_key(const IndexTuple& k) {
  std::string s;
  for (std::size_t a = 0; a < k.size(); ++a) s += (a ? "x" : "") + k[a].str();
  return s;
}

inline void to_json(nlohmann::json& j, const HaarCoefficients& c) {
  j = nlohmann::json::object();
  for (const auto& [k, v] : c.entries) j[tuple_key(k)] = v;
}

}  // namespace haarforge
