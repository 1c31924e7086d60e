#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace haarforge {

enum class Errc {
  invalid_argument,
  unsupported,
  resolution,
  mean_not_zero,
  invalid_collection,
  depth_exhausted,
  persistence_unattainable,
  degenerate_probe,
  incomplete_multiplier,
  support,
  precondition,
  corrupt_transcript,
  not_contractive,
};

inline const char* errc_name(Errc e) {
  switch (e) {
    case Errc::invalid_argument: return "invalid-argument";
    case Errc::unsupported: return "unsupported";
    case Errc::resolution: return "resolution";
    case Errc::mean_not_zero: return "mean-not-zero";
    case Errc::invalid_collection: return "invalid-collection";
    case Errc::depth_exhausted: return "depth-exhausted";
    case Errc::persistence_unattainable: return "persistence-unattainable";
    case Errc::degenerate_probe: return "degenerate-probe";
    case Errc::incomplete_multiplier: return "incomplete-multiplier";
    case Errc::support: return "support";
    case Errc::precondition: return "precondition";
    case Errc::corrupt_transcript: return "corrupt-transcript";
    case Errc::not_contractive: return "not-contractive";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

// Exact dyadic rational, stored as an integer multiple of 2^-kBits.
struct Measure {
  static constexpr int kBits = 48;
  std::int64_t units = 0;

  static Measure pow2(int neg_exp) {
    if (neg_exp < 0 || neg_exp > kBits) fail(Errc::invalid_argument, "measure exponent out of range");
    return Measure{std::int64_t{1} << (kBits - neg_exp)};
  }
  static Measure one() { return pow2(0); }
  double value() const { return static_cast<double>(units) / static_cast<double>(std::int64_t{1} << kBits); }

  Measure operator+(Measure o) const { return {units + o.units}; }
  Measure operator-(Measure o) const { return {units - o.units}; }
  Measure operator*(std::int64_t k) const { return {units * k}; }
  Measure& operator+=(Measure o) { units += o.units; return *this; }
  Measure half() const { return {units / 2}; }
  auto operator<=>(const Measure&) const = default;
};

// splitmix64 finalizer, used to derive independent per-trial seeds from a root seed
inline std::uint64_t split_seed(std::uint64_t root, std::uint64_t counter) {
  std::uint64_t z = root + 0x9e3779b97f4a7c15ULL * (counter + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Worker count: HAARFORGE_THREADS if set, otherwise the hardware concurrency.
inline unsigned thread_count() {
  if (const char* env = std::getenv("HAARFORGE_THREADS")) {
    long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

// Runs f(i) for i in [0, n). Each i must write only to its own slot, which keeps
// results independent of the worker count.
template <class F>
void parallel_for(std::size_t n, F&& f) {
  unsigned workers = static_cast<unsigned>(std::min<std::size_t>(thread_count(), n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr err;
  std::mutex err_mu;
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < n;) {
        try {
          f(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mu);
          if (!err) err = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) {
  // explicit formula so streams do not depend on the library's distribution internals
  return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
}

inline int rademacher(Rng& rng) { return (rng() >> 63) ? 1 : -1; }

inline double gaussian(Rng& rng) {
  double u1 = uniform(rng, 0.0, 1.0);
  double u2 = uniform(rng, 0.0, 1.0);
  if (u1 < 1e-300) u1 = 1e-300;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

}  // namespace haarforge
