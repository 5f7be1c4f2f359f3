#pragma once

// Reproducible random streams.
//
// The engine is std::mt19937_64, whose output sequence is fixed by the C++
// standard. The std:: distributions are implementation-defined, so every
// transform used here (uniform double, normal, bounded index, discrete
// sampling) is written out explicitly. Given (seed, stream) the sequence of
// draws is the same on every conforming platform.

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <random>
#include <span>
#include <type_traits>
#include <vector>

#include "gerk/errors.hpp"

namespace gerk {

/// One step of the splitmix64 generator; used to turn (seed, stream) into
/// well-separated engine seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

class RngStream {
 public:
  RngStream() : RngStream(0) {}
  explicit RngStream(std::uint64_t seed, std::uint64_t stream = 0)
      : seed_(seed), stream_(stream), engine_(mix(seed, stream)) {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream() const noexcept { return stream_; }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). Rejection sampling, no modulo bias.
  std::uint64_t uniform_index(std::uint64_t n) {
    if (n == 0) throw Error(ErrorKind::InvalidArgument, "uniform_index: n == 0");
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      const std::uint64_t r = engine_();
      if (r >= threshold) return r % n;
    }
  }

  /// Standard normal, Marsaglia polar method.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

  /// +1 or -1 with equal probability.
  double sign() { return (engine_() >> 63) ? 1.0 : -1.0; }

  /// Standard Gaussian in the requested field; complex draws have
  /// E|z|^2 = 1 (independent real and imaginary parts of variance 1/2).
  template <class S>
  S gaussian() {
    if constexpr (std::is_same_v<S, double>) {
      return normal();
    } else {
      const double re = normal();
      const double im = normal();
      return S(re, im) / std::numbers::sqrt2;
    }
  }

  /// k distinct indices from [0, n), in draw order (partial Fisher-Yates).
  std::vector<std::size_t> sample_without_replacement(std::size_t n,
                                                      std::size_t k) {
    if (k > n)
      throw Error(ErrorKind::InvalidArgument,
                  "sample_without_replacement: k > n");
    std::vector<std::size_t> pool(n);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    for (std::size_t i = 0; i < k; ++i) {
      const auto j = i + static_cast<std::size_t>(uniform_index(n - i));
      std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    return pool;
  }

 private:
  static std::uint64_t mix(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64(splitmix64(seed) ^ splitmix64(~stream));
  }

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Draws index i with probability p[i]: one uniform draw, first i whose
/// running sum exceeds it. Zero-probability entries are never returned.
inline std::size_t sample_index(std::span<const double> p, RngStream& rng) {
  if (p.empty()) throw Error(ErrorKind::InvalidArgument, "sample_index: empty p");
  const double u = rng.uniform();
  double acc = 0.0;
  std::size_t last = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    acc += p[i];
    last = i;
    if (u < acc) return i;
  }
  return last;
}

}  // namespace gerk
