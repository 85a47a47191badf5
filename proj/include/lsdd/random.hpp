#pragma once

// Portable random streams.
//
// The engine is std::mt19937_64, whose output sequence is fixed by the C++
// standard. Seeds are derived with a SplitMix64 hash chain, and all
// distributions below are implemented here rather than taken from <random>
// (whose distributions are implementation-defined). A seed therefore yields
// the same samples on every conforming toolchain.

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <random>
#include <iterator>
#include <utility>

namespace lsdd {

//! One step of the SplitMix64 mixer.
constexpr std::uint64_t
splitmix64(std::uint64_t x) noexcept
{
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

//! Derives an independent stream seed from a base seed and a path of stream
//! identifiers, e.g. derive_seed(seed, {experiment, replicate, role}).
constexpr std::uint64_t
derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> path) noexcept
{
  std::uint64_t h = splitmix64(base);
  for (auto id : path) {
    h = splitmix64(h ^ splitmix64(id + 0x632be59bd9b4e019ULL));
  }
  return h;
}

class Rng
{
public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 0)
    : engine_(splitmix64(seed))
  {}

  static constexpr result_type min() { return std::mt19937_64::min(); }
  static constexpr result_type max() { return std::mt19937_64::max(); }
  result_type operator()() { return engine_(); }

  //! Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  //! Standard normal via the Marsaglia polar method.
  double normal()
  {
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

  double normal(double mean, double sd) { return mean + sd * normal(); }

  bool bernoulli(double p) { return uniform() < p; }

  //! Uniform integer in [0, n), unbiased (rejection sampling).
  std::uint64_t below(std::uint64_t n)
  {
    if (n <= 1) {
      return 0;
    }
    const std::uint64_t limit = max() - (max() % n + 1) % n;
    std::uint64_t r;
    do {
      r = engine_();
    } while (r > limit);
    return r % n;
  }

  //! A seed for a child stream.
  std::uint64_t next_seed() { return engine_(); }

  //! Fisher-Yates shuffle.
  template<class Container>
  void shuffle(Container& values)
  {
    using std::swap;
    for (std::size_t i = std::size(values); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      swap(values[i - 1], values[j]);
    }
  }

private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

} // namespace lsdd
