#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>

namespace cfsim {

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x)
{
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed for the stream owned by (run seed, node, word). Independent of the
/// order in which streams are visited.
constexpr std::uint64_t stream_key(std::uint64_t seed, std::uint64_t node, std::uint64_t word)
{
  return mix64(mix64(mix64(seed) ^ node) ^ (word * 0xd1b54a32d192ed03ULL));
}

/// Counter-based splitmix64 stream.
class SplitMix64 {
 public:
  explicit constexpr SplitMix64(std::uint64_t state) : state_{state} {}

  constexpr std::uint64_t next()
  {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform in (0, 1].
  double uniform_open0() { return (static_cast<double>(next() >> 11) + 1.0) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

/// 64 independent Bernoulli(p) bits, drawn by geometric gap skipping.
inline std::uint64_t bernoulli_word(SplitMix64& gen, double p)
{
  if (p <= 0.0) {
    return 0;
  }
  if (p >= 1.0) {
    return ~std::uint64_t{0};
  }
  const double log_q = std::log1p(-p);
  std::uint64_t word = 0;
  double pos = -1.0;
  for (;;) {
    pos += std::floor(std::log(gen.uniform_open0()) / log_q) + 1.0;
    if (pos >= 64.0) {
      return word;
    }
    word |= std::uint64_t{1} << static_cast<unsigned>(pos);
  }
}

/// Seeded generator for data handling and training. Uses std::mt19937_64,
/// whose output is fixed by the standard, and its own distributions, which
/// unlike the std:: ones are identical on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_{seed} {}

  std::uint64_t next() { return engine_(); }

  /// Uniform integer in [0, n) by rejection.
  std::uint64_t below(std::uint64_t n)
  {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller.
  double normal()
  {
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  template <class It>
  void shuffle(It first, It last)
  {
    const auto n = static_cast<std::uint64_t>(last - first);
    for (std::uint64_t i = n; i > 1; --i) {
      const std::uint64_t j = below(i);
      std::iter_swap(first + (i - 1), first + j);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace cfsim
