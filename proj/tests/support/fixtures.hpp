#pragma once

// Small circuits and stimuli shared by the unit and acceptance tests.

#include <cstdint>
#include <set>
#include <vector>

#include "cfsim/circuit.hpp"
#include "cfsim/models.hpp"
#include "cfsim/rng.hpp"
#include "cfsim/simulator.hpp"
#include "cfsim/word_arith.hpp"

namespace cfsim::fixtures {

/// Every assignment of n inputs; input k of example e is bit k of e.
inline Stimulus full_cube(std::size_t n)
{
  Stimulus s;
  s.num_examples = std::size_t{1} << n;
  s.inputs.assign(n, BitColumn(s.num_examples));
  for (std::size_t e = 0; e < s.num_examples; ++e) {
    for (std::size_t k = 0; k < n; ++k) {
      s.inputs[k].set(e, (e >> k) & 1);
    }
  }
  return s;
}

inline Stimulus random_stimulus(std::size_t inputs, std::size_t n, Rng& rng)
{
  Stimulus s;
  s.num_examples = n;
  s.inputs.assign(inputs, BitColumn(n));
  for (auto& col : s.inputs) {
    for (std::size_t e = 0; e < n; ++e) col.set(e, rng.next() & 1);
  }
  return s;
}

/// Row e of the stimulus as one byte per input.
inline std::vector<std::uint8_t> example_bits(const Stimulus& s, std::size_t e)
{
  std::vector<std::uint8_t> bits;
  for (const auto& col : s.inputs) bits.push_back(col.get(e) ? 1 : 0);
  return bits;
}

/// Single-output function as the two one-bit buses {!f, f}, so class 1
/// means "f is true".
inline void add_boolean_output(CircuitBuilder& b, Literal f)
{
  b.add_bus("class0", {!f});
  b.add_bus("class1", {f});
}

/// Random DAG over `inputs` inputs with up to `gates` gates, drawn from
/// earlier nodes and the constants, with random complement flags. Bus
/// widths are random unless `width` is nonzero.
inline Circuit random_circuit(Rng& rng, std::size_t inputs, std::size_t gates,
                              std::size_t outputs = 4, BuildOptions opts = {},
                              std::size_t width = 0)
{
  CircuitBuilder b{opts};
  std::vector<Literal> pool{kFalse};
  for (std::size_t i = 0; i < inputs; ++i) pool.push_back(b.add_input());
  for (std::size_t g = 0; g < gates; ++g) {
    // Occasionally pick the constant so propagation paths get exercised.
    const Literal x = pool[rng.below(pool.size())] ^ (rng.next() & 1);
    const Literal y = pool[rng.below(pool.size())] ^ (rng.next() & 1);
    pool.push_back(rng.below(3) == 0 ? b.add_xor(x, y) : b.add_and(x, y));
  }
  for (std::size_t o = 0; o < outputs; ++o) {
    std::vector<Literal> bits;
    const std::size_t w = width != 0 ? width : 1 + rng.below(3);
    for (std::size_t k = 0; k < w; ++k) {
      bits.push_back(pool[pool.size() - 1 - rng.below(std::min<std::size_t>(pool.size(), 16))] ^
                     (rng.next() & 1));
    }
    b.add_bus("o" + std::to_string(o), bits);
  }
  return std::move(b).freeze();
}

/// f(a,b,c) = a, wired straight through.
inline Circuit direct_a()
{
  CircuitBuilder b;
  const Literal a = b.add_input();
  b.add_input();
  b.add_input();
  add_boolean_output(b, a);
  return std::move(b).freeze();
}

/// f(a,b,c) = abc + a!bc + ab!c + a!b!c with every product term built
/// separately.
inline Circuit redundant_sop_a()
{
  CircuitBuilder b;
  const Literal a = b.add_input();
  const Literal x = b.add_input();
  const Literal c = b.add_input();
  Literal sum = kFalse;
  for (int bneg = 0; bneg < 2; ++bneg) {
    for (int cneg = 0; cneg < 2; ++cneg) {
      const Literal term = b.add_and(b.add_and(a, x ^ (bneg != 0)), c ^ (cneg != 0));
      sum = sum == kFalse ? term : b.add_or(sum, term);
    }
  }
  add_boolean_output(b, sum);
  return std::move(b).freeze();
}

namespace detail {
inline Literal shannon_parity(CircuitBuilder& b, const std::vector<Literal>& x, std::size_t i,
                              bool odd)
{
  if (i == x.size()) return Literal::constant(odd);
  // Cofactors are built separately for each branch; nothing is shared.
  const Literal hi = shannon_parity(b, x, i + 1, !odd);
  const Literal lo = shannon_parity(b, x, i + 1, odd);
  return mux(b, x[i], hi, lo);
}
}  // namespace detail

/// Parity of n inputs as a full Shannon multiplexer tree on x0, x1, ...
inline Circuit parity_shannon_tree(std::size_t n)
{
  CircuitBuilder b;
  std::vector<Literal> x;
  for (std::size_t i = 0; i < n; ++i) x.push_back(b.add_input());
  add_boolean_output(b, detail::shannon_parity(b, x, 0, false));
  return std::move(b).freeze();
}

inline std::vector<std::uint8_t> parity_labels(std::size_t n)
{
  std::vector<std::uint8_t> y(std::size_t{1} << n);
  for (std::size_t e = 0; e < y.size(); ++e) y[e] = static_cast<std::uint8_t>(std::popcount(e) & 1);
  return y;
}

/// `count` distinct random byte vectors; entry i is labelled i % 10.
inline LutModel distinct_lut(std::size_t count, std::size_t width, std::uint64_t seed)
{
  Rng rng{seed};
  std::set<std::vector<std::uint8_t>> seen;
  LutModel m;
  while (m.entries.size() < count) {
    std::vector<std::uint8_t> x(width);
    for (auto& v : x) v = static_cast<std::uint8_t>(rng.below(256));
    if (!seen.insert(x).second) continue;
    m.entries.push_back({x, static_cast<std::uint8_t>(m.entries.size() % 10)});
  }
  return m;
}

inline std::vector<std::uint8_t> lut_rows(const LutModel& m)
{
  std::vector<std::uint8_t> rows;
  for (const auto& e : m.entries) rows.insert(rows.end(), e.x.begin(), e.x.end());
  return rows;
}

inline std::vector<std::uint8_t> lut_labels(const LutModel& m)
{
  std::vector<std::uint8_t> y;
  for (const auto& e : m.entries) y.push_back(e.label);
  return y;
}

}  // namespace cfsim::fixtures
