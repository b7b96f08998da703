#include <gtest/gtest.h>

#include <algorithm>
#include <functional>

#include "cfsim/simulator.hpp"
#include "cfsim/word_arith.hpp"
#include "fixtures.hpp"

using namespace cfsim;

namespace {

std::int64_t decode(std::span<const BitColumn> bits, std::size_t e, bool is_signed)
{
  std::int64_t v = 0;
  for (std::size_t k = 0; k < bits.size(); ++k) v |= std::int64_t{bits[k].get(e)} << k;
  if (is_signed && ((v >> (bits.size() - 1)) & 1)) v -= std::int64_t{1} << bits.size();
  return v;
}

using Build = std::function<BitWord(CircuitBuilder&, const std::vector<BitWord>&)>;

// Builds a circuit with one input word per format, evaluates it on each row
// of `rows` in a single bit-parallel pass and returns the decoded outputs.
std::vector<std::int64_t> run(const std::vector<FixedFormat>& formats,
                              const std::vector<std::vector<std::int64_t>>& rows, const Build& build,
                              std::size_t* gates = nullptr)
{
  CircuitBuilder b;
  std::vector<BitWord> words;
  for (const FixedFormat& f : formats) {
    BitWord w;
    w.format = f;
    for (int k = 0; k < f.total_bits; ++k) w.bits.push_back(b.add_input());
    words.push_back(w);
  }
  const BitWord out = build(b, words);
  b.add_bus("out", out.bits);
  const Circuit c = std::move(b).freeze();
  if (gates) *gates = c.num_gates();

  Stimulus s;
  s.num_examples = rows.size();
  s.inputs.assign(c.num_inputs(), BitColumn(rows.size()));
  for (std::size_t e = 0; e < rows.size(); ++e) {
    std::size_t base = 0;
    for (std::size_t i = 0; i < formats.size(); ++i) {
      for (int k = 0; k < formats[i].total_bits; ++k) {
        s.inputs[base + static_cast<std::size_t>(k)].set(e, (rows[e][i] >> k) & 1);
      }
      base += static_cast<std::size_t>(formats[i].total_bits);
    }
  }
  const auto outs = simulate_and_count(c, s).outputs;
  std::vector<std::int64_t> vals;
  for (std::size_t e = 0; e < rows.size(); ++e) {
    vals.push_back(decode(outs[0].bits, e, out.format.is_signed));
  }
  return vals;
}

std::vector<std::vector<std::int64_t>> all_pairs(const FixedFormat& f)
{
  std::vector<std::vector<std::int64_t>> rows;
  for (std::int64_t a = f.min_code(); a <= f.max_code(); ++a)
    for (std::int64_t b = f.min_code(); b <= f.max_code(); ++b) rows.push_back({a, b});
  return rows;
}

std::int64_t clamp_to(std::int64_t v, int bits)
{
  const std::int64_t lo = -(std::int64_t{1} << (bits - 1));
  return std::clamp(v, lo, -lo - 1);
}

std::int64_t floor_div(std::int64_t a, std::int64_t d)
{
  std::int64_t q = a / d;
  if ((a % d != 0) && ((a < 0) != (d < 0))) --q;
  return q;
}

constexpr FixedFormat kS6{6, 0, true};
constexpr FixedFormat kS8{8, 0, true};
constexpr FixedFormat kU6{6, 0, false};

}  // namespace

TEST(ConstWord, Encodings)
{
  CircuitBuilder b;
  const BitWord zero = const_word(b, 0, kWeightFormat);
  EXPECT_EQ(zero.bits, std::vector<Literal>(8, kFalse));
  const BitWord ones = const_word(b, -1, kWeightFormat);
  EXPECT_EQ(ones.bits, std::vector<Literal>(8, kTrue));
  const BitWord one = const_word(b, 64, kActivationFormat);
  for (int k = 0; k < 16; ++k) EXPECT_EQ(one.bits[static_cast<std::size_t>(k)], Literal::constant(k == 6));
  EXPECT_THROW(const_word(b, 128, kWeightFormat), std::out_of_range);
  EXPECT_THROW(const_word(b, -1, kByteFormat), std::out_of_range);
}

TEST(AddWords, Examples)
{
  const auto v = run({kS8, kS8}, {{3, 5}, {127, 1}, {-128, -1}}, [](auto& b, auto& w) {
    return add_words(b, w[0], w[1]);
  });
  EXPECT_EQ(v, (std::vector<std::int64_t>{8, -128, 127}));
}

TEST(AddWords, ExhaustiveSixBit)
{
  const auto rows = all_pairs(kS6);
  const auto v = run({kS6, kS6}, rows, [](auto& b, auto& w) { return add_words(b, w[0], w[1]); });
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::int64_t sum = (rows[i][0] + rows[i][1]) & 63;
    EXPECT_EQ(v[i], sum >= 32 ? sum - 64 : sum);
  }
}

TEST(AddWords, WidthMismatchThrows)
{
  CircuitBuilder b;
  EXPECT_THROW(add_words(b, const_word(b, 1, kS6), const_word(b, 1, kS8)), std::invalid_argument);
}

TEST(AddSaturating, Examples)
{
  const auto v = run({kS8, kS8}, {{100, 100}, {-100, -100}, {-5, 3}}, [](auto& b, auto& w) {
    return add_saturating(b, w[0], w[1]);
  });
  EXPECT_EQ(v, (std::vector<std::int64_t>{127, -128, -2}));
}

TEST(AddSaturating, ExhaustiveSixBit)
{
  const auto rows = all_pairs(kS6);
  const auto add = run({kS6, kS6}, rows, [](auto& b, auto& w) { return add_saturating(b, w[0], w[1]); });
  const auto sub = run({kS6, kS6}, rows, [](auto& b, auto& w) { return sub_saturating(b, w[0], w[1]); });
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(add[i], clamp_to(rows[i][0] + rows[i][1], 6));
    EXPECT_EQ(sub[i], clamp_to(rows[i][0] - rows[i][1], 6));
    EXPECT_EQ(fixed::add_saturating(rows[i][0], rows[i][1], kS6), add[i]);
    EXPECT_EQ(fixed::sub_saturating(rows[i][0], rows[i][1], kS6), sub[i]);
  }
}

TEST(AddSaturatingUnsigned, ExhaustiveSixBit)
{
  const auto rows = all_pairs(kU6);
  const auto v = run({kU6, kU6}, rows, [](auto& b, auto& w) {
    return add_saturating_unsigned(b, w[0], w[1]);
  });
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(v[i], std::min<std::int64_t>(rows[i][0] + rows[i][1], 63));
  }
}

TEST(CsdDigits, KnownRecodings)
{
  EXPECT_EQ(csd_digits(5), (std::vector<CsdDigit>{{1, 2}, {1, 0}}));
  EXPECT_EQ(csd_digits(11), (std::vector<CsdDigit>{{1, 4}, {-1, 2}, {-1, 0}}));
  EXPECT_TRUE(csd_digits(0).empty());
  EXPECT_EQ(csd_digits(-1), (std::vector<CsdDigit>{{-1, 0}}));
  EXPECT_EQ(csd_digits(-128), (std::vector<CsdDigit>{{-1, 7}}));
}

namespace {

// Fewest nonzero signed digits needed for c, by exhaustive search over
// digit strings in {-1,0,1} up to 10 positions.
int min_signed_digits(std::int64_t c)
{
  int best = 99;
  std::function<void(int, std::int64_t, int)> go = [&](int pos, std::int64_t rest, int used) {
    if (used >= best) return;
    if (rest == 0) {
      best = used;
      return;
    }
    if (pos > 9) return;
    const std::int64_t p = std::int64_t{1} << pos;
    if (rest % (2 * p) == 0) {
      go(pos + 1, rest, used);
      return;
    }
    go(pos + 1, rest - p, used + 1);
    go(pos + 1, rest + p, used + 1);
  };
  go(0, c, 0);
  return best;
}

}  // namespace

TEST(CsdDigits, CanonicalOverWeightRange)
{
  for (std::int64_t c = -128; c <= 127; ++c) {
    const auto d = csd_digits(c);
    std::int64_t sum = 0;
    for (std::size_t i = 0; i < d.size(); ++i) {
      sum += d[i].sign * (std::int64_t{1} << d[i].shift);
      if (i > 0) EXPECT_GT(d[i - 1].shift, d[i].shift + 1) << "adjacent digits for " << c;
    }
    EXPECT_EQ(sum, c);
    EXPECT_LE(d.size(), 5u);  // ceil((8 + 1) / 2)
    EXPECT_EQ(static_cast<int>(d.size()), c == 0 ? 0 : min_signed_digits(c)) << c;
  }
}

TEST(MulConst, ZeroAndUnitWeights)
{
  CircuitBuilder b;
  BitWord u;
  u.format = kActivationFormat;
  for (int k = 0; k < 16; ++k) u.bits.push_back(b.add_input());
  for (const BitWord& w : {mul_const_csd(b, u, 0), mul_const_array(b, u, 0)}) {
    EXPECT_EQ(w.bits, std::vector<Literal>(24, kFalse));
    EXPECT_EQ(w.format, kAccumulatorFormat);
  }
  // 64 is a single digit: a pure rewiring of u, no gates.
  const std::size_t before = b.size();
  const BitWord w = mul_const_csd(b, u, 64);
  EXPECT_EQ(b.size(), before);
  for (int k = 0; k < 6; ++k) EXPECT_EQ(w.bits[static_cast<std::size_t>(k)], kFalse);
  for (int k = 6; k < 22; ++k) EXPECT_EQ(w.bits[static_cast<std::size_t>(k)], u.bits[static_cast<std::size_t>(k - 6)]);
  EXPECT_EQ(w.bits[22], u.bits[15]);
  EXPECT_EQ(w.bits[23], u.bits[15]);
}

TEST(MulConst, EveryWeightAgainstIntegerProduct)
{
  Rng rng{77};
  std::vector<std::vector<std::int64_t>> rows;
  for (std::int64_t u : {-32768, -32767, -1, 0, 1, 32767}) rows.push_back({u});
  while (rows.size() < 1000) rows.push_back({static_cast<std::int64_t>(rng.below(65536)) - 32768});
  std::size_t differs = 0;
  for (std::int64_t c = -128; c <= 127; ++c) {
    std::size_t g_csd = 0, g_arr = 0;
    const auto csd = run({kActivationFormat}, rows, [c](auto& b, auto& w) { return mul_const_csd(b, w[0], c); }, &g_csd);
    const auto arr = run({kActivationFormat}, rows, [c](auto& b, auto& w) { return mul_const_array(b, w[0], c); }, &g_arr);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const std::int64_t want = c * rows[i][0];
      ASSERT_EQ(csd[i], want) << "csd c=" << c << " u=" << rows[i][0];
      ASSERT_EQ(arr[i], want) << "array c=" << c << " u=" << rows[i][0];
      ASSERT_EQ(fixed::mul_const_csd(rows[i][0], c), want);
      ASSERT_EQ(fixed::mul_const_array(rows[i][0], c), want);
    }
    differs += g_csd != g_arr;
  }
  EXPECT_GT(differs, 0u);
}

TEST(MulConst, ElevenHasDifferentStructure)
{
  std::size_t g_csd = 0, g_arr = 0;
  run({kActivationFormat}, {{1}}, [](auto& b, auto& w) { return mul_const_csd(b, w[0], 11); }, &g_csd);
  run({kActivationFormat}, {{1}}, [](auto& b, auto& w) { return mul_const_array(b, w[0], 11); }, &g_arr);
  EXPECT_NE(g_csd, g_arr);
}

TEST(Relu, ExamplesAndExhaustive)
{
  std::vector<std::vector<std::int64_t>> rows;
  for (std::int64_t x = -128; x <= 127; ++x) rows.push_back({x});
  const auto v = run({kS8}, rows, [](auto& b, auto& w) { return relu(b, w[0]); });
  for (std::size_t i = 0; i < rows.size(); ++i) EXPECT_EQ(v[i], std::max<std::int64_t>(0, rows[i][0]));
  EXPECT_EQ(v[127], 0);       // x = -1
  EXPECT_EQ(v[128 + 37], 37);
}

TEST(Rescale, ExamplesAndSampled)
{
  Rng rng{4};
  std::vector<std::vector<std::int64_t>> rows{{64}, {-1}, {(1 << 23) - 1}, {-(1 << 23)}, {0}, {-64}, {-65}};
  while (rows.size() < 2000) rows.push_back({static_cast<std::int64_t>(rng.below(1 << 24)) - (1 << 23)});
  const auto v = run({kAccumulatorFormat}, rows, [](auto& b, auto& w) { return rescale_24_to_16(b, w[0]); });
  EXPECT_EQ(v[0], 1);
  EXPECT_EQ(v[1], -1);
  EXPECT_EQ(v[2], 32767);
  EXPECT_EQ(v[3], -32768);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(v[i], clamp_to(floor_div(rows[i][0], 64), 16)) << rows[i][0];
    EXPECT_EQ(fixed::rescale_24_to_16(rows[i][0]), v[i]);
  }
}

TEST(CompareLeqConst, EdgesAndExhaustive)
{
  CircuitBuilder b;
  BitWord x;
  x.format = kByteFormat;
  for (int k = 0; k < 8; ++k) x.bits.push_back(b.add_input());
  EXPECT_EQ(compare_leq_const(b, x, 255), kTrue);
  EXPECT_THROW(compare_leq_const(b, x, 256), std::out_of_range);
  EXPECT_THROW(compare_leq_const(b, x, -1), std::out_of_range);
  std::vector<Literal> outs;
  for (int t = 0; t < 256; ++t) outs.push_back(compare_leq_const(b, x, t));
  for (int t = 0; t < 256; ++t) b.add_bus("t" + std::to_string(t), {outs[static_cast<std::size_t>(t)]});
  const Circuit c = std::move(b).freeze();
  const auto res = simulate_and_count(c, fixtures::full_cube(8)).outputs;
  for (int t = 0; t < 256; ++t) {
    for (std::size_t v = 0; v < 256; ++v) {
      ASSERT_EQ(res[static_cast<std::size_t>(t)].bits[0].get(v), static_cast<int>(v) <= t) << v << " <= " << t;
    }
  }
}

TEST(Mux, ConstantSelectAndRandom)
{
  CircuitBuilder b;
  BitWord t, f;
  t.format = f.format = kS6;
  const Literal sel = b.add_input();
  for (int k = 0; k < 6; ++k) t.bits.push_back(b.add_input());
  for (int k = 0; k < 6; ++k) f.bits.push_back(b.add_input());
  EXPECT_EQ(mux_word(b, kFalse, t, f).bits, f.bits);
  EXPECT_EQ(mux_word(b, kTrue, t, f).bits, t.bits);
  EXPECT_THROW(mux_word(b, sel, t, const_word(b, 0, kS8)), std::invalid_argument);

  const auto v = run({kU6, kU6, FixedFormat{1, 0, false}}, [] {
    Rng rng{8};
    std::vector<std::vector<std::int64_t>> rows;
    for (int i = 0; i < 500; ++i)
      rows.push_back({static_cast<std::int64_t>(rng.below(64)), static_cast<std::int64_t>(rng.below(64)),
                      static_cast<std::int64_t>(rng.below(2))});
    return rows;
  }(), [](auto& b, auto& w) { return mux_word(b, w[2].bits[0], w[0], w[1]); });
  Rng rng{8};
  for (int i = 0; i < 500; ++i) {
    const std::int64_t a = static_cast<std::int64_t>(rng.below(64));
    const std::int64_t c = static_cast<std::int64_t>(rng.below(64));
    const std::int64_t s = static_cast<std::int64_t>(rng.below(2));
    EXPECT_EQ(v[static_cast<std::size_t>(i)], s ? a : c);
  }
}

TEST(Mux, SingleGateFormsForConstantData)
{
  CircuitBuilder b;
  const Literal s = b.add_input();
  const Literal x = b.add_input();
  const std::size_t before = b.size();
  mux(b, s, x, kFalse);
  mux(b, s, kTrue, x);
  mux(b, s, x, !x);
  EXPECT_EQ(b.size(), before + 3);
}

TEST(ByteLookup, MatchesTable)
{
  std::vector<std::int64_t> table(256);
  Rng rng{12};
  for (auto& v : table) v = static_cast<std::int64_t>(rng.below(1 << 16)) - (1 << 15);
  std::vector<std::vector<std::int64_t>> rows;
  for (std::int64_t p = 0; p < 256; ++p) rows.push_back({p});
  const auto v = run({kByteFormat}, rows, [&](auto& b, auto& w) {
    return byte_lookup(b, w[0].bits, table, kActivationFormat);
  });
  for (std::size_t p = 0; p < 256; ++p) EXPECT_EQ(v[p], table[p]);
}
