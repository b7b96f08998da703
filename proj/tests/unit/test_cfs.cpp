#include <gtest/gtest.h>

#include <sstream>

#include "cfsim/cfs.hpp"
#include "cfsim/compile.hpp"
#include "fixtures.hpp"

using namespace cfsim;
using fixtures::full_cube;
using fixtures::random_circuit;
using fixtures::random_stimulus;

namespace {

std::vector<std::uint8_t> first_bit_labels(const Stimulus& s)
{
  std::vector<std::uint8_t> y(s.num_examples);
  for (std::size_t e = 0; e < y.size(); ++e) y[e] = s.inputs[0].get(e);
  return y;
}

Circuit identity_gate()
{
  CircuitBuilder b{{.simplify_same_operand = false}};
  const Literal x = b.add_input();
  fixtures::add_boolean_output(b, b.add_and(x, x));
  return std::move(b).freeze();
}

}  // namespace

TEST(CfsCurve, ThresholdZeroIsBaseline)
{
  const LutModel m = fixtures::distinct_lut(50, 2, 9);
  const Circuit c = compile_lut(m);
  const Stimulus s = byte_stimulus(fixtures::lut_rows(m), 50, 2);
  const auto y = fixtures::lut_labels(m);
  const std::uint64_t zero[] = {0};
  for (CfsMode mode : {CfsMode::Simple, CfsMode::Composite, CfsMode::Randomized}) {
    const CfsCurve curve = cfs_curve(c, s, y, zero, mode);
    EXPECT_DOUBLE_EQ(curve.baseline, 1.0);
    EXPECT_DOUBLE_EQ(curve.rows[0].accuracy, 1.0);
    EXPECT_EQ(curve.rows[0].unaffected, 50u);
    EXPECT_EQ(curve.rows[0].perturbed_nodes, 0u);
  }
}

TEST(CfsCurve, SharedCountsEqualPerThresholdRuns)
{
  Rng rng{5};
  for (int t = 0; t < 10; ++t) {
    const Circuit c = random_circuit(rng, 6, 150, 4, {}, 2);
    const Stimulus s = random_stimulus(6, 200, rng);
    std::vector<std::uint8_t> y(200);
    for (auto& v : y) v = static_cast<std::uint8_t>(rng.below(4));
    const std::vector<std::uint64_t> sched{0, 1, 5, 20, 100};
    for (CfsMode mode : {CfsMode::Simple, CfsMode::Composite, CfsMode::Randomized}) {
      const CfsOptions o{.include_inputs = t % 2 == 0, .seed = 3, .decoding = BusDecoding::Unsigned};
      const CfsCurve curve = cfs_curve(c, s, y, sched, mode, o);
      for (std::size_t i = 0; i < sched.size(); ++i) {
        const CfsRow one = cfs_accuracy(c, s, y, sched[i], mode, o);
        EXPECT_EQ(one.accuracy, curve.rows[i].accuracy);
        EXPECT_EQ(one.unaffected, curve.rows[i].unaffected);
        EXPECT_EQ(one.perturbed_nodes, curve.rows[i].perturbed_nodes);
      }
    }
  }
}

TEST(CfsCurve, LookupTableCollapsesToClassZero)
{
  const LutModel m = fixtures::distinct_lut(100, 3, 4);
  const Circuit c = compile_lut(m);
  const Stimulus s = byte_stimulus(fixtures::lut_rows(m), 100, 3);
  const auto y = fixtures::lut_labels(m);
  const std::uint64_t sched[] = {1, 2, 4};
  const CfsCurve curve = cfs_curve(c, s, y, sched, CfsMode::Simple);
  EXPECT_DOUBLE_EQ(curve.baseline, 1.0);
  for (const CfsRow& r : curve.rows) {
    EXPECT_DOUBLE_EQ(r.accuracy, 0.10);
    EXPECT_EQ(r.unaffected, 0u);
  }
}

TEST(CfsCurve, FunctionFixturesOnTheCube)
{
  const Stimulus s = full_cube(3);
  const auto y = first_bit_labels(s);
  const Circuit direct = fixtures::direct_a();
  const Circuit sop = fixtures::redundant_sop_a();
  const auto base = simulate_and_count(direct, s).outputs;
  EXPECT_EQ(simulate_and_count(sop, s).outputs, base);
  EXPECT_EQ(simulate_perturbed(direct, s, PerturbPlan::simple(direct, simulate_and_count(direct, s).counts, 1)), base);
  const auto sop1 = simulate_perturbed(sop, s, PerturbPlan::simple(sop, simulate_and_count(sop, s).counts, 1));
  for (std::size_t e = 0; e < 8; ++e) {
    EXPECT_FALSE(sop1[1].bits[0].get(e));
    EXPECT_TRUE(sop1[0].bits[0].get(e));
  }
  EXPECT_DOUBLE_EQ(cfs_accuracy(sop, s, y, 1, CfsMode::Simple).accuracy, 0.5);
}

TEST(CfsCurve, BalancedParityTreeIsUntouched)
{
  const Circuit c = fixtures::parity_shannon_tree(8);
  const Stimulus s = full_cube(8);
  const auto y = fixtures::parity_labels(8);
  std::vector<std::uint64_t> sched;
  for (std::uint64_t l = 1; l < 128; ++l) sched.push_back(l);
  const CfsCurve curve = cfs_curve(c, s, y, sched, CfsMode::Simple);
  EXPECT_DOUBLE_EQ(curve.baseline, 1.0);
  for (const CfsRow& r : curve.rows) {
    EXPECT_DOUBLE_EQ(r.accuracy, 1.0) << r.l;
    EXPECT_EQ(r.perturbed_nodes, 0u);
  }
  const std::uint64_t half[] = {128};
  EXPECT_LT(cfs_curve(c, s, y, half, CfsMode::Simple).rows[0].accuracy, 1.0);
}

TEST(CfsCurve, RejectsBadSchedules)
{
  const Circuit c = fixtures::direct_a();
  const Stimulus s = full_cube(3);
  const auto y = first_bit_labels(s);
  EXPECT_THROW(cfs_curve(c, s, y, std::vector<std::uint64_t>{}, CfsMode::Simple), std::invalid_argument);
  EXPECT_THROW(cfs_curve(c, s, y, std::vector<std::uint64_t>{2, 2}, CfsMode::Simple), std::invalid_argument);
  EXPECT_THROW(cfs_curve(c, s, y, std::vector<std::uint64_t>{4, 1}, CfsMode::Simple), std::invalid_argument);
}

TEST(Noise, ZeroProbabilityIsBaselineWithNoSpread)
{
  const Circuit c = fixtures::parity_shannon_tree(6);
  const Stimulus s = full_cube(6);
  const auto y = fixtures::parity_labels(6);
  const double ps[] = {0.0};
  const auto rows = noise_curve(c, s, y, ps, 4, 1);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_DOUBLE_EQ(rows[0].mean_accuracy, 1.0);
  EXPECT_DOUBLE_EQ(rows[0].stddev, 0.0);
  EXPECT_EQ(rows[0].trials, 4u);
  EXPECT_THROW(noise_curve(c, s, y, ps, 0, 1), std::invalid_argument);
}

TEST(Noise, FairCoinOnIdentityGate)
{
  const Circuit c = identity_gate();
  ASSERT_EQ(c.num_gates(), 1u);
  Rng rng{8};
  const Stimulus s = random_stimulus(1, 10000, rng);
  const auto y = first_bit_labels(s);
  const double ps[] = {0.5, 0.25, 1.0};
  const auto rows = noise_curve(c, s, y, ps, 3, 2);
  EXPECT_NEAR(rows[0].mean_accuracy, 0.5, 0.03);
  EXPECT_NEAR(rows[1].mean_accuracy, 0.75, 0.03);
  EXPECT_DOUBLE_EQ(rows[2].mean_accuracy, 0.0);
  EXPECT_GT(rows[0].stddev, 0.0);

  // The input itself is only hit when asked for.
  const auto with_inputs = noise_curve(c, s, y, std::vector<double>{1.0}, 1, 2, {.include_inputs = true});
  EXPECT_DOUBLE_EQ(with_inputs[0].mean_accuracy, 1.0);
}

TEST(Noise, SeededAndThreadIndependent)
{
  Rng rng{9};
  const Circuit c = random_circuit(rng, 8, 300, 3, {}, 3);
  const Stimulus s = random_stimulus(8, 1000, rng);
  std::vector<std::uint8_t> y(1000);
  for (auto& v : y) v = static_cast<std::uint8_t>(rng.below(3));
  const double ps[] = {0.001, 0.01, 0.1};
  NoiseOptions one{.decoding = BusDecoding::Unsigned, .sim = {.threads = 1}};
  NoiseOptions many{.decoding = BusDecoding::Unsigned, .sim = {.threads = 4, .block_words = 2}};
  const auto a = noise_curve(c, s, y, ps, 3, 42, one);
  const auto b = noise_curve(c, s, y, ps, 3, 42, many);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].mean_accuracy, b[i].mean_accuracy);
    EXPECT_EQ(a[i].stddev, b[i].stddev);
  }
}

TEST(RareStats, ParityTreeHasNoRareNodesBelowHalf)
{
  const Circuit c = fixtures::parity_shannon_tree(8);
  const Stimulus s = full_cube(8);
  const CountTable counts = simulate_and_count(c, s).counts;
  const std::uint64_t sched[] = {1, 64, 127, 128};
  const auto rows = rare_stats(c, s, counts, sched);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(rows[i].rare_node_count, 0u);
    EXPECT_EQ(rows[i].unaffected, 256u);
  }
  EXPECT_GT(rows[3].rare_node_count, 0u);
  EXPECT_EQ(rows[3].unaffected, 0u);
}

TEST(RareStats, ConstantOutputsAreNeverRare)
{
  CircuitBuilder b;
  const Literal x = b.add_input();
  b.add_bus("class0", {kTrue});
  b.add_bus("class1", {b.add_and(x, !x)});
  const Circuit c = std::move(b).freeze();
  const Stimulus s = full_cube(1);
  const auto rows = rare_stats(c, s, simulate_and_count(c, s).counts, std::vector<std::uint64_t>{0, 1}, false);
  EXPECT_EQ(rows[0].rare_node_count, 0u);
  EXPECT_EQ(rows[1].rare_node_count, 0u);
  EXPECT_EQ(rows[1].unaffected, 2u);
}

TEST(Csv, CfsFormat)
{
  CfsCurve curve;
  curve.baseline = 1.0;
  curve.rows = {{0, 1.0, 8, 0}, {4, 1.0 / 3.0, 0, 12}};
  std::ostringstream out;
  write_cfs_csv(out, curve, "model=x.json digest=00ff");
  EXPECT_EQ(out.str(),
            "# model=x.json digest=00ff\n"
            "l,accuracy,unaffected,perturbed_nodes\n"
            "0,1,8,0\n"
            "4,0.3333333333,0,12\n");
  std::ostringstream bare;
  write_cfs_csv(bare, curve);
  EXPECT_EQ(bare.str().rfind("l,accuracy", 0), 0u);
}

TEST(Csv, NoiseFormat)
{
  const std::vector<NoiseRow> rows{{0.03125, 0.5, 0.125, 5}};
  std::ostringstream out;
  write_noise_csv(out, rows, "seed=1");
  EXPECT_EQ(out.str(), "# seed=1\np,mean_accuracy,stddev,trials\n0.03125,0.5,0.125,5\n");
}

TEST(Digest, Fnv1aKnownValues)
{
  EXPECT_EQ(fnv1a64({}), 0xcbf29ce484222325ULL);
  const std::vector<std::uint8_t> a{'a'};
  EXPECT_EQ(fnv1a64(a), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(hex64(0xabcULL), "0000000000000abc");
  EXPECT_STRNE(version(), "");
}
