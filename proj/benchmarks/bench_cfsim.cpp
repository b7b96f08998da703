#include <benchmark/benchmark.h>

#include "cfsim/cfs.hpp"
#include "cfsim/compile.hpp"
#include "cfsim/dataset.hpp"
#include "cfsim/rng.hpp"

using namespace cfsim;

namespace {

QuantizedMlp random_mlp(std::size_t hidden)
{
  Rng rng{1};
  MlpModel m;
  m.layer_sizes = {64, hidden, hidden, 10};
  for (std::size_t k = 0; k + 1 < m.layer_sizes.size(); ++k) {
    m.weights.emplace_back(m.layer_sizes[k + 1], std::vector<double>(m.layer_sizes[k]));
    for (auto& row : m.weights.back())
      for (double& w : row) w = 0.3 * rng.normal();
    m.biases.emplace_back(m.layer_sizes[k + 1], 0.0);
  }
  return quantize_mlp(m);
}

struct Fixture {
  Dataset data = head(load_bundled_digits(CFSIM_BENCH_DATA_DIR), 1000);
  Stimulus stimulus = to_stimulus(data);
  Circuit circuit = compile_mlp(random_mlp(32));
  CountTable counts = simulate_and_count(circuit, stimulus).counts;
};

const Fixture& fixture()
{
  static const Fixture f;
  return f;
}

void BM_CompileMlp(benchmark::State& state)
{
  const QuantizedMlp q = random_mlp(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(compile_mlp(q));
}
BENCHMARK(BM_CompileMlp)->Arg(8)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_CountPass(benchmark::State& state)
{
  const Fixture& f = fixture();
  const SimOptions o{.threads = static_cast<unsigned>(state.range(0))};
  for (auto _ : state) benchmark::DoNotOptimize(simulate_and_count(f.circuit, f.stimulus, false, o));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.circuit.size() * f.stimulus.num_examples));
}
BENCHMARK(BM_CountPass)->Arg(1)->Arg(0)->Unit(benchmark::kMillisecond)->UseRealTime();

void BM_SimplePerturbedPass(benchmark::State& state)
{
  const Fixture& f = fixture();
  const PerturbPlan plan = PerturbPlan::simple(f.circuit, f.counts, 16);
  for (auto _ : state) benchmark::DoNotOptimize(simulate_perturbed(f.circuit, f.stimulus, plan));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.circuit.size() * f.stimulus.num_examples));
}
BENCHMARK(BM_SimplePerturbedPass)->Unit(benchmark::kMillisecond)->UseRealTime();

void BM_NoisePass(benchmark::State& state)
{
  const Fixture& f = fixture();
  const PerturbPlan plan = PerturbPlan::noise(f.circuit, 1.0 / 1024, 1);
  for (auto _ : state) benchmark::DoNotOptimize(simulate_perturbed(f.circuit, f.stimulus, plan));
}
BENCHMARK(BM_NoisePass)->Unit(benchmark::kMillisecond)->UseRealTime();

void BM_UnaffectedCounts(benchmark::State& state)
{
  const Fixture& f = fixture();
  const std::uint64_t ls[] = {8, 16, 32, 64};
  for (auto _ : state) benchmark::DoNotOptimize(unaffected_counts(f.circuit, f.stimulus, f.counts, ls));
}
BENCHMARK(BM_UnaffectedCounts)->Unit(benchmark::kMillisecond)->UseRealTime();

}  // namespace

BENCHMARK_MAIN();
