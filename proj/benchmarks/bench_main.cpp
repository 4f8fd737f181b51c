#include <benchmark/benchmark.h>

#include <cmath>

#include "mc2a/compiler.hpp"
#include "mc2a/mcmc.hpp"
#include "mc2a/samplers.hpp"
#include "mc2a/sim.hpp"
#include "mc2a/workloads.hpp"

using namespace mc2a;

static void BM_GumbelExact(benchmark::State& state) {
  const auto logits = random_logits(static_cast<std::size_t>(state.range(0)), 4.0, 1);
  UniformRng rng(3);
  for (auto _ : state) benchmark::DoNotOptimize(gumbel_sample(logits, rng));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_GumbelExact)->RangeMultiplier(4)->Range(4, 256);

static void BM_GumbelLut(benchmark::State& state) {
  const auto logits = random_logits(static_cast<std::size_t>(state.range(0)), 4.0, 1);
  std::vector<std::int32_t> fixed;
  for (double v : logits) fixed.push_back(static_cast<std::int32_t>(std::lround(v * 256)));
  const GumbelLut lut;
  UniformRng rng(3);
  for (auto _ : state) benchmark::DoNotOptimize(gumbel_sample_lut(fixed, 8, lut, rng));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_GumbelLut)->RangeMultiplier(4)->Range(4, 256);

static void BM_ChainGibbsIsing(benchmark::State& state) {
  const auto m = make_ising_grid(16, 16, 1.0, 0.1);
  ChainConfig c;
  c.num_steps = 100;
  for (auto _ : state) benchmark::DoNotOptimize(run_chain(m, c).best_energy);
  state.SetItemsProcessed(state.iterations() * 100 * 256);
}
BENCHMARK(BM_ChainGibbsIsing);

static void BM_ChainPasMaxcut(benchmark::State& state) {
  const auto m = make_maxcut(125, random_graph(125, 375, 1));
  ChainConfig c;
  c.algorithm = Algorithm::kPas;
  c.pas_L = 2;
  c.num_steps = 1000;
  for (auto _ : state) benchmark::DoNotOptimize(run_chain(m, c).best_energy);
  state.SetItemsProcessed(state.iterations() * 1000);
}
BENCHMARK(BM_ChainPasMaxcut);

static void BM_CompileIsing32(benchmark::State& state) {
  const auto m = quantize_energies(make_ising_grid(32, 32, 1.0, 0.1), 8);
  const HwConfig hw{16, 2, 16, 4, 128, 500e6, 4};
  for (auto _ : state) benchmark::DoNotOptimize(compile(m, Algorithm::kBlockGibbs, hw).code.size());
}
BENCHMARK(BM_CompileIsing32);

static void BM_SimulateIsing4(benchmark::State& state) {
  const auto prog = compile(quantize_energies(make_ising_grid(4, 4, 1.0, 0.1), 8), Algorithm::kBlockGibbs,
                            HwConfig::toy(), CompileOptions{.num_steps = 1000});
  std::uint64_t cycles = 0;
  for (auto _ : state) cycles += simulate(prog, {}).stats.cycles;
  state.counters["sim_cycles_per_s"] = benchmark::Counter(static_cast<double>(cycles), benchmark::Counter::kIsRate);
}
BENCHMARK(BM_SimulateIsing4);
BENCHMARK_MAIN();
