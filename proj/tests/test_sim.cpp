#include <sstream>

#include "doctest.h"
#include "mc2a/compiler.hpp"
#include "mc2a/error.hpp"
#include "mc2a/sim.hpp"
#include "mc2a/workloads.hpp"

using namespace mc2a;

namespace {

struct Pair {
  SimResult sim;
  ChainResult ref;
};

// Same quantized model, anneal, seed and step count on both sides.
Pair run_both(const GraphModel& raw, Algorithm a, const HwConfig& hw, std::uint32_t steps, std::uint64_t seed,
              int L = 1, AnnealSchedule anneal = AnnealSchedule::constant(1.0)) {
  const auto m = quantize_energies(raw, 8);
  CompileOptions o;
  o.num_steps = steps;
  o.pas_L = L;
  o.anneal = anneal;
  const auto prog = compile(m, a, hw, o);
  SimOptions so;
  so.seed = seed;
  so.record_states = true;
  ChainConfig c;
  c.algorithm = a;
  c.num_steps = steps;
  c.seed = seed;
  c.pas_L = L;
  c.anneal = anneal;
  c.record_states = true;
  return {simulate(prog, so), run_chain(m, c)};
}

}  // namespace

TEST_SUITE("sim") {
  TEST_CASE("simulator states are bit-identical to the reference chain") {
    const HwConfig mid{16, 2, 16, 4, 128, 500e6, 4};
    struct Case {
      const char* name;
      GraphModel m;
      Algorithm a;
      HwConfig hw;
      int L;
    };
    const Case cases[] = {
        {"chain-bg", make_chain_net(), Algorithm::kBlockGibbs, HwConfig::toy(), 1},
        {"eq-async", make_earthquake(), Algorithm::kAsyncGibbs, HwConfig::toy(), 1},
        {"eq-gibbs", make_earthquake(), Algorithm::kGibbs, mid, 1},
        {"survey-bg", make_survey(), Algorithm::kBlockGibbs, HwConfig::standard(), 1},
        {"ising4-bg", make_ising_grid(4, 4, 1.0, 0.1), Algorithm::kBlockGibbs, HwConfig::toy(), 1},
        {"ising4-gibbs", make_ising_grid(4, 4, 1.0, 0.1), Algorithm::kGibbs, mid, 1},
        {"potts", make_potts(6, 3, ring_graph(6)), Algorithm::kGibbs, HwConfig::toy(), 1},
        {"maxcut16-toy", make_maxcut(16, random_graph(16, 40, 3)), Algorithm::kPas, HwConfig::toy(), 2},
        {"maxcut16-default", make_maxcut(16, random_graph(16, 40, 3)), Algorithm::kPas, HwConfig::standard(), 3},
        {"mis", make_mis(12, random_graph(12, 20, 5)), Algorithm::kPas, mid, 1},
    };
    for (const auto& c : cases) {
      CAPTURE(c.name);
      const auto r = run_both(c.m, c.a, c.hw, 300, 11, c.L, AnnealSchedule::geometric(0.5, 3.0, 300));
      REQUIRE(r.sim.states.size() == r.ref.states.size());
      CHECK(r.sim.states == r.ref.states);
      CHECK(r.sim.final_state == r.ref.final_state.values);
      CHECK(r.sim.stats.accepted == r.ref.accepted);
      CHECK(r.sim.violations.empty());
    }
  }

  TEST_CASE("histogram memory counts the recorded samples") {
    const auto r = run_both(make_earthquake(), Algorithm::kGibbs, HwConfig::toy(), 500, 4);
    REQUIRE(r.sim.histograms.size() == r.ref.histograms.size());
    CHECK(r.sim.histograms == r.ref.histograms);
  }

  TEST_CASE("sampler microbenchmark: CDF 2N+1 cycles, Gumbel N") {
    for (int n : {2, 8, 64, 128}) {
      CAPTURE(n);
      const auto cdf = sampler_microbench(n, true);
      const auto gum = sampler_microbench(n, false);
      CHECK(cdf.cycles_per_sample == doctest::Approx(2.0 * n + 1));
      CHECK(gum.cycles_per_sample == doctest::Approx(static_cast<double>(n)));
    }
    CHECK(sampler_microbench(256, true, 64, 256).cycles_per_sample == doctest::Approx(513.0));
    CHECK(sampler_microbench(256, false).cycles_per_sample == doctest::Approx(256.0));
  }

  TEST_CASE("CDF table overflow is a capacity error") {
    CHECK_THROWS_AS(sampler_microbench(256, true), CapacityError);
    CHECK_NOTHROW(sampler_microbench(128, true));
  }

  TEST_CASE("simulation is deterministic and seed-dependent") {
    const auto prog = compile(quantize_energies(make_ising_grid(4, 4, 1.0), 8), Algorithm::kBlockGibbs,
                              HwConfig::toy(), CompileOptions{.num_steps = 200});
    SimOptions o;
    o.record_states = true;
    const auto a = simulate(prog, o);
    const auto b = simulate(prog, o);
    CHECK(a.states == b.states);
    CHECK(a.stats.cycles == b.stats.cycles);
    o.seed = 2;
    CHECK(simulate(prog, o).states != a.states);
    // Step count is data independent for Gibbs.
    CHECK(simulate(prog, o).stats.cycles == a.stats.cycles);
  }

  TEST_CASE("steps and burn-in override") {
    const auto prog = compile(quantize_energies(make_chain_net(), 8), Algorithm::kGibbs, HwConfig::toy(),
                              CompileOptions{.num_steps = 50});
    SimOptions o;
    o.steps = 20;
    o.record_states = true;
    const auto r = simulate(prog, o);
    CHECK(r.stats.iterations == 20);
    CHECK(r.states.size() == 20);
    o.burn_in = 5;
    std::uint64_t total = 0;
    const auto burned = simulate(prog, o);
    for (auto v : burned.histograms[0]) total += v;
    CHECK(total == 15);
  }

  TEST_CASE("LUT noise runs and stays near the exact-noise marginals") {
    const auto m = quantize_energies(make_earthquake(), 8);
    const auto prog = compile(m, Algorithm::kGibbs, HwConfig::toy(), CompileOptions{.num_steps = 20000});
    const GumbelLut lut;
    SimOptions o;
    o.lut = &lut;
    const auto a = simulate(prog, o);
    o.lut = nullptr;
    const auto b = simulate(prog, o);
    CHECK(a.stats.cycles == b.stats.cycles);
    for (std::size_t i = 0; i < a.histograms.size(); ++i) {
      const double pa = static_cast<double>(a.histograms[i][1]) / 20000.0;
      const double pb = static_cast<double>(b.histograms[i][1]) / 20000.0;
      CHECK(std::abs(pa - pb) < 0.03);
    }
  }

  TEST_CASE("pipeline trace has one row per issue cycle") {
    const auto prog = compile(quantize_energies(make_chain_net(), 8), Algorithm::kBlockGibbs, HwConfig::toy(),
                              CompileOptions{.num_steps = 3});
    std::ostringstream os;
    SimOptions o;
    o.trace = &os;
    const auto r = simulate(prog, o);
    std::size_t lines = 0;
    for (char ch : os.str()) lines += ch == '\n';
    // Header plus issue cycles; the final drain is not traced.
    CHECK(lines == 1 + r.stats.cycles - static_cast<std::uint64_t>(PipelineTiming::for_hw(prog.hw).depth()) + 1);
    CHECK(os.str().rfind(kTraceHeader, 0) == 0);
  }

  TEST_CASE("a corrupted program is caught") {
    auto prog = compile(quantize_energies(make_ising_grid(4, 4, 1.0), 8), Algorithm::kBlockGibbs, HwConfig::toy(),
                        CompileOptions{.num_steps = 4, .insert_nops = false});
    CHECK(!check_structural(prog).empty());
    SimOptions o;
    CHECK_THROWS_AS(simulate(prog, o), InternalCheckError);
    o.strict = false;
    CHECK(!simulate(prog, o).violations.empty());
  }
}
