#include <cmath>
#include <map>

#include "doctest.h"
#include "mc2a/error.hpp"
#include "mc2a/mcmc.hpp"
#include "mc2a/samplers.hpp"
#include "mc2a/workloads.hpp"
#include "oracles.hpp"

using namespace mc2a;

namespace {

ChainResult chain(const GraphModel& m, Algorithm a, std::uint64_t steps, std::uint64_t seed = 1, int L = 1,
                  double beta = 1.0) {
  ChainConfig c;
  c.algorithm = a;
  c.num_steps = steps;
  c.burn_in = steps / 10;
  c.seed = seed;
  c.pas_L = L;
  c.anneal = AnnealSchedule::constant(beta);
  return run_chain(m, c);
}

// Small frustrated Ising model with fields; 8 binary RVs.
GraphModel small_ising() {
  const std::vector<WeightedEdge> edges{{0, 1, 0.8}, {1, 2, -0.6}, {2, 3, 0.5}, {3, 0, 0.7}, {4, 5, 0.9},
                                        {5, 6, -0.4}, {6, 7, 0.6}, {7, 4, 0.3}, {0, 4, 0.5}, {2, 6, -0.7}};
  return make_ising(8, edges, {0.2, -0.1, 0.0, 0.3, -0.2, 0.1, 0.0, -0.3});
}

}  // namespace

TEST_SUITE("mcmc") {
  TEST_CASE("Gibbs marginals on the Bayes nets match enumeration") {
    for (const auto& m : {make_chain_net(), make_earthquake(), make_survey()}) {
      const auto r = chain(m, Algorithm::kGibbs, 200000, 3);
      CHECK(oracle::max_marginal_tv(r.marginals(), oracle::marginals(m)) < 0.02);
    }
  }

  TEST_CASE("block Gibbs and MH marginals match enumeration") {
    const auto m = small_ising();
    const auto exact = oracle::marginals(m);
    CHECK(oracle::max_marginal_tv(chain(m, Algorithm::kBlockGibbs, 100000, 2).marginals(), exact) < 0.02);
    CHECK(oracle::max_marginal_tv(chain(m, Algorithm::kMh, 400000, 2).marginals(), exact) < 0.02);
  }

  TEST_CASE("PAS leaves the target distribution invariant") {
    // Joint histogram over all 256 states against enumeration.
    const auto m = small_ising();
    for (int L : {1, 3}) {
      CAPTURE(L);
      ChainConfig c;
      c.algorithm = Algorithm::kPas;
      c.num_steps = 300000;
      c.seed = 5;
      c.pas_L = L;
      c.record_states = true;
      const auto r = run_chain(m, c);
      std::vector<double> emp(256, 0.0), exact(256, 0.0);
      for (const auto& s : r.states) {
        int k = 0;
        for (int i = 0; i < 8; ++i) k = k * 2 + s[static_cast<std::size_t>(i)];
        emp[static_cast<std::size_t>(k)] += 1.0 / static_cast<double>(r.states.size());
      }
      double z = 0.0;
      oracle::for_each_state(m, [&](const auto& x) {
        int k = 0;
        for (int i = 0; i < 8; ++i) k = k * 2 + x[static_cast<std::size_t>(i)];
        z += exact[static_cast<std::size_t>(k)] = std::exp(-oracle::energy(m, x));
      });
      for (auto& v : exact) v /= z;
      CHECK(oracle::tv(emp, exact) < 0.03);
      CHECK(r.accepted > 0);
      CHECK(r.accepted < r.proposals);
    }
  }

  TEST_CASE("PAS flip gradient is the energy change of a flip") {
    const auto m = small_ising();
    UniformRng rng(4);
    for (int k = 0; k < 20; ++k) {
      std::vector<std::int32_t> x(8);
      for (auto& v : x) v = static_cast<std::int32_t>(rng.next_u64() & 1);
      const auto de = pas_delta_energies(m, x);
      for (std::size_t i = 0; i < 8; ++i) {
        auto y = x;
        y[i] ^= 1;
        CHECK(de[i] == doctest::Approx(oracle::energy(m, y) - oracle::energy(m, x)));
      }
    }
  }

  TEST_CASE("PAS step-1 index draws follow softmax(-beta dE / 2)") {
    const auto m = small_ising();
    StateVector s{{1, 0, 1, 1, 0, 0, 1, 0}, 0};
    const double beta = 1.5;
    const auto de = pas_delta_energies(m, s.values);
    std::vector<double> logits;
    for (double d : de) logits.push_back(-0.5 * beta * d);
    const auto expected = oracle::softmax(logits);
    std::vector<double> freq(8, 0.0);
    const int draws = 100000;
    for (int t = 0; t < draws; ++t) {
      StateVector copy = s;
      copy.step = static_cast<std::uint64_t>(t);
      const auto o = pas_step(m, copy, 1, beta, 77);
      freq[o.draws.at(0)] += 1.0 / draws;
    }
    CHECK(oracle::tv(freq, expected) < 0.02);
  }

  TEST_CASE("PAS deduplicates repeated index draws") {
    const auto m = make_maxcut(3, ring_graph(3));
    StateVector s = m.zero_state();
    for (std::uint64_t t = 0; t < 50; ++t) {
      s.step = t;
      StateVector copy = s;
      const auto o = pas_step(m, copy, 3, 1.0, 9);
      std::map<RvId, int> count;
      for (RvId r : o.selected) CHECK(++count[r] == 1);
      CHECK(o.draws.size() == 3);
    }
  }

  TEST_CASE("MH acceptance probability") {
    int acc = 0;
    for (int k = 0; k < 100000; ++k) {
      auto rng = UniformRng::for_stream(3, static_cast<std::uint64_t>(k), streams::kMhAccept);
      acc += mh_accept(std::log(0.3), rng);
    }
    CHECK(acc / 1e5 == doctest::Approx(0.3).epsilon(0.02));
    UniformRng rng(1);
    for (int k = 0; k < 100; ++k) CHECK(mh_accept(0.0, rng));
  }

  TEST_CASE("chains are reproducible and seed-dependent") {
    const auto m = make_maxcut(16, random_graph(16, 40, 3));
    for (Algorithm a : {Algorithm::kGibbs, Algorithm::kBlockGibbs, Algorithm::kAsyncGibbs, Algorithm::kMh,
                        Algorithm::kPas}) {
      ChainConfig c;
      const std::string alg = to_string(a);
      CAPTURE(alg);
      c.algorithm = a;
      c.num_steps = 500;
      c.seed = 12;
      c.pas_L = 2;
      c.anneal = AnnealSchedule::constant(0.3);
      c.record_states = true;
      const auto a1 = run_chain(m, c);
      if (a == Algorithm::kMh || a == Algorithm::kPas) CHECK(a1.accepted > 0);
      const auto a2 = run_chain(m, c);
      CHECK(a1.states == a2.states);
      CHECK(a1.histograms == a2.histograms);
      c.seed = 13;
      CHECK(run_chain(m, c).states != a1.states);
    }
  }

  TEST_CASE("best-energy trace is monotone and matches the best state") {
    ChainConfig c;
    c.algorithm = Algorithm::kPas;
    c.num_steps = 3000;
    c.pas_L = 2;
    c.trace_stride = 10;
    c.anneal = AnnealSchedule::geometric(0.5, 5.0, 3000);
    const auto m = make_maxcut(16, random_graph(16, 40, 3));
    const auto r = run_chain(m, c);
    REQUIRE(!r.energy_trace.empty());
    for (std::size_t k = 1; k < r.energy_trace.size(); ++k) {
      CHECK(r.energy_trace[k].best <= r.energy_trace[k - 1].best);
    }
    CHECK(oracle::energy(m, r.best_state.values) == doctest::Approx(r.best_energy));
  }

  TEST_CASE("configuration validation") {
    const auto m = make_chain_net();
    ChainConfig c;
    c.algorithm = Algorithm::kPas;
    c.pas_L = 4;
    CHECK_THROWS_AS(run_chain(m, c), InputError);
    c.pas_L = 1;
    c.burn_in = 2000;
    CHECK_THROWS_AS(run_chain(m, c), InputError);
    c.burn_in = 0;
    c.initial = {0, 2, 0};
    CHECK_THROWS_AS(run_chain(m, c), InputError);
    CHECK_THROWS_AS(parse_algorithm("hmc"), InputError);
  }

  TEST_CASE("CDF-sampler Gibbs agrees with enumeration") {
    ChainConfig c;
    c.num_steps = 100000;
    c.sampler = SamplerKind::kCdf;
    const auto m = make_earthquake();
    CHECK(oracle::max_marginal_tv(run_chain(m, c).marginals(), oracle::marginals(m)) < 0.02);
  }
}
