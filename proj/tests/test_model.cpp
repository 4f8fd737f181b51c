#include <fstream>
#include <set>
#include <sstream>

#include "doctest.h"
#include "mc2a/error.hpp"
#include "mc2a/model.hpp"
#include "mc2a/model_io.hpp"
#include "mc2a/rng.hpp"
#include "mc2a/workloads.hpp"
#include "oracles.hpp"

using namespace mc2a;

namespace {

std::vector<std::int32_t> random_state(const GraphModel& m, UniformRng& rng) {
  std::vector<std::int32_t> x(m.num_rvs());
  for (RvId i = 0; i < m.num_rvs(); ++i) x[i] = static_cast<std::int32_t>(rng.next_u64() % m.cardinality(i));
  return x;
}

}  // namespace

TEST_SUITE("model") {
  TEST_CASE("energy_full agrees with direct table indexing") {
    UniformRng rng(3);
    for (const auto& m : {make_earthquake(), make_survey(), make_ising_grid(3, 4, 0.7, 0.2),
                          make_potts(5, 3, ring_graph(5)), make_random_rbm(4, 3, 0.5, 2),
                          make_mis(6, random_graph(6, 7, 1))}) {
      for (int k = 0; k < 50; ++k) {
        const auto x = random_state(m, rng);
        CHECK(energy_full(m, StateVector{x, 0}) == doctest::Approx(oracle::energy(m, x)).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("local conditional energies differ from the full energy by a constant") {
    UniformRng rng(9);
    const auto m = make_survey();
    for (int k = 0; k < 20; ++k) {
      auto x = random_state(m, rng);
      for (RvId i = 0; i < m.num_rvs(); ++i) {
        const auto local = local_conditional_energies(m, StateVector{x, 0}, i);
        std::vector<double> full;
        for (int s = 0; s < m.cardinality(i); ++s) {
          auto y = x;
          y[i] = s;
          full.push_back(oracle::energy(m, y));
        }
        for (std::size_t s = 1; s < full.size(); ++s) {
          CHECK(local[s] - local[0] == doctest::Approx(full[s] - full[0]).epsilon(1e-12));
        }
      }
    }
  }

  TEST_CASE("Ising and MaxCut energies follow their closed forms") {
    const std::vector<WeightedEdge> edges{{0, 1, 1.5}, {1, 2, -0.5}, {0, 2, 2.0}};
    const auto ising = make_ising(3, edges, {0.25, 0.0, -1.0});
    const auto cut = make_maxcut(3, edges);
    oracle::for_each_state(ising, [&](const auto& x) {
      double e = 0.0;
      for (const auto& ed : edges) e -= ed.w * (2 * x[ed.u] - 1) * (2 * x[ed.v] - 1);
      e -= 0.25 * (2 * x[0] - 1) - 1.0 * (2 * x[2] - 1);
      CHECK(energy_full(ising, StateVector{x, 0}) == doctest::Approx(e));
      CHECK(energy_full(cut, StateVector{x, 0}) == doctest::Approx(-oracle::cut_value(edges, x)));
    });
  }

  TEST_CASE("MIS optimum is a maximum independent set") {
    // 5-cycle: independence number 2.
    const auto m = make_mis(5, ring_graph(5));
    CHECK(oracle::min_energy(m) == doctest::Approx(-2.0));
  }

  TEST_CASE("block partition blocks are independent sets covering every RV") {
    for (const auto& m : {make_ising_grid(4, 4, 1.0), make_earthquake(), make_survey(), make_chain_net(),
                          make_maxcut(16, random_graph(16, 40, 3)), make_random_rbm(5, 4, 0.5, 1)}) {
      const auto blocks = block_partition(m);
      std::set<RvId> seen;
      for (const auto& b : blocks) {
        const std::set<RvId> members(b.begin(), b.end());
        for (RvId r : b) {
          CHECK(seen.insert(r).second);
          for (RvId nb : markov_blanket(m, r)) CHECK(members.count(nb) == 0);
        }
      }
      CHECK(seen.size() == m.num_rvs());
    }
  }

  TEST_CASE("grid Ising partitions into the chessboard") {
    const auto blocks = block_partition(make_ising_grid(4, 4, 1.0));
    REQUIRE(blocks.size() == 2);
    CHECK(blocks[0].size() == 8);
    CHECK(blocks[1].size() == 8);
  }

  TEST_CASE("Markov blanket of a Bayes net node is parents, children and co-parents") {
    const auto m = make_earthquake();  // B, E -> A -> J, M
    auto mb = markov_blanket(m, 0);
    CHECK(std::set<RvId>(mb.begin(), mb.end()) == std::set<RvId>{1, 2});
    mb = markov_blanket(m, 2);
    CHECK(std::set<RvId>(mb.begin(), mb.end()) == std::set<RvId>{0, 1, 3, 4});
  }

  TEST_CASE("Bayes nets have the expected sizes") {
    const auto eq = make_earthquake();
    const auto sv = make_survey();
    CHECK(eq.num_rvs() == 5);
    CHECK(eq.num_edges() == 4);
    CHECK(sv.num_rvs() == 6);
    CHECK(sv.num_edges() == 6);
  }

  TEST_CASE("quantized models are exact multiples of the step") {
    const auto q = quantize_energies(make_earthquake(), 8);
    for (const auto& f : q.factors()) {
      for (double v : f.table) CHECK(v * 256.0 == std::nearbyint(v * 256.0));
    }
  }

  TEST_CASE("cardinality above 256 is a capacity error") {
    CHECK_THROWS_AS(make_distribution(300, 1), CapacityError);
    CHECK_NOTHROW(make_distribution(256, 1));
    std::istringstream bn("bayesnet\nvar X 300\ntable X energy\n0\nend\n");
    CHECK_THROWS_AS(parse_bayes_net(bn), CapacityError);
  }

  TEST_CASE("Bayes net text roundtrip") {
    for (const auto& m : {make_earthquake(), make_survey(), make_chain_net()}) {
      std::stringstream ss;
      write_bayes_net(ss, m);
      const auto back = parse_bayes_net(ss);
      REQUIRE(back.num_rvs() == m.num_rvs());
      UniformRng rng(4);
      for (int k = 0; k < 30; ++k) {
        const auto x = random_state(m, rng);
        CHECK(oracle::energy(back, x) == doctest::Approx(oracle::energy(m, x)).epsilon(1e-15));
      }
    }
  }

  TEST_CASE("probability tables convert to energies") {
    std::istringstream bn(
        "bayesnet\nvar A 2\nvar B 2 A\n"
        "table A prob\n0.25 0.75\n"
        "table B prob\n0.5 0.5\n0.1 0.9\nend\n");
    const auto m = parse_bayes_net(bn);
    CHECK(oracle::energy(m, {1, 0}) == doctest::Approx(-std::log(0.75) - std::log(0.1)));
  }

  TEST_CASE("parse errors carry line numbers") {
    std::istringstream bad("bayesnet\nvar A 2\ntable A prob\n0.5 0.5 0.5\nend\n");
    try {
      parse_bayes_net(bad, "t.bn");
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.line() == 4);
      CHECK(std::string(e.what()).rfind("t.bn:4:", 0) == 0);
    }
    std::istringstream zero("bayesnet\nvar A 2\ntable A prob\n0 1\nend\n");
    CHECK_THROWS_AS(parse_bayes_net(zero), ParseError);
    std::istringstream cyc("bayesnet\nvar A 2 B\nvar B 2 A\ntable A prob\n0.5 0.5\n0.5 0.5\ntable B prob\n0.5 0.5\n0.5 0.5\nend\n");
    CHECK_THROWS_AS(parse_bayes_net(cyc), InputError);
    std::istringstream g("p maxcut 3 2\ne 1 2\ne 2 9\n");
    try {
      parse_pairwise(g, "g.txt");
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.line() == 3);
    }
  }

  TEST_CASE("graph file roundtrip keeps edges and weights") {
    const auto edges = random_weighted_graph(20, 35, -3, 3, 7);
    std::stringstream ss;
    write_graph(ss, "maxcut", 20, edges);
    const auto inst = read_graph_instance(ss);
    REQUIRE(inst.edges.size() == edges.size());
    for (std::size_t k = 0; k < edges.size(); ++k) {
      CHECK(inst.edges[k].u == edges[k].u);
      CHECK(inst.edges[k].v == edges[k].v);
      CHECK(inst.edges[k].w == edges[k].w);
    }
  }

  TEST_CASE("data files match the builtin workloads") {
    const std::string dir = MC2A_DATA_DIR;
    UniformRng rng(11);
    const std::pair<const char*, GraphModel> files[] = {
        {"earthquake.bn", make_earthquake()},
        {"survey.bn", make_survey()},
        {"chain.bn", make_chain_net()},
        {"maxcut16.graph", builtin_workload("maxcut16")},
        {"optsicom125.graph", make_maxcut(125, random_weighted_graph(125, 375, -1, 1, 125))},
    };
    for (const auto& [name, ref] : files) {
      CAPTURE(name);
      const auto m = load_model(dir + "/" + name);
      REQUIRE(m.num_rvs() == ref.num_rvs());
      CHECK(m.num_edges() == ref.num_edges());
      for (int k = 0; k < 50; ++k) {
        const auto x = random_state(m, rng);
        CHECK(oracle::energy(m, x) == doctest::Approx(oracle::energy(ref, x)).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("geometric anneal hits both endpoints") {
    const auto s = AnnealSchedule::geometric(0.5, 5.0, 101);
    CHECK(s.beta(0) == doctest::Approx(0.5));
    CHECK(s.beta(50) == doctest::Approx(std::sqrt(0.5 * 5.0)));
    CHECK(s.beta(100) == doctest::Approx(5.0));
    CHECK_THROWS_AS(AnnealSchedule::geometric(2.0, 1.0, 10), InputError);
  }
}
