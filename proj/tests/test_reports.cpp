#include <cstdlib>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "mc2a/assembler.hpp"
#include "mc2a/compiler.hpp"
#include "mc2a/reports.hpp"
#include "mc2a/workloads.hpp"

using namespace mc2a;

namespace {

// Compares against tests/golden/<name>; MC2A_UPDATE_GOLDEN=1 rewrites it.
void check_golden(const std::string& name, const std::string& text) {
  const std::string path = std::string(MC2A_GOLDEN_DIR) + "/" + name;
  if (std::getenv("MC2A_UPDATE_GOLDEN")) {
    std::ofstream(path) << text;
    return;
  }
  std::ifstream in(path);
  REQUIRE_MESSAGE(in.good(), "missing golden file " << path);
  std::stringstream ss;
  ss << in.rdbuf();
  CHECK(ss.str() == text);
}

Program chain_block_gibbs() {
  return compile(quantize_energies(make_chain_net(), 8), Algorithm::kBlockGibbs, HwConfig::toy(),
                 CompileOptions{.num_steps = 100});
}

std::vector<std::string> keys(const nlohmann::ordered_json& j) {
  std::vector<std::string> out;
  for (auto it = j.begin(); it != j.end(); ++it) out.push_back(it.key());
  return out;
}

}  // namespace

TEST_SUITE("reports") {
  TEST_CASE("chain block Gibbs program disassembly") {
    const auto p = chain_block_gibbs();
    check_golden("chain_block_gibbs_toy.s", disassemble_program(p.hw, p.code));
  }

  TEST_CASE("ring PAS program disassembly") {
    CompileOptions o;
    o.num_steps = 10;
    o.pas_L = 2;
    const auto p = compile(quantize_energies(make_maxcut(8, ring_graph(8)), 8), Algorithm::kPas, HwConfig::toy(), o);
    check_golden("pas_ring8_toy.s", disassemble_program(p.hw, p.code));
  }

  TEST_CASE("roofline CSV for the evaluation workloads") {
    std::vector<RooflineRow> rows;
    for (const auto& hw : {HwConfig::toy(), HwConfig::standard()}) {
      for (const auto& w : evaluation_profiles()) rows.push_back({w.name, hw, achievable_tp(hw, w)});
    }
    std::ostringstream os;
    write_roofline_csv(os, rows);
    check_golden("roofline_eval.csv", os.str());
  }

  TEST_CASE("chain report schema") {
    ChainConfig c;
    c.num_steps = 1000;
    c.burn_in = 100;
    const auto m = make_earthquake();
    const auto j = nlohmann::ordered_json::parse(chain_report_json(m, c, run_chain(m, c)));
    CHECK(j["schema"] == "mc2a.chain/1");
    CHECK(keys(j) == std::vector<std::string>{"schema", "algorithm", "sampler", "steps", "burn_in", "seed",
                                              "best_energy", "best_state", "final_state", "proposals", "accepted",
                                              "marginals"});
    CHECK(j["marginals"].size() == m.num_rvs());
    for (const auto& [name, v] : j["marginals"].items()) {
      double s = 0.0;
      for (double x : v) s += x;
      CHECK(s == doctest::Approx(1.0));
    }
  }

  TEST_CASE("sim report schema") {
    const auto p = chain_block_gibbs();
    const auto r = simulate(p, {});
    const auto pred = achievable_tp(p.hw, profile_workload(make_chain_net(), Algorithm::kBlockGibbs));
    const auto j = nlohmann::ordered_json::parse(sim_report_json(p, r, pred));
    CHECK(j["schema"] == "mc2a.sim/1");
    CHECK(keys(j) == std::vector<std::string>{"schema", "hw", "algorithm", "arith", "instructions", "stats",
                                              "throughput", "violations", "final_state"});
    CHECK(j["stats"]["cycles"] == r.stats.cycles);
    CHECK(j["violations"] == 0);
    CHECK(keys(j["throughput"]) == std::vector<std::string>{"measured", "predicted", "ratio", "prediction"});
  }

  TEST_CASE("dse report schema") {
    const auto rep = dse(default_dse_grid(), evaluation_profiles());
    const auto j = nlohmann::ordered_json::parse(dse_report_json(rep, memory_sizing(HwConfig::standard())));
    CHECK(j["schema"] == "mc2a.dse/1");
    CHECK(keys(j) == std::vector<std::string>{"schema", "workloads", "configs", "feasible", "frontier", "memory"});
    CHECK(j["memory"]["total_blocks"] == 600);
    CHECK(!j["frontier"].empty());
  }

  TEST_CASE("states and trace CSV") {
    std::ostringstream os;
    write_states_csv(os, {{0, 1}, {1, 1}});
    CHECK(os.str() == "step,x0,x1\n0,0,1\n1,1,1\n");
    std::ostringstream empty;
    write_states_csv(empty, {});
    CHECK(empty.str() == "step\n");
    ChainResult r;
    r.energy_trace = {{0, 1.5, 1.5}, {10, 2.0, 1.5}};
    std::ostringstream tr;
    write_trace_csv(tr, r);
    CHECK(tr.str() == "step,energy,best\n0,1.5,1.5\n10,2,1.5\n");
  }
}
