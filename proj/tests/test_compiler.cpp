#include <set>

#include "doctest.h"
#include "mc2a/compiler.hpp"
#include "mc2a/error.hpp"
#include "mc2a/sim.hpp"
#include "mc2a/workloads.hpp"

using namespace mc2a;

namespace {

Program build(const GraphModel& m, Algorithm a, const HwConfig& hw, int L = 1, bool nops = true) {
  CompileOptions o;
  o.num_steps = 8;
  o.pas_L = L;
  o.insert_nops = nops;
  return compile(quantize_energies(m, 8), a, hw, o);
}

int ceil_div(int a, int b) { return (a + b - 1) / b; }

}  // namespace

TEST_SUITE("compiler") {
  TEST_CASE("chain block Gibbs: RV-B updates in two instruction cycles") {
    const auto p = build(make_chain_net(), Algorithm::kBlockGibbs, HwConfig::toy());
    CHECK(phase_instruction_count(p, "update B") == 2);
  }

  TEST_CASE("PAS gradient phase costs ceil(N/T) compute and L ceil(N/S) sample cycles") {
    const HwConfig wide{8, 1, 8, 3, 16, 500e6, 4};
    for (const auto& hw : {HwConfig::toy(), wide}) {
      for (int n : {8, 20, 64, 128}) {
        for (int L : {1, 2, 3}) {
          CAPTURE(n);
          CAPTURE(L);
          const auto p = build(make_maxcut(static_cast<std::size_t>(n), ring_graph(static_cast<std::size_t>(n))),
                               Algorithm::kPas, hw, L);
          CHECK(phase_instruction_count(p, "pas/delta") == static_cast<std::size_t>(ceil_div(n, hw.T)));
          CHECK(phase_instruction_count(p, "pas/draw") == static_cast<std::size_t>(L * ceil_div(n, hw.S)));
        }
      }
    }
  }

  TEST_CASE("N = 128 at hw(4,1,4,2,12): N/4 and L*N/4") {
    const auto p = build(make_maxcut(128, ring_graph(128)), Algorithm::kPas, HwConfig::toy(), 2);
    CHECK(phase_instruction_count(p, "pas/delta") == 32);
    CHECK(phase_instruction_count(p, "pas/draw") == 64);
  }

  TEST_CASE("compiled programs pass the structural checker") {
    const HwConfig mid{16, 2, 16, 4, 128, 500e6, 4};
    struct Case {
      const char* name;
      GraphModel m;
      Algorithm a;
    };
    const Case cases[] = {
        {"chain", make_chain_net(), Algorithm::kBlockGibbs},
        {"chain-gibbs", make_chain_net(), Algorithm::kGibbs},
        {"earthquake", make_earthquake(), Algorithm::kAsyncGibbs},
        {"earthquake-bg", make_earthquake(), Algorithm::kBlockGibbs},
        {"survey", make_survey(), Algorithm::kGibbs},
        {"survey-bg", make_survey(), Algorithm::kBlockGibbs},
        {"ising4", make_ising_grid(4, 4, 1.0, 0.1), Algorithm::kBlockGibbs},
        {"ising8", make_ising_grid(8, 8, 0.5), Algorithm::kBlockGibbs},
        {"potts", make_potts(6, 3, ring_graph(6)), Algorithm::kGibbs},
        {"rbm", make_random_rbm(6, 4, 0.5, 3), Algorithm::kBlockGibbs},
        {"maxcut16", make_maxcut(16, random_graph(16, 40, 3)), Algorithm::kPas},
        {"mis", make_mis(12, random_graph(12, 20, 5)), Algorithm::kPas},
    };
    for (const auto& hw : {HwConfig::toy(), mid, HwConfig::standard()}) {
      for (const auto& c : cases) {
        CAPTURE(c.name);
        CAPTURE(hw.to_string());
        const auto p = build(c.m, c.a, hw, 2);
        const auto problems = check_structural(p);
        CHECK(problems.empty());
        if (!problems.empty()) MESSAGE(problems.front().what);
        REQUIRE(!p.code.empty());
        CHECK(p.code.back().loop.en == 1);
        CHECK(p.code.back().loop.count == 8);
        CHECK(p.code.back().loop.target == 0);
      }
    }
  }

  TEST_CASE("without hazard padding the checker finds violations") {
    const auto p = build(make_ising_grid(4, 4, 1.0), Algorithm::kBlockGibbs, HwConfig::toy(), 1, false);
    CHECK(!check_structural(p).empty());
  }

  TEST_CASE("hazard distances") {
    const Access write_rf{Resource::kRf, 5, 6, true};
    const Access read_rf{Resource::kRf, 5, 1, false};
    const Access other{Resource::kRf, 6, 1, false};
    CHECK(required_distance({write_rf}, {read_rf}) == 6);   // RAW: w - r + 1
    CHECK(required_distance({read_rf}, {write_rf}) == 1);   // WAR never below 1
    CHECK(required_distance({write_rf}, {other}) == 1);
    const Access late_write{Resource::kSample, 1, 7, true};
    const Access early_write{Resource::kSample, 1, 3, true};
    CHECK(required_distance({late_write}, {early_write}) == 5);  // WAW: w1 - w2 + 1
  }

  TEST_CASE("bank allocation never double-books a bank") {
    // 6 reads of class 0, 3 of class 1, two cycles; 4 banks.
    std::vector<std::vector<BankRead>> cycles(2);
    for (int k = 0; k < 6; ++k) cycles[0].push_back({0, static_cast<std::uint64_t>(k)});
    for (int k = 0; k < 3; ++k) cycles[1].push_back({1, static_cast<std::uint64_t>(k)});
    cycles[1].push_back({1, 0});  // same address: rides on the first read
    const auto plan = allocate_banks(cycles, {16, 16}, std::vector<int>(4, 1024));
    REQUIRE(plan.schedule.size() == 2);
    for (std::size_t c = 0; c < 2; ++c) {
      std::size_t placed = 0;
      for (const auto& sub : plan.schedule[c]) {
        std::set<int> banks;
        std::set<std::pair<int, std::uint64_t>> addrs;
        for (auto [read, bank] : sub) {
          const auto& r = cycles[c][static_cast<std::size_t>(read)];
          const auto& reps = plan.replicas[static_cast<std::size_t>(r.cls)];
          CHECK(std::find(reps.begin(), reps.end(), bank) != reps.end());
          if (addrs.insert({r.cls, r.key}).second) CHECK(banks.insert(bank).second);
          ++placed;
        }
      }
      std::set<std::pair<int, std::uint64_t>> distinct;
      for (const auto& r : cycles[c]) distinct.insert({r.cls, r.key});
      CHECK(placed == distinct.size());
    }
    // 6 distinct reads over at most 4 replicas need two sub-cycles.
    CHECK(plan.schedule[0].size() == 2);
    CHECK(plan.added_cycles >= 1);
  }

  TEST_CASE("unsupported combinations") {
    CHECK_THROWS_AS(build(make_chain_net(), Algorithm::kMh, HwConfig::toy()), InputError);
    CHECK_THROWS_AS(build(make_survey(), Algorithm::kPas, HwConfig::toy()), InputError);
    // A 16x16 table needs 256 words per replica; 2^K + 1 inputs still fit.
    CHECK_NOTHROW(build(make_potts(4, 16, ring_graph(4)), Algorithm::kGibbs, HwConfig::toy()));
    // 40x40 pairwise tables do not fit a 1024-word bank.
    CHECK_THROWS_AS(build(make_potts(3, 40, ring_graph(3)), Algorithm::kGibbs, HwConfig::toy()), CapacityError);
  }

  TEST_CASE("CDF sampler flag reaches the Gibbs draws") {
    CompileOptions o;
    o.num_steps = 4;
    o.sampler = SamplerKind::kCdf;
    const auto p = compile(quantize_energies(make_chain_net(), 8), Algorithm::kBlockGibbs, HwConfig::toy(), o);
    int cdf = 0;
    for (const auto& ins : p.code) cdf += ins.su.cdf;
    CHECK(cdf > 0);
  }
}
