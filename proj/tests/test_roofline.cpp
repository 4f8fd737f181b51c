#include <cmath>

#include "doctest.h"
#include "mc2a/error.hpp"
#include "mc2a/roofline.hpp"
#include "mc2a/workloads.hpp"

using namespace mc2a;

namespace {

WorkloadProfile profile(double ops, double bytes, double bins) {
  WorkloadProfile p;
  p.name = "w";
  p.ops_per_sample = ops;
  p.bytes_per_sample = bytes;
  p.dist_size = bins;
  return p;
}

}  // namespace

TEST_SUITE("roofline") {
  TEST_CASE("roofs from the hardware parameters") {
    // SU: S comparators, one bin per cycle each. CU: T PEs of 2^K + 1 inputs
    // doing 2^K adds, one multiply and one accumulate. Memory: B words/cycle.
    const HwConfig hw{8, 2, 16, 4, 32, 1e9, 4};
    const auto r = peak_roofs(hw, profile(12.0, 10.0, 4.0));
    CHECK(r.su == doctest::Approx(16 * 1e9 / 4.0));
    CHECK(r.cu == doctest::Approx(8 * 6 * 1e9 / 12.0));
    CHECK(r.mem == doctest::Approx(32 * 4 * 1e9 / 10.0));
  }

  TEST_CASE("achievable TP is the lowest roof") {
    const HwConfig hw{8, 2, 16, 4, 32, 1e9, 4};
    const auto su = achievable_tp(hw, profile(1.0, 1.0, 64.0));
    CHECK(su.bottleneck == Bottleneck::kSu);
    CHECK(su.tp == doctest::Approx(16e9 / 64));
    const auto cu = achievable_tp(hw, profile(1000.0, 1.0, 2.0));
    CHECK(cu.bottleneck == Bottleneck::kCu);
    const auto mem = achievable_tp(hw, profile(1.0, 4096.0, 2.0));
    CHECK(mem.bottleneck == Bottleneck::kMemory);
    CHECK(mem.mi == doctest::Approx(1.0 / 4096));
    // SU and CU roofs within 5%: balanced.
    const auto bal = achievable_tp(hw, profile(12.0, 1.0, 4.0));
    CHECK(bal.bottleneck == Bottleneck::kBalanced);
  }

  TEST_CASE("bypass workloads have infinite CI and are never CU-bound") {
    const auto p = achievable_tp(HwConfig{}, profile(0.0, 1.0, 2.0));
    CHECK(std::isinf(p.ci));
    CHECK(p.bottleneck != Bottleneck::kCu);
  }

  TEST_CASE("PAS workloads at the chosen configuration are CU-bound") {
    for (const auto& w : evaluation_profiles()) {
      if (w.su_mode != SuMode::kSpatial) continue;
      CAPTURE(w.name);
      CHECK(achievable_tp(HwConfig::standard(), w).bottleneck == Bottleneck::kCu);
    }
  }

  TEST_CASE("Gibbs profile of a grid Ising") {
    // Interior spin: 2 states, 4 couplings + 1 field term; shared coupling
    // and field stay in registers.
    const auto p = profile_workload(make_ising_grid(16, 16, 1.0, 0.1), Algorithm::kBlockGibbs);
    CHECK(p.dist_size == 2.0);
    CHECK(p.ops_per_sample < 2.0 * 5.0 + 1e-9);
    CHECK(p.ops_per_sample > 2.0 * 4.0);
  }

  TEST_CASE("memory sizing reproduces 600 blocks / 4.8 MB") {
    const auto m = memory_sizing(HwConfig::standard());
    CHECK(m.data_blocks == 320);
    CHECK(m.sample_blocks == 80);
    CHECK(m.histogram_blocks == 200);
    CHECK(m.total_blocks == 600);
    CHECK(m.total_mb == doctest::Approx(4.8));
  }

  TEST_CASE("DSE frontier is non-dominated and contains (64,3,64,6,320)") {
    const auto rep = dse(default_dse_grid(), evaluation_profiles());
    bool found = false;
    for (const auto& e : rep.entries) {
      if (!e.frontier) continue;
      found |= e.hw == HwConfig::standard();
      for (const auto& o : rep.entries) {
        if (!o.feasible || o.hw == e.hw) continue;
        const bool cheaper = o.hw.T <= e.hw.T && o.hw.K <= e.hw.K && o.hw.S <= e.hw.S && o.hw.B <= e.hw.B;
        bool no_worse = true, better = false;
        for (std::size_t w = 0; w < e.points.size(); ++w) {
          no_worse &= o.points[w].tp >= e.points[w].tp;
          better |= o.points[w].tp > e.points[w].tp;
        }
        CHECK_FALSE((cheaper && no_worse && better));
      }
    }
    CHECK(found);
    CHECK(rep.entries.size() == default_dse_grid().size());
  }

  TEST_CASE("DSE edge cases") {
    CHECK_THROWS_AS(dse({}, evaluation_profiles()), InputError);
    const auto one = dse({HwConfig::toy()}, evaluation_profiles());
    CHECK(one.entries.size() == 1);
  }

  TEST_CASE("hardware parameters are validated") {
    HwConfig hw;
    hw.S = 48;
    CHECK_THROWS_AS(hw.validate(), InputError);
    hw = HwConfig{};
    hw.T = 0;
    CHECK_THROWS_AS(hw.validate(), InputError);
  }
}
