#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "mc2a/compiler.hpp"
#include "mc2a/isa.hpp"
#include "mc2a/samplers.hpp"

namespace mc2a {

struct SimOptions {
  std::uint64_t seed = 1;
  // Loop iterations; 0 uses the count encoded in the program.
  std::uint64_t steps = 0;
  std::uint64_t burn_in = 0;
  // Throw InternalCheckError at the first dynamic violation instead of
  // collecting it.
  bool strict = true;
  // Gumbel noise from this table instead of the exact transform.
  const GumbelLut* lut = nullptr;
  // Entries of the CDF unit's cumulative table.
  int cdt_capacity = 128;
  std::vector<std::int32_t> initial;  // empty: all zeros
  bool record_states = false;
  // CSV trace, one row per issue cycle (issued pc or stall), when set.
  std::ostream* trace = nullptr;
};

struct Violation {
  std::uint64_t cycle = 0;
  std::size_t pc = 0;
  std::string what;
};

struct SimStats {
  std::uint64_t cycles = 0;
  std::uint64_t iterations = 0;
  std::array<std::uint64_t, 6> issued{};  // by Kind
  std::uint64_t stall_cycles = 0;
  std::uint64_t cu_busy = 0;
  std::uint64_t su_busy = 0;
  std::uint64_t data_bytes_read = 0;
  std::uint64_t rf_bytes_read = 0;
  std::uint64_t rf_bytes_written = 0;
  std::uint64_t sample_bytes_read = 0;
  std::uint64_t sample_bytes_written = 0;
  std::uint64_t samples = 0;
  std::uint64_t proposals = 0;
  std::uint64_t accepted = 0;

  // Samples per second at the configured clock.
  double throughput(const HwConfig& hw) const {
    return cycles == 0 ? 0.0 : static_cast<double>(samples) * hw.clock_hz / static_cast<double>(cycles);
  }
};

struct SimResult {
  SimStats stats;
  std::vector<std::int32_t> final_state;
  // Counters read back from the histogram memory (saturating).
  std::vector<std::vector<std::uint64_t>> histograms;
  std::vector<std::vector<std::int32_t>> states;  // after every iteration
  std::vector<Violation> violations;
};

SimResult simulate(const Program& program, const SimOptions& options = {});

// Static field/bank checks plus hazard distances, followed by a short
// non-strict simulation. Returns every problem found (empty when clean);
// CapacityError from the simulation propagates.
std::vector<Violation> check_structural(const Program& program, std::uint64_t steps = 4);

// Temporal sampling of one N-bin distribution per loop iteration on a
// one-bank program; returns cycles per sample in steady state.
struct SamplerBench {
  double cycles_per_sample = 0.0;
  std::uint64_t cycles = 0;
  std::uint64_t samples = 0;
};
SamplerBench sampler_microbench(int n, bool cdf, std::uint64_t iterations = 64, int cdt_capacity = 128);

// Per-cycle trace header matching the rows written through SimOptions::trace.
extern const char* const kTraceHeader;

}  // namespace mc2a
