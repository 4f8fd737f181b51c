#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "mc2a/mcmc.hpp"
#include "mc2a/model.hpp"
#include "mc2a/roofline.hpp"
#include "mc2a/sim.hpp"

namespace mc2a {

// Every JSON report carries "schema": "mc2a.<kind>/<version>".
inline constexpr int kReportVersion = 1;

// Reference chain: configuration, marginals, best energy and acceptance.
std::string chain_report_json(const GraphModel& model, const ChainConfig& config, const ChainResult& result);
// step,energy,best rows of the energy trace.
void write_trace_csv(std::ostream& os, const ChainResult& result);
// step,x0,x1,... rows of recorded states.
void write_states_csv(std::ostream& os, const std::vector<std::vector<std::int32_t>>& states);

// Simulator statistics next to the roofline prediction for the same program.
std::string sim_report_json(const Program& program, const SimResult& result, const RooflinePoint& prediction);

// Roofline of a set of (workload, hw) points.
struct RooflineRow {
  std::string workload;
  HwConfig hw;
  RooflinePoint point;
};
void write_roofline_csv(std::ostream& os, const std::vector<RooflineRow>& rows);
void write_dse_csv(std::ostream& os, const DseReport& report);
std::string dse_report_json(const DseReport& report, const MemorySizing& sizing);

struct SamplerRow {
  std::string sampler;  // exact, lut, cdf
  int lut_size = 0;
  int precision = 0;
  int dist_size = 0;
  double tv = 0.0;
  double cycles_per_sample = 0.0;
};
void write_sampler_csv(std::ostream& os, const std::vector<SamplerRow>& rows);

}  // namespace mc2a
