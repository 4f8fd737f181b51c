#include "mc2a/reports.hpp"

#include <cmath>
#include <ostream>

#include "json.hpp"

namespace mc2a {

using nlohmann::ordered_json;

namespace {

std::string schema(const char* kind) { return std::string("mc2a.") + kind + "/" + std::to_string(kReportVersion); }

ordered_json hw_json(const HwConfig& hw) {
  return {{"T", hw.T}, {"K", hw.K}, {"S", hw.S}, {"M", hw.M}, {"B", hw.B}, {"clock_hz", hw.clock_hz},
          {"word_bytes", hw.word_bytes}};
}

ordered_json point_json(const RooflinePoint& p) {
  ordered_json j;
  j["ci"] = std::isinf(p.ci) ? ordered_json(nullptr) : ordered_json(p.ci);
  j["mi"] = p.mi;
  j["tp"] = p.tp;
  j["bottleneck"] = to_string(p.bottleneck);
  j["roofs"] = {{"su", p.roofs.su}, {"cu", p.roofs.cu}, {"mem", p.roofs.mem}};
  return j;
}

std::string ci_text(double ci) { return std::isinf(ci) ? "inf" : std::to_string(ci); }

}  // namespace

std::string chain_report_json(const GraphModel& model, const ChainConfig& config, const ChainResult& result) {
  ordered_json j;
  j["schema"] = schema("chain");
  j["algorithm"] = to_string(config.algorithm);
  j["sampler"] = to_string(config.sampler);
  j["steps"] = config.num_steps;
  j["burn_in"] = config.burn_in;
  j["seed"] = config.seed;
  if (config.algorithm == Algorithm::kPas) j["pas_L"] = config.pas_L;
  j["best_energy"] = result.best_energy;
  j["best_state"] = result.best_state.values;
  j["final_state"] = result.final_state.values;
  j["proposals"] = result.proposals;
  j["accepted"] = result.accepted;
  ordered_json marg = ordered_json::object();
  const bool counted = config.num_steps > config.burn_in;
  const auto m = counted ? result.marginals() : std::vector<std::vector<double>>{};
  for (RvId i = 0; i < model.num_rvs(); ++i) marg[model.rv(i).name] = counted ? ordered_json(m[i]) : ordered_json::array();
  j["marginals"] = std::move(marg);
  return j.dump(2);
}

void write_trace_csv(std::ostream& os, const ChainResult& result) {
  os << "step,energy,best\n";
  for (const auto& t : result.energy_trace) os << t.step << ',' << t.energy << ',' << t.best << '\n';
}

void write_states_csv(std::ostream& os, const std::vector<std::vector<std::int32_t>>& states) {
  os << "step";
  if (!states.empty()) {
    for (std::size_t i = 0; i < states[0].size(); ++i) os << ",x" << i;
  }
  os << '\n';
  for (std::size_t t = 0; t < states.size(); ++t) {
    os << t;
    for (auto v : states[t]) os << ',' << v;
    os << '\n';
  }
}

std::string sim_report_json(const Program& program, const SimResult& result, const RooflinePoint& prediction) {
  const auto& s = result.stats;
  ordered_json j;
  j["schema"] = schema("sim");
  j["hw"] = hw_json(program.hw);
  j["algorithm"] = to_string(program.algorithm);
  j["arith"] = to_string(program.arith);
  j["instructions"] = program.code.size();
  ordered_json issued;
  for (int k = 0; k <= static_cast<int>(Kind::kNop); ++k) issued[to_string(static_cast<Kind>(k))] = s.issued[static_cast<std::size_t>(k)];
  j["stats"] = {{"cycles", s.cycles},
                {"iterations", s.iterations},
                {"issued", issued},
                {"stall_cycles", s.stall_cycles},
                {"cu_busy", s.cu_busy},
                {"su_busy", s.su_busy},
                {"cu_utilization", s.cycles ? static_cast<double>(s.cu_busy) / static_cast<double>(s.cycles) : 0.0},
                {"su_utilization", s.cycles ? static_cast<double>(s.su_busy) / static_cast<double>(s.cycles) : 0.0},
                {"data_bytes_read", s.data_bytes_read},
                {"rf_bytes_read", s.rf_bytes_read},
                {"rf_bytes_written", s.rf_bytes_written},
                {"sample_bytes_read", s.sample_bytes_read},
                {"sample_bytes_written", s.sample_bytes_written},
                {"samples", s.samples},
                {"proposals", s.proposals},
                {"accepted", s.accepted}};
  const double tp = s.throughput(program.hw);
  j["throughput"] = {{"measured", tp},
                     {"predicted", prediction.tp},
                     {"ratio", prediction.tp > 0 ? tp / prediction.tp : 0.0},
                     {"prediction", point_json(prediction)}};
  j["violations"] = result.violations.size();
  j["final_state"] = result.final_state;
  return j.dump(2);
}

void write_roofline_csv(std::ostream& os, const std::vector<RooflineRow>& rows) {
  os << "workload,config,ci,mi,tp,bottleneck,su_roof,cu_roof,mem_roof\n";
  for (const auto& r : rows) {
    const auto& p = r.point;
    os << r.workload << ",\"" << r.hw.to_string() << "\"," << ci_text(p.ci) << ',' << p.mi << ',' << p.tp << ','
       << to_string(p.bottleneck) << ',' << p.roofs.su << ',' << p.roofs.cu << ',' << p.roofs.mem << '\n';
  }
}

void write_dse_csv(std::ostream& os, const DseReport& report) {
  os << "T,K,S,M,B,feasible,frontier,min_tp,resource,score";
  for (const auto& w : report.workloads) os << ',' << w << "_tp," << w << "_bottleneck";
  os << '\n';
  for (const auto& e : report.entries) {
    os << e.hw.T << ',' << e.hw.K << ',' << e.hw.S << ',' << e.hw.M << ',' << e.hw.B << ',' << e.feasible << ','
       << e.frontier << ',' << e.min_tp << ',' << e.resource << ',' << e.score;
    for (const auto& p : e.points) os << ',' << p.tp << ',' << to_string(p.bottleneck);
    os << '\n';
  }
}

std::string dse_report_json(const DseReport& report, const MemorySizing& sizing) {
  ordered_json j;
  j["schema"] = schema("dse");
  j["workloads"] = report.workloads;
  j["configs"] = report.entries.size();
  j["feasible"] = report.feasible;
  ordered_json frontier = ordered_json::array();
  for (const auto& e : report.entries) {
    if (!e.frontier) continue;
    ordered_json f = hw_json(e.hw);
    f["min_tp"] = e.min_tp;
    f["resource"] = e.resource;
    f["score"] = e.score;
    frontier.push_back(std::move(f));
  }
  j["frontier"] = std::move(frontier);
  j["memory"] = {{"data_blocks", sizing.data_blocks},
                 {"sample_blocks", sizing.sample_blocks},
                 {"histogram_blocks", sizing.histogram_blocks},
                 {"total_blocks", sizing.total_blocks},
                 {"total_kb", sizing.total_kb},
                 {"total_mb", sizing.total_mb}};
  return j.dump(2);
}

void write_sampler_csv(std::ostream& os, const std::vector<SamplerRow>& rows) {
  os << "sampler,lut_size,precision,dist_size,tv,cycles_per_sample\n";
  for (const auto& r : rows) {
    os << r.sampler << ',' << r.lut_size << ',' << r.precision << ',' << r.dist_size << ',' << r.tv << ','
       << r.cycles_per_sample << '\n';
  }
}

}  // namespace mc2a
