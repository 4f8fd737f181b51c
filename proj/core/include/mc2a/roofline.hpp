#pragma once

#include <limits>
#include <string>
#include <vector>

#include "mc2a/mcmc.hpp"
#include "mc2a/model.hpp"

namespace mc2a {

struct HwConfig {
  int T = 64;  // processing elements (CU lanes)
  int K = 3;   // adder-tree depth; each PE takes 2^K + 1 inputs
  int S = 64;  // sampler elements, S = 2^M
  int M = 6;
  int B = 320;  // memory banks
  double clock_hz = 500e6;
  int word_bytes = 4;

  static HwConfig standard() { return {}; }
  static HwConfig toy() { return {4, 1, 4, 2, 12, 500e6, 4}; }

  int pe_inputs() const { return (1 << K) + 1; }
  void validate() const;
  std::string to_string() const;
  bool operator==(const HwConfig&) const = default;
};

enum class SuMode { kTemporal, kSpatial };
enum class Bottleneck { kSu, kCu, kMemory, kBalanced };

const char* to_string(SuMode m);
const char* to_string(Bottleneck b);

// Per produced sample. ops_per_sample == 0 marks a bypass workload (no CU work).
struct WorkloadProfile {
  std::string name;
  double ops_per_sample = 1.0;
  double bytes_per_sample = 1.0;
  double dist_size = 2.0;
  SuMode su_mode = SuMode::kTemporal;

  void validate() const;
};

// Peak throughputs in samples per second.
struct Roofs {
  double su = 0.0;
  double cu = 0.0;
  double mem = 0.0;
};

struct RooflinePoint {
  double ci = 0.0;  // samples per op (infinity for bypass)
  double mi = 0.0;  // samples per byte
  double tp = 0.0;  // samples per second
  Bottleneck bottleneck = Bottleneck::kSu;
  Roofs roofs;

  double tp_gsps() const { return tp * 1e-9; }
};

inline constexpr double kBalancedTolerance = 0.05;

Roofs peak_roofs(const HwConfig& hw, const WorkloadProfile& profile);
RooflinePoint achievable_tp(const HwConfig& hw, const WorkloadProfile& profile);

// Counts CU operations and memory traffic for one sample of `algorithm` on
// `model`. Gibbs-family workloads average the per-RV update cost; PAS counts
// one full step (index draws, resampling, reverse path) and divides by the
// 2L samples it produces.
WorkloadProfile profile_workload(const GraphModel& model, Algorithm algorithm,
                                 SuMode mode = SuMode::kTemporal, int pas_L = 1);

// Per-sample averages for a Gibbs-family workload given the average
// cardinality, factor terms per RV, blanket size and parameter words per
// sample.
WorkloadProfile gibbs_profile(std::string name, double card, double terms, double blanket,
                              double param_words, int word_bytes = 4);

// Stand-ins for the evaluation workloads (same node/edge counts and
// algorithms). `pas_L` is the number of index draws per PAS step.
std::vector<WorkloadProfile> evaluation_profiles(int pas_L = 1);

struct DseEntry {
  HwConfig hw;
  std::vector<RooflinePoint> points;  // one per workload
  bool feasible = false;              // no workload memory-bound
  double min_tp = 0.0;
  double resource = 0.0;
  double score = 0.0;  // min_tp per unit resource
  bool frontier = false;
};

struct DseReport {
  std::vector<std::string> workloads;
  std::vector<DseEntry> entries;  // feasible entries first, ranked by score
  std::size_t feasible = 0;
};

// Resource proxy used for ranking: adder inputs + sampler elements + banks.
double resource_cost(const HwConfig& hw);
std::vector<HwConfig> default_dse_grid();
DseReport dse(const std::vector<HwConfig>& grid, const std::vector<WorkloadProfile>& profiles);

// On-chip memory blocks for a configuration: B data banks plus sample and
// histogram memories packed into 32-bit-wide blocks.
struct MemorySizing {
  int data_blocks = 0;
  int sample_blocks = 0;
  int histogram_blocks = 0;
  int total_blocks = 0;
  double total_kb = 0.0;
  double total_mb = 0.0;
};
MemorySizing memory_sizing(const HwConfig& hw, int sample_bits = 8, int histogram_bits = 20,
                           int block_kb = 8);

}  // namespace mc2a
