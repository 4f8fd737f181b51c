#include "mc2a/roofline.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "mc2a/error.hpp"
#include "mc2a/workloads.hpp"

namespace mc2a {

void HwConfig::validate() const {
  if (T < 1 || K < 0 || K > 8 || S < 1 || B < 1 || M < 0 || M > 16) {
    throw InputError("hardware config out of range: " + to_string());
  }
  if (S != (1 << M)) throw InputError("hardware config needs S = 2^M: " + to_string());
  if (!(clock_hz > 0.0) || word_bytes < 1) throw InputError("clock and word size must be positive");
}

std::string HwConfig::to_string() const {
  std::ostringstream os;
  os << "(T=" << T << ",K=" << K << ",S=" << S << ",M=" << M << ",B=" << B << ")";
  return os.str();
}

const char* to_string(SuMode m) { return m == SuMode::kTemporal ? "temporal" : "spatial"; }

const char* to_string(Bottleneck b) {
  switch (b) {
    case Bottleneck::kSu: return "SU-bound";
    case Bottleneck::kCu: return "CU-bound";
    case Bottleneck::kMemory: return "memory-bound";
    case Bottleneck::kBalanced: return "balanced";
  }
  return "?";
}

void WorkloadProfile::validate() const {
  if (!(ops_per_sample >= 0.0) || !(bytes_per_sample > 0.0) || !(dist_size >= 1.0)) {
    throw InputError("workload profile '" + name + "' has non-positive fields");
  }
}

Roofs peak_roofs(const HwConfig& hw, const WorkloadProfile& p) {
  hw.validate();
  p.validate();
  Roofs r;
  r.su = hw.S * hw.clock_hz / p.dist_size;
  const double cu_peak = hw.T * ((1 << hw.K) + 2) * hw.clock_hz;
  r.cu = p.ops_per_sample == 0.0 ? std::numeric_limits<double>::infinity() : cu_peak / p.ops_per_sample;
  r.mem = hw.B * hw.word_bytes * hw.clock_hz / p.bytes_per_sample;
  return r;
}

RooflinePoint achievable_tp(const HwConfig& hw, const WorkloadProfile& p) {
  RooflinePoint pt;
  pt.roofs = peak_roofs(hw, p);
  pt.ci = p.ops_per_sample == 0.0 ? std::numeric_limits<double>::infinity() : 1.0 / p.ops_per_sample;
  pt.mi = 1.0 / p.bytes_per_sample;
  const double roofs[3] = {pt.roofs.su, pt.roofs.cu, pt.roofs.mem};
  const Bottleneck kinds[3] = {Bottleneck::kSu, Bottleneck::kCu, Bottleneck::kMemory};
  std::size_t arg = 0;
  for (std::size_t i = 1; i < 3; ++i) {
    if (roofs[i] < roofs[arg]) arg = i;
  }
  pt.tp = roofs[arg];
  int close = 0;
  for (double r : roofs) {
    if (r <= pt.tp * (1.0 + kBalancedTolerance)) ++close;
  }
  pt.bottleneck = close >= 2 ? Bottleneck::kBalanced : kinds[arg];
  return pt;
}

namespace {

bool structured(const GraphModel& m) {
  return m.kind() == ModelKind::kRbm ||
         (m.kind() == ModelKind::kPairwise && m.pairwise_kind() != PairwiseKind::kGeneric);
}

// Scope sizes whose factors all share one table: their parameters live in a
// register instead of memory.
std::map<std::size_t, bool> uniform_groups(const GraphModel& m) {
  std::map<std::size_t, const std::vector<double>*> first;
  std::map<std::size_t, bool> uniform;
  for (const auto& f : m.factors()) {
    const std::size_t k = f.scope.size();
    auto it = first.find(k);
    if (it == first.end()) {
      first[k] = &f.table;
      uniform[k] = true;
    } else if (*it->second != f.table) {
      uniform[k] = false;
    }
  }
  return uniform;
}

}  // namespace

WorkloadProfile gibbs_profile(std::string name, double card, double terms, double blanket,
                              double param_words, int word_bytes) {
  WorkloadProfile p;
  p.name = std::move(name);
  p.ops_per_sample = card * terms;
  p.bytes_per_sample = (blanket + param_words + 1.0) * word_bytes;
  p.dist_size = card;
  p.su_mode = SuMode::kTemporal;
  return p;
}

WorkloadProfile profile_workload(const GraphModel& model, Algorithm algorithm, SuMode mode, int pas_L) {
  const std::size_t n = model.num_rvs();
  if (n == 0) throw InputError("cannot profile an empty model");
  const bool packed = structured(model);
  const auto uniform = uniform_groups(model);
  const double word = 4.0;

  double sum_card = 0.0, sum_ops = 0.0, sum_bytes = 0.0, sum_terms = 0.0;
  for (RvId i = 0; i < n; ++i) {
    const double card = model.cardinality(i);
    double terms = 0.0, params = 0.0;
    for (std::size_t fi : model.factors_of(i)) {
      const Factor& f = model.factors()[fi];
      terms += 1.0;
      if (!packed) {
        params += card;
      } else if (!uniform.at(f.scope.size())) {
        params += 1.0;
      }
    }
    const double blanket = static_cast<double>(model.neighbors(i).size());
    sum_card += card;
    sum_terms += terms;
    sum_ops += card * terms;
    sum_bytes += (blanket + params + 1.0) * word;
  }
  const double nd = static_cast<double>(n);

  WorkloadProfile p;
  p.name = to_string(algorithm);
  p.su_mode = mode;
  if (algorithm != Algorithm::kPas) {
    p.ops_per_sample = sum_ops / nd;
    p.bytes_per_sample = sum_bytes / nd;
    p.dist_size = sum_card / nd;
    if (algorithm == Algorithm::kMh) {
      // Two energy columns per proposal and a two-bin accept draw.
      p.ops_per_sample = 2.0 * sum_terms / nd + 3.0;
      p.dist_size = 2.0;
    }
    return p;
  }

  if (pas_L < 1) throw InputError("PAS profile needs L >= 1");
  const double L = pas_L;
  const double mean_card = sum_card / nd;
  // Flip gradient of every RV (all columns, their sum, card * E(x), the
  // difference and the beta scale) plus exp/add for the log-normalizer,
  // evaluated at x and again at the proposal.
  const double gradient_ops = 2.0 * (sum_ops + 4.0 * nd);
  // Forward resample and reverse path of L RVs, with their normalizers.
  const double resample_ops = 2.0 * L * (sum_ops / nd + 2.0 * mean_card);
  const double ops = gradient_ops + resample_ops + 4.0;
  const double bins = L * nd + nd + 2.0 * L * mean_card;
  double params = 0.0;
  for (const auto& f : model.factors()) {
    if (!packed) {
      params += static_cast<double>(f.table.size());
    } else if (!uniform.at(f.scope.size())) {
      params += 1.0;
    }
  }
  const double bytes = word * (nd + params + 2.0 * L);
  const double samples = 2.0 * L;
  p.ops_per_sample = ops / samples;
  p.bytes_per_sample = bytes / samples;
  p.dist_size = bins / samples;
  p.su_mode = SuMode::kSpatial;
  return p;
}

std::vector<WorkloadProfile> evaluation_profiles(int pas_L) {
  std::vector<WorkloadProfile> out;
  auto add = [&](WorkloadProfile p, const char* name) {
    p.name = name;
    out.push_back(std::move(p));
  };
  add(profile_workload(make_earthquake(), Algorithm::kBlockGibbs), "earthquake");
  add(profile_workload(make_survey(), Algorithm::kBlockGibbs), "survey");
  // 150k-pixel MRF with 600k edges: 8 neighbours, a per-pixel data term and a
  // shared coupling.
  add(gibbs_profile("image-seg", 2.0, 9.0, 8.0, 1.0), "image-seg");
  add(profile_workload(make_mis(1347, random_graph(1347, 5978, 700)), Algorithm::kPas,
                       SuMode::kSpatial, pas_L),
      "er700-mis");
  add(profile_workload(make_maxclique(247, random_graph(247, 12174, 247)), Algorithm::kPas,
                       SuMode::kSpatial, pas_L),
      "twitter-maxclique");
  add(profile_workload(make_maxcut(125, random_weighted_graph(125, 375, -1, 1, 125)), Algorithm::kPas,
                       SuMode::kSpatial, pas_L),
      "optsicom-maxcut");
  add(profile_workload(make_random_rbm(784, 25, 0.5, 809), Algorithm::kPas, SuMode::kSpatial, pas_L),
      "rbm");
  return out;
}

double resource_cost(const HwConfig& hw) {
  return static_cast<double>(hw.T) * (1 << hw.K) + hw.S + hw.B;
}

std::vector<HwConfig> default_dse_grid() {
  std::vector<HwConfig> grid;
  for (int T : {16, 32, 64, 128}) {
    for (int K = 1; K <= 4; ++K) {
      for (int M : {4, 5, 6, 7}) {
        for (int B : {80, 160, 320, 640}) grid.push_back({T, K, 1 << M, M, B, 500e6, 4});
      }
    }
  }
  return grid;
}

namespace {

bool resources_leq(const HwConfig& a, const HwConfig& b) {
  return a.T <= b.T && a.K <= b.K && a.S <= b.S && a.B <= b.B;
}

bool dominates(const DseEntry& a, const DseEntry& b) {
  if (!resources_leq(a.hw, b.hw)) return false;
  bool strict = !(a.hw == b.hw);
  for (std::size_t w = 0; w < a.points.size(); ++w) {
    if (a.points[w].tp < b.points[w].tp) return false;
    if (a.points[w].tp > b.points[w].tp) strict = true;
  }
  return strict;
}

}  // namespace

DseReport dse(const std::vector<HwConfig>& grid, const std::vector<WorkloadProfile>& profiles) {
  if (grid.empty()) throw InputError("DSE grid is empty");
  if (profiles.empty()) throw InputError("DSE needs at least one workload profile");
  DseReport rep;
  for (const auto& p : profiles) rep.workloads.push_back(p.name);
  for (const auto& hw : grid) {
    DseEntry e;
    e.hw = hw;
    e.feasible = true;
    e.min_tp = std::numeric_limits<double>::infinity();
    for (const auto& p : profiles) {
      e.points.push_back(achievable_tp(hw, p));
      if (e.points.back().bottleneck == Bottleneck::kMemory) e.feasible = false;
      e.min_tp = std::min(e.min_tp, e.points.back().tp);
    }
    e.resource = resource_cost(hw);
    e.score = e.min_tp / e.resource;
    rep.entries.push_back(std::move(e));
  }
  for (auto& e : rep.entries) {
    if (!e.feasible) continue;
    ++rep.feasible;
    e.frontier = true;
    for (const auto& o : rep.entries) {
      if (o.feasible && &o != &e && dominates(o, e)) {
        e.frontier = false;
        break;
      }
    }
  }
  std::stable_sort(rep.entries.begin(), rep.entries.end(), [](const DseEntry& a, const DseEntry& b) {
    if (a.feasible != b.feasible) return a.feasible;
    return a.score > b.score;
  });
  return rep;
}

MemorySizing memory_sizing(const HwConfig& hw, int sample_bits, int histogram_bits, int block_kb) {
  MemorySizing m;
  m.data_blocks = hw.B;
  m.sample_blocks = (hw.B * sample_bits + 31) / 32;
  m.histogram_blocks = (hw.B * histogram_bits + 31) / 32;
  m.total_blocks = m.data_blocks + m.sample_blocks + m.histogram_blocks;
  m.total_kb = static_cast<double>(m.total_blocks) * block_kb;
  m.total_mb = m.total_kb / 1000.0;
  return m;
}

}  // namespace mc2a
