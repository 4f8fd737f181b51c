#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mc2a/model.hpp"
#include "mc2a/rng.hpp"

namespace mc2a {

enum class Algorithm { kMh, kGibbs, kBlockGibbs, kAsyncGibbs, kPas };
enum class SamplerKind { kGumbel, kCdf };

const char* to_string(Algorithm a);
Algorithm parse_algorithm(const std::string& name);
const char* to_string(SamplerKind s);
SamplerKind parse_sampler(const std::string& name);

struct ChainConfig {
  Algorithm algorithm = Algorithm::kGibbs;
  std::uint64_t num_steps = 1000;
  std::uint64_t burn_in = 0;
  AnnealSchedule anneal = AnnealSchedule::constant(1.0);
  std::uint64_t seed = 1;
  int pas_L = 1;
  SamplerKind sampler = SamplerKind::kGumbel;
  // Record the energy every `trace_stride` steps (0 disables the trace).
  std::uint64_t trace_stride = 0;
  // Keep the full state after every step (for equivalence checks).
  bool record_states = false;
  // Starting assignment; empty means all zeros.
  std::vector<std::int32_t> initial;

  void validate(const GraphModel& model) const;
};

struct TracePoint {
  std::uint64_t step = 0;
  double energy = 0.0;
  double best = 0.0;
};

struct ChainResult {
  StateVector final_state;
  // histograms[i][s]: steps after burn-in that ended with X_i = s.
  std::vector<std::vector<std::uint64_t>> histograms;
  double best_energy = 0.0;
  StateVector best_state;
  std::vector<TracePoint> energy_trace;
  std::uint64_t proposals = 0;
  std::uint64_t accepted = 0;
  std::vector<std::vector<std::int32_t>> states;

  std::vector<std::vector<double>> marginals() const;
};

// A proposed move: the RVs to change (applied in order) and
// log q(x | x') - log q(x' | x).
struct Proposal {
  std::vector<std::pair<RvId, std::int32_t>> changes;
  double log_q_ratio = 0.0;
};

struct MhOutcome {
  bool accepted = false;
  double log_alpha = 0.0;
  double delta_energy = 0.0;
};

// Accept with probability min(1, exp(log_alpha)) using a two-bin Gumbel draw
// over [log a, log(1 - a)]; a = 1 always accepts.
bool mh_accept(double log_alpha, UniformRng& rng);

MhOutcome mh_step(const GraphModel& model, StateVector& state, const Proposal& proposal, double beta,
                  UniformRng& rng);

// The streams of step t come from UniformRng::for_stream(seed, state.step, ...).
// Each returns the energy change it applied.
double gibbs_step(const GraphModel& model, StateVector& state, const std::vector<RvId>& rv_order,
                  double beta, std::uint64_t seed, SamplerKind sampler = SamplerKind::kGumbel);
double block_gibbs_step(const GraphModel& model, StateVector& state,
                        const std::vector<std::vector<RvId>>& blocks, double beta, std::uint64_t seed,
                        SamplerKind sampler = SamplerKind::kGumbel);
double async_gibbs_step(const GraphModel& model, StateVector& state, double beta, std::uint64_t seed,
                        SamplerKind sampler = SamplerKind::kGumbel);

// Flip-energy gradient per RV: sum_s E_i(s) - card_i * E_i(x_i).
std::vector<double> pas_delta_energies(const GraphModel& model, std::span<const std::int32_t> values);

struct PasOutcome : MhOutcome {
  // Index draws in draw order and the deduplicated RVs actually resampled.
  std::vector<RvId> draws;
  std::vector<RvId> selected;
};

PasOutcome pas_step(const GraphModel& model, StateVector& state, int L, double beta, std::uint64_t seed);

ChainResult run_chain(const GraphModel& model, const ChainConfig& config);

}  // namespace mc2a
