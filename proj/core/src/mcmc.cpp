#include "mc2a/mcmc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mc2a/error.hpp"
#include "mc2a/samplers.hpp"

namespace mc2a {

const char* to_string(Algorithm a) {
  switch (a) {
    case Algorithm::kMh: return "mh";
    case Algorithm::kGibbs: return "gibbs";
    case Algorithm::kBlockGibbs: return "block-gibbs";
    case Algorithm::kAsyncGibbs: return "async-gibbs";
    case Algorithm::kPas: return "pas";
  }
  return "?";
}

Algorithm parse_algorithm(const std::string& name) {
  for (Algorithm a : {Algorithm::kMh, Algorithm::kGibbs, Algorithm::kBlockGibbs, Algorithm::kAsyncGibbs,
                      Algorithm::kPas}) {
    if (name == to_string(a)) return a;
  }
  if (name == "bg" || name == "block") return Algorithm::kBlockGibbs;
  if (name == "async") return Algorithm::kAsyncGibbs;
  throw InputError("unknown algorithm '" + name + "'");
}

const char* to_string(SamplerKind s) { return s == SamplerKind::kGumbel ? "gumbel" : "cdf"; }

SamplerKind parse_sampler(const std::string& name) {
  if (name == "gumbel") return SamplerKind::kGumbel;
  if (name == "cdf") return SamplerKind::kCdf;
  throw InputError("unknown sampler '" + name + "'");
}

void ChainConfig::validate(const GraphModel& model) const {
  if (burn_in > num_steps) throw InputError("burn_in exceeds num_steps");
  anneal.validate();
  if (algorithm == Algorithm::kPas) {
    if (pas_L < 0 || static_cast<std::size_t>(pas_L) > model.num_rvs()) {
      throw InputError("pas_L must be in [0, number of RVs]");
    }
  }
  if (!initial.empty()) {
    StateVector s;
    s.values = initial;
    model.validate_state(s);
  }
}

std::vector<std::vector<double>> ChainResult::marginals() const {
  std::vector<std::vector<double>> out;
  out.reserve(histograms.size());
  for (const auto& h : histograms) out.push_back(normalize_counts(h));
  return out;
}

namespace {

// Scratch buffers reused across RV updates.
struct Scratch {
  std::vector<double> energies;
  std::vector<double> logits;
};

std::int32_t draw_value(std::span<const double> energies, double beta, UniformRng& rng,
                        SamplerKind kind, std::vector<double>& logits) {
  logits.resize(energies.size());
  for (std::size_t s = 0; s < energies.size(); ++s) logits[s] = -beta * energies[s];
  if (kind == SamplerKind::kGumbel) return static_cast<std::int32_t>(gumbel_sample(logits, rng));
  const double top = *std::max_element(logits.begin(), logits.end());
  for (auto& l : logits) l = std::exp(l - top);
  return static_cast<std::int32_t>(cdf_sample(logits, rng));
}

// Draw a new value for `rv` from its local conditional; returns the energy change.
double resample_rv(const GraphModel& model, std::vector<std::int32_t>& values, RvId rv, double beta,
                   UniformRng& rng, SamplerKind kind, Scratch& sc, std::int32_t* out_value = nullptr) {
  const auto card = static_cast<std::size_t>(model.cardinality(rv));
  sc.energies.resize(card);
  local_conditional_energies(model, values, rv, sc.energies);
  const std::int32_t nv = draw_value(sc.energies, beta, rng, kind, sc.logits);
  const double de = sc.energies[static_cast<std::size_t>(nv)] - sc.energies[static_cast<std::size_t>(values[rv])];
  if (out_value) {
    *out_value = nv;
  } else {
    values[rv] = nv;
  }
  return de;
}

}  // namespace

bool mh_accept(double log_alpha, UniformRng& rng) {
  const double a = std::min(0.0, log_alpha);
  const double bins[2] = {a, std::log1p(-std::exp(a))};
  return gumbel_sample(bins, rng) == 0;
}

MhOutcome mh_step(const GraphModel& model, StateVector& state, const Proposal& proposal, double beta,
                  UniformRng& rng) {
  std::vector<std::int32_t> next = state.values;
  std::vector<double> e;
  double de = 0.0;
  for (const auto& [rv, v] : proposal.changes) {
    if (rv >= model.num_rvs() || v < 0 || v >= model.cardinality(rv)) {
      throw InputError("proposal changes an RV to an invalid value");
    }
    e.resize(static_cast<std::size_t>(model.cardinality(rv)));
    local_conditional_energies(model, next, rv, e);
    de += e[static_cast<std::size_t>(v)] - e[static_cast<std::size_t>(next[rv])];
    next[rv] = v;
  }
  MhOutcome out;
  out.delta_energy = de;
  out.log_alpha = -beta * de + proposal.log_q_ratio;
  out.accepted = mh_accept(out.log_alpha, rng);
  if (out.accepted) state.values = std::move(next);
  return out;
}

double gibbs_step(const GraphModel& model, StateVector& state, const std::vector<RvId>& rv_order,
                  double beta, std::uint64_t seed, SamplerKind sampler) {
  Scratch sc;
  double de = 0.0;
  for (RvId rv : rv_order) {
    if (rv >= model.num_rvs()) throw InputError("RV order names an invalid RV");
    auto rng = UniformRng::for_stream(seed, state.step, rv);
    de += resample_rv(model, state.values, rv, beta, rng, sampler, sc);
  }
  return de;
}

double block_gibbs_step(const GraphModel& model, StateVector& state,
                        const std::vector<std::vector<RvId>>& blocks, double beta, std::uint64_t seed,
                        SamplerKind sampler) {
  std::vector<int> seen(model.num_rvs(), 0);
  for (const auto& b : blocks) {
    for (RvId rv : b) {
      if (rv >= model.num_rvs() || seen[rv]++) throw InputError("blocks are not a partition of the RVs");
    }
  }
  if (std::count(seen.begin(), seen.end(), 1) != static_cast<std::ptrdiff_t>(model.num_rvs())) {
    throw InputError("blocks are not a partition of the RVs");
  }
  Scratch sc;
  double de = 0.0;
  std::vector<std::int32_t> fresh;
  for (const auto& b : blocks) {
    fresh.resize(b.size());
    for (std::size_t k = 0; k < b.size(); ++k) {
      auto rng = UniformRng::for_stream(seed, state.step, b[k]);
      de += resample_rv(model, state.values, b[k], beta, rng, sampler, sc, &fresh[k]);
    }
    for (std::size_t k = 0; k < b.size(); ++k) state.values[b[k]] = fresh[k];
  }
  return de;
}

double async_gibbs_step(const GraphModel& model, StateVector& state, double beta, std::uint64_t seed,
                        SamplerKind sampler) {
  Scratch sc;
  const double before = energy_full(model, state);
  std::vector<std::int32_t> fresh(model.num_rvs());
  for (RvId rv = 0; rv < model.num_rvs(); ++rv) {
    auto rng = UniformRng::for_stream(seed, state.step, rv);
    resample_rv(model, state.values, rv, beta, rng, sampler, sc, &fresh[rv]);
  }
  state.values = std::move(fresh);
  return energy_full(model, state) - before;
}

std::vector<double> pas_delta_energies(const GraphModel& model, std::span<const std::int32_t> values) {
  std::vector<double> de(model.num_rvs());
  std::vector<double> e;
  for (RvId i = 0; i < model.num_rvs(); ++i) {
    const int card = model.cardinality(i);
    e.resize(static_cast<std::size_t>(card));
    local_conditional_energies(model, values, i, e);
    double sum = 0.0;
    for (double v : e) sum += v;
    de[i] = sum - card * e[static_cast<std::size_t>(values[i])];
  }
  return de;
}

PasOutcome pas_step(const GraphModel& model, StateVector& state, int L, double beta, std::uint64_t seed) {
  PasOutcome out;
  if (L <= 0) {
    out.accepted = true;
    return out;
  }
  const std::uint64_t t = state.step;
  const std::size_t n = model.num_rvs();

  // (1) index distribution from the flip-energy gradient, locally balanced:
  // q(i) proportional to exp(-beta * dE_i / 2).
  const double half_beta = 0.5 * beta;
  std::vector<double> logits(n);
  {
    const auto de = pas_delta_energies(model, state.values);
    for (std::size_t i = 0; i < n; ++i) logits[i] = -half_beta * de[i];
  }
  const double lse = log_sum_exp(logits);
  double fwd_idx = 0.0;
  for (int d = 0; d < L; ++d) {
    auto rng = UniformRng::for_stream(seed, t, streams::kPasDraw + static_cast<std::uint64_t>(d));
    const auto r = static_cast<RvId>(gumbel_sample(logits, rng));
    out.draws.push_back(r);
    fwd_idx += logits[r] - lse;
  }

  // (2) resample each distinct index once, in draw order.
  std::vector<int> slot_of;  // draw slot of each selected RV
  for (int d = 0; d < L; ++d) {
    const RvId j = out.draws[static_cast<std::size_t>(d)];
    if (std::find(out.selected.begin(), out.selected.end(), j) == out.selected.end()) {
      out.selected.push_back(j);
      slot_of.push_back(d);
    }
  }
  std::vector<std::int32_t> x = state.values;
  std::vector<std::int32_t> old_values(out.selected.size());
  std::vector<double> e, neg;
  double fwd_res = 0.0;
  double de = 0.0;
  for (std::size_t k = 0; k < out.selected.size(); ++k) {
    const RvId j = out.selected[k];
    const auto card = static_cast<std::size_t>(model.cardinality(j));
    e.resize(card);
    neg.resize(card);
    local_conditional_energies(model, x, j, e);
    for (std::size_t s = 0; s < card; ++s) neg[s] = -beta * e[s];
    auto rng = UniformRng::for_stream(seed, t, streams::kPasResample + static_cast<std::uint64_t>(slot_of[k]));
    const auto nv = static_cast<std::int32_t>(gumbel_sample(neg, rng));
    fwd_res += neg[static_cast<std::size_t>(nv)] - log_sum_exp(neg);
    de += e[static_cast<std::size_t>(nv)] - e[static_cast<std::size_t>(x[j])];
    old_values[k] = x[j];
    x[j] = nv;
  }

  // (3) reverse proposal probability: index draws at x', then the path back.
  double rev_idx = 0.0;
  {
    const auto de2 = pas_delta_energies(model, x);
    std::vector<double> logits2(n);
    for (std::size_t i = 0; i < n; ++i) logits2[i] = -half_beta * de2[i];
    const double lse2 = log_sum_exp(logits2);
    for (RvId r : out.draws) rev_idx += logits2[r] - lse2;
  }
  std::vector<std::int32_t> z = x;
  double rev_res = 0.0;
  for (std::size_t k = 0; k < out.selected.size(); ++k) {
    const RvId j = out.selected[k];
    const auto card = static_cast<std::size_t>(model.cardinality(j));
    e.resize(card);
    neg.resize(card);
    local_conditional_energies(model, z, j, e);
    for (std::size_t s = 0; s < card; ++s) neg[s] = -beta * e[s];
    rev_res += neg[static_cast<std::size_t>(old_values[k])] - log_sum_exp(neg);
    z[j] = old_values[k];
  }

  out.delta_energy = de;
  out.log_alpha = -beta * de + (rev_idx - fwd_idx) + (rev_res - fwd_res);
  auto rng = UniformRng::for_stream(seed, t, streams::kPasAccept);
  out.accepted = mh_accept(out.log_alpha, rng);
  if (out.accepted) state.values = std::move(x);
  return out;
}

ChainResult run_chain(const GraphModel& model, const ChainConfig& config) {
  config.validate(model);
  const std::size_t n = model.num_rvs();
  ChainResult res;
  StateVector state = model.zero_state();
  if (!config.initial.empty()) state.values = config.initial;
  res.histograms.resize(n);
  for (RvId i = 0; i < n; ++i) res.histograms[i].assign(static_cast<std::size_t>(model.cardinality(i)), 0);

  double energy = energy_full(model, state);
  res.best_energy = energy;
  res.best_state = state;

  std::vector<RvId> order(n);
  for (RvId i = 0; i < n; ++i) order[i] = i;
  std::vector<std::vector<RvId>> blocks;
  if (config.algorithm == Algorithm::kBlockGibbs) blocks = block_partition(model);

  constexpr std::uint64_t kCheckEvery = 1000;
  for (std::uint64_t t = 0; t < config.num_steps; ++t) {
    state.step = t;
    const double beta = config.anneal.beta(t);
    switch (config.algorithm) {
      case Algorithm::kGibbs:
        energy += gibbs_step(model, state, order, beta, config.seed, config.sampler);
        break;
      case Algorithm::kBlockGibbs:
        energy += block_gibbs_step(model, state, blocks, beta, config.seed, config.sampler);
        break;
      case Algorithm::kAsyncGibbs:
        energy += async_gibbs_step(model, state, beta, config.seed, config.sampler);
        break;
      case Algorithm::kMh: {
        auto prop_rng = UniformRng::for_stream(config.seed, t, streams::kMhPropose);
        const auto rv = static_cast<RvId>(std::min<double>(static_cast<double>(n) - 1,
                                                           std::floor(prop_rng.next_uniform() * n)));
        const int card = model.cardinality(rv);
        const auto v = static_cast<std::int32_t>(std::min<double>(card - 1, std::floor(prop_rng.next_uniform() * card)));
        auto acc_rng = UniformRng::for_stream(config.seed, t, streams::kMhAccept);
        const auto o = mh_step(model, state, Proposal{{{rv, v}}, 0.0}, beta, acc_rng);
        ++res.proposals;
        if (o.accepted) {
          ++res.accepted;
          energy += o.delta_energy;
        }
        break;
      }
      case Algorithm::kPas: {
        const auto o = pas_step(model, state, config.pas_L, beta, config.seed);
        ++res.proposals;
        if (o.accepted) {
          ++res.accepted;
          energy += o.delta_energy;
        }
        break;
      }
    }

    if ((t + 1) % kCheckEvery == 0) {
      const double full = energy_full(model, state);
      if (std::abs(full - energy) > 1e-6 * std::max(1.0, std::abs(full))) {
        throw InternalCheckError("incremental energy " + std::to_string(energy) + " drifted from " +
                                 std::to_string(full) + " at step " + std::to_string(t));
      }
      energy = full;
    }
    if (t >= config.burn_in) {
      for (RvId i = 0; i < n; ++i) ++res.histograms[i][static_cast<std::size_t>(state.values[i])];
    }
    if (energy < res.best_energy) {
      res.best_energy = energy;
      res.best_state = state;
    }
    if (config.trace_stride > 0 && t % config.trace_stride == 0) res.energy_trace.push_back({t, energy, res.best_energy});
    if (config.record_states) res.states.push_back(state.values);
  }
  state.step = config.num_steps;
  res.final_state = std::move(state);
  return res;
}

}  // namespace mc2a
