#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace mc2a {

using RvId = std::uint32_t;

inline constexpr int kMaxCardinality = 256;

struct RandomVariable {
  RvId id = 0;
  int cardinality = 2;
  std::string name;
};

enum class ModelKind { kBayesNet, kPairwise, kRbm };

// Which energy encoding produced a pairwise model. Only used for reporting and
// for the roofline profile (uniform couplings need no parameter traffic).
enum class PairwiseKind { kGeneric, kIsing, kPotts, kMaxCut, kMis, kMaxClique };

const char* to_string(ModelKind kind);
const char* to_string(PairwiseKind kind);

// A dense energy table over an ordered scope. Entries are row-major with the
// first scope variable most significant, so for a Bayes-net CPT whose scope is
// (parents..., child) each row holds one parent configuration.
struct Factor {
  std::vector<RvId> scope;
  std::vector<int> dims;
  std::vector<std::size_t> strides;
  std::vector<double> table;
};

// Current assignment of every RV plus the iteration counter.
struct StateVector {
  std::vector<std::int32_t> values;
  std::uint64_t step = 0;

  std::size_t size() const { return values.size(); }
};

// Unified energy model over discrete RVs: P(x) is proportional to
// exp(-beta * E(x)) and E(x) is the sum of all factor tables.
class GraphModel {
 public:
  GraphModel(ModelKind kind, std::vector<RandomVariable> rvs, std::vector<Factor> factors,
             std::vector<std::vector<RvId>> parents = {});

  ModelKind kind() const { return kind_; }
  PairwiseKind pairwise_kind() const { return pairwise_kind_; }
  void set_pairwise_kind(PairwiseKind k) { pairwise_kind_ = k; }

  std::size_t num_rvs() const { return rvs_.size(); }
  const RandomVariable& rv(RvId id) const { return rvs_.at(id); }
  const std::vector<RandomVariable>& rvs() const { return rvs_; }
  int cardinality(RvId id) const { return rvs_[id].cardinality; }
  int max_cardinality() const;

  const std::vector<Factor>& factors() const { return factors_; }
  // Indices of all factors whose scope contains `id`.
  const std::vector<std::size_t>& factors_of(RvId id) const { return factors_of_[id]; }

  // Undirected adjacency (pairwise and RBM) or the moralized adjacency of a
  // Bayes net; always symmetric.
  const std::vector<RvId>& neighbors(RvId id) const { return blanket_[id]; }
  // Directed structure of a Bayes net; empty for undirected models.
  const std::vector<RvId>& parents(RvId id) const;
  const std::vector<RvId>& children(RvId id) const;
  std::size_t num_edges() const { return num_edges_; }

  // Number of visible units for RBM models (visible ids come first).
  std::size_t rbm_visible() const { return rbm_visible_; }
  void set_rbm_visible(std::size_t v) { rbm_visible_ = v; }

  // Whether every pairwise factor carries the same table, i.e. a single
  // coupling constant that hardware keeps in a register.
  bool uniform_couplings() const;

  StateVector zero_state() const;
  void validate_state(const StateVector& state) const;

 private:
  ModelKind kind_;
  PairwiseKind pairwise_kind_ = PairwiseKind::kGeneric;
  std::vector<RandomVariable> rvs_;
  std::vector<Factor> factors_;
  std::vector<std::vector<std::size_t>> factors_of_;
  std::vector<std::vector<RvId>> parents_;
  std::vector<std::vector<RvId>> children_;
  std::vector<std::vector<RvId>> blanket_;
  std::size_t num_edges_ = 0;
  std::size_t rbm_visible_ = 0;
};

Factor make_factor(std::vector<RvId> scope, std::vector<int> dims, std::vector<double> table);

// Flat table offset of the factor entry selected by a full assignment.
std::size_t factor_offset(const Factor& f, std::span<const std::int32_t> values);

// ----- Builders -----------------------------------------------------------

struct WeightedEdge {
  RvId u = 0;
  RvId v = 0;
  double w = 1.0;
};

// cpt_energies[i] holds the -log P(x_i | parents) table of RV i, rows ordered by
// parent configuration (first parent most significant).
GraphModel make_bayes_net(std::vector<RandomVariable> rvs, std::vector<std::vector<RvId>> parents,
                          std::vector<std::vector<double>> cpt_energies);

// Generic pairwise model: every edge carries its own card x card energy table.
GraphModel make_pairwise(std::vector<RandomVariable> rvs,
                         std::vector<std::pair<RvId, RvId>> edges,
                         std::vector<std::vector<double>> edge_tables,
                         std::vector<std::vector<double>> unary);

// Ising with spins sigma(s) = 2s - 1: E = -sum J_ij s_i s_j - sum h_i s_i.
GraphModel make_ising(std::size_t n, const std::vector<WeightedEdge>& edges,
                      const std::vector<double>& field = {});
GraphModel make_ising_grid(std::size_t rows, std::size_t cols, double coupling, double field = 0.0);
// Potts: E = -sum J_ij [x_i == x_j] + sum unary.
GraphModel make_potts(std::size_t n, int q, const std::vector<WeightedEdge>& edges,
                      const std::vector<std::vector<double>>& unary = {});

inline constexpr double kMisPenalty = 1.0001;

// MaxCut: E = -sum w_ij [x_i != x_j].
GraphModel make_maxcut(std::size_t n, const std::vector<WeightedEdge>& edges);
// MIS: E = -sum x_i + lambda * sum_{(i,j)} x_i x_j.
GraphModel make_mis(std::size_t n, const std::vector<WeightedEdge>& edges,
                    double penalty = kMisPenalty);
// MaxClique: MIS on the complement graph.
GraphModel make_maxclique(std::size_t n, const std::vector<WeightedEdge>& edges,
                          double penalty = kMisPenalty);
// Binary RBM: E = -b.v - c.h - v^T W h; weights is visible x hidden row-major.
GraphModel make_rbm(std::size_t visible, std::size_t hidden, const std::vector<double>& weights,
                    const std::vector<double>& visible_bias, const std::vector<double>& hidden_bias);

// Round every table entry to a multiple of 2^-frac_bits. Quantized models
// evaluate bit-identically in double and in fixed point.
GraphModel quantize_energies(const GraphModel& model, int frac_bits);

// ----- Operations ---------------------------------------------------------

double energy_full(const GraphModel& model, const StateVector& state);

// out[s] = sum of the factors touching `rv` with X_rv = s and every other RV
// held at its current value. Only Markov-blanket terms are included.
void local_conditional_energies(const GraphModel& model, std::span<const std::int32_t> values,
                                RvId rv, std::span<double> out);
std::vector<double> local_conditional_energies(const GraphModel& model, const StateVector& state,
                                               RvId rv);

std::vector<RvId> markov_blanket(const GraphModel& model, RvId rv);

// Disjoint blocks covering all RVs with no two members of a block in each
// other's Markov blanket. Bipartite interaction graphs get their 2-coloring
// (the chessboard for grids); everything else is colored greedily in
// descending-degree order.
std::vector<std::vector<RvId>> block_partition(const GraphModel& model);

// ----- Annealing ----------------------------------------------------------

struct AnnealSchedule {
  enum class Kind { kConstant, kGeometric };
  Kind kind = Kind::kConstant;
  double beta_start = 1.0;
  double beta_end = 1.0;
  std::uint64_t num_steps = 1;

  static AnnealSchedule constant(double beta);
  static AnnealSchedule geometric(double start, double end, std::uint64_t steps);

  double beta(std::uint64_t t) const;
  void validate() const;
};

}  // namespace mc2a
