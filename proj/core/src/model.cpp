#include "mc2a/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <set>
#include <string>

#include "mc2a/error.hpp"

namespace mc2a {

const char* to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::kBayesNet: return "bayesnet";
    case ModelKind::kPairwise: return "pairwise";
    case ModelKind::kRbm: return "rbm";
  }
  return "?";
}

const char* to_string(PairwiseKind kind) {
  switch (kind) {
    case PairwiseKind::kGeneric: return "generic";
    case PairwiseKind::kIsing: return "ising";
    case PairwiseKind::kPotts: return "potts";
    case PairwiseKind::kMaxCut: return "maxcut";
    case PairwiseKind::kMis: return "mis";
    case PairwiseKind::kMaxClique: return "maxclique";
  }
  return "?";
}

Factor make_factor(std::vector<RvId> scope, std::vector<int> dims, std::vector<double> table) {
  if (scope.size() != dims.size()) throw InputError("factor scope/dims length mismatch");
  Factor f;
  f.scope = std::move(scope);
  f.dims = std::move(dims);
  f.strides.assign(f.dims.size(), 1);
  std::size_t size = 1;
  for (std::size_t k = f.dims.size(); k-- > 0;) {
    f.strides[k] = size;
    size *= static_cast<std::size_t>(f.dims[k]);
  }
  if (table.size() != size) {
    throw InputError("factor table has " + std::to_string(table.size()) + " entries, expected " +
                     std::to_string(size));
  }
  f.table = std::move(table);
  return f;
}

std::size_t factor_offset(const Factor& f, std::span<const std::int32_t> values) {
  std::size_t off = 0;
  for (std::size_t k = 0; k < f.scope.size(); ++k) {
    off += f.strides[k] * static_cast<std::size_t>(values[f.scope[k]]);
  }
  return off;
}

GraphModel::GraphModel(ModelKind kind, std::vector<RandomVariable> rvs, std::vector<Factor> factors,
                       std::vector<std::vector<RvId>> parents)
    : kind_(kind), rvs_(std::move(rvs)), factors_(std::move(factors)), parents_(std::move(parents)) {
  const std::size_t n = rvs_.size();
  for (std::size_t i = 0; i < n; ++i) {
    auto& rv = rvs_[i];
    if (rv.id != i) throw InputError("random variable ids must be dense and ordered");
    if (rv.cardinality > kMaxCardinality) {
      throw CapacityError("RV " + std::to_string(i) + " has cardinality " +
                          std::to_string(rv.cardinality) + " (max " +
                          std::to_string(kMaxCardinality) + ")");
    }
    if (rv.cardinality < 2) throw InputError("RV " + std::to_string(i) + " needs cardinality >= 2");
    if (rv.name.empty()) rv.name = "x" + std::to_string(i);
  }

  factors_of_.assign(n, {});
  std::vector<std::set<RvId>> adj(n);
  std::set<std::pair<RvId, RvId>> undirected_edges;
  for (std::size_t fi = 0; fi < factors_.size(); ++fi) {
    const Factor& f = factors_[fi];
    for (std::size_t k = 0; k < f.scope.size(); ++k) {
      const RvId v = f.scope[k];
      if (v >= n) throw InputError("factor references unknown RV " + std::to_string(v));
      if (f.dims[k] != rvs_[v].cardinality) throw InputError("factor dims disagree with RV cardinality");
      if (std::count(f.scope.begin(), f.scope.end(), v) != 1) {
        throw InputError("factor scope repeats RV " + std::to_string(v));
      }
      factors_of_[v].push_back(fi);
      for (RvId w : f.scope) {
        if (w != v) adj[v].insert(w);
      }
    }
    for (double e : f.table) {
      if (!std::isfinite(e)) throw InputError("energy tables must be finite");
    }
    if (f.scope.size() == 2) {
      undirected_edges.insert({std::min(f.scope[0], f.scope[1]), std::max(f.scope[0], f.scope[1])});
    }
  }
  blanket_.resize(n);
  for (std::size_t i = 0; i < n; ++i) blanket_[i].assign(adj[i].begin(), adj[i].end());

  if (kind_ == ModelKind::kBayesNet) {
    if (parents_.size() != n) throw InputError("Bayes net needs a parent list for every RV");
    children_.assign(n, {});
    std::vector<int> indegree(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
      for (RvId p : parents_[i]) {
        if (p >= n) throw InputError("edge endpoint " + std::to_string(p) + " is not a valid RV");
        children_[p].push_back(static_cast<RvId>(i));
        ++indegree[i];
        ++num_edges_;
      }
    }
    // Kahn's algorithm; leftovers mean a cycle.
    std::queue<RvId> ready;
    for (std::size_t i = 0; i < n; ++i) {
      if (indegree[i] == 0) ready.push(static_cast<RvId>(i));
    }
    std::size_t seen = 0;
    while (!ready.empty()) {
      const RvId v = ready.front();
      ready.pop();
      ++seen;
      for (RvId c : children_[v]) {
        if (--indegree[c] == 0) ready.push(c);
      }
    }
    if (seen != n) throw InputError("Bayes net structure contains a cycle");
  } else {
    parents_.clear();
    num_edges_ = undirected_edges.size();
  }
}

int GraphModel::max_cardinality() const {
  int m = 0;
  for (const auto& rv : rvs_) m = std::max(m, rv.cardinality);
  return m;
}

const std::vector<RvId>& GraphModel::parents(RvId id) const {
  static const std::vector<RvId> kEmpty;
  return parents_.empty() ? kEmpty : parents_.at(id);
}

const std::vector<RvId>& GraphModel::children(RvId id) const {
  static const std::vector<RvId> kEmpty;
  return children_.empty() ? kEmpty : children_.at(id);
}

bool GraphModel::uniform_couplings() const {
  if (kind_ == ModelKind::kBayesNet) return false;
  const Factor* first = nullptr;
  for (const auto& f : factors_) {
    if (f.scope.size() != 2) continue;
    if (first == nullptr) {
      first = &f;
    } else if (f.table != first->table) {
      return false;
    }
  }
  return true;
}

StateVector GraphModel::zero_state() const {
  StateVector s;
  s.values.assign(rvs_.size(), 0);
  return s;
}

void GraphModel::validate_state(const StateVector& state) const {
  if (state.values.size() != rvs_.size()) {
    throw InputError("state has " + std::to_string(state.values.size()) + " values, model has " +
                     std::to_string(rvs_.size()) + " RVs");
  }
  for (std::size_t i = 0; i < rvs_.size(); ++i) {
    if (state.values[i] < 0 || state.values[i] >= rvs_[i].cardinality) {
      throw InputError("state value out of range at RV " + std::to_string(i));
    }
  }
}

// ----- Builders -------------------------------------------------------------

namespace {

std::vector<RandomVariable> uniform_rvs(std::size_t n, int card) {
  std::vector<RandomVariable> rvs(n);
  for (std::size_t i = 0; i < n; ++i) {
    rvs[i].id = static_cast<RvId>(i);
    rvs[i].cardinality = card;
  }
  return rvs;
}

void check_edge(std::size_t n, const WeightedEdge& e) {
  if (e.u >= n || e.v >= n) throw InputError("edge endpoint is not a valid RV");
  if (e.u == e.v) throw InputError("self-loop on RV " + std::to_string(e.u));
}

GraphModel binary_pairwise(std::size_t n, const std::vector<WeightedEdge>& edges,
                           const std::vector<double>& base_table,
                           const std::vector<std::vector<double>>& unary, PairwiseKind kind) {
  std::vector<Factor> factors;
  for (std::size_t i = 0; i < unary.size(); ++i) {
    if (std::any_of(unary[i].begin(), unary[i].end(), [](double v) { return v != 0.0; })) {
      factors.push_back(make_factor({static_cast<RvId>(i)}, {2}, unary[i]));
    }
  }
  for (const auto& e : edges) {
    check_edge(n, e);
    std::vector<double> t(base_table.size());
    for (std::size_t k = 0; k < t.size(); ++k) t[k] = e.w * base_table[k];
    factors.push_back(make_factor({e.u, e.v}, {2, 2}, std::move(t)));
  }
  GraphModel m(ModelKind::kPairwise, uniform_rvs(n, 2), std::move(factors));
  m.set_pairwise_kind(kind);
  return m;
}

}  // namespace

GraphModel make_bayes_net(std::vector<RandomVariable> rvs, std::vector<std::vector<RvId>> parents,
                          std::vector<std::vector<double>> cpt_energies) {
  const std::size_t n = rvs.size();
  if (parents.size() != n || cpt_energies.size() != n) {
    throw InputError("Bayes net needs one parent list and one CPT per RV");
  }
  std::vector<Factor> factors;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<RvId> scope = parents[i];
    scope.push_back(static_cast<RvId>(i));
    std::vector<int> dims;
    for (RvId v : scope) {
      if (v >= n) throw InputError("parent " + std::to_string(v) + " is not a valid RV");
      dims.push_back(rvs[v].cardinality);
    }
    factors.push_back(make_factor(std::move(scope), std::move(dims), std::move(cpt_energies[i])));
  }
  return GraphModel(ModelKind::kBayesNet, std::move(rvs), std::move(factors), std::move(parents));
}

GraphModel make_pairwise(std::vector<RandomVariable> rvs, std::vector<std::pair<RvId, RvId>> edges,
                         std::vector<std::vector<double>> edge_tables,
                         std::vector<std::vector<double>> unary) {
  if (edges.size() != edge_tables.size()) throw InputError("one table per edge required");
  std::vector<Factor> factors;
  for (std::size_t i = 0; i < unary.size(); ++i) {
    if (unary[i].empty()) continue;
    if (i >= rvs.size()) throw InputError("unary table for unknown RV");
    factors.push_back(make_factor({static_cast<RvId>(i)}, {rvs[i].cardinality}, std::move(unary[i])));
  }
  for (std::size_t k = 0; k < edges.size(); ++k) {
    auto [u, v] = edges[k];
    if (u >= rvs.size() || v >= rvs.size()) throw InputError("edge endpoint is not a valid RV");
    factors.push_back(make_factor({u, v}, {rvs[u].cardinality, rvs[v].cardinality},
                                  std::move(edge_tables[k])));
  }
  return GraphModel(ModelKind::kPairwise, std::move(rvs), std::move(factors));
}

GraphModel make_ising(std::size_t n, const std::vector<WeightedEdge>& edges,
                      const std::vector<double>& field) {
  std::vector<std::vector<double>> unary(field.size());
  for (std::size_t i = 0; i < field.size(); ++i) unary[i] = {field[i], -field[i]};
  // -J * sigma_i * sigma_j with sigma(0) = -1, sigma(1) = +1
  return binary_pairwise(n, edges, {-1.0, 1.0, 1.0, -1.0}, unary, PairwiseKind::kIsing);
}

GraphModel make_ising_grid(std::size_t rows, std::size_t cols, double coupling, double field) {
  std::vector<WeightedEdge> edges;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const auto id = static_cast<RvId>(r * cols + c);
      if (c + 1 < cols) edges.push_back({id, id + 1, coupling});
      if (r + 1 < rows) edges.push_back({id, static_cast<RvId>(id + cols), coupling});
    }
  }
  std::vector<double> h;
  if (field != 0.0) h.assign(rows * cols, field);
  return make_ising(rows * cols, edges, h);
}

GraphModel make_potts(std::size_t n, int q, const std::vector<WeightedEdge>& edges,
                      const std::vector<std::vector<double>>& unary) {
  std::vector<Factor> factors;
  for (std::size_t i = 0; i < unary.size(); ++i) {
    if (!unary[i].empty()) factors.push_back(make_factor({static_cast<RvId>(i)}, {q}, unary[i]));
  }
  for (const auto& e : edges) {
    check_edge(n, e);
    std::vector<double> t(static_cast<std::size_t>(q * q), 0.0);
    for (int s = 0; s < q; ++s) t[static_cast<std::size_t>(s * q + s)] = -e.w;
    factors.push_back(make_factor({e.u, e.v}, {q, q}, std::move(t)));
  }
  GraphModel m(ModelKind::kPairwise, uniform_rvs(n, q), std::move(factors));
  m.set_pairwise_kind(PairwiseKind::kPotts);
  return m;
}

GraphModel make_maxcut(std::size_t n, const std::vector<WeightedEdge>& edges) {
  return binary_pairwise(n, edges, {0.0, -1.0, -1.0, 0.0}, {}, PairwiseKind::kMaxCut);
}

GraphModel make_mis(std::size_t n, const std::vector<WeightedEdge>& edges, double penalty) {
  std::vector<WeightedEdge> unit;
  unit.reserve(edges.size());
  for (const auto& e : edges) unit.push_back({e.u, e.v, 1.0});
  std::vector<std::vector<double>> unary(n, std::vector<double>{0.0, -1.0});
  auto m = binary_pairwise(n, unit, {0.0, 0.0, 0.0, penalty}, unary, PairwiseKind::kMis);
  return m;
}

GraphModel make_maxclique(std::size_t n, const std::vector<WeightedEdge>& edges, double penalty) {
  std::set<std::pair<RvId, RvId>> present;
  for (const auto& e : edges) {
    check_edge(n, e);
    present.insert({std::min(e.u, e.v), std::max(e.u, e.v)});
  }
  std::vector<WeightedEdge> complement;
  for (RvId u = 0; u < n; ++u) {
    for (RvId v = u + 1; v < n; ++v) {
      if (!present.count({u, v})) complement.push_back({u, v, 1.0});
    }
  }
  auto m = make_mis(n, complement, penalty);
  m.set_pairwise_kind(PairwiseKind::kMaxClique);
  return m;
}

GraphModel make_rbm(std::size_t visible, std::size_t hidden, const std::vector<double>& weights,
                    const std::vector<double>& visible_bias, const std::vector<double>& hidden_bias) {
  if (weights.size() != visible * hidden) throw InputError("RBM weight matrix has wrong size");
  if (visible_bias.size() != visible || hidden_bias.size() != hidden) {
    throw InputError("RBM bias vectors have wrong size");
  }
  const std::size_t n = visible + hidden;
  std::vector<Factor> factors;
  for (std::size_t i = 0; i < n; ++i) {
    const double b = i < visible ? visible_bias[i] : hidden_bias[i - visible];
    if (b != 0.0) factors.push_back(make_factor({static_cast<RvId>(i)}, {2}, {0.0, -b}));
  }
  for (std::size_t v = 0; v < visible; ++v) {
    for (std::size_t h = 0; h < hidden; ++h) {
      const double w = weights[v * hidden + h];
      factors.push_back(make_factor({static_cast<RvId>(v), static_cast<RvId>(visible + h)}, {2, 2},
                                    {0.0, 0.0, 0.0, -w}));
    }
  }
  GraphModel m(ModelKind::kRbm, uniform_rvs(n, 2), std::move(factors));
  m.set_rbm_visible(visible);
  return m;
}

GraphModel quantize_energies(const GraphModel& model, int frac_bits) {
  const double scale = std::ldexp(1.0, frac_bits);
  std::vector<Factor> factors = model.factors();
  for (auto& f : factors) {
    for (auto& e : f.table) e = std::nearbyint(e * scale) / scale;
  }
  std::vector<std::vector<RvId>> parents;
  if (model.kind() == ModelKind::kBayesNet) {
    for (std::size_t i = 0; i < model.num_rvs(); ++i) parents.push_back(model.parents(static_cast<RvId>(i)));
  }
  GraphModel q(model.kind(), model.rvs(), std::move(factors), std::move(parents));
  q.set_pairwise_kind(model.pairwise_kind());
  q.set_rbm_visible(model.rbm_visible());
  return q;
}

// ----- Operations -----------------------------------------------------------

double energy_full(const GraphModel& model, const StateVector& state) {
  model.validate_state(state);
  double e = 0.0;
  for (const auto& f : model.factors()) e += f.table[factor_offset(f, state.values)];
  return e;
}

void local_conditional_energies(const GraphModel& model, std::span<const std::int32_t> values,
                                RvId rv, std::span<double> out) {
  const int card = model.cardinality(rv);
  std::fill(out.begin(), out.begin() + card, 0.0);
  for (std::size_t fi : model.factors_of(rv)) {
    const Factor& f = model.factors()[fi];
    std::size_t base = 0;
    std::size_t own_stride = 0;
    for (std::size_t k = 0; k < f.scope.size(); ++k) {
      if (f.scope[k] == rv) {
        own_stride = f.strides[k];
      } else {
        base += f.strides[k] * static_cast<std::size_t>(values[f.scope[k]]);
      }
    }
    for (int s = 0; s < card; ++s) out[s] += f.table[base + own_stride * static_cast<std::size_t>(s)];
  }
}

std::vector<double> local_conditional_energies(const GraphModel& model, const StateVector& state,
                                               RvId rv) {
  model.validate_state(state);
  if (rv >= model.num_rvs()) throw InputError("RV id out of range");
  std::vector<double> out(static_cast<std::size_t>(model.cardinality(rv)));
  local_conditional_energies(model, state.values, rv, out);
  return out;
}

std::vector<RvId> markov_blanket(const GraphModel& model, RvId rv) {
  if (rv >= model.num_rvs()) throw InputError("RV id out of range");
  return model.neighbors(rv);
}

std::vector<std::vector<RvId>> block_partition(const GraphModel& model) {
  const std::size_t n = model.num_rvs();
  if (n == 0) return {};

  std::vector<RvId> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](RvId a, RvId b) {
    return model.neighbors(a).size() > model.neighbors(b).size();
  });

  std::vector<int> color(n, -1);
  bool bipartite = true;
  for (RvId start : order) {
    if (color[start] != -1) continue;
    color[start] = 0;
    std::queue<RvId> q;
    q.push(start);
    while (!q.empty() && bipartite) {
      const RvId v = q.front();
      q.pop();
      for (RvId w : model.neighbors(v)) {
        if (color[w] == -1) {
          color[w] = 1 - color[v];
          q.push(w);
        } else if (color[w] == color[v]) {
          bipartite = false;
          break;
        }
      }
    }
    if (!bipartite) break;
  }

  if (!bipartite) {
    std::fill(color.begin(), color.end(), -1);
    for (RvId v : order) {
      std::vector<bool> used(n + 1, false);
      for (RvId w : model.neighbors(v)) {
        if (color[w] >= 0) used[static_cast<std::size_t>(color[w])] = true;
      }
      int c = 0;
      while (used[static_cast<std::size_t>(c)]) ++c;
      color[v] = c;
    }
  }

  const int ncolors = *std::max_element(color.begin(), color.end()) + 1;
  std::vector<std::vector<RvId>> blocks(static_cast<std::size_t>(ncolors));
  for (RvId v = 0; v < n; ++v) blocks[static_cast<std::size_t>(color[v])].push_back(v);
  std::erase_if(blocks, [](const auto& b) { return b.empty(); });
  return blocks;
}

// ----- Annealing ------------------------------------------------------------

AnnealSchedule AnnealSchedule::constant(double beta) {
  AnnealSchedule s;
  s.kind = Kind::kConstant;
  s.beta_start = s.beta_end = beta;
  s.validate();
  return s;
}

AnnealSchedule AnnealSchedule::geometric(double start, double end, std::uint64_t steps) {
  AnnealSchedule s;
  s.kind = Kind::kGeometric;
  s.beta_start = start;
  s.beta_end = end;
  s.num_steps = steps;
  s.validate();
  return s;
}

double AnnealSchedule::beta(std::uint64_t t) const {
  if (kind == Kind::kConstant || num_steps <= 1) return beta_start;
  if (t + 1 >= num_steps) return beta_end;
  const double frac = static_cast<double>(t) / static_cast<double>(num_steps - 1);
  return beta_start * std::pow(beta_end / beta_start, frac);
}

void AnnealSchedule::validate() const {
  if (!(beta_start > 0.0) || !(beta_end > 0.0) || !std::isfinite(beta_start) ||
      !std::isfinite(beta_end)) {
    throw InputError("anneal betas must be positive and finite");
  }
  if (kind == Kind::kGeometric && beta_end < beta_start) {
    throw InputError("geometric anneal schedule must be non-decreasing");
  }
}

}  // namespace mc2a
