#include "mc2a/workloads.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "mc2a/error.hpp"
#include "mc2a/rng.hpp"

namespace mc2a {

namespace {

std::vector<double> prob_rows_to_energy(const std::vector<double>& p) {
  std::vector<double> e(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) e[i] = -std::log(p[i]);
  return e;
}

}  // namespace

GraphModel make_earthquake() {
  std::vector<RandomVariable> rvs = {
      {0, 2, "Burglary"}, {1, 2, "Earthquake"}, {2, 2, "Alarm"}, {3, 2, "JohnCalls"}, {4, 2, "MaryCalls"}};
  // Value 0 = true, 1 = false.
  std::vector<std::vector<RvId>> parents = {{}, {}, {0, 1}, {2}, {2}};
  std::vector<std::vector<double>> cpts = {
      prob_rows_to_energy({0.01, 0.99}),
      prob_rows_to_energy({0.02, 0.98}),
      prob_rows_to_energy({0.95, 0.05, 0.94, 0.06, 0.29, 0.71, 0.001, 0.999}),
      prob_rows_to_energy({0.90, 0.10, 0.05, 0.95}),
      prob_rows_to_energy({0.70, 0.30, 0.01, 0.99}),
  };
  return make_bayes_net(std::move(rvs), std::move(parents), std::move(cpts));
}

GraphModel make_survey() {
  std::vector<RandomVariable> rvs = {{0, 3, "Age"},        {1, 2, "Sex"},       {2, 2, "Education"},
                                     {3, 2, "Occupation"}, {4, 2, "Residence"}, {5, 3, "Travel"}};
  std::vector<std::vector<RvId>> parents = {{}, {}, {0, 1}, {2}, {2}, {3, 4}};
  std::vector<std::vector<double>> cpts = {
      prob_rows_to_energy({0.3, 0.5, 0.2}),
      prob_rows_to_energy({0.6, 0.4}),
      // Education | Age, Sex: (high, uni)
      prob_rows_to_energy({0.75, 0.25, 0.64, 0.36, 0.72, 0.28, 0.70, 0.30, 0.88, 0.12, 0.90, 0.10}),
      // Occupation | Education: (emp, self)
      prob_rows_to_energy({0.96, 0.04, 0.92, 0.08}),
      // Residence | Education: (small, big)
      prob_rows_to_energy({0.25, 0.75, 0.20, 0.80}),
      // Travel | Occupation, Residence: (car, train, other)
      prob_rows_to_energy({0.48, 0.42, 0.10, 0.58, 0.24, 0.18, 0.56, 0.36, 0.08, 0.70, 0.21, 0.09}),
  };
  return make_bayes_net(std::move(rvs), std::move(parents), std::move(cpts));
}

GraphModel make_chain_net() {
  std::vector<RandomVariable> rvs = {{0, 2, "A"}, {1, 2, "B"}, {2, 2, "C"}};
  std::vector<std::vector<RvId>> parents = {{}, {0}, {1}};
  std::vector<std::vector<double>> cpts = {
      prob_rows_to_energy({0.6, 0.4}),
      prob_rows_to_energy({0.7, 0.3, 0.2, 0.8}),
      prob_rows_to_energy({0.9, 0.1, 0.35, 0.65}),
  };
  return make_bayes_net(std::move(rvs), std::move(parents), std::move(cpts));
}

std::vector<WeightedEdge> random_graph(std::size_t nodes, std::size_t edges, std::uint64_t seed) {
  return random_weighted_graph(nodes, edges, 1, 1, seed);
}

std::vector<WeightedEdge> random_weighted_graph(std::size_t nodes, std::size_t edges, int lo, int hi,
                                                std::uint64_t seed) {
  if (nodes < 2 || edges > nodes * (nodes - 1) / 2) throw InputError("too many edges for a simple graph");
  if (lo > hi) throw InputError("empty weight range");
  UniformRng rng(seed);
  std::set<std::pair<RvId, RvId>> used;
  std::vector<WeightedEdge> out;
  out.reserve(edges);
  while (out.size() < edges) {
    auto u = static_cast<RvId>(rng.next_u64() % nodes);
    auto v = static_cast<RvId>(rng.next_u64() % nodes);
    if (u == v) continue;
    if (u > v) std::swap(u, v);
    if (!used.insert({u, v}).second) continue;
    int w = 0;
    while (w == 0) w = lo + static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(hi - lo + 1));
    out.push_back({u, v, static_cast<double>(w)});
  }
  return out;
}

std::vector<WeightedEdge> ring_graph(std::size_t nodes) {
  std::vector<WeightedEdge> out;
  for (std::size_t i = 0; i < nodes; ++i) {
    out.push_back({static_cast<RvId>(i), static_cast<RvId>((i + 1) % nodes), 1.0});
  }
  return out;
}

GraphModel make_random_rbm(std::size_t visible, std::size_t hidden, double scale, std::uint64_t seed) {
  UniformRng rng(seed);
  auto draw = [&] { return std::nearbyint((2.0 * rng.next_uniform() - 1.0) * scale * 256.0) / 256.0; };
  std::vector<double> w(visible * hidden), bv(visible), bh(hidden);
  for (auto& x : w) x = draw();
  for (auto& x : bv) x = draw();
  for (auto& x : bh) x = draw();
  return make_rbm(visible, hidden, w, bv, bh);
}

GraphModel make_distribution(int card, std::uint64_t seed) {
  if (card > kMaxCardinality) {
    throw CapacityError("distribution of " + std::to_string(card) + " states exceeds the maximum of " +
                        std::to_string(kMaxCardinality));
  }
  UniformRng rng(seed);
  std::vector<double> unary(static_cast<std::size_t>(card));
  for (auto& e : unary) e = std::nearbyint(4.0 * rng.next_uniform() * 256.0) / 256.0;
  return make_pairwise({{0, card, "x"}}, {}, {}, {unary});
}

namespace {

// "<prefix><a>x<b>" or "<prefix><a>"; false when the name has another shape.
bool parse_dims(const std::string& name, const std::string& prefix, std::size_t& a, std::size_t* b) {
  if (name.rfind(prefix, 0) != 0) return false;
  const std::string rest = name.substr(prefix.size());
  const auto x = rest.find('x');
  if ((x == std::string::npos) != (b == nullptr)) return false;
  try {
    std::size_t used = 0;
    a = std::stoul(rest.substr(0, x), &used);
    if (used != (x == std::string::npos ? rest.size() : x)) return false;
    if (b) {
      *b = std::stoul(rest.substr(x + 1), &used);
      if (used != rest.size() - x - 1) return false;
    }
  } catch (const std::exception&) {
    return false;
  }
  return true;
}

}  // namespace

GraphModel builtin_workload(const std::string& name) {
  if (name == "chain") return make_chain_net();
  if (name == "earthquake") return make_earthquake();
  if (name == "survey") return make_survey();
  if (name == "maxcut16") return make_maxcut(16, random_graph(16, 40, 3));
  std::size_t a = 0, b = 0;
  if (parse_dims(name, "ising", a, &b)) return make_ising_grid(a, b, 1.0, 0.1);
  if (parse_dims(name, "rbm", a, &b)) return make_random_rbm(a, b, 0.5, 1);
  if (parse_dims(name, "ring", a, nullptr)) return make_maxcut(a, ring_graph(a));
  if (parse_dims(name, "dist", a, nullptr)) return make_distribution(static_cast<int>(a), 1);
  throw InputError("unknown builtin workload '" + name + "'");
}

std::vector<std::string> builtin_workload_names() {
  return {"chain", "earthquake", "survey", "maxcut16", "ising<R>x<C>", "ring<N>", "rbm<V>x<H>", "dist<N>"};
}

}  // namespace mc2a
