#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mc2a/model.hpp"

namespace mc2a {

// Small Bayes nets used throughout the tests and examples.
GraphModel make_earthquake();  // Burglary, Earthquake -> Alarm -> JohnCalls, MaryCalls
GraphModel make_survey();      // Age, Sex -> Education -> Occupation, Residence -> Travel
GraphModel make_chain_net();   // A -> B -> C, all binary

// Random simple graph with exactly `edges` distinct edges (unit weights).
std::vector<WeightedEdge> random_graph(std::size_t nodes, std::size_t edges, std::uint64_t seed);
// Same, with integer weights drawn uniformly from [lo, hi] (zero excluded).
std::vector<WeightedEdge> random_weighted_graph(std::size_t nodes, std::size_t edges, int lo, int hi,
                                                std::uint64_t seed);
// Ring 0-1-...-(n-1)-0.
std::vector<WeightedEdge> ring_graph(std::size_t nodes);

// Dense binary RBM with weights and biases drawn from a seeded uniform range,
// rounded to multiples of 2^-8.
GraphModel make_random_rbm(std::size_t visible, std::size_t hidden, double scale, std::uint64_t seed);

// Single RV with `card` states and seeded energies in [0, 4] (multiples of
// 2^-8); a cardinality above 256 raises CapacityError.
GraphModel make_distribution(int card, std::uint64_t seed);

// Named workloads: chain, earthquake, survey, maxcut16, ising<R>x<C>,
// ring<N> (MaxCut on a ring), rbm<V>x<H>, dist<N>.
GraphModel builtin_workload(const std::string& name);
std::vector<std::string> builtin_workload_names();

}  // namespace mc2a
