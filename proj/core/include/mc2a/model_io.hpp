#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "mc2a/model.hpp"

namespace mc2a {

// Bayes net text format:
//
//   bayesnet
//   var <name> <card> [parent ...]
//   table <name> prob|energy
//   <row per parent configuration, first parent most significant>
//   end
//
// `prob` rows are converted to energies (-log p); zero probabilities are
// rejected because energies must stay finite.
GraphModel parse_bayes_net(std::istream& is, const std::string& source = "<bn>");

// Pairwise / COP edge-list format (DIMACS-like, 1-based node ids):
//
//   c comment
//   p <ising|potts|maxcut|mis|maxclique|pairwise> <nodes> <edges>
//   q <card>                 (potts / pairwise only)
//   l <penalty>              (mis / maxclique only)
//   e <u> <v> [w | table...] (pairwise: card*card energies)
//   n <v> <values...>        (ising: field h; others: card unary energies)
GraphModel parse_pairwise(std::istream& is, const std::string& source = "<graph>");

// RBM: "rbm <V> <H>", then V rows of H weights, one line of V visible biases
// and one line of H hidden biases.
GraphModel parse_rbm(std::istream& is, const std::string& source = "<rbm>");

// Dispatch on the first keyword of the file (bayesnet / p / c / rbm).
GraphModel load_model(const std::string& path);

void write_bayes_net(std::ostream& os, const GraphModel& model);
void write_graph(std::ostream& os, const std::string& kind, std::size_t n,
                 const std::vector<WeightedEdge>& edges);

// Graph edges (0-based) of a COP / Ising file, for tools that need the raw
// instance instead of the energy model.
struct GraphInstance {
  std::string kind;
  std::size_t nodes = 0;
  std::vector<WeightedEdge> edges;
};
GraphInstance read_graph_instance(std::istream& is, const std::string& source = "<graph>");

}  // namespace mc2a
