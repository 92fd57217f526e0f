#pragma once

#include <string>
#include <vector>

#include "admet/molgraph.hpp"
#include "admet/potentialnet.hpp"

namespace admet {

struct AtomImportance {
    std::vector<double> values;  // per atom, graph order, raw signed sums
};

// Gradient of the rescaled task output w.r.t. the input feature matrix,
// summed over feature columns per atom.
AtomImportance atom_importance(const TaskCheckpoint& cp, const MolecularGraph& graph);

struct SubgraphResult {
    std::vector<int> atoms;  // sorted indices, connected in the bond graph
    double score = 0.0;
    std::string mode;  // "exact" or "greedy"
};

constexpr int kExactMaxAtoms = 60;
constexpr int kExactMaxSize = 8;

// Exact enumeration of connected induced subgraphs of size S; ties broken by
// lexicographically smallest sorted index set.
SubgraphResult top_substructure(const AtomImportance& imp, const MolecularGraph& graph,
                                int subgraph_size);
// Greedy fallback: seed at the argmax atom, repeatedly add the adjacent atom
// with the highest importance.
SubgraphResult top_substructure_greedy(const AtomImportance& imp,
                                       const MolecularGraph& graph, int subgraph_size);

// All connected induced subgraphs of the given size, as sorted index sets
// in lexicographic order (exposed for the enumeration tests).
std::vector<std::vector<int>> connected_subgraphs(const MolecularGraph& graph, int size);

std::string importance_to_json(const AtomImportance& imp, const SubgraphResult& sub,
                               const MolecularGraph& graph);

}  // namespace admet
