#include "admet/interpret.hpp"

#include <algorithm>
#include <set>

#include <json.hpp>

namespace admet {

AtomImportance atom_importance(const TaskCheckpoint& cp, const MolecularGraph& graph) {
    std::vector<const MolecularGraph*> one{&graph};
    BatchedGraphs batch = batch_graphs(one);
    if (batch.schema_hash != cp.schema_hash)
        throw SchemaMismatch("feature schema differs from checkpoint");
    ModelParams params = cp.params;
    Tape tape;
    Tape::NodeId features = tape.leaf(batch.features);
    Tape::NodeId out = forward_on_tape(tape, params, cp.config, batch, features);
    // rescaled scalar output for the checkpoint's task
    Tensor selector(cp.config.n_tasks(), 1);
    selector.at(cp.task_index, 0) = cp.label_std;
    Tape::NodeId scalar = tape.matmul(out, tape.leaf(selector));
    tape.backward(scalar);
    const Tensor& g = tape.grad(features);
    AtomImportance imp;
    imp.values.reserve(graph.atom_count());
    for (int i = 0; i < g.rows; ++i) {
        double sum = 0.0;
        for (int j = 0; j < g.cols; ++j) sum += g.at(i, j);
        imp.values.push_back(sum);
    }
    return imp;
}

namespace {

// Canonical extension enumeration: grow each subgraph only through neighbors
// with index greater than the anchor (smallest) atom, tracking the frontier.
void extend(const MolecularGraph& g, std::vector<int>& current, std::set<int>& forbidden,
            int anchor, int size, std::vector<std::vector<int>>& out) {
    if (static_cast<int>(current.size()) == size) {
        std::vector<int> sorted = current;
        std::sort(sorted.begin(), sorted.end());
        out.push_back(std::move(sorted));
        return;
    }
    // candidate extensions: neighbors of the current set, index > anchor,
    // not already used or forbidden
    std::set<int> candidates;
    for (int v : current) {
        for (int nb : g.neighbors(v)) {
            if (nb > anchor && !forbidden.count(nb) &&
                std::find(current.begin(), current.end(), nb) == current.end())
                candidates.insert(nb);
        }
    }
    std::vector<int> banned_here;
    for (int c : candidates) {
        current.push_back(c);
        extend(g, current, forbidden, anchor, size, out);
        current.pop_back();
        // each candidate is excluded from deeper branches so every subgraph
        // is produced exactly once
        forbidden.insert(c);
        banned_here.push_back(c);
    }
    for (int c : banned_here) forbidden.erase(c);
}

}  // namespace

std::vector<std::vector<int>> connected_subgraphs(const MolecularGraph& g, int size) {
    std::vector<std::vector<int>> out;
    for (int anchor = 0; anchor < g.atom_count(); ++anchor) {
        std::vector<int> current{anchor};
        std::set<int> forbidden;
        extend(g, current, forbidden, anchor, size, out);
    }
    std::sort(out.begin(), out.end());
    return out;
}

SubgraphResult top_substructure(const AtomImportance& imp, const MolecularGraph& graph,
                                int subgraph_size) {
    int n = graph.atom_count();
    if (subgraph_size < 1 || subgraph_size > n)
        throw SizeOutOfRange("subgraph size " + std::to_string(subgraph_size) +
                             " for a molecule of " + std::to_string(n) + " atoms");
    if (n > kExactMaxAtoms || (subgraph_size > kExactMaxSize && subgraph_size < n))
        throw ExactModeLimitExceeded("exact mode limited to N <= 60, S <= 8; rerun greedy");

    SubgraphResult best;
    best.mode = "exact";
    bool found = false;
    for (const auto& subset : connected_subgraphs(graph, subgraph_size)) {
        double score = 0.0;
        for (int v : subset) score += imp.values[v];
        // subsets arrive in lexicographic order, so strict improvement keeps
        // the lexicographically smallest among ties
        if (!found || score > best.score) {
            best.atoms = subset;
            best.score = score;
            found = true;
        }
    }
    return best;
}

SubgraphResult top_substructure_greedy(const AtomImportance& imp,
                                       const MolecularGraph& graph, int subgraph_size) {
    int n = graph.atom_count();
    if (subgraph_size < 1 || subgraph_size > n)
        throw SizeOutOfRange("subgraph size " + std::to_string(subgraph_size));
    int seed = 0;
    for (int i = 1; i < n; ++i)
        if (imp.values[i] > imp.values[seed]) seed = i;
    std::set<int> chosen{seed};
    while (static_cast<int>(chosen.size()) < subgraph_size) {
        int best = -1;
        for (int v : chosen) {
            for (int nb : graph.neighbors(v)) {
                if (chosen.count(nb)) continue;
                if (best < 0 || imp.values[nb] > imp.values[best]) best = nb;
            }
        }
        if (best < 0) break;  // molecule smaller than requested, cannot happen when connected
        chosen.insert(best);
    }
    SubgraphResult result;
    result.mode = "greedy";
    result.atoms.assign(chosen.begin(), chosen.end());
    for (int v : result.atoms) result.score += imp.values[v];
    return result;
}

std::string importance_to_json(const AtomImportance& imp, const SubgraphResult& sub,
                               const MolecularGraph& graph) {
    nlohmann::json j;
    j["smiles"] = graph.source_smiles();
    j["atom_importance"] = imp.values;
    j["subgraph"] = {{"atoms", sub.atoms}, {"score", sub.score}, {"mode", sub.mode}};
    return j.dump(2);
}

}  // namespace admet
