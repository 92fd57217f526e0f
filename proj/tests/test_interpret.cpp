#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <queue>

#include "admet/interpret.hpp"

using namespace admet;

namespace {

TaskCheckpoint make_checkpoint(uint64_t seed = 1, double label_std = 1.0,
                               double label_mean = 0.0) {
    ModelConfig c;
    c.k_layers = 2;
    c.input_embedding = true;
    c.state_dim = 6;
    c.gather_dim = 5;
    c.fc_dims = {4, 1};
    c.seed = seed;
    TaskCheckpoint cp;
    cp.task = "t";
    cp.task_index = 0;
    cp.config = c;
    cp.params = init_params(c);
    cp.label_mean = label_mean;
    cp.label_std = label_std;
    cp.schema_hash = atom_feature_schema_hash();
    return cp;
}

// Rescaled model output with an externally supplied feature matrix, used for
// finite-difference probing of the importance values.
double output_with_features(const TaskCheckpoint& cp, const MolecularGraph& g,
                            const Tensor& features) {
    std::vector<const MolecularGraph*> one{&g};
    BatchedGraphs batch = batch_graphs(one);
    batch.features = features;
    ModelParams params = cp.params;
    Tape tape(false);
    Tape::NodeId f = tape.leaf(batch.features);
    Tape::NodeId out = forward_on_tape(tape, params, cp.config, batch, f);
    return cp.label_mean + cp.label_std * tape.value(out).at(0, cp.task_index);
}

// Brute force: every k-subset of atoms, connectivity checked by BFS.
std::vector<std::vector<int>> subgraph_oracle(const MolecularGraph& g, int size) {
    int n = g.atom_count();
    std::vector<std::vector<int>> out;
    std::vector<int> subset;
    std::function<void(int)> rec = [&](int start) {
        if (static_cast<int>(subset.size()) == size) {
            std::vector<bool> in(n, false);
            for (int v : subset) in[v] = true;
            std::vector<bool> seen(n, false);
            std::queue<int> q;
            q.push(subset[0]);
            seen[subset[0]] = true;
            int reached = 1;
            while (!q.empty()) {
                int u = q.front();
                q.pop();
                for (int nb : g.neighbors(u))
                    if (in[nb] && !seen[nb]) {
                        seen[nb] = true;
                        ++reached;
                        q.push(nb);
                    }
            }
            if (reached == size) out.push_back(subset);
            return;
        }
        for (int v = start; v < n; ++v) {
            subset.push_back(v);
            rec(v + 1);
            subset.pop_back();
        }
    };
    rec(0);
    return out;
}

}  // namespace

TEST_CASE("importance values match directional finite differences") {
    TaskCheckpoint cp = make_checkpoint(19, 2.5, 1.0);
    const char* mols[] = {"CCO", "c1ccccc1", "CC(=O)O"};
    for (const char* s : mols) {
        CAPTURE(s);
        MolecularGraph g = parse_smiles(s);
        AtomImportance imp = atom_importance(cp, g);
        REQUIRE(static_cast<int>(imp.values.size()) == g.atom_count());

        std::vector<const MolecularGraph*> one{&g};
        BatchedGraphs batch = batch_graphs(one);
        const double step = 1e-5;
        for (int atom = 0; atom < g.atom_count(); ++atom) {
            // bump every feature of one atom together: the importance is the
            // row sum of the feature gradient, i.e. this directional derivative
            Tensor up = batch.features, down = batch.features;
            for (int j = 0; j < up.cols; ++j) {
                up.at(atom, j) += step;
                down.at(atom, j) -= step;
            }
            double fd = (output_with_features(cp, g, up) -
                         output_with_features(cp, g, down)) /
                        (2.0 * step);
            CHECK(imp.values[atom] == doctest::Approx(fd).epsilon(1e-4).scale(1.0));
        }
    }
}

TEST_CASE("importance scales with the label standard deviation") {
    MolecularGraph g = parse_smiles("CCO");
    TaskCheckpoint unit = make_checkpoint(5, 1.0);
    TaskCheckpoint tripled = make_checkpoint(5, 3.0);
    AtomImportance a = atom_importance(unit, g);
    AtomImportance b = atom_importance(tripled, g);
    for (size_t i = 0; i < a.values.size(); ++i)
        CHECK(b.values[i] == doctest::Approx(3.0 * a.values[i]).epsilon(1e-12));
}

TEST_CASE("connected subgraph enumeration matches brute force") {
    const char* mols[] = {"CCO", "C1CCCCC1", "c1ccc2ccccc2c1", "CC(C)(C)CO",
                          "C1CC1CC(N)C=O"};
    for (const char* s : mols) {
        MolecularGraph g = parse_smiles(s);
        for (int size = 1; size <= std::min(4, g.atom_count()); ++size) {
            CAPTURE(s);
            CAPTURE(size);
            CHECK(connected_subgraphs(g, size) == subgraph_oracle(g, size));
        }
    }
}

TEST_CASE("top substructure equals the brute-force argmax") {
    TaskCheckpoint cp = make_checkpoint(23, 1.7);
    const char* mols[] = {"CC(C)CCO", "c1ccccc1CN", "C1CCCCC1O"};
    for (const char* s : mols) {
        CAPTURE(s);
        MolecularGraph g = parse_smiles(s);
        AtomImportance imp = atom_importance(cp, g);
        for (int size = 1; size <= std::min(4, g.atom_count()); ++size) {
            SubgraphResult best = top_substructure(imp, g, size);
            CHECK(best.mode == "exact");
            std::vector<int> oracle_atoms;
            double oracle_score = -1e300;
            for (const auto& subset : subgraph_oracle(g, size)) {
                double score = 0.0;
                for (int v : subset) score += imp.values[v];
                if (score > oracle_score) {
                    oracle_score = score;
                    oracle_atoms = subset;
                }
            }
            CHECK(best.atoms == oracle_atoms);
            CHECK(best.score == doctest::Approx(oracle_score));
        }
    }
}

TEST_CASE("score ties resolve to the lexicographically smallest atom set") {
    // symmetric path C-C-C with a hand-built importance vector
    MolecularGraph g = parse_smiles("CCC");
    AtomImportance imp;
    imp.values = {1.0, 0.0, 1.0};  // {0,1} and {1,2} tie at score 1
    SubgraphResult best = top_substructure(imp, g, 2);
    CHECK(best.atoms == std::vector<int>{0, 1});
}

TEST_CASE("size limits") {
    MolecularGraph g = parse_smiles("CCCCCCCCCC");
    AtomImportance imp;
    imp.values.assign(10, 1.0);
    CHECK_THROWS_AS(top_substructure(imp, g, 0), SizeOutOfRange);
    CHECK_THROWS_AS(top_substructure(imp, g, 11), SizeOutOfRange);
    CHECK_THROWS_AS(top_substructure(imp, g, 9), ExactModeLimitExceeded);
    // the full molecule is exempt from the subgraph-size cap
    SubgraphResult whole = top_substructure(imp, g, 10);
    CHECK(whole.atoms.size() == 10);

    std::string big(61, 'C');
    MolecularGraph huge = parse_smiles(big);
    AtomImportance imp2;
    imp2.values.assign(61, 1.0);
    CHECK_THROWS_AS(top_substructure(imp2, huge, 3), ExactModeLimitExceeded);
    SubgraphResult greedy = top_substructure_greedy(imp2, huge, 3);
    CHECK(greedy.mode == "greedy");
    CHECK(greedy.atoms.size() == 3);
}

TEST_CASE("greedy growth follows the importance ranking") {
    // chain 0-1-2-3-4 with the peak in the middle
    MolecularGraph g = parse_smiles("CCCCC");
    AtomImportance imp;
    imp.values = {0.1, 0.5, 2.0, 0.9, 0.2};
    SubgraphResult r = top_substructure_greedy(imp, g, 3);
    CHECK(r.atoms == std::vector<int>{1, 2, 3});
    CHECK(r.score == doctest::Approx(3.4));
    SubgraphResult one = top_substructure_greedy(imp, g, 1);
    CHECK(one.atoms == std::vector<int>{2});
}

TEST_CASE("importance json includes atoms, scores, and mode") {
    TaskCheckpoint cp = make_checkpoint(2);
    MolecularGraph g = parse_smiles("CCO");
    AtomImportance imp = atom_importance(cp, g);
    SubgraphResult sub = top_substructure(imp, g, 2);
    std::string js = importance_to_json(imp, sub, g);
    CHECK(js.find("\"smiles\": \"CCO\"") != std::string::npos);
    CHECK(js.find("atom_importance") != std::string::npos);
    CHECK(js.find("\"mode\": \"exact\"") != std::string::npos);
}
