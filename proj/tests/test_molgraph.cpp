#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <queue>

#include "admet/molgraph.hpp"

using namespace admet;

namespace {

// Independent BFS over the bond list, ignoring the library's adjacency code.
std::vector<std::vector<int>> bfs_oracle(const MolecularGraph& g) {
    int n = g.atom_count();
    std::vector<std::vector<int>> adj(n);
    for (const Bond& b : g.bonds()) {
        adj[b.a].push_back(b.b);
        adj[b.b].push_back(b.a);
    }
    std::vector<std::vector<int>> dist(n, std::vector<int>(n, -1));
    for (int s = 0; s < n; ++s) {
        std::queue<int> q;
        dist[s][s] = 0;
        q.push(s);
        while (!q.empty()) {
            int u = q.front();
            q.pop();
            for (int v : adj[u])
                if (dist[s][v] < 0) {
                    dist[s][v] = dist[s][u] + 1;
                    q.push(v);
                }
        }
    }
    return dist;
}

int count_h(const MolecularGraph& g) {
    int h = 0;
    for (const Atom& a : g.atoms()) h += a.total_h();
    return h;
}

}  // namespace

TEST_CASE("ethanol basics") {
    MolecularGraph g = parse_smiles("CCO");
    REQUIRE(g.atom_count() == 3);
    CHECK(g.atoms()[0].element == "C");
    CHECK(g.atoms()[2].element == "O");
    CHECK(g.atoms()[0].implicit_h == 3);
    CHECK(g.atoms()[1].implicit_h == 2);
    CHECK(g.atoms()[2].implicit_h == 1);
    CHECK(g.bonds().size() == 2);
    CHECK(molecular_weight(g) == doctest::Approx(46.069).epsilon(1e-9));
}

TEST_CASE("benzene aromatic ring") {
    MolecularGraph g = parse_smiles("c1ccccc1");
    REQUIRE(g.atom_count() == 6);
    for (const Atom& a : g.atoms()) {
        CHECK(a.aromatic);
        CHECK(a.implicit_h == 1);
    }
    CHECK(g.bonds().size() == 6);
    for (const Bond& b : g.bonds()) CHECK(b.order == BondOrder::Aromatic);
    CHECK(molecular_weight(g) == doctest::Approx(78.114).epsilon(1e-9));
}

TEST_CASE("hand-checked hydrogen counts") {
    struct Row {
        const char* smiles;
        int atoms;
        int total_h;
    };
    const Row rows[] = {
        {"C", 1, 4},           {"CC", 2, 6},          {"C=C", 2, 4},
        {"C#C", 2, 2},         {"C#N", 2, 1},         {"O=C=O", 3, 0},
        {"CCO", 3, 6},         {"CC(=O)O", 4, 4},     {"C1CC1", 3, 6},
        {"C1CCCCC1", 6, 12},   {"c1ccccc1", 6, 6},    {"c1ccncc1", 6, 5},
        {"c1cc[nH]c1", 5, 5},  {"CN(C)C", 4, 9},      {"CS(=O)(=O)C", 5, 6},
        {"OS(=O)(=O)O", 5, 2}, {"OP(=O)(O)O", 5, 3},  {"FC(F)(F)F", 5, 0},
        {"ClCCl", 3, 2},       {"BrCBr", 3, 2},       {"ICI", 3, 2},
        {"C[Si](C)(C)C", 5, 12}, {"B(O)(O)O", 4, 3},  {"CSC", 3, 6},
        {"N", 1, 3},           {"O", 1, 2},           {"S", 1, 2},
        {"P", 1, 3},           {"CBr", 2, 3},         {"C=O", 2, 2},
        {"NC(=O)N", 4, 4},     {"CCN", 3, 7},         {"COC", 3, 6},
        {"C=CC=C", 4, 6},      {"CC#CC", 4, 6},       {"c1ccc2ccccc2c1", 10, 8},
        {"C1=CC=CC=C1", 6, 6}, {"CNC", 3, 7},         {"CO", 2, 4},
        {"CCCCCCCCCC", 10, 22},
    };
    for (const Row& r : rows) {
        CAPTURE(r.smiles);
        MolecularGraph g = parse_smiles(r.smiles);
        CHECK(g.atom_count() == r.atoms);
        CHECK(count_h(g) == r.total_h);
    }
}

TEST_CASE("bracket atoms") {
    SUBCASE("ammonium") {
        MolecularGraph g = parse_smiles("[NH4+]");
        REQUIRE(g.atom_count() == 1);
        CHECK(g.atoms()[0].formal_charge == 1);
        CHECK(g.atoms()[0].explicit_h == 4);
        CHECK(g.atoms()[0].implicit_h == 0);
        CHECK(g.atoms()[0].bracket);
    }
    SUBCASE("alkoxide") {
        MolecularGraph g = parse_smiles("C[O-]");
        CHECK(g.atoms()[1].formal_charge == -1);
        CHECK(g.atoms()[1].total_h() == 0);
    }
    SUBCASE("isotope") {
        MolecularGraph g = parse_smiles("[13CH4]");
        REQUIRE(g.atoms()[0].isotope.has_value());
        CHECK(*g.atoms()[0].isotope == 13);
        CHECK(g.atoms()[0].explicit_h == 4);
    }
    SUBCASE("double-digit charge") {
        MolecularGraph g = parse_smiles("[N+2]");
        CHECK(g.atoms()[0].formal_charge == 2);
    }
    SUBCASE("repeated sign charge") {
        MolecularGraph g = parse_smiles("[O--]");
        CHECK(g.atoms()[0].formal_charge == -2);
    }
    SUBCASE("bracket atom with no H spec has zero hydrogens") {
        MolecularGraph g = parse_smiles("[CH0](C)C");
        CHECK(g.atoms()[0].total_h() == 0);
    }
}

TEST_CASE("ring closures") {
    SUBCASE("two-digit label") {
        MolecularGraph g = parse_smiles("C%10CCCC%10");
        CHECK(g.atom_count() == 5);
        CHECK(g.bonds().size() == 5);
        CHECK(g.bond_between(0, 4).has_value());
    }
    SUBCASE("ring bond order before closure digit") {
        MolecularGraph g = parse_smiles("C1CC=1");
        auto order = g.bond_between(0, 2);
        REQUIRE(order.has_value());
        CHECK(*order == BondOrder::Double);
    }
    SUBCASE("reused ring number") {
        MolecularGraph g = parse_smiles("C1CC1C1CC1");
        CHECK(g.bonds().size() == 7);
    }
    SUBCASE("fused rings") {
        MolecularGraph g = parse_smiles("C1CC2CCC1C2");
        CHECK(g.atom_count() == 7);
        CHECK(g.bonds().size() == 8);
    }
}

TEST_CASE("branches") {
    MolecularGraph g = parse_smiles("CC(C)(C)C");
    REQUIRE(g.atom_count() == 5);
    CHECK(g.heavy_degree(1) == 4);
    CHECK(g.atoms()[1].implicit_h == 0);
    CHECK(g.atoms()[0].implicit_h == 3);
}

TEST_CASE("stereo markers are consumed") {
    MolecularGraph a = parse_smiles("C/C=C/C");
    MolecularGraph b = parse_smiles("CC=CC");
    CHECK(a.atom_count() == b.atom_count());
    CHECK(count_h(a) == count_h(b));
    MolecularGraph c = parse_smiles("N[C@@H](C)C(=O)O");
    CHECK(c.atom_count() == 6);
}

TEST_CASE("named parse errors") {
    CHECK_THROWS_AS(parse_smiles("C1CC"), UnclosedRing);
    CHECK_THROWS_AS(parse_smiles("C%12CC"), UnclosedRing);
    CHECK_THROWS_AS(parse_smiles("C(C"), UnbalancedParen);
    CHECK_THROWS_AS(parse_smiles("CC)C"), UnbalancedParen);
    CHECK_THROWS_AS(parse_smiles("CXC"), UnknownAtomSymbol);
    CHECK_THROWS_AS(parse_smiles("[Xx]"), UnknownAtomSymbol);
    CHECK_THROWS_AS(parse_smiles("C.C"), MultiComponentUnsupported);
    CHECK_THROWS_AS(parse_smiles("C(C)(C)(C)(C)C"), ValenceViolation);
    CHECK_THROWS_AS(parse_smiles("O(C)(C)C"), ValenceViolation);
    CHECK_THROWS_AS(parse_smiles(""), EmptyInput);
}

TEST_CASE("error objects carry their names") {
    try {
        parse_smiles("C1CC");
        FAIL("expected throw");
    } catch (const NamedError& e) {
        CHECK(std::string(e.name()) == "UnclosedRing");
    }
}

TEST_CASE("hypervalent sulfur and phosphorus parse") {
    CHECK_NOTHROW(parse_smiles("CS(=O)(=O)C"));
    CHECK_NOTHROW(parse_smiles("OP(=O)(O)O"));
    CHECK_NOTHROW(parse_smiles("C[N+](C)(C)C"));
    CHECK_THROWS_AS(parse_smiles("CN(C)(C)C"), ValenceViolation);
}

TEST_CASE("bond order sums") {
    MolecularGraph g = parse_smiles("c1ccccc1");
    // two aromatic bonds, 1.5 each, totals 3
    CHECK(bond_order_sum(g, 0) == 3);
    MolecularGraph h = parse_smiles("O=C=O");
    CHECK(bond_order_sum(h, 1) == 4);
}

TEST_CASE("shortest bond distances match a BFS oracle") {
    const char* mols[] = {"CCO", "C1CCCCC1", "c1ccc2ccccc2c1", "CC(C)(C)C1CC1CCN",
                          "OS(=O)(=O)c1ccccc1"};
    for (const char* s : mols) {
        CAPTURE(s);
        MolecularGraph g = parse_smiles(s);
        CHECK(shortest_bond_distances(g) == bfs_oracle(g));
    }
    MolecularGraph ring = parse_smiles("C1CCCCC1");
    auto d = shortest_bond_distances(ring);
    CHECK(d[0][3] == 3);
    CHECK(d[0][5] == 1);
    CHECK(d[0][0] == 0);
}

TEST_CASE("element mass table") {
    CHECK(atomic_mass("H") == doctest::Approx(1.008));
    CHECK(atomic_mass("C") == doctest::Approx(12.011));
    CHECK(atomic_mass("Cl") == doctest::Approx(35.45));
    CHECK(atomic_mass("I") == doctest::Approx(126.904));
    CHECK(atomic_mass("Si") == doctest::Approx(28.086));
}

TEST_CASE("charge-adjusted default valence") {
    // [NH4+] valence 4, [O-] valence 1, [C-] valence 3
    CHECK(default_valence("N", 1) == 4);
    CHECK(default_valence("O", -1) == 1);
    CHECK(default_valence("N", -1) == 2);
    CHECK(default_valence("C", 0) == 4);
    CHECK(default_valence("O", 0) == 2);
}

TEST_CASE("non-ascii input is rejected") {
    CHECK_THROWS_AS(parse_smiles("C\xc3\xa9"), UnknownAtomSymbol);
}

TEST_CASE("adjacency is split by edge type") {
    MolecularGraph g = parse_smiles("C=CC#CC");
    CHECK(g.neighbors(1, edge_type_index(BondOrder::Single)) == std::vector<int>{2});
    CHECK(g.neighbors(1, edge_type_index(BondOrder::Double)) == std::vector<int>{0});
    CHECK(g.neighbors(2, edge_type_index(BondOrder::Triple)) == std::vector<int>{3});
    CHECK(g.neighbors(2).size() == 2);
}
