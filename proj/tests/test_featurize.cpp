#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>
#include <queue>

#include "admet/featurize.hpp"

using namespace admet;

namespace {

int schema_index(const std::string& name) {
    const auto& schema = atom_feature_schema();
    for (size_t i = 0; i < schema.size(); ++i)
        if (schema[i] == name) return static_cast<int>(i);
    return -1;
}

double one_hot_sum(const AtomFeatureMatrix& m, int row) {
    double s = 0.0;
    for (int c = 0; c < m.cols - 1; ++c) s += m.at(row, c);  // all but radical count
    return s;
}

// Pair-descriptor oracle: BFS distances plus the public atom-type functions,
// assembled independently of the library's pair loop.
DescriptorBag pair_oracle(const MolecularGraph& g,
                          std::string (*type_fn)(const MolecularGraph&, int)) {
    int n = g.atom_count();
    std::vector<std::vector<int>> adj(n);
    for (const Bond& b : g.bonds()) {
        adj[b.a].push_back(b.b);
        adj[b.b].push_back(b.a);
    }
    DescriptorBag bag;
    for (int s = 0; s < n; ++s) {
        std::vector<int> dist(n, -1);
        std::queue<int> q;
        dist[s] = 0;
        q.push(s);
        while (!q.empty()) {
            int u = q.front();
            q.pop();
            for (int v : adj[u])
                if (dist[v] < 0) {
                    dist[v] = dist[u] + 1;
                    q.push(v);
                }
        }
        for (int t = s + 1; t < n; ++t) {
            std::string a = type_fn(g, s), b = type_fn(g, t);
            if (b < a) std::swap(a, b);
            bag.counts[a + "|" + std::to_string(dist[t]) + "|" + b] += 1;
        }
    }
    return bag;
}

}  // namespace

TEST_CASE("schema has 43 named columns and a stable hash") {
    CHECK(atom_feature_schema().size() == kAtomFeatureDim);
    CHECK(atom_feature_schema_hash() == atom_feature_schema_hash());
    CHECK(schema_index("element=C") >= 0);
    CHECK(schema_index("charge=0") >= 0);
    CHECK(schema_index("degree=6") >= 0);
    CHECK(schema_index("radical_electrons") == kAtomFeatureDim - 1);
}

TEST_CASE("methane feature row") {
    MolecularGraph g = parse_smiles("C");
    AtomFeatureMatrix m = atom_features(g);
    REQUIRE(m.rows == 1);
    CHECK(m.at(0, schema_index("element=C")) == 1.0);
    CHECK(m.at(0, schema_index("charge=0")) == 1.0);
    CHECK(m.at(0, schema_index("hybridization=sp3")) == 1.0);
    CHECK(m.at(0, schema_index("aromatic")) == 0.0);
    CHECK(m.at(0, schema_index("degree=0")) == 1.0);
    CHECK(m.at(0, schema_index("total_h=4")) == 1.0);
    CHECK(m.at(0, schema_index("implicit_h=4")) == 1.0);
    CHECK(m.at(0, schema_index("radical_electrons")) == 0.0);
    // exactly one bit per one-hot group plus the aromatic flag
    CHECK(one_hot_sum(m, 0) == 6.0);
}

TEST_CASE("benzene carbon is aromatic sp2") {
    MolecularGraph g = parse_smiles("c1ccccc1");
    AtomFeatureMatrix m = atom_features(g);
    for (int i = 0; i < m.rows; ++i) {
        CHECK(m.at(i, schema_index("aromatic")) == 1.0);
        CHECK(m.at(i, schema_index("hybridization=sp2")) == 1.0);
        CHECK(m.at(i, schema_index("degree=2")) == 1.0);
        CHECK(one_hot_sum(m, i) == 7.0);
    }
}

TEST_CASE("hybridization rules") {
    MolecularGraph co2 = parse_smiles("O=C=O");
    CHECK(hybridization(co2, 1) == Hybridization::Sp);   // two double bonds
    CHECK(hybridization(co2, 0) == Hybridization::Sp2);  // one double bond
    MolecularGraph hcn = parse_smiles("C#N");
    CHECK(hybridization(hcn, 0) == Hybridization::Sp);
    MolecularGraph eth = parse_smiles("CC");
    CHECK(hybridization(eth, 0) == Hybridization::Sp3);
}

TEST_CASE("pi electron counts") {
    MolecularGraph g = parse_smiles("C=CC#CC");
    CHECK(pi_electron_count(g, 0) == 1);
    CHECK(pi_electron_count(g, 2) == 2);
    CHECK(pi_electron_count(g, 4) == 0);
    MolecularGraph b = parse_smiles("c1ccccc1");
    CHECK(pi_electron_count(b, 0) == 1);
    MolecularGraph allene = parse_smiles("C=C=C");
    CHECK(pi_electron_count(allene, 1) == 2);  // capped at 2
}

TEST_CASE("radical electrons only on bracket atoms") {
    MolecularGraph methyl = parse_smiles("[CH3]");
    CHECK(radical_electrons(methyl, 0) == 1);
    MolecularGraph methane = parse_smiles("C");
    CHECK(radical_electrons(methane, 0) == 0);
    AtomFeatureMatrix m = atom_features(methyl);
    CHECK(m.at(0, schema_index("radical_electrons")) == 1.0);
}

TEST_CASE("atom-pair types") {
    MolecularGraph g = parse_smiles("CCO");
    CHECK(ap_atom_type(g, 0) == "C.1.0");
    CHECK(ap_atom_type(g, 1) == "C.2.0");
    CHECK(ap_atom_type(g, 2) == "O.1.0");
    MolecularGraph b = parse_smiles("c1ccccc1");
    CHECK(ap_atom_type(b, 0) == "C.2.1");
}

TEST_CASE("donor/acceptor types") {
    CHECK(dp_atom_type(parse_smiles("[NH4+]"), 0) == "cation");
    CHECK(dp_atom_type(parse_smiles("C[O-]"), 1) == "anion");
    CHECK(dp_atom_type(parse_smiles("CO"), 1) == "donor");     // hydroxyl O
    CHECK(dp_atom_type(parse_smiles("COC"), 1) == "acceptor"); // ether O
    CHECK(dp_atom_type(parse_smiles("CN(C)C"), 1) == "acceptor");
    CHECK(dp_atom_type(parse_smiles("CCl"), 1) == "polar");
    CHECK(dp_atom_type(parse_smiles("CSC"), 1) == "polar");
    CHECK(dp_atom_type(parse_smiles("CC"), 0) == "hydrophobe");
    CHECK(dp_atom_type(parse_smiles("CO"), 0) == "other");     // C next to O
    CHECK(dp_atom_type(parse_smiles("C[Si](C)(C)C"), 1) == "other");
}

TEST_CASE("ethanol atom-pair descriptors by hand") {
    DescriptorBag bag = ap_descriptors(parse_smiles("CCO"));
    std::map<std::string, int> expected = {
        {"C.1.0|1|C.2.0", 1}, {"C.1.0|2|O.1.0", 1}, {"C.2.0|1|O.1.0", 1}};
    CHECK(bag.counts == expected);
}

TEST_CASE("pair descriptors match the brute-force oracle") {
    const char* mols[] = {"CCO", "c1ccccc1", "CC(=O)Oc1ccccc1C(=O)O",
                          "C[N+](C)(C)CCO", "OS(=O)(=O)c1ccc(Cl)cc1"};
    for (const char* s : mols) {
        CAPTURE(s);
        MolecularGraph g = parse_smiles(s);
        CHECK(ap_descriptors(g).counts == pair_oracle(g, &ap_atom_type).counts);
        CHECK(dp_descriptors(g).counts == pair_oracle(g, &dp_atom_type).counts);
    }
}

TEST_CASE("pair keys are canonical") {
    DescriptorBag bag = ap_descriptors(parse_smiles("OCC"));
    for (const auto& [key, count] : bag.counts) {
        size_t p1 = key.find('|');
        size_t p2 = key.rfind('|');
        REQUIRE(p1 != std::string::npos);
        REQUIRE(p2 > p1);
        CHECK(key.substr(0, p1) <= key.substr(p2 + 1));
        CHECK(count > 0);
    }
}

TEST_CASE("fnv1a64 reference values") {
    CHECK(fnv1a64("") == 14695981039346656037ull);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cull);
    CHECK(fnv1a64("foobar") == 0x85944171f73967e8ull);
}

TEST_CASE("fingerprints are atom-order invariant") {
    CHECK(circular_fingerprint(parse_smiles("CCO")).bits ==
          circular_fingerprint(parse_smiles("OCC")).bits);
    CHECK(circular_fingerprint(parse_smiles("c1ccccc1O")).bits ==
          circular_fingerprint(parse_smiles("Oc1ccccc1")).bits);
}

TEST_CASE("fingerprint bits stay in range and grow with radius") {
    Fingerprint fp = circular_fingerprint(parse_smiles("CC(=O)Oc1ccccc1C(=O)O"), 2);
    CHECK(!fp.bits.empty());
    for (int b : fp.bits) {
        CHECK(b >= 0);
        CHECK(b < kFingerprintBits);
    }
    Fingerprint fp0 = circular_fingerprint(parse_smiles("CC(=O)Oc1ccccc1C(=O)O"), 0);
    CHECK(fp0.bits.size() <= fp.bits.size());
    CHECK_THROWS_AS(circular_fingerprint(parse_smiles("C"), -1), SizeOutOfRange);
    CHECK_THROWS_AS(circular_fingerprint(parse_smiles("C"), 6), SizeOutOfRange);
}

TEST_CASE("tanimoto arithmetic") {
    Fingerprint a, b;
    CHECK(tanimoto(a, b) == 0.0);  // both empty
    a.bits = {1, 2, 3};
    b.bits = {2, 3, 4};
    CHECK(tanimoto(a, b) == doctest::Approx(0.5));
    CHECK(tanimoto(a, a) == doctest::Approx(1.0));
    b.bits = {9, 10};
    CHECK(tanimoto(a, b) == 0.0);
    Fingerprint mol = circular_fingerprint(parse_smiles("CCO"));
    CHECK(tanimoto(mol, mol) == doctest::Approx(1.0));
}
