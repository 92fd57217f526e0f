#include "admet/featurize.hpp"

#include <algorithm>
#include <cstring>
#include <sstream>

namespace admet {

namespace {

const std::vector<std::string> kElements = {"B",  "C", "N",  "O",  "F", "Si",
                                            "P",  "S", "Cl", "Br", "I"};
const std::vector<int> kCharges = {-2, -1, 0, 1, 2};

void one_hot(std::vector<double>& row, int group_offset, int index) {
    row[group_offset + index] = 1.0;
}

}  // namespace

const std::vector<std::string>& atom_feature_schema() {
    static const std::vector<std::string> schema = [] {
        std::vector<std::string> s;
        for (const auto& e : kElements) s.push_back("element=" + e);
        s.push_back("element=other");
        for (int c : kCharges) s.push_back("charge=" + std::to_string(c));
        s.push_back("charge=other");
        s.push_back("hybridization=sp");
        s.push_back("hybridization=sp2");
        s.push_back("hybridization=sp3");
        s.push_back("hybridization=other");
        s.push_back("aromatic");
        for (int d = 0; d <= 6; ++d) s.push_back("degree=" + std::to_string(d));
        for (int h = 0; h <= 4; ++h) s.push_back("total_h=" + std::to_string(h));
        s.push_back("total_h=other");
        for (int h = 0; h <= 4; ++h) s.push_back("implicit_h=" + std::to_string(h));
        s.push_back("implicit_h=other");
        s.push_back("radical_electrons");
        return s;
    }();
    return schema;
}

std::string atom_feature_schema_json() {
    std::ostringstream os;
    os << "[";
    const auto& schema = atom_feature_schema();
    for (size_t i = 0; i < schema.size(); ++i) {
        if (i) os << ",";
        os << "\"" << schema[i] << "\"";
    }
    os << "]";
    return os.str();
}

uint64_t atom_feature_schema_hash() { return fnv1a64(atom_feature_schema_json()); }

Hybridization hybridization(const MolecularGraph& g, int atom) {
    if (g.atoms()[atom].aromatic) return Hybridization::Sp2;
    int doubles = 0;
    bool triple = false;
    for (const Bond& b : g.bonds()) {
        if (b.a != atom && b.b != atom) continue;
        if (b.order == BondOrder::Triple) triple = true;
        if (b.order == BondOrder::Double) ++doubles;
    }
    if (triple || doubles >= 2) return Hybridization::Sp;
    if (doubles == 1) return Hybridization::Sp2;
    return Hybridization::Sp3;
}

int pi_electron_count(const MolecularGraph& g, int atom) {
    if (g.atoms()[atom].aromatic) return 1;
    int pi = 0;
    for (const Bond& b : g.bonds()) {
        if (b.a != atom && b.b != atom) continue;
        if (b.order == BondOrder::Double) pi += 1;
        if (b.order == BondOrder::Triple) pi += 2;
    }
    return std::min(pi, 2);
}

int radical_electrons(const MolecularGraph& g, int atom) {
    const Atom& a = g.atoms()[atom];
    if (!a.bracket) return 0;
    int dv = default_valence(a.element, a.formal_charge);
    return std::max(0, dv - bond_order_sum(g, atom) - a.total_h());
}

AtomFeatureMatrix atom_features(const MolecularGraph& g) {
    AtomFeatureMatrix m;
    m.rows = g.atom_count();
    m.values.assign(static_cast<size_t>(m.rows) * m.cols, 0.0);
    for (int i = 0; i < m.rows; ++i) {
        const Atom& a = g.atoms()[i];
        std::vector<double> row(kAtomFeatureDim, 0.0);
        int off = 0;

        auto elem_it = std::find(kElements.begin(), kElements.end(), a.element);
        int elem_idx = elem_it == kElements.end()
                           ? static_cast<int>(kElements.size())
                           : static_cast<int>(elem_it - kElements.begin());
        one_hot(row, off, elem_idx);
        off += static_cast<int>(kElements.size()) + 1;

        auto chg_it = std::find(kCharges.begin(), kCharges.end(), a.formal_charge);
        int chg_idx = chg_it == kCharges.end() ? static_cast<int>(kCharges.size())
                                               : static_cast<int>(chg_it - kCharges.begin());
        one_hot(row, off, chg_idx);
        off += static_cast<int>(kCharges.size()) + 1;

        one_hot(row, off, static_cast<int>(hybridization(g, i)));
        off += 4;

        row[off++] = a.aromatic ? 1.0 : 0.0;

        int degree = std::min(g.heavy_degree(i), 6);  // 6 is the overflow bucket
        one_hot(row, off, degree);
        off += 7;

        int th = a.total_h();
        one_hot(row, off, th <= 4 ? th : 5);
        off += 6;

        int ih = a.implicit_h;
        one_hot(row, off, ih <= 4 ? ih : 5);
        off += 6;

        row[off++] = static_cast<double>(radical_electrons(g, i));

        std::copy(row.begin(), row.end(), m.values.begin() + static_cast<size_t>(i) * m.cols);
    }
    return m;
}

std::string ap_atom_type(const MolecularGraph& g, int atom) {
    const Atom& a = g.atoms()[atom];
    std::ostringstream os;
    os << a.element << "." << g.heavy_degree(atom) << "." << pi_electron_count(g, atom);
    return os.str();
}

std::string dp_atom_type(const MolecularGraph& g, int atom) {
    const Atom& a = g.atoms()[atom];
    if (a.formal_charge > 0) return "cation";
    if (a.formal_charge < 0) return "anion";
    if (a.element == "N" || a.element == "O")
        return a.total_h() >= 1 ? "donor" : "acceptor";
    if (a.element == "F" || a.element == "Cl" || a.element == "Br" || a.element == "S")
        return "polar";
    if (a.element == "C") {
        for (int nb : g.neighbors(atom)) {
            if (g.atoms()[nb].element != "C") return "other";
        }
        return "hydrophobe";
    }
    return "other";
}

namespace {

DescriptorBag pair_descriptors(const MolecularGraph& g,
                               std::string (*atom_type)(const MolecularGraph&, int)) {
    DescriptorBag bag;
    auto dist = shortest_bond_distances(g);
    int n = g.atom_count();
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            std::string ti = atom_type(g, i);
            std::string tj = atom_type(g, j);
            if (tj < ti) std::swap(ti, tj);
            std::ostringstream key;
            key << ti << "|" << dist[i][j] << "|" << tj;
            bag.counts[key.str()] += 1;
        }
    }
    return bag;
}

}  // namespace

DescriptorBag ap_descriptors(const MolecularGraph& g) {
    return pair_descriptors(g, &ap_atom_type);
}

DescriptorBag dp_descriptors(const MolecularGraph& g) {
    return pair_descriptors(g, &dp_atom_type);
}

uint64_t fnv1a64(const void* data, size_t len) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    uint64_t h = 14695981039346656037ull;
    for (size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    return h;
}

uint64_t fnv1a64(const std::string& s) { return fnv1a64(s.data(), s.size()); }

Fingerprint circular_fingerprint(const MolecularGraph& g, int radius) {
    if (radius < 0 || radius > 5)
        throw SizeOutOfRange("fingerprint radius must be in [0, 5]");
    int n = g.atom_count();
    std::vector<uint64_t> codes(n);
    Fingerprint fp;
    for (int i = 0; i < n; ++i) {
        const Atom& a = g.atoms()[i];
        std::ostringstream os;
        os << a.element << "," << a.formal_charge << "," << g.heavy_degree(i) << ","
           << a.total_h() << "," << (a.aromatic ? 1 : 0);
        codes[i] = fnv1a64(os.str());
        fp.bits.insert(static_cast<int>(codes[i] % kFingerprintBits));
    }
    for (int iter = 0; iter < radius; ++iter) {
        std::vector<uint64_t> next(n);
        for (int i = 0; i < n; ++i) {
            std::vector<std::pair<int, uint64_t>> env;
            for (int e = 0; e < kNumEdgeTypes; ++e) {
                for (int nb : g.neighbors(i, e)) env.emplace_back(e + 1, codes[nb]);
            }
            std::sort(env.begin(), env.end());
            std::ostringstream os;
            os << codes[i];
            for (const auto& [order, code] : env) os << ";" << order << ":" << code;
            next[i] = fnv1a64(os.str());
            fp.bits.insert(static_cast<int>(next[i] % kFingerprintBits));
        }
        codes = std::move(next);
    }
    return fp;
}

double tanimoto(const Fingerprint& a, const Fingerprint& b) {
    if (a.bits.empty() && b.bits.empty()) return 0.0;
    size_t inter = 0;
    for (int bit : a.bits) inter += b.bits.count(bit);
    size_t uni = a.bits.size() + b.bits.size() - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace admet
