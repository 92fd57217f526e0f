#include "admet/molgraph.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <deque>
#include <map>
#include <set>

namespace admet {

int edge_type_index(BondOrder order) { return static_cast<int>(order) - 1; }

double bond_order_value(BondOrder order) {
    return order == BondOrder::Aromatic ? 1.5 : static_cast<double>(static_cast<int>(order));
}

namespace {

struct ElementInfo {
    double mass;
    int valence;      // default valence, neutral
    int max_valence;  // hypervalent ceiling (S, P, Cl...)
    bool organic_subset;
    bool aromatic_ok;
};

const std::map<std::string, ElementInfo>& element_table() {
    static const std::map<std::string, ElementInfo> table = {
        {"B", {10.811, 3, 3, true, true}},
        {"C", {12.011, 4, 4, true, true}},
        {"N", {14.007, 3, 3, true, true}},
        {"O", {15.999, 2, 2, true, true}},
        {"F", {18.998, 1, 1, true, false}},
        {"Si", {28.086, 4, 4, false, false}},
        {"P", {30.974, 3, 5, true, true}},
        {"S", {32.06, 2, 6, true, true}},
        {"Cl", {35.45, 1, 1, true, false}},
        {"Br", {79.904, 1, 1, true, false}},
        {"I", {126.904, 1, 1, true, false}},
    };
    return table;
}

const ElementInfo& element_info(const std::string& element) {
    auto it = element_table().find(element);
    if (it == element_table().end())
        throw UnknownAtomSymbol("unsupported element '" + element + "'");
    return it->second;
}

// Charge shifts the usable valence. Lone-pair elements gain a bond per
// positive charge and lose one per negative; carbon loses one either way.
int charge_adjust(const std::string& element, int base, int charge) {
    if (charge == 0) return base;
    int v = base;
    if (element == "C" || element == "Si") {
        v = base - std::abs(charge);
    } else if (element == "B") {
        v = base - charge;  // borate anion gets 4
    } else {
        v = base + charge;  // N+ 4, N- 2, O- 1, S- 1, halide anion 0
    }
    return std::max(0, v);
}

}  // namespace

bool element_supported(const std::string& element) {
    return element_table().count(element) > 0;
}

int default_valence(const std::string& element, int charge) {
    return charge_adjust(element, element_info(element).valence, charge);
}

int max_valence(const std::string& element, int charge) {
    const ElementInfo& info = element_info(element);
    return std::max(charge_adjust(element, info.valence, charge),
                    charge_adjust(element, info.max_valence, charge));
}

double atomic_mass(const std::string& element) {
    if (element == "H") return 1.008;
    return element_info(element).mass;
}

int bond_order_sum(const MolecularGraph& g, int atom) {
    double s = 0.0;
    for (const Bond& b : g.bonds()) {
        if (b.a == atom || b.b == atom) s += bond_order_value(b.order);
    }
    return static_cast<int>(std::floor(s + 1e-9));
}

MolecularGraph::MolecularGraph(std::vector<Atom> atoms, std::vector<Bond> bonds,
                               std::string source)
    : atoms_(std::move(atoms)), bonds_(std::move(bonds)), source_(std::move(source)) {
    adjacency_.resize(atoms_.size());
    all_neighbors_.resize(atoms_.size());
    for (const Bond& b : bonds_) {
        int e = edge_type_index(b.order);
        adjacency_[b.a][e].push_back(b.b);
        adjacency_[b.b][e].push_back(b.a);
        all_neighbors_[b.a].push_back(b.b);
        all_neighbors_[b.b].push_back(b.a);
    }
    for (auto& per_atom : adjacency_)
        for (auto& lst : per_atom) std::sort(lst.begin(), lst.end());
    for (auto& lst : all_neighbors_) std::sort(lst.begin(), lst.end());
}

std::optional<BondOrder> MolecularGraph::bond_between(int a, int b) const {
    for (const Bond& bond : bonds_) {
        if ((bond.a == a && bond.b == b) || (bond.a == b && bond.b == a)) return bond.order;
    }
    return std::nullopt;
}

namespace {

struct ParseAtom {
    std::string element;
    int charge = 0;
    int explicit_h = 0;
    bool aromatic = false;
    bool bracket = false;
    std::optional<int> isotope;
};

struct RingOpening {
    int atom;
    std::optional<BondOrder> order;
};

class SmilesParser {
public:
    explicit SmilesParser(const std::string& text) : text_(text) {}

    MolecularGraph parse() {
        if (text_.empty()) throw EmptyInput("empty SMILES");
        while (pos_ < text_.size()) step();
        if (!stack_.empty()) throw UnbalancedParen("unclosed '(' in '" + text_ + "'");
        if (!open_rings_.empty()) {
            throw UnclosedRing("ring bond " + std::to_string(open_rings_.begin()->first) +
                               " never closed in '" + text_ + "'");
        }
        if (atoms_.empty()) throw UnknownAtomSymbol("no atoms in '" + text_ + "'");
        finalize_hydrogens();
        return MolecularGraph(std::move(atoms_), std::move(bonds_), text_);
    }

private:
    void step() {
        char c = text_[pos_];
        switch (c) {
            case '(':
                if (prev_ < 0) throw UnbalancedParen("branch before any atom");
                stack_.push_back(prev_);
                ++pos_;
                return;
            case ')':
                if (stack_.empty()) throw UnbalancedParen("unmatched ')' in '" + text_ + "'");
                prev_ = stack_.back();
                stack_.pop_back();
                ++pos_;
                return;
            case '.':
                throw MultiComponentUnsupported("multi-component SMILES '" + text_ + "'");
            case '-': pending_ = BondOrder::Single; ++pos_; return;
            case '=': pending_ = BondOrder::Double; ++pos_; return;
            case '#': pending_ = BondOrder::Triple; ++pos_; return;
            case ':': pending_ = BondOrder::Aromatic; ++pos_; return;
            case '/':
            case '\\':
                // stereo bond markers are consumed as single bonds
                pending_ = BondOrder::Single;
                ++pos_;
                return;
            case '%': {
                if (pos_ + 2 >= text_.size() || !std::isdigit(text_[pos_ + 1]) ||
                    !std::isdigit(text_[pos_ + 2]))
                    throw UnclosedRing("malformed %nn ring label");
                int label = (text_[pos_ + 1] - '0') * 10 + (text_[pos_ + 2] - '0');
                pos_ += 3;
                ring_bond(label);
                return;
            }
            default:
                if (std::isdigit(static_cast<unsigned char>(c))) {
                    ++pos_;
                    ring_bond(c - '0');
                    return;
                }
                add_atom(read_atom());
        }
    }

    ParseAtom read_atom() {
        char c = text_[pos_];
        if (c == '[') return read_bracket_atom();
        ParseAtom atom;
        // two-letter organic-subset symbols first
        if (c == 'C' && pos_ + 1 < text_.size() && text_[pos_ + 1] == 'l') {
            atom.element = "Cl";
            pos_ += 2;
            return atom;
        }
        if (c == 'B' && pos_ + 1 < text_.size() && text_[pos_ + 1] == 'r') {
            atom.element = "Br";
            pos_ += 2;
            return atom;
        }
        static const std::string upper = "BCNOPSFI";
        static const std::string lower = "bcnops";
        if (upper.find(c) != std::string::npos) {
            atom.element = std::string(1, c);
            ++pos_;
            return atom;
        }
        if (lower.find(c) != std::string::npos) {
            atom.element = std::string(1, static_cast<char>(std::toupper(c)));
            atom.aromatic = true;
            ++pos_;
            return atom;
        }
        throw UnknownAtomSymbol("unexpected character '" + std::string(1, c) + "' in '" +
                                text_ + "'");
    }

    ParseAtom read_bracket_atom() {
        size_t end = text_.find(']', pos_);
        if (end == std::string::npos)
            throw UnknownAtomSymbol("unterminated bracket atom in '" + text_ + "'");
        std::string body = text_.substr(pos_ + 1, end - pos_ - 1);
        pos_ = end + 1;

        ParseAtom atom;
        atom.bracket = true;
        size_t i = 0;
        // isotope
        size_t iso_start = i;
        while (i < body.size() && std::isdigit(static_cast<unsigned char>(body[i]))) ++i;
        if (i > iso_start) atom.isotope = std::stoi(body.substr(iso_start, i - iso_start));
        // element symbol, possibly aromatic lowercase
        if (i >= body.size()) throw UnknownAtomSymbol("bracket atom without element");
        if (std::islower(static_cast<unsigned char>(body[i]))) {
            static const std::string lower = "bcnops";
            if (lower.find(body[i]) == std::string::npos)
                throw UnknownAtomSymbol("bad aromatic symbol '" + std::string(1, body[i]) + "'");
            atom.element = std::string(1, static_cast<char>(std::toupper(body[i])));
            atom.aromatic = true;
            ++i;
        } else {
            std::string sym(1, body[i]);
            ++i;
            if (i < body.size() && std::islower(static_cast<unsigned char>(body[i])) &&
                element_supported(sym + body[i])) {
                sym += body[i];
                ++i;
            }
            if (!element_supported(sym) || sym == "H")
                throw UnknownAtomSymbol("unsupported element '" + sym + "'");
            atom.element = sym;
        }
        // chirality markers consumed and discarded
        while (i < body.size() && body[i] == '@') ++i;
        if (i < body.size() && (body.compare(i, 2, "TH") == 0 || body.compare(i, 2, "AL") == 0))
            i += 2;
        // explicit hydrogen count
        if (i < body.size() && body[i] == 'H') {
            ++i;
            atom.explicit_h = 1;
            if (i < body.size() && std::isdigit(static_cast<unsigned char>(body[i]))) {
                atom.explicit_h = body[i] - '0';
                ++i;
            }
        }
        // charge
        if (i < body.size() && (body[i] == '+' || body[i] == '-')) {
            int sign = body[i] == '+' ? 1 : -1;
            char mark = body[i];
            ++i;
            int magnitude = 1;
            if (i < body.size() && std::isdigit(static_cast<unsigned char>(body[i]))) {
                magnitude = body[i] - '0';
                ++i;
            } else {
                while (i < body.size() && body[i] == mark) {
                    ++magnitude;
                    ++i;
                }
            }
            atom.charge = sign * magnitude;
        }
        if (i != body.size())
            throw UnknownAtomSymbol("trailing '" + body.substr(i) + "' in bracket atom");
        if (atom.charge < -4 || atom.charge > 4)
            throw UnknownAtomSymbol("formal charge out of range");
        return atom;
    }

    void add_atom(const ParseAtom& pa) {
        if (pa.aromatic && !element_info(pa.element).aromatic_ok)
            throw UnknownAtomSymbol("element '" + pa.element + "' cannot be aromatic");
        Atom atom;
        atom.element = pa.element;
        atom.formal_charge = pa.charge;
        atom.explicit_h = pa.explicit_h;
        atom.aromatic = pa.aromatic;
        atom.bracket = pa.bracket;
        atom.isotope = pa.isotope;
        atom.index = static_cast<int>(atoms_.size());
        atoms_.push_back(atom);
        int idx = atom.index;
        if (prev_ >= 0) make_bond(prev_, idx, take_pending(prev_, idx));
        prev_ = idx;
    }

    BondOrder take_pending(int a, int b) {
        if (pending_) {
            BondOrder o = *pending_;
            pending_.reset();
            return o;
        }
        if (atoms_[a].aromatic && atoms_[b].aromatic) return BondOrder::Aromatic;
        return BondOrder::Single;
    }

    void ring_bond(int label) {
        if (prev_ < 0) throw UnclosedRing("ring label before any atom");
        auto it = open_rings_.find(label);
        if (it == open_rings_.end()) {
            open_rings_[label] = RingOpening{prev_, pending_};
            pending_.reset();
            return;
        }
        RingOpening opening = it->second;
        open_rings_.erase(it);
        std::optional<BondOrder> order = pending_;
        pending_.reset();
        if (!order) order = opening.order;
        int a = opening.atom;
        int b = prev_;
        if (a == b) throw UnclosedRing("ring closure to the same atom");
        BondOrder o;
        if (order) {
            o = *order;
        } else if (atoms_[a].aromatic && atoms_[b].aromatic) {
            o = BondOrder::Aromatic;
        } else {
            o = BondOrder::Single;
        }
        make_bond(a, b, o);
    }

    void make_bond(int a, int b, BondOrder order) {
        for (const Bond& bond : bonds_) {
            if ((bond.a == a && bond.b == b) || (bond.a == b && bond.b == a))
                throw ValenceViolation("duplicate bond between atoms " + std::to_string(a) +
                                       " and " + std::to_string(b));
        }
        bonds_.push_back(Bond{a, b, order});
    }

    void finalize_hydrogens() {
        std::vector<double> order_sum(atoms_.size(), 0.0);
        // an aromatic atom written with explicit hydrogens (pyrrole-type)
        // donates its lone pair to the ring, so its aromatic bonds count as
        // single toward the valence budget
        auto endpoint_value = [&](const Bond& b, int atom) {
            if (b.order == BondOrder::Aromatic && atoms_[atom].aromatic &&
                atoms_[atom].explicit_h > 0)
                return 1.0;
            return bond_order_value(b.order);
        };
        for (const Bond& b : bonds_) {
            order_sum[b.a] += endpoint_value(b, b.a);
            order_sum[b.b] += endpoint_value(b, b.b);
        }
        for (Atom& atom : atoms_) {
            // round half-orders down so a fused-ring atom with three aromatic
            // bonds counts as four, not five
            int s = static_cast<int>(std::floor(order_sum[atom.index] + 1e-9));
            int maxv = max_valence(atom.element, atom.formal_charge);
            if (s + atom.explicit_h > maxv) {
                throw ValenceViolation("atom " + std::to_string(atom.index) + " (" +
                                       atom.element + ") bond order sum " + std::to_string(s) +
                                       " + " + std::to_string(atom.explicit_h) +
                                       "H exceeds valence " + std::to_string(maxv) + " in '" +
                                       text_ + "'");
            }
            if (atom.bracket) {
                atom.implicit_h = 0;  // bracket atoms carry their H count explicitly
            } else {
                int dv = default_valence(atom.element, atom.formal_charge);
                atom.implicit_h = std::max(0, dv - s - atom.explicit_h);
            }
        }
    }

    const std::string& text_;
    size_t pos_ = 0;
    int prev_ = -1;
    std::optional<BondOrder> pending_;
    std::vector<int> stack_;
    std::map<int, RingOpening> open_rings_;
    std::vector<Atom> atoms_;
    std::vector<Bond> bonds_;
};

}  // namespace

MolecularGraph parse_smiles(const std::string& text) {
    for (char c : text) {
        if (static_cast<unsigned char>(c) > 127)
            throw UnknownAtomSymbol("non-ASCII input");
    }
    return SmilesParser(text).parse();
}

std::vector<std::vector<int>> shortest_bond_distances(const MolecularGraph& g) {
    int n = g.atom_count();
    std::vector<std::vector<int>> dist(n, std::vector<int>(n, -1));
    for (int start = 0; start < n; ++start) {
        std::deque<int> queue{start};
        dist[start][start] = 0;
        while (!queue.empty()) {
            int v = queue.front();
            queue.pop_front();
            for (int e = 0; e < kNumEdgeTypes; ++e) {
                for (int w : g.neighbors(v, e)) {
                    if (dist[start][w] < 0) {
                        dist[start][w] = dist[start][v] + 1;
                        queue.push_back(w);
                    }
                }
            }
        }
    }
    return dist;
}

double molecular_weight(const MolecularGraph& g) {
    double mw = 0.0;
    for (const Atom& a : g.atoms()) {
        mw += atomic_mass(a.element);
        mw += 1.008 * a.total_h();
    }
    return mw;
}

}  // namespace admet
