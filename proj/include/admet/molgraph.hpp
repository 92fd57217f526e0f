#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "admet/errors.hpp"

namespace admet {

enum class BondOrder : uint8_t { Single = 1, Double = 2, Triple = 3, Aromatic = 4 };

// Edge types in fixed order; index with edge_type_index().
constexpr int kNumEdgeTypes = 4;
int edge_type_index(BondOrder order);
double bond_order_value(BondOrder order);  // aromatic counts 1.5

struct Atom {
    std::string element;
    int formal_charge = 0;
    int explicit_h = 0;
    int implicit_h = 0;
    bool aromatic = false;
    bool bracket = false;
    std::optional<int> isotope;
    int index = 0;

    int total_h() const { return explicit_h + implicit_h; }
};

struct Bond {
    int a = 0;
    int b = 0;
    BondOrder order = BondOrder::Single;
};

class MolecularGraph {
public:
    MolecularGraph(std::vector<Atom> atoms, std::vector<Bond> bonds, std::string source);

    const std::vector<Atom>& atoms() const { return atoms_; }
    const std::vector<Bond>& bonds() const { return bonds_; }
    const std::string& source_smiles() const { return source_; }
    int atom_count() const { return static_cast<int>(atoms_.size()); }

    // Neighbor atom indices for edge type e at atom i.
    const std::vector<int>& neighbors(int atom, int edge_type) const {
        return adjacency_[atom][edge_type];
    }
    // All heavy-atom neighbors regardless of bond type.
    const std::vector<int>& neighbors(int atom) const { return all_neighbors_[atom]; }
    int heavy_degree(int atom) const { return static_cast<int>(all_neighbors_[atom].size()); }
    std::optional<BondOrder> bond_between(int a, int b) const;

private:
    std::vector<Atom> atoms_;
    std::vector<Bond> bonds_;
    std::string source_;
    // adjacency_[atom][edge_type] -> sorted neighbor indices
    std::vector<std::array<std::vector<int>, kNumEdgeTypes>> adjacency_;
    std::vector<std::vector<int>> all_neighbors_;
};

// Valence bookkeeping shared with featurization.
bool element_supported(const std::string& element);
int default_valence(const std::string& element, int charge);
int max_valence(const std::string& element, int charge);
double atomic_mass(const std::string& element);
// Sum of bond orders at an atom, aromatic as 1.5, rounded up after summation.
int bond_order_sum(const MolecularGraph& g, int atom);

MolecularGraph parse_smiles(const std::string& text);

// (i,j) -> minimum bond-path length; diagonal 0; all bond types length 1.
std::vector<std::vector<int>> shortest_bond_distances(const MolecularGraph& g);

double molecular_weight(const MolecularGraph& g);

}  // namespace admet
