#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "admet/molgraph.hpp"

namespace admet {

// Number of feature columns produced by atom_features().
constexpr int kAtomFeatureDim = 43;

struct AtomFeatureMatrix {
    int rows = 0;
    int cols = kAtomFeatureDim;
    std::vector<double> values;  // row-major

    double at(int r, int c) const { return values[static_cast<size_t>(r) * cols + c]; }
};

// Ordered column descriptions, e.g. "element=C", "charge=+1", "radical_electrons".
const std::vector<std::string>& atom_feature_schema();
std::string atom_feature_schema_json();
uint64_t atom_feature_schema_hash();

AtomFeatureMatrix atom_features(const MolecularGraph& g);

enum class Hybridization { Sp, Sp2, Sp3, Other };
Hybridization hybridization(const MolecularGraph& g, int atom);
int pi_electron_count(const MolecularGraph& g, int atom);
int radical_electrons(const MolecularGraph& g, int atom);

// Pair descriptors. Keys are canonical strings "typeA|d|typeB" with the
// lexicographically smaller type first.
struct DescriptorBag {
    std::map<std::string, int> counts;
};

std::string ap_atom_type(const MolecularGraph& g, int atom);
std::string dp_atom_type(const MolecularGraph& g, int atom);

DescriptorBag ap_descriptors(const MolecularGraph& g);
DescriptorBag dp_descriptors(const MolecularGraph& g);

// Circular fingerprint, folded into 2048 bits.
constexpr int kFingerprintBits = 2048;

struct Fingerprint {
    std::set<int> bits;
};

uint64_t fnv1a64(const void* data, size_t len);
uint64_t fnv1a64(const std::string& s);

Fingerprint circular_fingerprint(const MolecularGraph& g, int radius = 2);

double tanimoto(const Fingerprint& a, const Fingerprint& b);

}  // namespace admet
