#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "admet/featurize.hpp"
#include "admet/tensor.hpp"

namespace admet {

struct DescriptorMatrix {
    std::vector<std::string> columns;  // sorted canonical keys from the training set
    std::vector<std::vector<double>> rows;
};

// Columns = union of keys over the bags, sorted; values = frequencies.
DescriptorMatrix build_descriptor_matrix(const std::vector<DescriptorBag>& bags);
// Maps new bags onto an existing column schema; unseen keys are dropped
// (count reported through *dropped_keys when non-null).
std::vector<std::vector<double>> transform_descriptors(
    const std::vector<std::string>& columns, const std::vector<DescriptorBag>& bags,
    int* dropped_keys = nullptr);

// AP + DP union for one molecule.
DescriptorBag apdp_descriptors(const MolecularGraph& g);

enum class MtryMode { Sqrt, Third, All };

struct RFConfig {
    int n_trees = 500;
    MtryMode mtry_mode = MtryMode::Sqrt;
    int min_leaf = 1;
    bool bootstrap = true;
    uint64_t seed = 1;

    static RFConfig sklearn_preset(uint64_t seed = 1) { return RFConfig{500, MtryMode::Sqrt, 1, true, seed}; }
    static RFConfig mix_preset(uint64_t seed = 1) { return RFConfig{100, MtryMode::Third, 5, true, seed}; }
};

struct TreeNode {
    int split_column = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;
    int count = 0;
};

struct RegressionTree {
    std::vector<TreeNode> nodes;
    double predict(const std::vector<double>& row) const;
};

struct RandomForestModel {
    std::vector<std::string> columns;
    std::vector<RegressionTree> trees;
    RFConfig config;
    // per-tree bootstrap row indices, kept for out-of-bag evaluation
    std::vector<std::vector<int>> bootstrap_rows;
};

RandomForestModel fit_rf(const DescriptorMatrix& X, const std::vector<double>& y,
                         const RFConfig& config);
std::vector<double> predict_rf(const RandomForestModel& model,
                               const std::vector<std::vector<double>>& rows);
double oob_mse(const RandomForestModel& model, const DescriptorMatrix& X,
               const std::vector<double>& y);

std::string rf_to_json(const RandomForestModel& model);
RandomForestModel rf_from_json(const std::string& text);

// Fixed-architecture MLP baseline on descriptor rows.
struct MLPConfig {
    std::vector<int> hidden = {1000, 500};
    double dropout = 0.25;
    int epochs = 75;
    int batch_size = 32;
    double learning_rate = 1e-3;
    uint64_t seed = 1;
};

struct MLPModel {
    std::vector<std::string> columns;
    std::vector<double> column_scale;  // per-column training max, floored at 1
    std::vector<Parameter> weights, biases;
    MLPConfig config;
    double label_mean = 0.0;
    double label_std = 1.0;
};

MLPModel fit_mlp(const DescriptorMatrix& X, const std::vector<double>& y,
                 const MLPConfig& config);
std::vector<double> predict_mlp(const MLPModel& model,
                                const std::vector<std::vector<double>>& rows);

}  // namespace admet
