#pragma once

#include <array>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "admet/featurize.hpp"
#include "admet/molgraph.hpp"
#include "admet/tensor.hpp"

namespace admet {

struct ModelConfig {
    int k_layers = 3;
    int state_dim = kAtomFeatureDim;  // = f_in unless input_embedding is set
    int gather_dim = 64;
    std::vector<int> fc_dims = {128, 1};  // last entry = n_tasks
    int n_edge_types = kNumEdgeTypes;
    bool input_embedding = false;
    double learning_rate = 1e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double epsilon = 1e-8;
    int epochs = 100;
    int batch_size = 32;
    uint64_t seed = 1;

    int n_tasks() const { return fc_dims.back(); }
    void validate() const;
};

// Molecules stacked into one tape-friendly batch.
struct BatchedGraphs {
    Tensor features;  // total atoms x f_in
    // directed message edges per edge type (both directions of each bond)
    std::array<std::pair<std::vector<int>, std::vector<int>>, kNumEdgeTypes> edges;
    std::vector<int> segment_ids;
    int n_molecules = 0;
    int n_atoms = 0;
    uint64_t schema_hash = 0;
};

BatchedGraphs batch_graphs(const std::vector<const MolecularGraph*>& mols);
BatchedGraphs batch_graphs(const std::vector<MolecularGraph>& mols);

struct ModelParams {
    Parameter embed;                                    // optional, empty if unused
    std::vector<std::array<Parameter, kNumEdgeTypes>> msg;  // [layer][edge type], no bias
    std::vector<GruParams> gru;                         // [layer]
    Parameter gather_i_w, gather_i_b;                   // 2*state_dim -> gather_dim
    Parameter gather_j_w, gather_j_b;                   // state_dim -> gather_dim
    std::vector<Parameter> fc_w, fc_b;

    std::vector<Parameter*> all();
    std::vector<const Parameter*> all() const;
};

ModelParams init_params(const ModelConfig& config);

Tape::NodeId forward_on_tape(Tape& tape, ModelParams& params, const ModelConfig& config,
                             const BatchedGraphs& batch, Tape::NodeId features);
Tensor forward(ModelParams& params, const ModelConfig& config, const BatchedGraphs& batch,
               bool training = false);

// Baseline GCNN: K layers of ReLU over (A+I)-propagated states, sum gather, FC head.
struct GcnParams {
    std::vector<Parameter> layer_w;
    std::vector<Parameter> fc_w, fc_b;
    std::vector<Parameter*> all();
    std::vector<const Parameter*> all() const;
};

GcnParams init_gcn_params(const ModelConfig& config);
Tensor gcn_forward(GcnParams& params, const ModelConfig& config, const BatchedGraphs& batch);

// MSE over mask=1 cells only; 0 (with zero gradients) when the mask is empty.
Tape::NodeId masked_loss(Tape& tape, Tape::NodeId pred, const Tensor& labels,
                         const Tensor& mask);

class AdamOptimizer {
public:
    AdamOptimizer(std::vector<Parameter*> params, double lr, double beta1 = 0.9,
                  double beta2 = 0.999, double eps = 1e-8);
    void zero_grad();
    void step();

private:
    std::vector<Parameter*> params_;
    double lr_, beta1_, beta2_, eps_;
    int t_ = 0;
    std::vector<Tensor> m_, v_;
};

// Labeled molecules for training/evaluation; labels in raw assay units,
// missing cells flagged by mask = 0.
struct LabeledGraphs {
    std::vector<MolecularGraph> molecules;
    std::vector<std::string> molecule_ids;
    std::vector<std::string> task_names;
    Tensor labels;  // n_mol x n_tasks
    Tensor mask;    // n_mol x n_tasks, 0/1

    int n_tasks() const { return labels.cols; }
    int n_molecules() const { return labels.rows; }
};

struct TaskCheckpoint {
    std::string task;
    int task_index = 0;
    double best_r2 = 0.0;
    int best_epoch = -1;
    ModelParams params;
    ModelConfig config;
    double label_mean = 0.0;
    double label_std = 1.0;
    uint64_t schema_hash = 0;
};

struct TrainResult {
    std::vector<TaskCheckpoint> checkpoints;
    // validation_curve[epoch][task] = Pearson R^2
    std::vector<std::vector<double>> validation_curve;
};

TrainResult train_multitask(const LabeledGraphs& train, const LabeledGraphs& valid,
                            const ModelConfig& config);

// Predictions rescaled to assay units: mu + sigma * standardized output.
std::vector<double> predict(const TaskCheckpoint& cp, const std::vector<MolecularGraph>& mols);

// Baseline GCNN trained under the same multitask checkpointing contract.
struct GcnCheckpoint {
    std::string task;
    int task_index = 0;
    double best_r2 = 0.0;
    int best_epoch = -1;
    GcnParams params;
    ModelConfig config;
    double label_mean = 0.0;
    double label_std = 1.0;
    uint64_t schema_hash = 0;
};

struct GcnTrainResult {
    std::vector<GcnCheckpoint> checkpoints;
    std::vector<std::vector<double>> validation_curve;
};

GcnTrainResult train_multitask_gcn(const LabeledGraphs& train, const LabeledGraphs& valid,
                                   const ModelConfig& config);
std::vector<double> predict_gcn(const GcnCheckpoint& cp,
                                const std::vector<MolecularGraph>& mols);

void save_checkpoint(const TaskCheckpoint& cp, const std::string& binary_path,
                     const std::string& json_path);
TaskCheckpoint load_checkpoint(const std::string& binary_path, const std::string& json_path);

}  // namespace admet
