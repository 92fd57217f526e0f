#include "admet/potentialnet.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "admet/metrics.hpp"

namespace admet {

void ModelConfig::validate() const {
    if (k_layers < 1) throw ConfigError("k_layers must be >= 1");
    if (fc_dims.empty()) throw ConfigError("fc_dims must end in the task count");
    if (!input_embedding && state_dim != kAtomFeatureDim)
        throw ConfigError("state_dim must equal the atom feature width (" +
                          std::to_string(kAtomFeatureDim) + ") unless input_embedding is set");
    if (n_edge_types != kNumEdgeTypes) throw ConfigError("n_edge_types must be 4");
    if (batch_size < 1 || epochs < 0) throw ConfigError("bad batch_size/epochs");
}

BatchedGraphs batch_graphs(const std::vector<const MolecularGraph*>& mols) {
    BatchedGraphs batch;
    batch.schema_hash = atom_feature_schema_hash();
    batch.n_molecules = static_cast<int>(mols.size());
    int total = 0;
    for (const MolecularGraph* m : mols) total += m->atom_count();
    batch.n_atoms = total;
    batch.features = Tensor(total, kAtomFeatureDim);
    batch.segment_ids.reserve(total);
    int offset = 0;
    for (int mi = 0; mi < batch.n_molecules; ++mi) {
        const MolecularGraph& g = *mols[mi];
        AtomFeatureMatrix fm = atom_features(g);
        for (int i = 0; i < fm.rows; ++i) {
            batch.segment_ids.push_back(mi);
            for (int j = 0; j < fm.cols; ++j)
                batch.features.at(offset + i, j) = fm.at(i, j);
        }
        for (const Bond& b : g.bonds()) {
            int e = edge_type_index(b.order);
            // message from j to i sums NN(h_j) into atom i: src carries the
            // neighbor, dst the receiving atom, both directions
            batch.edges[e].first.push_back(offset + b.a);
            batch.edges[e].second.push_back(offset + b.b);
            batch.edges[e].first.push_back(offset + b.b);
            batch.edges[e].second.push_back(offset + b.a);
        }
        offset += g.atom_count();
    }
    return batch;
}

BatchedGraphs batch_graphs(const std::vector<MolecularGraph>& mols) {
    std::vector<const MolecularGraph*> ptrs;
    ptrs.reserve(mols.size());
    for (const auto& m : mols) ptrs.push_back(&m);
    return batch_graphs(ptrs);
}

std::vector<Parameter*> ModelParams::all() {
    std::vector<Parameter*> out;
    if (embed.value.size() > 0) out.push_back(&embed);
    for (auto& layer : msg)
        for (auto& p : layer) out.push_back(&p);
    for (auto& g : gru)
        for (Parameter* p : g.all()) out.push_back(p);
    out.push_back(&gather_i_w);
    out.push_back(&gather_i_b);
    out.push_back(&gather_j_w);
    out.push_back(&gather_j_b);
    for (auto& p : fc_w) out.push_back(&p);
    for (auto& p : fc_b) out.push_back(&p);
    return out;
}

std::vector<const Parameter*> ModelParams::all() const {
    auto mutable_all = const_cast<ModelParams*>(this)->all();
    return {mutable_all.begin(), mutable_all.end()};
}

ModelParams init_params(const ModelConfig& config) {
    config.validate();
    std::mt19937_64 rng(config.seed);
    ModelParams p;
    if (config.input_embedding)
        p.embed = Parameter("embed", glorot_uniform(kAtomFeatureDim, config.state_dim, rng));
    int d = config.state_dim;
    for (int k = 0; k < config.k_layers; ++k) {
        std::array<Parameter, kNumEdgeTypes> layer;
        for (int e = 0; e < kNumEdgeTypes; ++e) {
            layer[e] = Parameter("msg." + std::to_string(k) + "." + std::to_string(e),
                                 glorot_uniform(d, d, rng));
        }
        p.msg.push_back(std::move(layer));
        p.gru.push_back(make_gru_params("gru." + std::to_string(k), d, rng));
    }
    p.gather_i_w = Parameter("gather.i.w", glorot_uniform(d + kAtomFeatureDim,
                                                          config.gather_dim, rng));
    p.gather_i_b = Parameter("gather.i.b", Tensor(1, config.gather_dim));
    p.gather_j_w = Parameter("gather.j.w", glorot_uniform(d, config.gather_dim, rng));
    p.gather_j_b = Parameter("gather.j.b", Tensor(1, config.gather_dim));
    int in_dim = config.gather_dim;
    for (size_t i = 0; i < config.fc_dims.size(); ++i) {
        int out_dim = config.fc_dims[i];
        p.fc_w.emplace_back("fc.w." + std::to_string(i), glorot_uniform(in_dim, out_dim, rng));
        p.fc_b.emplace_back("fc.b." + std::to_string(i), Tensor(1, out_dim));
        in_dim = out_dim;
    }
    return p;
}

Tape::NodeId forward_on_tape(Tape& tape, ModelParams& params, const ModelConfig& config,
                             const BatchedGraphs& batch, Tape::NodeId features) {
    if (batch.schema_hash != atom_feature_schema_hash())
        throw SchemaMismatch("batch feature schema differs from build schema");
    Tape::NodeId h = features;
    if (config.input_embedding) h = tape.matmul(features, tape.param(params.embed));

    for (int k = 0; k < config.k_layers; ++k) {
        Tape::NodeId message = -1;
        for (int e = 0; e < kNumEdgeTypes; ++e) {
            const auto& [src, dst] = batch.edges[e];
            Tape::NodeId transformed = tape.matmul(h, tape.param(params.msg[k][e]));
            Tape::NodeId summed = tape.index_sum(transformed, src, dst, batch.n_atoms);
            message = message < 0 ? summed : tape.add(message, summed);
        }
        h = gru_cell(tape, h, message, params.gru[k]);
    }

    Tape::NodeId gate_in = tape.concat_cols(h, features);
    Tape::NodeId gate = tape.sigmoid(tape.add_broadcast_rows(
        tape.matmul(gate_in, tape.param(params.gather_i_w)), tape.param(params.gather_i_b)));
    Tape::NodeId mapped = tape.add_broadcast_rows(
        tape.matmul(h, tape.param(params.gather_j_w)), tape.param(params.gather_j_b));
    Tape::NodeId per_atom = tape.hadamard(gate, mapped);
    Tape::NodeId pooled = tape.segment_sum(per_atom, batch.segment_ids);

    Tape::NodeId x = pooled;
    for (size_t i = 0; i < params.fc_w.size(); ++i) {
        x = tape.add_broadcast_rows(tape.matmul(x, tape.param(params.fc_w[i])),
                                    tape.param(params.fc_b[i]));
        if (i + 1 < params.fc_w.size()) x = tape.relu(x);  // final layer stays linear
    }
    return x;
}

Tensor forward(ModelParams& params, const ModelConfig& config, const BatchedGraphs& batch,
               bool training) {
    (void)training;
    Tape tape;
    Tape::NodeId features = tape.leaf(batch.features);
    Tape::NodeId out = forward_on_tape(tape, params, config, batch, features);
    return tape.value(out);
}

std::vector<Parameter*> GcnParams::all() {
    std::vector<Parameter*> out;
    for (auto& p : layer_w) out.push_back(&p);
    for (auto& p : fc_w) out.push_back(&p);
    for (auto& p : fc_b) out.push_back(&p);
    return out;
}

std::vector<const Parameter*> GcnParams::all() const {
    auto mutable_all = const_cast<GcnParams*>(this)->all();
    return {mutable_all.begin(), mutable_all.end()};
}

GcnParams init_gcn_params(const ModelConfig& config) {
    config.validate();
    std::mt19937_64 rng(config.seed);
    GcnParams p;
    int d = config.state_dim;
    for (int k = 0; k < config.k_layers; ++k)
        p.layer_w.emplace_back("gcn.w." + std::to_string(k), glorot_uniform(d, d, rng));
    int in_dim = d;
    for (size_t i = 0; i < config.fc_dims.size(); ++i) {
        int out_dim = config.fc_dims[i];
        p.fc_w.emplace_back("gcn.fc.w." + std::to_string(i),
                            glorot_uniform(in_dim, out_dim, rng));
        p.fc_b.emplace_back("gcn.fc.b." + std::to_string(i), Tensor(1, out_dim));
        in_dim = out_dim;
    }
    return p;
}

static Tape::NodeId gcn_forward_on_tape(Tape& tape, GcnParams& params,
                                        const ModelConfig& config,
                                        const BatchedGraphs& batch, Tape::NodeId features) {
    if (batch.schema_hash != atom_feature_schema_hash())
        throw SchemaMismatch("batch feature schema differs from build schema");
    // unified adjacency with self connections (A + I)
    std::vector<int> src, dst;
    for (int e = 0; e < kNumEdgeTypes; ++e) {
        const auto& [s, d] = batch.edges[e];
        src.insert(src.end(), s.begin(), s.end());
        dst.insert(dst.end(), d.begin(), d.end());
    }
    for (int i = 0; i < batch.n_atoms; ++i) {
        src.push_back(i);
        dst.push_back(i);
    }
    Tape::NodeId h = features;
    for (int k = 0; k < config.k_layers; ++k) {
        Tape::NodeId propagated = tape.index_sum(h, src, dst, batch.n_atoms);
        h = tape.relu(tape.matmul(propagated, tape.param(params.layer_w[k])));
    }
    Tape::NodeId pooled = tape.segment_sum(h, batch.segment_ids);
    Tape::NodeId x = pooled;
    for (size_t i = 0; i < params.fc_w.size(); ++i) {
        x = tape.add_broadcast_rows(tape.matmul(x, tape.param(params.fc_w[i])),
                                    tape.param(params.fc_b[i]));
        if (i + 1 < params.fc_w.size()) x = tape.relu(x);
    }
    return x;
}

Tensor gcn_forward(GcnParams& params, const ModelConfig& config, const BatchedGraphs& batch) {
    Tape tape;
    Tape::NodeId features = tape.leaf(batch.features);
    Tape::NodeId out = gcn_forward_on_tape(tape, params, config, batch, features);
    return tape.value(out);
}

Tape::NodeId masked_loss(Tape& tape, Tape::NodeId pred, const Tensor& labels,
                         const Tensor& mask) {
    const Tensor& p = tape.value(pred);
    if (!p.same_shape(labels) || !p.same_shape(mask))
        throw ShapeMismatch("masked_loss pred " + p.shape_str() + " labels " +
                            labels.shape_str() + " mask " + mask.shape_str());
    double count = std::accumulate(mask.v.begin(), mask.v.end(), 0.0);
    Tape::NodeId diff = tape.sub(pred, tape.leaf(labels));
    Tape::NodeId masked = tape.hadamard(diff, tape.leaf(mask));
    Tape::NodeId sq = tape.hadamard(masked, masked);
    return tape.scale(tape.sum_all(sq), 1.0 / std::max(1.0, count));
}

AdamOptimizer::AdamOptimizer(std::vector<Parameter*> params, double lr, double beta1,
                             double beta2, double eps)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (Parameter* p : params_) {
        m_.emplace_back(p->value.rows, p->value.cols);
        v_.emplace_back(p->value.rows, p->value.cols);
    }
}

void AdamOptimizer::zero_grad() {
    for (Parameter* p : params_) p->zero_grad();
}

void AdamOptimizer::step() {
    ++t_;
    double bc1 = 1.0 - std::pow(beta1_, t_);
    double bc2 = 1.0 - std::pow(beta2_, t_);
    for (size_t i = 0; i < params_.size(); ++i) {
        Parameter& p = *params_[i];
        for (size_t j = 0; j < p.value.size(); ++j) {
            double g = p.grad.v[j];
            m_[i].v[j] = beta1_ * m_[i].v[j] + (1.0 - beta1_) * g;
            v_[i].v[j] = beta2_ * v_[i].v[j] + (1.0 - beta2_) * g * g;
            double mhat = m_[i].v[j] / bc1;
            double vhat = v_[i].v[j] / bc2;
            p.value.v[j] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
        }
    }
}

namespace {

struct Standardization {
    std::vector<double> mean, stdev;
};

Standardization label_stats(const LabeledGraphs& train) {
    Standardization s;
    for (int t = 0; t < train.n_tasks(); ++t) {
        double sum = 0.0, n = 0.0;
        for (int i = 0; i < train.n_molecules(); ++i) {
            if (train.mask.at(i, t) != 0.0) {
                sum += train.labels.at(i, t);
                n += 1.0;
            }
        }
        double mu = n > 0 ? sum / n : 0.0;
        double var = 0.0;
        for (int i = 0; i < train.n_molecules(); ++i) {
            if (train.mask.at(i, t) != 0.0) {
                double d = train.labels.at(i, t) - mu;
                var += d * d;
            }
        }
        double sd = n > 1 ? std::sqrt(var / (n - 1)) : 0.0;
        if (sd <= 0.0) sd = 1.0;
        s.mean.push_back(mu);
        s.stdev.push_back(sd);
    }
    return s;
}

Tensor standardize(const Tensor& labels, const Tensor& mask, const Standardization& s) {
    Tensor out = labels;
    for (int i = 0; i < out.rows; ++i)
        for (int t = 0; t < out.cols; ++t)
            out.at(i, t) = mask.at(i, t) != 0.0
                               ? (labels.at(i, t) - s.mean[t]) / s.stdev[t]
                               : 0.0;
    return out;
}

}  // namespace

namespace {

// Shared multitask epoch loop with per-task best-epoch checkpointing;
// ForwardFn(tape, params, batch, features) -> prediction node.
template <typename CheckpointT, typename ParamsT, typename ForwardFn>
std::vector<std::vector<double>> train_loop(const LabeledGraphs& train,
                                            const LabeledGraphs& valid,
                                            const ModelConfig& config, ParamsT& params,
                                            ForwardFn&& forward_fn,
                                            std::vector<CheckpointT>& checkpoints) {
    config.validate();
    int n_tasks = config.n_tasks();
    if (train.n_tasks() != n_tasks || valid.n_tasks() != n_tasks)
        throw ConfigError("fc_dims task count does not match dataset");
    for (int t = 0; t < n_tasks; ++t) {
        std::vector<double> observed;
        for (int i = 0; i < valid.n_molecules(); ++i)
            if (valid.mask.at(i, t) != 0.0) observed.push_back(valid.labels.at(i, t));
        std::sort(observed.begin(), observed.end());
        observed.erase(std::unique(observed.begin(), observed.end()), observed.end());
        if (observed.size() < 2)
            throw DegenerateValidation("task '" + train.task_names[t] +
                                       "' has fewer than 2 distinct validation labels");
    }

    Standardization stats = label_stats(train);
    Tensor train_labels = standardize(train.labels, train.mask, stats);
    Tensor valid_labels = standardize(valid.labels, valid.mask, stats);

    AdamOptimizer adam(params.all(), config.learning_rate, config.adam_beta1,
                       config.adam_beta2, config.epsilon);
    std::mt19937_64 shuffle_rng(config.seed + 0x5DEECE66Dull);

    BatchedGraphs valid_batch = batch_graphs(valid.molecules);

    checkpoints.resize(n_tasks);
    for (int t = 0; t < n_tasks; ++t) {
        CheckpointT& cp = checkpoints[t];
        cp.task = train.task_names[t];
        cp.task_index = t;
        cp.config = config;
        cp.label_mean = stats.mean[t];
        cp.label_std = stats.stdev[t];
        cp.schema_hash = atom_feature_schema_hash();
        cp.best_r2 = -1.0;
    }

    std::vector<int> order(train.n_molecules());
    std::iota(order.begin(), order.end(), 0);
    std::vector<std::vector<double>> curve;

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        for (size_t start = 0; start < order.size();
             start += static_cast<size_t>(config.batch_size)) {
            size_t end = std::min(order.size(), start + config.batch_size);
            std::vector<const MolecularGraph*> mols;
            Tensor labels(static_cast<int>(end - start), n_tasks);
            Tensor mask(static_cast<int>(end - start), n_tasks);
            for (size_t k = start; k < end; ++k) {
                int idx = order[k];
                mols.push_back(&train.molecules[idx]);
                for (int t = 0; t < n_tasks; ++t) {
                    labels.at(static_cast<int>(k - start), t) = train_labels.at(idx, t);
                    mask.at(static_cast<int>(k - start), t) = train.mask.at(idx, t);
                }
            }
            BatchedGraphs batch = batch_graphs(mols);
            Tape tape;
            Tape::NodeId features = tape.leaf(batch.features);
            Tape::NodeId pred = forward_fn(tape, params, batch, features);
            Tape::NodeId loss = masked_loss(tape, pred, labels, mask);
            adam.zero_grad();
            tape.backward(loss);
            adam.step();
        }

        Tensor vpred = [&] {
            Tape tape(false);
            Tape::NodeId features = tape.leaf(valid_batch.features);
            Tape::NodeId out = forward_fn(tape, params, valid_batch, features);
            return tape.value(out);
        }();
        std::vector<double> epoch_scores(n_tasks, 0.0);
        for (int t = 0; t < n_tasks; ++t) {
            std::vector<double> p, a;
            for (int i = 0; i < valid.n_molecules(); ++i) {
                if (valid.mask.at(i, t) != 0.0) {
                    p.push_back(vpred.at(i, t));
                    a.push_back(valid_labels.at(i, t));
                }
            }
            double r2 = 0.0;
            try {
                r2 = pearson_r2(p, a);
            } catch (const DegenerateSeries&) {
                r2 = 0.0;
            }
            epoch_scores[t] = r2;
            CheckpointT& cp = checkpoints[t];
            if (r2 > cp.best_r2) {
                cp.best_r2 = r2;
                cp.best_epoch = epoch;
                cp.params = params;
            }
        }
        curve.push_back(std::move(epoch_scores));
    }
    return curve;
}

}  // namespace

TrainResult train_multitask(const LabeledGraphs& train, const LabeledGraphs& valid,
                            const ModelConfig& config) {
    ModelParams params = init_params(config);
    TrainResult result;
    result.validation_curve = train_loop(
        train, valid, config, params,
        [&config](Tape& tape, ModelParams& p, const BatchedGraphs& batch,
                  Tape::NodeId features) {
            return forward_on_tape(tape, p, config, batch, features);
        },
        result.checkpoints);
    return result;
}

GcnTrainResult train_multitask_gcn(const LabeledGraphs& train, const LabeledGraphs& valid,
                                   const ModelConfig& config) {
    GcnParams params = init_gcn_params(config);
    GcnTrainResult result;
    result.validation_curve = train_loop(
        train, valid, config, params,
        [&config](Tape& tape, GcnParams& p, const BatchedGraphs& batch,
                  Tape::NodeId features) {
            return gcn_forward_on_tape(tape, p, config, batch, features);
        },
        result.checkpoints);
    return result;
}

std::vector<double> predict_gcn(const GcnCheckpoint& cp,
                                const std::vector<MolecularGraph>& mols) {
    BatchedGraphs batch = batch_graphs(mols);
    if (batch.schema_hash != cp.schema_hash)
        throw SchemaMismatch("feature schema differs from checkpoint");
    GcnParams params = cp.params;
    Tensor out = gcn_forward(params, cp.config, batch);
    std::vector<double> values;
    values.reserve(mols.size());
    for (int i = 0; i < out.rows; ++i)
        values.push_back(cp.label_mean + cp.label_std * out.at(i, cp.task_index));
    return values;
}

std::vector<double> predict(const TaskCheckpoint& cp, const std::vector<MolecularGraph>& mols) {
    BatchedGraphs batch = batch_graphs(mols);
    if (batch.schema_hash != cp.schema_hash)
        throw SchemaMismatch("feature schema differs from checkpoint");
    ModelParams params = cp.params;
    Tensor out = forward(params, cp.config, batch, false);
    std::vector<double> values;
    values.reserve(mols.size());
    for (int i = 0; i < out.rows; ++i)
        values.push_back(cp.label_mean + cp.label_std * out.at(i, cp.task_index));
    return values;
}

void save_checkpoint(const TaskCheckpoint& cp, const std::string& binary_path,
                     const std::string& json_path) {
    save_parameters(binary_path, cp.params.all(), cp.schema_hash);
    nlohmann::json j;
    j["task"] = cp.task;
    j["task_index"] = cp.task_index;
    j["best_r2"] = cp.best_r2;
    j["best_epoch"] = cp.best_epoch;
    j["label_mean"] = cp.label_mean;
    j["label_std"] = cp.label_std;
    j["schema_hash"] = cp.schema_hash;
    j["config"] = {{"k_layers", cp.config.k_layers},
                   {"state_dim", cp.config.state_dim},
                   {"gather_dim", cp.config.gather_dim},
                   {"fc_dims", cp.config.fc_dims},
                   {"n_edge_types", cp.config.n_edge_types},
                   {"input_embedding", cp.config.input_embedding},
                   {"learning_rate", cp.config.learning_rate},
                   {"adam_beta1", cp.config.adam_beta1},
                   {"adam_beta2", cp.config.adam_beta2},
                   {"epsilon", cp.config.epsilon},
                   {"epochs", cp.config.epochs},
                   {"batch_size", cp.config.batch_size},
                   {"seed", cp.config.seed}};
    std::ofstream os(json_path);
    os << j.dump(2) << "\n";
}

TaskCheckpoint load_checkpoint(const std::string& binary_path, const std::string& json_path) {
    std::ifstream is(json_path);
    if (!is) throw SchemaMismatch("cannot open '" + json_path + "'");
    nlohmann::json j;
    is >> j;
    TaskCheckpoint cp;
    cp.task = j.at("task").get<std::string>();
    cp.task_index = j.at("task_index").get<int>();
    cp.best_r2 = j.at("best_r2").get<double>();
    cp.best_epoch = j.at("best_epoch").get<int>();
    cp.label_mean = j.at("label_mean").get<double>();
    cp.label_std = j.at("label_std").get<double>();
    cp.schema_hash = j.at("schema_hash").get<uint64_t>();
    const auto& c = j.at("config");
    cp.config.k_layers = c.at("k_layers").get<int>();
    cp.config.state_dim = c.at("state_dim").get<int>();
    cp.config.gather_dim = c.at("gather_dim").get<int>();
    cp.config.fc_dims = c.at("fc_dims").get<std::vector<int>>();
    cp.config.n_edge_types = c.at("n_edge_types").get<int>();
    cp.config.input_embedding = c.at("input_embedding").get<bool>();
    cp.config.learning_rate = c.at("learning_rate").get<double>();
    cp.config.adam_beta1 = c.at("adam_beta1").get<double>();
    cp.config.adam_beta2 = c.at("adam_beta2").get<double>();
    cp.config.epsilon = c.at("epsilon").get<double>();
    cp.config.epochs = c.at("epochs").get<int>();
    cp.config.batch_size = c.at("batch_size").get<int>();
    cp.config.seed = c.at("seed").get<uint64_t>();
    cp.params = init_params(cp.config);
    load_parameters(binary_path, cp.params.all(), cp.schema_hash);
    return cp;
}

}  // namespace admet
