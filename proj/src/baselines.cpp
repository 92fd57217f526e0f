#include "admet/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <json.hpp>

#include "admet/potentialnet.hpp"

namespace admet {

DescriptorBag apdp_descriptors(const MolecularGraph& g) {
    DescriptorBag bag = ap_descriptors(g);
    for (const auto& [key, count] : dp_descriptors(g).counts) bag.counts["DP:" + key] += count;
    return bag;
}

DescriptorMatrix build_descriptor_matrix(const std::vector<DescriptorBag>& bags) {
    if (bags.empty()) throw EmptyInput("no molecules for descriptor matrix");
    std::set<std::string> keys;
    for (const DescriptorBag& bag : bags)
        for (const auto& [key, count] : bag.counts) keys.insert(key);
    DescriptorMatrix m;
    m.columns.assign(keys.begin(), keys.end());
    m.rows = transform_descriptors(m.columns, bags);
    return m;
}

std::vector<std::vector<double>> transform_descriptors(
    const std::vector<std::string>& columns, const std::vector<DescriptorBag>& bags,
    int* dropped_keys) {
    std::map<std::string, int> column_index;
    for (size_t i = 0; i < columns.size(); ++i) column_index[columns[i]] = static_cast<int>(i);
    std::vector<std::vector<double>> rows;
    int dropped = 0;
    for (const DescriptorBag& bag : bags) {
        std::vector<double> row(columns.size(), 0.0);
        for (const auto& [key, count] : bag.counts) {
            auto it = column_index.find(key);
            if (it == column_index.end()) {
                ++dropped;  // unseen at training time
                continue;
            }
            row[it->second] = static_cast<double>(count);
        }
        rows.push_back(std::move(row));
    }
    if (dropped_keys) *dropped_keys = dropped;
    return rows;
}

double RegressionTree::predict(const std::vector<double>& row) const {
    int node = 0;
    while (nodes[node].split_column >= 0) {
        node = row[nodes[node].split_column] <= nodes[node].threshold ? nodes[node].left
                                                                      : nodes[node].right;
    }
    return nodes[node].value;
}

namespace {

int mtry_count(MtryMode mode, int n_columns) {
    switch (mode) {
        case MtryMode::Sqrt:
            return std::max(1, static_cast<int>(std::floor(std::sqrt(n_columns))));
        case MtryMode::Third:
            return std::max(1, n_columns / 3);
        case MtryMode::All:
            return n_columns;
    }
    return n_columns;
}

struct TreeBuilder {
    const std::vector<std::vector<double>>& X;
    const std::vector<double>& y;
    const RFConfig& config;
    std::mt19937_64& rng;
    RegressionTree tree;

    int build(std::vector<int> rows) {
        int id = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        double sum = 0.0;
        for (int r : rows) sum += y[r];
        double mean = sum / static_cast<double>(rows.size());
        tree.nodes[id].value = mean;
        tree.nodes[id].count = static_cast<int>(rows.size());

        double sse = 0.0;
        for (int r : rows) sse += (y[r] - mean) * (y[r] - mean);
        if (static_cast<int>(rows.size()) < 2 * config.min_leaf || sse <= 0.0) return id;

        int n_columns = static_cast<int>(X[0].size());
        std::vector<int> candidates = sample_columns(n_columns);

        int best_col = -1;
        double best_threshold = 0.0;
        double best_score = sse;  // split must strictly reduce total SSE
        for (int col : candidates) {
            scan_column(rows, col, best_col, best_threshold, best_score);
        }
        if (best_col < 0) return id;

        std::vector<int> left, right;
        for (int r : rows)
            (X[r][best_col] <= best_threshold ? left : right).push_back(r);
        tree.nodes[id].split_column = best_col;
        tree.nodes[id].threshold = best_threshold;
        int l = build(std::move(left));
        int r = build(std::move(right));
        tree.nodes[id].left = l;
        tree.nodes[id].right = r;
        return id;
    }

    std::vector<int> sample_columns(int n_columns) {
        int mtry = mtry_count(config.mtry_mode, n_columns);
        std::vector<int> cols(n_columns);
        std::iota(cols.begin(), cols.end(), 0);
        if (mtry < n_columns) {
            for (int i = 0; i < mtry; ++i) {
                std::uniform_int_distribution<int> pick(i, n_columns - 1);
                std::swap(cols[i], cols[pick(rng)]);
            }
            cols.resize(mtry);
            std::sort(cols.begin(), cols.end());  // ties break on lowest column index
        }
        return cols;
    }

    void scan_column(const std::vector<int>& rows, int col, int& best_col,
                     double& best_threshold, double& best_score) {
        std::vector<std::pair<double, double>> pts;  // (x, y) sorted by x
        pts.reserve(rows.size());
        for (int r : rows) pts.emplace_back(X[r][col], y[r]);
        std::sort(pts.begin(), pts.end());

        size_t n = pts.size();
        std::vector<double> prefix_sum(n + 1, 0.0), prefix_sq(n + 1, 0.0);
        for (size_t i = 0; i < n; ++i) {
            prefix_sum[i + 1] = prefix_sum[i] + pts[i].second;
            prefix_sq[i + 1] = prefix_sq[i] + pts[i].second * pts[i].second;
        }
        for (size_t i = 1; i < n; ++i) {
            if (pts[i].first == pts[i - 1].first) continue;
            size_t nl = i, nr = n - i;
            if (static_cast<int>(nl) < config.min_leaf ||
                static_cast<int>(nr) < config.min_leaf)
                continue;
            double threshold = (pts[i - 1].first + pts[i].first) / 2.0;
            double sl = prefix_sum[i], sr = prefix_sum[n] - sl;
            double ql = prefix_sq[i], qr = prefix_sq[n] - ql;
            double sse_l = ql - sl * sl / static_cast<double>(nl);
            double sse_r = qr - sr * sr / static_cast<double>(nr);
            double score = sse_l + sse_r;
            // columns are scanned ascending and thresholds ascending, so
            // keeping only strict improvements breaks ties toward the lowest
            // column index, then the lowest threshold
            if (score < best_score - 1e-12) {
                best_score = score;
                best_col = col;
                best_threshold = threshold;
            }
        }
    }
};

}  // namespace

RandomForestModel fit_rf(const DescriptorMatrix& X, const std::vector<double>& y,
                         const RFConfig& config) {
    if (X.rows.size() < 2) throw EmptyInput("fit_rf needs at least 2 rows");
    if (X.rows.size() != y.size()) throw ShapeMismatch("fit_rf rows vs labels");
    for (double v : y)
        if (!std::isfinite(v)) throw DegenerateTarget("non-finite label");
    RandomForestModel model;
    model.columns = X.columns;
    model.config = config;
    int n = static_cast<int>(X.rows.size());
    for (int t = 0; t < config.n_trees; ++t) {
        std::mt19937_64 rng(config.seed + static_cast<uint64_t>(t));
        std::vector<int> rows;
        if (config.bootstrap) {
            std::uniform_int_distribution<int> pick(0, n - 1);
            rows.reserve(n);
            for (int i = 0; i < n; ++i) rows.push_back(pick(rng));
            std::sort(rows.begin(), rows.end());
        } else {
            rows.resize(n);
            std::iota(rows.begin(), rows.end(), 0);
        }
        model.bootstrap_rows.push_back(rows);
        TreeBuilder builder{X.rows, y, config, rng, {}};
        builder.build(rows);
        model.trees.push_back(std::move(builder.tree));
    }
    return model;
}

std::vector<double> predict_rf(const RandomForestModel& model,
                               const std::vector<std::vector<double>>& rows) {
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& row : rows) {
        if (row.size() != model.columns.size())
            throw SchemaMismatch("descriptor row width " + std::to_string(row.size()) +
                                 " vs model " + std::to_string(model.columns.size()));
        double sum = 0.0;
        for (const RegressionTree& tree : model.trees) sum += tree.predict(row);
        out.push_back(sum / static_cast<double>(model.trees.size()));
    }
    return out;
}

double oob_mse(const RandomForestModel& model, const DescriptorMatrix& X,
               const std::vector<double>& y) {
    int n = static_cast<int>(X.rows.size());
    double total = 0.0;
    int counted = 0;
    for (int i = 0; i < n; ++i) {
        double sum = 0.0;
        int trees = 0;
        for (size_t t = 0; t < model.trees.size(); ++t) {
            const auto& rows = model.bootstrap_rows[t];
            if (!std::binary_search(rows.begin(), rows.end(), i)) {
                sum += model.trees[t].predict(X.rows[i]);
                ++trees;
            }
        }
        if (trees == 0) continue;
        double err = sum / trees - y[i];
        total += err * err;
        ++counted;
    }
    if (counted == 0) throw EmptyInput("no out-of-bag rows");
    return total / counted;
}

std::string rf_to_json(const RandomForestModel& model) {
    nlohmann::json j;
    j["columns"] = model.columns;
    j["config"] = {{"n_trees", model.config.n_trees},
                   {"mtry_mode", static_cast<int>(model.config.mtry_mode)},
                   {"min_leaf", model.config.min_leaf},
                   {"bootstrap", model.config.bootstrap},
                   {"seed", model.config.seed}};
    nlohmann::json trees = nlohmann::json::array();
    for (const RegressionTree& tree : model.trees) {
        nlohmann::json nodes = nlohmann::json::array();
        for (const TreeNode& n : tree.nodes) {
            nodes.push_back({{"col", n.split_column},
                             {"thr", n.threshold},
                             {"l", n.left},
                             {"r", n.right},
                             {"val", n.value},
                             {"n", n.count}});
        }
        trees.push_back(std::move(nodes));
    }
    j["trees"] = std::move(trees);
    return j.dump();
}

RandomForestModel rf_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    RandomForestModel model;
    model.columns = j.at("columns").get<std::vector<std::string>>();
    const auto& c = j.at("config");
    model.config.n_trees = c.at("n_trees").get<int>();
    model.config.mtry_mode = static_cast<MtryMode>(c.at("mtry_mode").get<int>());
    model.config.min_leaf = c.at("min_leaf").get<int>();
    model.config.bootstrap = c.at("bootstrap").get<bool>();
    model.config.seed = c.at("seed").get<uint64_t>();
    for (const auto& nodes : j.at("trees")) {
        RegressionTree tree;
        for (const auto& n : nodes) {
            TreeNode node;
            node.split_column = n.at("col").get<int>();
            node.threshold = n.at("thr").get<double>();
            node.left = n.at("l").get<int>();
            node.right = n.at("r").get<int>();
            node.value = n.at("val").get<double>();
            node.count = n.at("n").get<int>();
            tree.nodes.push_back(node);
        }
        model.trees.push_back(std::move(tree));
    }
    return model;
}

namespace {

Tensor scale_rows(const std::vector<std::vector<double>>& rows,
                  const std::vector<double>& column_scale) {
    Tensor t(static_cast<int>(rows.size()), static_cast<int>(column_scale.size()));
    for (int i = 0; i < t.rows; ++i) {
        if (rows[i].size() != column_scale.size())
            throw SchemaMismatch("descriptor row width vs MLP columns");
        for (int j = 0; j < t.cols; ++j) t.at(i, j) = rows[i][j] / column_scale[j];
    }
    return t;
}

Tape::NodeId mlp_forward(Tape& tape, MLPModel& model, Tape::NodeId x, bool training,
                         std::mt19937_64& rng) {
    for (size_t i = 0; i < model.weights.size(); ++i) {
        x = tape.add_broadcast_rows(tape.matmul(x, tape.param(model.weights[i])),
                                    tape.param(model.biases[i]));
        if (i + 1 < model.weights.size()) {
            x = tape.relu(x);
            x = tape.dropout(x, model.config.dropout, training, rng);
        }
    }
    return x;
}

}  // namespace

MLPModel fit_mlp(const DescriptorMatrix& X, const std::vector<double>& y,
                 const MLPConfig& config) {
    if (X.rows.size() < 2) throw EmptyInput("fit_mlp needs at least 2 rows");
    if (X.rows.size() != y.size()) throw ShapeMismatch("fit_mlp rows vs labels");
    MLPModel model;
    model.columns = X.columns;
    model.config = config;
    int m = static_cast<int>(X.columns.size());
    model.column_scale.assign(m, 1.0);
    for (const auto& row : X.rows)
        for (int j = 0; j < m; ++j) model.column_scale[j] = std::max(model.column_scale[j], row[j]);

    std::mt19937_64 rng(config.seed);
    std::vector<int> dims = {m};
    dims.insert(dims.end(), config.hidden.begin(), config.hidden.end());
    dims.push_back(1);
    for (size_t i = 0; i + 1 < dims.size(); ++i) {
        model.weights.emplace_back("mlp.w." + std::to_string(i),
                                   glorot_uniform(dims[i], dims[i + 1], rng));
        model.biases.emplace_back("mlp.b." + std::to_string(i), Tensor(1, dims[i + 1]));
    }

    std::vector<Parameter*> params;
    for (auto& p : model.weights) params.push_back(&p);
    for (auto& p : model.biases) params.push_back(&p);
    AdamOptimizer adam(params, config.learning_rate);

    Tensor features = scale_rows(X.rows, model.column_scale);
    int n = features.rows;
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 shuffle_rng(config.seed + 0x5DEECE66Dull);
    Tensor ones(1, 1);

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        for (int start = 0; start < n; start += config.batch_size) {
            int end = std::min(n, start + config.batch_size);
            Tensor bx(end - start, m);
            Tensor by(end - start, 1);
            Tensor bmask = Tensor::full(end - start, 1, 1.0);
            for (int k = start; k < end; ++k) {
                int idx = order[k];
                for (int j = 0; j < m; ++j) bx.at(k - start, j) = features.at(idx, j);
                by.at(k - start, 0) = y[idx];
            }
            Tape tape;
            Tape::NodeId xin = tape.leaf(bx);
            Tape::NodeId pred = mlp_forward(tape, model, xin, true, rng);
            Tape::NodeId loss = masked_loss(tape, pred, by, bmask);
            adam.zero_grad();
            tape.backward(loss);
            adam.step();
        }
    }
    return model;
}

std::vector<double> predict_mlp(const MLPModel& model,
                                const std::vector<std::vector<double>>& rows) {
    MLPModel& m = const_cast<MLPModel&>(model);  // tape reads values only here
    Tensor features = scale_rows(rows, model.column_scale);
    std::mt19937_64 rng(0);
    Tape tape(false);
    Tape::NodeId x = tape.leaf(features);
    Tape::NodeId out = mlp_forward(tape, m, x, false, rng);
    const Tensor& pred = tape.value(out);
    std::vector<double> values;
    for (int i = 0; i < pred.rows; ++i)
        values.push_back(model.label_mean + model.label_std * pred.at(i, 0));
    return values;
}

}  // namespace admet
