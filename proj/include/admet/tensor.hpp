#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "admet/errors.hpp"

namespace admet {

struct Tensor {
    int rows = 0;
    int cols = 0;
    std::vector<double> v;

    Tensor() = default;
    Tensor(int r, int c) : rows(r), cols(c), v(static_cast<size_t>(r) * c, 0.0) {}

    static Tensor zeros(int r, int c) { return Tensor(r, c); }
    static Tensor full(int r, int c, double value) {
        Tensor t(r, c);
        std::fill(t.v.begin(), t.v.end(), value);
        return t;
    }
    static Tensor from_rows(const std::vector<std::vector<double>>& rows);

    double& at(int r, int c) { return v[static_cast<size_t>(r) * cols + c]; }
    double at(int r, int c) const { return v[static_cast<size_t>(r) * cols + c]; }
    size_t size() const { return v.size(); }
    bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }
    std::string shape_str() const {
        return "(" + std::to_string(rows) + "x" + std::to_string(cols) + ")";
    }
};

struct Parameter {
    std::string name;
    Tensor value;
    Tensor grad;

    Parameter() = default;
    Parameter(std::string n, Tensor t)
        : name(std::move(n)), value(std::move(t)), grad(value.rows, value.cols) {}
    void zero_grad() { std::fill(grad.v.begin(), grad.v.end(), 0.0); }
};

// Define-by-run tape. Rebuilt per forward pass; single-threaded.
class Tape {
public:
    using NodeId = int;

    // recording=false computes forward values only; backward is unavailable.
    explicit Tape(bool recording = true) : recording_(recording) {}

    NodeId leaf(Tensor t);
    NodeId param(Parameter& p);

    NodeId matmul(NodeId a, NodeId b);
    NodeId add(NodeId a, NodeId b);
    NodeId sub(NodeId a, NodeId b);
    NodeId add_broadcast_rows(NodeId a, NodeId bias_row);
    NodeId hadamard(NodeId a, NodeId b);
    NodeId relu(NodeId a);
    NodeId sigmoid(NodeId a);
    NodeId tanh_op(NodeId a);
    NodeId concat_cols(NodeId a, NodeId b);
    NodeId sum_rows(NodeId a);        // -> 1 x cols
    NodeId sum_all(NodeId a);         // -> 1 x 1
    NodeId scale(NodeId a, double factor);
    NodeId segment_sum(NodeId a, const std::vector<int>& segment_ids);
    // out[dst[k]] += in[src[k]] for each pair; out has n_out rows.
    NodeId index_sum(NodeId a, const std::vector<int>& src, const std::vector<int>& dst,
                     int n_out);
    NodeId dropout(NodeId a, double rate, bool training, std::mt19937_64& rng);

    const Tensor& value(NodeId id) const { return nodes_[id].val; }
    void backward(NodeId root);
    const Tensor& grad(NodeId id) const { return grads_[id]; }

private:
    enum class Op {
        Leaf, Param, MatMul, Add, Sub, AddBroadcastRows, Hadamard, Relu, Sigmoid,
        Tanh, ConcatCols, SumRows, SumAll, Scale, SegmentSum, IndexSum, Dropout
    };
    struct Node {
        Op op = Op::Leaf;
        int a = -1;
        int b = -1;
        Tensor val;
        Parameter* parameter = nullptr;
        double factor = 1.0;           // Scale
        std::vector<int> idx_a;        // segment ids / src indices
        std::vector<int> idx_b;        // dst indices
        std::vector<uint8_t> mask;     // dropout keep mask
    };

    NodeId push(Node n);
    bool recording_;
    std::vector<Node> nodes_;
    std::vector<Tensor> grads_;
};

struct GruParams {
    Parameter Wz, Uz, bz;
    Parameter Wr, Ur, br;
    Parameter Wh, Uh, bh;

    std::vector<Parameter*> all();
};

GruParams make_gru_params(const std::string& prefix, int state_dim, std::mt19937_64& rng);

// z = sigmoid(mWz + hUz + bz); r = sigmoid(mWr + hUr + br);
// hcand = tanh(mWh + (r*h)Uh + bh); h' = h + z*(hcand - h)
Tape::NodeId gru_cell(Tape& tape, Tape::NodeId h, Tape::NodeId m, GruParams& p);

// Glorot-uniform init, bias zero.
Tensor glorot_uniform(int rows, int cols, std::mt19937_64& rng);

// Flat binary parameter container: magic, schema hash, name table, f64 payloads.
void save_parameters(const std::string& path, const std::vector<const Parameter*>& params,
                     uint64_t schema_hash);
// Loads into params matched by name; throws SchemaMismatch on hash/shape/name mismatch.
void load_parameters(const std::string& path, const std::vector<Parameter*>& params,
                     uint64_t expected_schema_hash);

}  // namespace admet
