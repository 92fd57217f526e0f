#include "admet/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

namespace admet {

Tensor Tensor::from_rows(const std::vector<std::vector<double>>& rows) {
    Tensor t(static_cast<int>(rows.size()), rows.empty() ? 0 : static_cast<int>(rows[0].size()));
    for (int r = 0; r < t.rows; ++r) {
        if (static_cast<int>(rows[r].size()) != t.cols)
            throw ShapeMismatch("ragged rows in Tensor::from_rows");
        std::copy(rows[r].begin(), rows[r].end(), t.v.begin() + static_cast<size_t>(r) * t.cols);
    }
    return t;
}

namespace {

void check_finite(const Tensor& t, const char* op) {
    for (double x : t.v) {
        if (!std::isfinite(x))
            throw ShapeMismatch(std::string("non-finite value produced by ") + op);
    }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (!a.same_shape(b))
        throw ShapeMismatch(std::string(op) + " shapes " + a.shape_str() + " vs " +
                            b.shape_str());
}

}  // namespace

Tape::NodeId Tape::push(Node n) {
    check_finite(n.val, "tape op");
    if (!recording_) {
        // keep the value, drop the graph structure
        n.op = Op::Leaf;
        n.a = n.b = -1;
        n.parameter = nullptr;
    }
    nodes_.push_back(std::move(n));
    return static_cast<NodeId>(nodes_.size()) - 1;
}

Tape::NodeId Tape::leaf(Tensor t) {
    Node n;
    n.op = Op::Leaf;
    n.val = std::move(t);
    nodes_.push_back(std::move(n));
    return static_cast<NodeId>(nodes_.size()) - 1;
}

Tape::NodeId Tape::param(Parameter& p) {
    Node n;
    n.op = Op::Param;
    n.val = p.value;
    n.parameter = &p;
    return push(std::move(n));
}

Tape::NodeId Tape::matmul(NodeId a, NodeId b) {
    const Tensor& A = nodes_[a].val;
    const Tensor& B = nodes_[b].val;
    if (A.cols != B.rows)
        throw ShapeMismatch("matmul " + A.shape_str() + " x " + B.shape_str());
    Node n;
    n.op = Op::MatMul;
    n.a = a;
    n.b = b;
    n.val = Tensor(A.rows, B.cols);
    for (int i = 0; i < A.rows; ++i) {
        for (int k = 0; k < A.cols; ++k) {
            double aik = A.at(i, k);
            if (aik == 0.0) continue;
            const double* brow = &B.v[static_cast<size_t>(k) * B.cols];
            double* crow = &n.val.v[static_cast<size_t>(i) * B.cols];
            for (int j = 0; j < B.cols; ++j) crow[j] += aik * brow[j];
        }
    }
    return push(std::move(n));
}

Tape::NodeId Tape::add(NodeId a, NodeId b) {
    const Tensor& A = nodes_[a].val;
    const Tensor& B = nodes_[b].val;
    require_same_shape(A, B, "add");
    Node n;
    n.op = Op::Add;
    n.a = a;
    n.b = b;
    n.val = A;
    for (size_t i = 0; i < n.val.size(); ++i) n.val.v[i] += B.v[i];
    return push(std::move(n));
}

Tape::NodeId Tape::sub(NodeId a, NodeId b) {
    const Tensor& A = nodes_[a].val;
    const Tensor& B = nodes_[b].val;
    require_same_shape(A, B, "sub");
    Node n;
    n.op = Op::Sub;
    n.a = a;
    n.b = b;
    n.val = A;
    for (size_t i = 0; i < n.val.size(); ++i) n.val.v[i] -= B.v[i];
    return push(std::move(n));
}

Tape::NodeId Tape::add_broadcast_rows(NodeId a, NodeId bias_row) {
    const Tensor& A = nodes_[a].val;
    const Tensor& B = nodes_[bias_row].val;
    if (B.rows != 1 || B.cols != A.cols)
        throw ShapeMismatch("add_broadcast_rows " + A.shape_str() + " + " + B.shape_str());
    Node n;
    n.op = Op::AddBroadcastRows;
    n.a = a;
    n.b = bias_row;
    n.val = A;
    for (int i = 0; i < A.rows; ++i)
        for (int j = 0; j < A.cols; ++j) n.val.at(i, j) += B.at(0, j);
    return push(std::move(n));
}

Tape::NodeId Tape::hadamard(NodeId a, NodeId b) {
    const Tensor& A = nodes_[a].val;
    const Tensor& B = nodes_[b].val;
    require_same_shape(A, B, "hadamard");
    Node n;
    n.op = Op::Hadamard;
    n.a = a;
    n.b = b;
    n.val = A;
    for (size_t i = 0; i < n.val.size(); ++i) n.val.v[i] *= B.v[i];
    return push(std::move(n));
}

Tape::NodeId Tape::relu(NodeId a) {
    Node n;
    n.op = Op::Relu;
    n.a = a;
    n.val = nodes_[a].val;
    for (double& x : n.val.v) x = x > 0.0 ? x : 0.0;
    return push(std::move(n));
}

Tape::NodeId Tape::sigmoid(NodeId a) {
    Node n;
    n.op = Op::Sigmoid;
    n.a = a;
    n.val = nodes_[a].val;
    for (double& x : n.val.v) x = 1.0 / (1.0 + std::exp(-x));
    return push(std::move(n));
}

Tape::NodeId Tape::tanh_op(NodeId a) {
    Node n;
    n.op = Op::Tanh;
    n.a = a;
    n.val = nodes_[a].val;
    for (double& x : n.val.v) x = std::tanh(x);
    return push(std::move(n));
}

Tape::NodeId Tape::concat_cols(NodeId a, NodeId b) {
    const Tensor& A = nodes_[a].val;
    const Tensor& B = nodes_[b].val;
    if (A.rows != B.rows)
        throw ShapeMismatch("concat_cols " + A.shape_str() + " | " + B.shape_str());
    Node n;
    n.op = Op::ConcatCols;
    n.a = a;
    n.b = b;
    n.val = Tensor(A.rows, A.cols + B.cols);
    for (int i = 0; i < A.rows; ++i) {
        for (int j = 0; j < A.cols; ++j) n.val.at(i, j) = A.at(i, j);
        for (int j = 0; j < B.cols; ++j) n.val.at(i, A.cols + j) = B.at(i, j);
    }
    return push(std::move(n));
}

Tape::NodeId Tape::sum_rows(NodeId a) {
    const Tensor& A = nodes_[a].val;
    Node n;
    n.op = Op::SumRows;
    n.a = a;
    n.val = Tensor(1, A.cols);
    for (int i = 0; i < A.rows; ++i)
        for (int j = 0; j < A.cols; ++j) n.val.at(0, j) += A.at(i, j);
    return push(std::move(n));
}

Tape::NodeId Tape::sum_all(NodeId a) {
    const Tensor& A = nodes_[a].val;
    Node n;
    n.op = Op::SumAll;
    n.a = a;
    n.val = Tensor(1, 1);
    for (double x : A.v) n.val.v[0] += x;
    return push(std::move(n));
}

Tape::NodeId Tape::scale(NodeId a, double factor) {
    Node n;
    n.op = Op::Scale;
    n.a = a;
    n.factor = factor;
    n.val = nodes_[a].val;
    for (double& x : n.val.v) x *= factor;
    return push(std::move(n));
}

Tape::NodeId Tape::segment_sum(NodeId a, const std::vector<int>& segment_ids) {
    const Tensor& A = nodes_[a].val;
    if (static_cast<int>(segment_ids.size()) != A.rows)
        throw ShapeMismatch("segment_sum ids length vs rows");
    int n_seg = segment_ids.empty() ? 0 : *std::max_element(segment_ids.begin(),
                                                            segment_ids.end()) + 1;
    std::vector<bool> seen(n_seg, false);
    for (int id : segment_ids) {
        if (id < 0 || id >= n_seg) throw NonContiguousSegments("negative segment id");
        seen[id] = true;
    }
    for (int s = 0; s < n_seg; ++s) {
        if (!seen[s])
            throw NonContiguousSegments("segment " + std::to_string(s) + " has no rows");
    }
    Node n;
    n.op = Op::SegmentSum;
    n.a = a;
    n.idx_a = segment_ids;
    n.val = Tensor(n_seg, A.cols);
    for (int i = 0; i < A.rows; ++i) {
        int s = segment_ids[i];
        for (int j = 0; j < A.cols; ++j) n.val.at(s, j) += A.at(i, j);
    }
    return push(std::move(n));
}

Tape::NodeId Tape::index_sum(NodeId a, const std::vector<int>& src,
                             const std::vector<int>& dst, int n_out) {
    const Tensor& A = nodes_[a].val;
    if (src.size() != dst.size()) throw ShapeMismatch("index_sum src/dst length");
    Node n;
    n.op = Op::IndexSum;
    n.a = a;
    n.idx_a = src;
    n.idx_b = dst;
    n.val = Tensor(n_out, A.cols);
    for (size_t k = 0; k < src.size(); ++k) {
        for (int j = 0; j < A.cols; ++j) n.val.at(dst[k], j) += A.at(src[k], j);
    }
    return push(std::move(n));
}

Tape::NodeId Tape::dropout(NodeId a, double rate, bool training, std::mt19937_64& rng) {
    if (rate < 0.0 || rate >= 1.0) throw ShapeMismatch("dropout rate must be in [0,1)");
    Node n;
    n.op = Op::Dropout;
    n.a = a;
    n.val = nodes_[a].val;
    if (training && rate > 0.0) {
        std::uniform_real_distribution<double> uni(0.0, 1.0);
        double keep_scale = 1.0 / (1.0 - rate);
        n.mask.resize(n.val.size());
        for (size_t i = 0; i < n.val.size(); ++i) {
            bool keep = uni(rng) >= rate;
            n.mask[i] = keep ? 1 : 0;
            n.val.v[i] = keep ? n.val.v[i] * keep_scale : 0.0;
        }
        n.factor = keep_scale;
    }
    return push(std::move(n));
}

void Tape::backward(NodeId root) {
    const Tensor& r = nodes_[root].val;
    if (r.rows != 1 || r.cols != 1)
        throw NonScalarRoot("backward root has shape " + r.shape_str());
    grads_.assign(nodes_.size(), Tensor());
    for (size_t i = 0; i < nodes_.size(); ++i)
        grads_[i] = Tensor(nodes_[i].val.rows, nodes_[i].val.cols);
    grads_[root].v[0] = 1.0;

    for (int id = root; id >= 0; --id) {
        const Node& n = nodes_[id];
        const Tensor& g = grads_[id];
        switch (n.op) {
            case Op::Leaf:
                break;
            case Op::Param:
                for (size_t i = 0; i < g.size(); ++i) n.parameter->grad.v[i] += g.v[i];
                break;
            case Op::MatMul: {
                const Tensor& A = nodes_[n.a].val;
                const Tensor& B = nodes_[n.b].val;
                Tensor& ga = grads_[n.a];
                Tensor& gb = grads_[n.b];
                // dA = g B^T ; dB = A^T g
                for (int i = 0; i < A.rows; ++i)
                    for (int k = 0; k < A.cols; ++k) {
                        double acc = 0.0;
                        for (int j = 0; j < B.cols; ++j) acc += g.at(i, j) * B.at(k, j);
                        ga.at(i, k) += acc;
                    }
                for (int k = 0; k < B.rows; ++k)
                    for (int j = 0; j < B.cols; ++j) {
                        double acc = 0.0;
                        for (int i = 0; i < A.rows; ++i) acc += A.at(i, k) * g.at(i, j);
                        gb.at(k, j) += acc;
                    }
                break;
            }
            case Op::Add:
                for (size_t i = 0; i < g.size(); ++i) {
                    grads_[n.a].v[i] += g.v[i];
                    grads_[n.b].v[i] += g.v[i];
                }
                break;
            case Op::Sub:
                for (size_t i = 0; i < g.size(); ++i) {
                    grads_[n.a].v[i] += g.v[i];
                    grads_[n.b].v[i] -= g.v[i];
                }
                break;
            case Op::AddBroadcastRows: {
                Tensor& ga = grads_[n.a];
                Tensor& gb = grads_[n.b];
                for (int i = 0; i < g.rows; ++i)
                    for (int j = 0; j < g.cols; ++j) {
                        ga.at(i, j) += g.at(i, j);
                        gb.at(0, j) += g.at(i, j);
                    }
                break;
            }
            case Op::Hadamard: {
                const Tensor& A = nodes_[n.a].val;
                const Tensor& B = nodes_[n.b].val;
                for (size_t i = 0; i < g.size(); ++i) {
                    grads_[n.a].v[i] += g.v[i] * B.v[i];
                    grads_[n.b].v[i] += g.v[i] * A.v[i];
                }
                break;
            }
            case Op::Relu: {
                const Tensor& A = nodes_[n.a].val;
                // subgradient at 0 is 0
                for (size_t i = 0; i < g.size(); ++i)
                    grads_[n.a].v[i] += A.v[i] > 0.0 ? g.v[i] : 0.0;
                break;
            }
            case Op::Sigmoid:
                for (size_t i = 0; i < g.size(); ++i) {
                    double y = n.val.v[i];
                    grads_[n.a].v[i] += g.v[i] * y * (1.0 - y);
                }
                break;
            case Op::Tanh:
                for (size_t i = 0; i < g.size(); ++i) {
                    double y = n.val.v[i];
                    grads_[n.a].v[i] += g.v[i] * (1.0 - y * y);
                }
                break;
            case Op::ConcatCols: {
                const Tensor& A = nodes_[n.a].val;
                const Tensor& B = nodes_[n.b].val;
                for (int i = 0; i < g.rows; ++i) {
                    for (int j = 0; j < A.cols; ++j) grads_[n.a].at(i, j) += g.at(i, j);
                    for (int j = 0; j < B.cols; ++j)
                        grads_[n.b].at(i, j) += g.at(i, A.cols + j);
                }
                break;
            }
            case Op::SumRows: {
                Tensor& ga = grads_[n.a];
                for (int i = 0; i < ga.rows; ++i)
                    for (int j = 0; j < ga.cols; ++j) ga.at(i, j) += g.at(0, j);
                break;
            }
            case Op::SumAll: {
                Tensor& ga = grads_[n.a];
                for (double& x : ga.v) x += g.v[0];
                break;
            }
            case Op::Scale:
                for (size_t i = 0; i < g.size(); ++i) grads_[n.a].v[i] += g.v[i] * n.factor;
                break;
            case Op::SegmentSum: {
                Tensor& ga = grads_[n.a];
                for (int i = 0; i < ga.rows; ++i) {
                    int s = n.idx_a[i];
                    for (int j = 0; j < ga.cols; ++j) ga.at(i, j) += g.at(s, j);
                }
                break;
            }
            case Op::IndexSum: {
                Tensor& ga = grads_[n.a];
                for (size_t k = 0; k < n.idx_a.size(); ++k) {
                    for (int j = 0; j < ga.cols; ++j)
                        ga.at(n.idx_a[k], j) += g.at(n.idx_b[k], j);
                }
                break;
            }
            case Op::Dropout:
                if (n.mask.empty()) {
                    for (size_t i = 0; i < g.size(); ++i) grads_[n.a].v[i] += g.v[i];
                } else {
                    for (size_t i = 0; i < g.size(); ++i)
                        grads_[n.a].v[i] += n.mask[i] ? g.v[i] * n.factor : 0.0;
                }
                break;
        }
    }
}

std::vector<Parameter*> GruParams::all() {
    return {&Wz, &Uz, &bz, &Wr, &Ur, &br, &Wh, &Uh, &bh};
}

Tensor glorot_uniform(int rows, int cols, std::mt19937_64& rng) {
    double a = std::sqrt(6.0 / (rows + cols));
    std::uniform_real_distribution<double> uni(-a, a);
    Tensor t(rows, cols);
    for (double& x : t.v) x = uni(rng);
    return t;
}

GruParams make_gru_params(const std::string& prefix, int state_dim, std::mt19937_64& rng) {
    GruParams p;
    auto mat = [&](const char* name) {
        return Parameter(prefix + "." + name, glorot_uniform(state_dim, state_dim, rng));
    };
    auto bias = [&](const char* name) {
        return Parameter(prefix + "." + name, Tensor(1, state_dim));
    };
    p.Wz = mat("Wz"); p.Uz = mat("Uz"); p.bz = bias("bz");
    p.Wr = mat("Wr"); p.Ur = mat("Ur"); p.br = bias("br");
    p.Wh = mat("Wh"); p.Uh = mat("Uh"); p.bh = bias("bh");
    return p;
}

Tape::NodeId gru_cell(Tape& tape, Tape::NodeId h, Tape::NodeId m, GruParams& p) {
    const Tensor& H = tape.value(h);
    const Tensor& M = tape.value(m);
    if (H.rows != M.rows || H.cols != M.cols)
        throw ShapeMismatch("gru_cell h " + H.shape_str() + " vs m " + M.shape_str());
    auto lin = [&](Tape::NodeId x, Parameter& W) { return tape.matmul(x, tape.param(W)); };
    auto z = tape.sigmoid(tape.add_broadcast_rows(tape.add(lin(m, p.Wz), lin(h, p.Uz)),
                                                  tape.param(p.bz)));
    auto r = tape.sigmoid(tape.add_broadcast_rows(tape.add(lin(m, p.Wr), lin(h, p.Ur)),
                                                  tape.param(p.br)));
    auto rh = tape.hadamard(r, h);
    auto hcand = tape.tanh_op(tape.add_broadcast_rows(tape.add(lin(m, p.Wh), lin(rh, p.Uh)),
                                                      tape.param(p.bh)));
    // h' = (1-z)*h + z*hcand, written as h + z*(hcand - h)
    return tape.add(h, tape.hadamard(z, tape.sub(hcand, h)));
}

namespace {
constexpr char kMagic[8] = {'A', 'D', 'M', 'E', 'T', 'P', 'R', 'M'};

template <typename T>
void write_pod(std::ofstream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void read_pod(std::ifstream& is, T& v) {
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw SchemaMismatch("truncated parameter file");
}
}  // namespace

void save_parameters(const std::string& path, const std::vector<const Parameter*>& params,
                     uint64_t schema_hash) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw SchemaMismatch("cannot open '" + path + "' for writing");
    os.write(kMagic, 8);
    write_pod(os, schema_hash);
    uint32_t count = static_cast<uint32_t>(params.size());
    write_pod(os, count);
    for (const Parameter* p : params) {
        uint32_t len = static_cast<uint32_t>(p->name.size());
        write_pod(os, len);
        os.write(p->name.data(), len);
        write_pod(os, static_cast<uint32_t>(p->value.rows));
        write_pod(os, static_cast<uint32_t>(p->value.cols));
    }
    for (const Parameter* p : params)
        os.write(reinterpret_cast<const char*>(p->value.v.data()),
                 static_cast<std::streamsize>(p->value.v.size() * sizeof(double)));
}

void load_parameters(const std::string& path, const std::vector<Parameter*>& params,
                     uint64_t expected_schema_hash) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw SchemaMismatch("cannot open '" + path + "'");
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, kMagic, 8) != 0)
        throw SchemaMismatch("bad magic in '" + path + "'");
    uint64_t hash;
    read_pod(is, hash);
    if (hash != expected_schema_hash)
        throw SchemaMismatch("schema hash mismatch in '" + path + "'");
    uint32_t count;
    read_pod(is, count);
    if (count != params.size()) throw SchemaMismatch("parameter count mismatch");
    for (Parameter* p : params) {
        uint32_t len, rows, cols;
        read_pod(is, len);
        std::string name(len, '\0');
        is.read(name.data(), len);
        read_pod(is, rows);
        read_pod(is, cols);
        if (name != p->name) throw SchemaMismatch("parameter name mismatch: " + name);
        if (static_cast<int>(rows) != p->value.rows || static_cast<int>(cols) != p->value.cols)
            throw SchemaMismatch("parameter shape mismatch for " + name);
    }
    for (Parameter* p : params) {
        is.read(reinterpret_cast<char*>(p->value.v.data()),
                static_cast<std::streamsize>(p->value.v.size() * sizeof(double)));
        if (!is) throw SchemaMismatch("truncated payload in '" + path + "'");
    }
}

}  // namespace admet
