#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <random>

#include "admet/potentialnet.hpp"

using namespace admet;

namespace {

ModelConfig tiny_config(uint64_t seed = 1) {
    ModelConfig c;
    c.k_layers = 2;
    c.input_embedding = true;
    c.state_dim = 6;
    c.gather_dim = 5;
    c.fc_dims = {4, 1};
    c.seed = seed;
    return c;
}

std::vector<MolecularGraph> mols_from(const std::vector<std::string>& smiles) {
    std::vector<MolecularGraph> out;
    for (const auto& s : smiles) out.push_back(parse_smiles(s));
    return out;
}

LabeledGraphs labeled(const std::vector<std::string>& smiles,
                      const std::vector<double>& values) {
    LabeledGraphs lg;
    lg.molecules = mols_from(smiles);
    lg.task_names = {"t0"};
    lg.labels = Tensor(static_cast<int>(values.size()), 1);
    lg.mask = Tensor::full(static_cast<int>(values.size()), 1, 1.0);
    for (size_t i = 0; i < values.size(); ++i) {
        lg.labels.at(static_cast<int>(i), 0) = values[i];
        lg.molecule_ids.push_back("m" + std::to_string(i));
    }
    return lg;
}

}  // namespace

TEST_CASE("config validation") {
    ModelConfig c;
    CHECK_NOTHROW(c.validate());
    c.state_dim = 10;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c.input_embedding = true;
    CHECK_NOTHROW(c.validate());
    c.k_layers = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("batching stacks molecules with offsets") {
    auto mols = mols_from({"CCO", "C=C"});
    BatchedGraphs batch = batch_graphs(mols);
    CHECK(batch.n_molecules == 2);
    CHECK(batch.n_atoms == 5);
    CHECK(batch.segment_ids == std::vector<int>{0, 0, 0, 1, 1});
    CHECK(batch.features.rows == 5);
    CHECK(batch.features.cols == kAtomFeatureDim);
    // ethanol: two single bonds, both directions
    int single = edge_type_index(BondOrder::Single);
    CHECK(batch.edges[single].first.size() == 4);
    // ethene double bond offset into the second molecule
    int dbl = edge_type_index(BondOrder::Double);
    REQUIRE(batch.edges[dbl].first.size() == 2);
    CHECK(batch.edges[dbl].first[0] == 3);
    CHECK(batch.edges[dbl].second[0] == 4);
}

TEST_CASE("forward output shape follows fc head") {
    ModelConfig c = tiny_config();
    c.fc_dims = {4, 3};
    ModelParams p = init_params(c);
    auto mols = mols_from({"CCO", "c1ccccc1", "CC(=O)O"});
    Tensor out = forward(p, c, batch_graphs(mols));
    CHECK(out.rows == 3);
    CHECK(out.cols == 3);
}

TEST_CASE("forward is invariant to atom reordering") {
    // same molecules written with different atom orders
    const std::pair<const char*, const char*> pairs[] = {
        {"CCO", "OCC"},
        {"CC(=O)O", "OC(C)=O"},
        {"c1ccccc1O", "Oc1ccccc1"},
        {"CC(C)CO", "OCC(C)C"},
        {"ClCCBr", "BrCCCl"},
    };
    ModelConfig c = tiny_config(17);
    ModelParams p = init_params(c);
    for (const auto& [a, b] : pairs) {
        CAPTURE(a);
        Tensor ya = forward(p, c, batch_graphs(mols_from({a})));
        Tensor yb = forward(p, c, batch_graphs(mols_from({b})));
        REQUIRE(ya.size() == yb.size());
        for (size_t i = 0; i < ya.v.size(); ++i)
            CHECK(ya.v[i] == doctest::Approx(yb.v[i]).epsilon(1e-12));
    }
}

TEST_CASE("batched forward equals per-molecule forward") {
    ModelConfig c = tiny_config(3);
    ModelParams p = init_params(c);
    auto mols = mols_from({"CCO", "c1ccccc1", "CC(C)(C)C"});
    Tensor batched = forward(p, c, batch_graphs(mols));
    for (size_t i = 0; i < mols.size(); ++i) {
        Tensor single = forward(p, c, batch_graphs({mols[i]}));
        CHECK(batched.at(static_cast<int>(i), 0) ==
              doctest::Approx(single.at(0, 0)).epsilon(1e-12));
    }
}

TEST_CASE("full model gradients match finite differences") {
    ModelConfig c = tiny_config(5);
    ModelParams p = init_params(c);
    auto mols = mols_from({"CCO", "C=CC"});
    BatchedGraphs batch = batch_graphs(mols);
    Tensor labels = Tensor::from_rows({{0.3}, {-0.7}});
    Tensor mask = Tensor::full(2, 1, 1.0);

    auto loss_value = [&]() {
        Tape tape(false);
        auto features = tape.leaf(batch.features);
        auto pred = forward_on_tape(tape, p, c, batch, features);
        auto loss = masked_loss(tape, pred, labels, mask);
        return tape.value(loss).v[0];
    };

    for (Parameter* q : p.all()) q->zero_grad();
    {
        Tape tape;
        auto features = tape.leaf(batch.features);
        auto pred = forward_on_tape(tape, p, c, batch, features);
        auto loss = masked_loss(tape, pred, labels, mask);
        tape.backward(loss);
    }

    const double step = 1e-5;
    std::mt19937_64 pick(99);
    for (Parameter* q : p.all()) {
        // probe a few entries per tensor to keep the test quick
        size_t n = q->value.size();
        for (int probe = 0; probe < 3; ++probe) {
            size_t i = pick() % n;
            double saved = q->value.v[i];
            q->value.v[i] = saved + step;
            double up = loss_value();
            q->value.v[i] = saved - step;
            double down = loss_value();
            q->value.v[i] = saved;
            double fd = (up - down) / (2.0 * step);
            CAPTURE(q->name);
            CHECK(q->grad.v[i] == doctest::Approx(fd).epsilon(1e-5).scale(1.0));
        }
    }
}

TEST_CASE("masked loss by hand") {
    Tape tape;
    auto pred = tape.leaf(Tensor::from_rows({{1.0, 2.0}, {3.0, 4.0}}));
    Tensor labels = Tensor::from_rows({{0.0, 2.5}, {3.0, 10.0}});
    Tensor mask = Tensor::from_rows({{1.0, 1.0}, {1.0, 0.0}});
    auto loss = masked_loss(tape, pred, labels, mask);
    // ((1)^2 + (-0.5)^2 + 0^2) / 3
    CHECK(tape.value(loss).v[0] == doctest::Approx(1.25 / 3.0));
    Tensor empty_mask(2, 2);
    auto zero_loss = masked_loss(tape, pred, labels, empty_mask);
    CHECK(tape.value(zero_loss).v[0] == 0.0);
}

TEST_CASE("adam single-step oracle") {
    Parameter p("w", Tensor::from_rows({{1.0}}));
    AdamOptimizer adam({&p}, 0.1, 0.9, 0.999, 1e-8);
    p.grad.v[0] = 2.0;
    adam.step();
    // mhat = g, vhat = g^2 after bias correction at t=1
    double expected = 1.0 - 0.1 * 2.0 / (std::sqrt(4.0) + 1e-8);
    CHECK(p.value.v[0] == doctest::Approx(expected).epsilon(1e-12));
    p.grad.v[0] = 2.0;
    adam.step();
    double m = 0.9 * (0.1 * 2.0) + 0.1 * 2.0;  // m after two identical grads, beta1=0.9
    double v = 0.999 * (0.001 * 4.0) + 0.001 * 4.0;
    double mhat = m / (1.0 - 0.81);
    double vhat = v / (1.0 - 0.999 * 0.999);
    CHECK(p.value.v[0] == doctest::Approx(expected - 0.1 * mhat / (std::sqrt(vhat) + 1e-8))
                              .epsilon(1e-10));
}

TEST_CASE("training improves a small regression task") {
    std::vector<std::string> smiles = {"C", "CC", "CCC", "CCCC", "CCCCC", "CCCCCC",
                                       "CO", "CCO", "CCCO", "CCCCO", "CN", "CCN"};
    std::vector<double> y;
    for (const auto& s : smiles) y.push_back(static_cast<double>(s.size()));
    LabeledGraphs train = labeled(smiles, y);
    LabeledGraphs valid = labeled({"CCCCCCC", "OCCO", "NCC", "CCCCCCCC"}, {7, 4, 3, 8});

    ModelConfig c = tiny_config(2);
    c.state_dim = 12;
    c.gather_dim = 12;
    c.fc_dims = {8, 1};
    c.epochs = 60;
    c.batch_size = 4;
    TrainResult r = train_multitask(train, valid, c);
    REQUIRE(r.checkpoints.size() == 1);
    CHECK(r.validation_curve.size() == 60);
    CHECK(r.checkpoints[0].best_epoch >= 0);
    CHECK(r.checkpoints[0].best_r2 > 0.2);
    // checkpointed score is the max over the curve
    double best = -1.0;
    for (const auto& epoch : r.validation_curve) best = std::max(best, epoch[0]);
    CHECK(r.checkpoints[0].best_r2 == doctest::Approx(best));

    // rescaled predictions live in label units
    std::vector<double> preds = predict(r.checkpoints[0], valid.molecules);
    REQUIRE(preds.size() == 4);
    for (double v : preds) CHECK(std::isfinite(v));
}

TEST_CASE("degenerate validation labels are rejected") {
    LabeledGraphs train = labeled({"C", "CC", "CCC"}, {1, 2, 3});
    LabeledGraphs valid = labeled({"CCCC", "CCCCC"}, {5, 5});
    ModelConfig c = tiny_config();
    c.epochs = 1;
    CHECK_THROWS_AS(train_multitask(train, valid, c), DegenerateValidation);
}

TEST_CASE("training is deterministic for a fixed seed") {
    LabeledGraphs train = labeled({"C", "CC", "CCC", "CCCC", "CO", "CCO"},
                                  {1, 2, 3, 4, 2, 3});
    LabeledGraphs valid = labeled({"CCCCC", "OCC"}, {5, 3});
    ModelConfig c = tiny_config(21);
    c.epochs = 5;
    TrainResult a = train_multitask(train, valid, c);
    TrainResult b = train_multitask(train, valid, c);
    CHECK(a.validation_curve == b.validation_curve);
    std::vector<double> pa = predict(a.checkpoints[0], valid.molecules);
    std::vector<double> pb = predict(b.checkpoints[0], valid.molecules);
    CHECK(pa == pb);

    ModelConfig c2 = tiny_config(22);
    c2.epochs = 5;
    TrainResult d = train_multitask(train, valid, c2);
    CHECK(a.validation_curve != d.validation_curve);
}

TEST_CASE("checkpoint save and load round trip") {
    LabeledGraphs train = labeled({"C", "CC", "CCC", "CCCC", "CO", "CCO"},
                                  {1, 2, 3, 4, 2, 3});
    LabeledGraphs valid = labeled({"CCCCC", "OCC"}, {5, 3});
    ModelConfig c = tiny_config(8);
    c.epochs = 3;
    TrainResult r = train_multitask(train, valid, c);
    const TaskCheckpoint& cp = r.checkpoints[0];
    save_checkpoint(cp, "cp_roundtrip.bin", "cp_roundtrip.json");
    TaskCheckpoint loaded = load_checkpoint("cp_roundtrip.bin", "cp_roundtrip.json");
    CHECK(loaded.task == cp.task);
    CHECK(loaded.label_mean == doctest::Approx(cp.label_mean));
    CHECK(loaded.label_std == doctest::Approx(cp.label_std));
    std::vector<double> a = predict(cp, valid.molecules);
    std::vector<double> b = predict(loaded, valid.molecules);
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-15));
    std::remove("cp_roundtrip.bin");
    std::remove("cp_roundtrip.json");
}

TEST_CASE("multitask masks isolate tasks") {
    // task 1 labels only exist for the last three molecules
    LabeledGraphs train;
    train.molecules = mols_from({"C", "CC", "CCC", "CCCC", "CO", "CCO"});
    train.task_names = {"a", "b"};
    train.labels = Tensor(6, 2);
    train.mask = Tensor(6, 2);
    for (int i = 0; i < 6; ++i) {
        train.labels.at(i, 0) = i;
        train.mask.at(i, 0) = 1.0;
        if (i >= 3) {
            train.labels.at(i, 1) = 10.0 - i;
            train.mask.at(i, 1) = 1.0;
        }
        train.molecule_ids.push_back("m" + std::to_string(i));
    }
    LabeledGraphs valid = train;
    ModelConfig c = tiny_config(4);
    c.fc_dims = {4, 2};
    c.epochs = 2;
    TrainResult r = train_multitask(train, valid, c);
    REQUIRE(r.checkpoints.size() == 2);
    CHECK(r.checkpoints[0].task == "a");
    CHECK(r.checkpoints[1].task == "b");
    CHECK(r.checkpoints[1].task_index == 1);
}

TEST_CASE("gcn baseline forward and training") {
    ModelConfig c = tiny_config(6);
    c.input_embedding = false;
    c.state_dim = kAtomFeatureDim;
    GcnParams p = init_gcn_params(c);
    Tensor a = gcn_forward(p, c, batch_graphs(mols_from({"CCO"})));
    Tensor b = gcn_forward(p, c, batch_graphs(mols_from({"OCC"})));
    for (size_t i = 0; i < a.v.size(); ++i)
        CHECK(a.v[i] == doctest::Approx(b.v[i]).epsilon(1e-12));

    LabeledGraphs train = labeled({"C", "CC", "CCC", "CCCC", "CO", "CCO"},
                                  {1, 2, 3, 4, 2, 3});
    LabeledGraphs valid = labeled({"CCCCC", "OCC"}, {5, 3});
    c.epochs = 5;
    GcnTrainResult r = train_multitask_gcn(train, valid, c);
    REQUIRE(r.checkpoints.size() == 1);
    CHECK(r.validation_curve.size() == 5);
    std::vector<double> preds = predict_gcn(r.checkpoints[0], valid.molecules);
    CHECK(preds.size() == 2);
}
