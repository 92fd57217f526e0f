// Command-line front door: parse, featurize, split, train, benchmark,
// interpret, fixture. One command per process; exit codes are a stable
// contract: 0 success, 2 input error, 3 config error, 4 runtime error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "admet/evalharness.hpp"
#include "admet/interpret.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitInput = 2;
constexpr int kExitConfig = 3;
constexpr int kExitRuntime = 4;

json graph_summary(const admet::MolecularGraph& g) {
    int implicit_h = 0, total_h = 0;
    for (const admet::Atom& a : g.atoms()) {
        implicit_h += a.implicit_h;
        total_h += a.total_h();
    }
    return json{{"smiles", g.source_smiles()},
                {"atoms", g.atom_count()},
                {"bonds", g.bonds().size()},
                {"implicit_h", implicit_h},
                {"total_h", total_h},
                {"molecular_weight", admet::molecular_weight(g)}};
}

uint64_t resolve_seed(const json& config, bool& overridden) {
    uint64_t seed = config.value("seed", 1ull);
    overridden = false;
    if (const char* env = std::getenv("ADMET_SEED")) {
        seed = std::stoull(env);
        overridden = true;
    }
    return seed;
}

admet::SplitSpec split_spec_from_json(const json& j) {
    admet::SplitSpec spec;
    spec.kind = admet::split_kind_from_name(j.at("kind").get<std::string>());
    spec.date_i = admet::Date::parse(j.at("date_i").get<std::string>());
    spec.date_j = admet::Date::parse(j.at("date_j").get<std::string>());
    spec.train_max_mw = j.value("train_max_mw", 500.0);
    spec.test_min_mw = j.value("test_min_mw", 600.0);
    spec.tanimoto_cutoff = j.value("tanimoto_cutoff", 1.0);
    spec.ablation_keep_fraction = j.value("ablation_keep_fraction", 1.0);
    return spec;
}

admet::ModelConfig model_config_from_json(const json& j) {
    admet::ModelConfig c;
    c.k_layers = j.value("k_layers", c.k_layers);
    c.state_dim = j.value("state_dim", c.state_dim);
    c.gather_dim = j.value("gather_dim", c.gather_dim);
    c.fc_dims = j.value("fc_dims", c.fc_dims);
    c.input_embedding = j.value("input_embedding", c.input_embedding);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.adam_beta1 = j.value("adam_beta1", c.adam_beta1);
    c.adam_beta2 = j.value("adam_beta2", c.adam_beta2);
    c.epsilon = j.value("epsilon", c.epsilon);
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    return c;
}

admet::RFConfig rf_config_from_json(const json& j, const std::string& preset) {
    admet::RFConfig c = preset == "rf_mix" ? admet::RFConfig::mix_preset()
                                           : admet::RFConfig::sklearn_preset();
    c.n_trees = j.value("n_trees", c.n_trees);
    c.min_leaf = j.value("min_leaf", c.min_leaf);
    c.bootstrap = j.value("bootstrap", c.bootstrap);
    if (j.contains("mtry_mode")) {
        std::string m = j["mtry_mode"].get<std::string>();
        if (m == "sqrt") c.mtry_mode = admet::MtryMode::Sqrt;
        else if (m == "third") c.mtry_mode = admet::MtryMode::Third;
        else if (m == "all") c.mtry_mode = admet::MtryMode::All;
        else throw admet::ConfigError("unknown mtry_mode '" + m + "'");
    }
    return c;
}

json load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw admet::ConfigError("cannot open config '" + path + "'");
    json j;
    try {
        is >> j;
    } catch (const std::exception& e) {
        throw admet::ConfigError(std::string("bad config JSON: ") + e.what());
    }
    return j;
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream os(path);
    os << content;
}

void write_sidecar(const fs::path& path, const std::vector<admet::LoadError>& errors) {
    if (errors.empty()) return;
    std::ofstream os(path);
    os << "line,error,message\n";
    for (const auto& e : errors) os << e.line << "," << e.error_name << ",\"" << e.message << "\"\n";
}

int cmd_parse(const std::string& smiles, const std::string& file) {
    std::vector<std::string> inputs;
    if (!file.empty()) {
        std::ifstream is(file);
        if (!is) {
            std::cerr << "cannot open '" << file << "'\n";
            return kExitInput;
        }
        std::string line;
        while (std::getline(is, line))
            if (!line.empty()) inputs.push_back(line);
    } else {
        inputs.push_back(smiles);
    }
    bool failed = false;
    for (const std::string& s : inputs) {
        try {
            std::cout << graph_summary(admet::parse_smiles(s)).dump() << "\n";
        } catch (const admet::NamedError& e) {
            std::cout << json{{"smiles", s}, {"error", e.name()}, {"message", e.what()}}.dump()
                      << "\n";
            failed = true;
        }
    }
    return failed ? kExitInput : 0;
}

int cmd_featurize(const std::string& smiles, const std::string& kind) {
    admet::MolecularGraph g = admet::parse_smiles(smiles);
    json out;
    out["smiles"] = smiles;
    if (kind == "atoms") {
        admet::AtomFeatureMatrix m = admet::atom_features(g);
        out["schema"] = admet::atom_feature_schema();
        json rows = json::array();
        for (int i = 0; i < m.rows; ++i) {
            json row = json::array();
            for (int j = 0; j < m.cols; ++j) row.push_back(m.at(i, j));
            rows.push_back(std::move(row));
        }
        out["features"] = std::move(rows);
    } else if (kind == "ap" || kind == "dp" || kind == "apdp") {
        admet::DescriptorBag bag = kind == "ap"   ? admet::ap_descriptors(g)
                                   : kind == "dp" ? admet::dp_descriptors(g)
                                                  : admet::apdp_descriptors(g);
        out["descriptors"] = bag.counts;
    } else if (kind == "fp") {
        admet::Fingerprint fp = admet::circular_fingerprint(g, 2);
        out["bits"] = std::vector<int>(fp.bits.begin(), fp.bits.end());
    } else {
        throw admet::ConfigError("unknown featurize kind '" + kind + "'");
    }
    std::cout << out.dump(2) << "\n";
    return 0;
}

int cmd_split(const std::string& config_path) {
    json cfg = load_config(config_path);
    admet::LoadResult loaded = admet::load_dataset(cfg.at("dataset").get<std::string>());
    admet::SplitSpec spec = split_spec_from_json(cfg.at("split"));
    fs::path out_dir = cfg.at("output_dir").get<std::string>();
    fs::create_directories(out_dir);
    write_sidecar(out_dir / "load_errors.csv", loaded.errors);
    admet::SplitResult sp = admet::split(loaded.dataset, spec);
    admet::write_dataset_csv(sp.train, (out_dir / "train.csv").string());
    admet::write_dataset_csv(sp.valid, (out_dir / "valid.csv").string());
    admet::write_dataset_csv(sp.test.get(), (out_dir / "test.csv").string());
    std::cout << json{{"train", sp.train.size()},
                      {"valid", sp.valid.size()},
                      {"test", sp.test.size()}}.dump()
              << "\n";
    return 0;
}

void write_curve_csv(const fs::path& path, const std::vector<std::string>& tasks,
                     const std::vector<std::vector<double>>& curve) {
    std::ofstream os(path);
    os << "epoch,task,validation_r2\n";
    os.precision(12);
    for (size_t e = 0; e < curve.size(); ++e)
        for (size_t t = 0; t < tasks.size(); ++t)
            os << e << "," << tasks[t] << "," << curve[e][t] << "\n";
}

int cmd_train(const std::string& config_path) {
    json cfg = load_config(config_path);
    std::string model = cfg.at("model").get<std::string>();
    static const std::set<std::string> known = {"potentialnet", "potentialnet_singletask",
                                               "gcnn", "rf_sklearn", "rf_mix", "mlp"};
    if (!known.count(model))
        throw admet::ConfigError("unknown model kind '" + model + "' in field 'model'");

    bool seed_overridden = false;
    uint64_t seed = resolve_seed(cfg, seed_overridden);
    admet::LoadResult loaded = admet::load_dataset(cfg.at("dataset").get<std::string>());
    admet::SplitSpec spec = split_spec_from_json(cfg.at("split"));
    fs::path out_dir = cfg.at("output_dir").get<std::string>();
    fs::create_directories(out_dir);
    write_sidecar(out_dir / "load_errors.csv", loaded.errors);

    admet::SplitResult sp = admet::split(loaded.dataset, spec);
    std::vector<std::string> tasks = sp.train.assays();

    json manifest;
    manifest["model"] = model;
    manifest["seed"] = seed;
    manifest["seed_from_env"] = seed_overridden;
    manifest["config"] = cfg;
    manifest["tasks"] = tasks;

    if (model == "potentialnet" || model == "potentialnet_singletask" || model == "gcnn") {
        admet::ModelConfig mc = model_config_from_json(cfg.value("potentialnet", json::object()));
        mc.seed = seed;
        auto train_tasks = [&](const std::vector<std::string>& task_set,
                               const std::string& suffix) {
            admet::ModelConfig c = mc;
            c.fc_dims.back() = static_cast<int>(task_set.size());
            admet::LabeledGraphs train_lg = admet::to_labeled_graphs(sp.train, task_set);
            admet::LabeledGraphs valid_lg = admet::to_labeled_graphs(sp.valid, task_set);
            if (model == "gcnn") {
                admet::GcnTrainResult tr = admet::train_multitask_gcn(train_lg, valid_lg, c);
                write_curve_csv(out_dir / ("curve" + suffix + ".csv"), task_set,
                                tr.validation_curve);
                for (const admet::GcnCheckpoint& cp : tr.checkpoints) {
                    admet::save_parameters((out_dir / (cp.task + suffix + ".params")).string(),
                                           cp.params.all(), cp.schema_hash);
                    manifest["checkpoints"][cp.task] = {{"best_epoch", cp.best_epoch},
                                                        {"best_r2", cp.best_r2}};
                }
            } else {
                admet::TrainResult tr = admet::train_multitask(train_lg, valid_lg, c);
                write_curve_csv(out_dir / ("curve" + suffix + ".csv"), task_set,
                                tr.validation_curve);
                for (const admet::TaskCheckpoint& cp : tr.checkpoints) {
                    admet::save_checkpoint(
                        cp, (out_dir / (cp.task + suffix + ".params")).string(),
                        (out_dir / (cp.task + suffix + ".json")).string());
                    manifest["checkpoints"][cp.task] = {{"best_epoch", cp.best_epoch},
                                                        {"best_r2", cp.best_r2}};
                }
            }
        };
        if (model == "potentialnet_singletask") {
            for (const std::string& task : tasks) train_tasks({task}, ".single");
        } else {
            train_tasks(tasks, "");
        }
    } else if (model == "rf_sklearn" || model == "rf_mix") {
        admet::RFConfig rf = rf_config_from_json(cfg.value("rf", json::object()), model);
        rf.seed = seed;
        for (const std::string& task : tasks) {
            std::vector<admet::DescriptorBag> bags;
            std::vector<double> y;
            for (size_t i = 0; i < sp.train.records.size(); ++i) {
                if (sp.train.records[i].assay != task) continue;
                bags.push_back(admet::apdp_descriptors(sp.train.graphs[i]));
                y.push_back(sp.train.records[i].value);
            }
            admet::DescriptorMatrix X = admet::build_descriptor_matrix(bags);
            admet::RandomForestModel m = admet::fit_rf(X, y, rf);
            write_file(out_dir / (task + ".rf.json"), admet::rf_to_json(m));
            manifest["checkpoints"][task] = {{"n_trees", rf.n_trees}};
        }
    } else {  // mlp
        admet::MLPConfig mlp;
        const json& mj = cfg.value("mlp", json::object());
        mlp.hidden = mj.value("hidden", mlp.hidden);
        mlp.dropout = mj.value("dropout", mlp.dropout);
        mlp.epochs = mj.value("epochs", mlp.epochs);
        mlp.batch_size = mj.value("batch_size", mlp.batch_size);
        mlp.learning_rate = mj.value("learning_rate", mlp.learning_rate);
        mlp.seed = seed;
        for (const std::string& task : tasks) {
            std::vector<admet::DescriptorBag> bags;
            std::vector<double> y;
            for (size_t i = 0; i < sp.train.records.size(); ++i) {
                if (sp.train.records[i].assay != task) continue;
                bags.push_back(admet::apdp_descriptors(sp.train.graphs[i]));
                y.push_back(sp.train.records[i].value);
            }
            admet::DescriptorMatrix X = admet::build_descriptor_matrix(bags);
            admet::MLPModel m = admet::fit_mlp(X, y, mlp);
            std::vector<const admet::Parameter*> params;
            for (const auto& p : m.weights) params.push_back(&p);
            for (const auto& p : m.biases) params.push_back(&p);
            admet::save_parameters((out_dir / (task + ".mlp.params")).string(), params, 0);
            manifest["checkpoints"][task] = {{"epochs", mlp.epochs}};
        }
    }
    write_file(out_dir / "train_manifest.json", manifest.dump(2) + "\n");
    std::cout << manifest.dump(2) << "\n";
    return 0;
}

int cmd_benchmark(const std::string& config_path) {
    json cfg = load_config(config_path);
    bool seed_overridden = false;
    uint64_t seed = resolve_seed(cfg, seed_overridden);

    admet::BenchmarkConfig bc;
    bc.dataset_path = cfg.at("dataset").get<std::string>();
    bc.split_spec = split_spec_from_json(cfg.at("split"));
    bc.methods = cfg.value("methods", bc.methods);
    bc.pn_config = model_config_from_json(cfg.value("potentialnet", json::object()));
    bc.rf_config = rf_config_from_json(cfg.value("rf", json::object()), "rf_sklearn");
    bc.seed = seed;
    bc.output_dir = cfg.at("output_dir").get<std::string>();
    static const std::set<std::string> known = {"potentialnet", "potentialnet_singletask",
                                               "rf_sklearn", "rf_mix", "mlp"};
    for (const std::string& m : bc.methods)
        if (!known.count(m))
            throw admet::ConfigError("unknown model kind '" + m + "' in field 'methods'");

    admet::LoadResult loaded = admet::load_dataset(bc.dataset_path);
    fs::path out_dir = bc.output_dir;
    fs::create_directories(out_dir);
    write_sidecar(out_dir / "load_errors.csv", loaded.errors);

    admet::BenchmarkResult result = admet::run_benchmark(loaded.dataset, bc);
    json report = json::parse(admet::report_to_json(result.report, bc));
    report["config"]["seed_from_env"] = seed_overridden;
    report["test_set_accesses"] = result.test_accesses;
    write_file(out_dir / "report.json", report.dump(2) + "\n");
    write_file(out_dir / "report.csv", admet::report_to_csv(result.report));
    write_file(out_dir / "predictions.csv", admet::predictions_to_csv(result.predictions));
    std::cout << report.dump(2) << "\n";
    return 0;
}

int cmd_interpret(const std::string& checkpoint_prefix, const std::string& smiles,
                  int subgraph_size, bool greedy) {
    admet::TaskCheckpoint cp =
        admet::load_checkpoint(checkpoint_prefix + ".params", checkpoint_prefix + ".json");
    admet::MolecularGraph g = admet::parse_smiles(smiles);
    admet::AtomImportance imp = admet::atom_importance(cp, g);
    admet::SubgraphResult sub = greedy
                                    ? admet::top_substructure_greedy(imp, g, subgraph_size)
                                    : admet::top_substructure(imp, g, subgraph_size);
    std::cout << admet::importance_to_json(imp, sub, g) << "\n";
    return 0;
}

int cmd_fixture(int n, uint64_t seed, const std::string& out_path) {
    admet::AssayDataset ds = admet::synthetic_fixture(n, seed);
    admet::write_dataset_csv(ds, out_path);
    std::cout << json{{"molecules", n}, {"records", ds.size()}, {"path", out_path}}.dump()
              << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Molecular property prediction toolkit"};
    app.require_subcommand(1);

    std::string smiles, file, kind = "atoms", config_path, checkpoint_prefix, out_path;
    int subgraph_size = 1, fixture_n = 120;
    uint64_t fixture_seed = 7;
    bool greedy = false;

    auto* parse_cmd = app.add_subcommand("parse", "Parse SMILES and print a graph summary");
    parse_cmd->add_option("smiles", smiles, "SMILES string");
    parse_cmd->add_option("--file", file, "file with one SMILES per line");

    auto* feat_cmd = app.add_subcommand("featurize", "Print features for one molecule");
    feat_cmd->add_option("smiles", smiles, "SMILES string")->required();
    feat_cmd->add_option("--kind", kind, "atoms|ap|dp|apdp|fp");

    auto* split_cmd = app.add_subcommand("split", "Emit train/valid/test partition CSVs");
    split_cmd->add_option("--config", config_path, "JSON config")->required();

    auto* train_cmd = app.add_subcommand("train", "Train a model per config");
    train_cmd->add_option("--config", config_path, "JSON config")->required();

    auto* bench_cmd = app.add_subcommand("benchmark", "Run the full benchmark harness");
    bench_cmd->add_option("--config", config_path, "JSON config")->required();

    auto* interp_cmd = app.add_subcommand("interpret", "Atom importances and top substructure");
    interp_cmd->add_option("--checkpoint", checkpoint_prefix, "checkpoint path prefix")
        ->required();
    interp_cmd->add_option("--smiles", smiles, "molecule")->required();
    interp_cmd->add_option("-S,--size", subgraph_size, "substructure size")->required();
    interp_cmd->add_flag("--greedy", greedy, "use greedy search");

    auto* fixture_cmd = app.add_subcommand("fixture", "Write the synthetic fixture dataset");
    fixture_cmd->add_option("--n", fixture_n, "number of molecules");
    fixture_cmd->add_option("--seed", fixture_seed, "generator seed");
    fixture_cmd->add_option("--out", out_path, "output CSV path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (parse_cmd->parsed()) {
            if (smiles.empty() && file.empty()) {
                std::cerr << "parse: provide a SMILES or --file\n";
                return kExitInput;
            }
            return cmd_parse(smiles, file);
        }
        if (feat_cmd->parsed()) return cmd_featurize(smiles, kind);
        if (split_cmd->parsed()) return cmd_split(config_path);
        if (train_cmd->parsed()) return cmd_train(config_path);
        if (bench_cmd->parsed()) return cmd_benchmark(config_path);
        if (interp_cmd->parsed())
            return cmd_interpret(checkpoint_prefix, smiles, subgraph_size, greedy);
        if (fixture_cmd->parsed()) return cmd_fixture(fixture_n, fixture_seed, out_path);
    } catch (const admet::ConfigError& e) {
        std::cerr << e.what() << "\n";
        return kExitConfig;
    } catch (const admet::UnclosedRing& e) {
        std::cerr << e.what() << "\n";
        return kExitInput;
    } catch (const admet::UnbalancedParen& e) {
        std::cerr << e.what() << "\n";
        return kExitInput;
    } catch (const admet::UnknownAtomSymbol& e) {
        std::cerr << e.what() << "\n";
        return kExitInput;
    } catch (const admet::ValenceViolation& e) {
        std::cerr << e.what() << "\n";
        return kExitInput;
    } catch (const admet::MultiComponentUnsupported& e) {
        std::cerr << e.what() << "\n";
        return kExitInput;
    } catch (const admet::SizeOutOfRange& e) {
        std::cerr << e.what() << "\n";
        return kExitInput;
    } catch (const admet::ExactModeLimitExceeded& e) {
        std::cerr << e.what() << "\n";
        return kExitInput;
    } catch (const admet::NamedError& e) {
        std::cerr << e.what() << "\n";
        return kExitRuntime;
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return kExitRuntime;
    }
    return 0;
}
