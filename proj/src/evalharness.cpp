#include "admet/evalharness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

namespace admet {

Date Date::parse(const std::string& iso) {
    if (iso.size() != 10 || iso[4] != '-' || iso[7] != '-')
        throw MissingColumn("bad date '" + iso + "', expected YYYY-MM-DD");
    Date d;
    try {
        d.year = std::stoi(iso.substr(0, 4));
        d.month = std::stoi(iso.substr(5, 2));
        d.day = std::stoi(iso.substr(8, 2));
    } catch (const std::exception&) {
        throw MissingColumn("bad date '" + iso + "'");
    }
    if (d.month < 1 || d.month > 12 || d.day < 1 || d.day > 31)
        throw MissingColumn("bad date '" + iso + "'");
    return d;
}

std::string Date::to_string() const {
    char buf[11];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", year, month, day);
    return buf;
}

std::vector<std::string> AssayDataset::assays() const {
    std::set<std::string> names;
    for (const AssayRecord& r : records) names.insert(r.assay);
    return {names.begin(), names.end()};
}

namespace {

// RFC-4180: quoted fields, doubled quotes, CRLF tolerant.
std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false;
    size_t i = 0;
    auto end_field = [&] {
        row.push_back(field);
        field.clear();
    };
    auto end_row = [&] {
        end_field();
        if (!(row.size() == 1 && row[0].empty())) rows.push_back(row);
        row.clear();
    };
    while (i < text.size()) {
        char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            end_field();
        } else if (c == '\n') {
            if (!field.empty() && field.back() == '\r') field.pop_back();
            end_row();
        } else {
            field += c;
        }
        ++i;
    }
    if (!field.empty() || !row.empty()) {
        if (!field.empty() && field.back() == '\r') field.pop_back();
        end_row();
    }
    return rows;
}

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

}  // namespace

LoadResult load_dataset_text(const std::string& csv_text) {
    auto rows = parse_csv(csv_text);
    if (rows.empty()) throw EmptyDataset("no header row");
    const auto& header = rows[0];
    std::map<std::string, int> col;
    for (size_t i = 0; i < header.size(); ++i) col[header[i]] = static_cast<int>(i);
    for (const char* required : {"smiles", "assay", "value", "date"}) {
        if (!col.count(required))
            throw MissingColumn(std::string("missing column '") + required + "'");
    }
    bool has_id = col.count("molecule_id") > 0;

    LoadResult result;
    std::map<std::pair<std::string, std::string>, int> seen;  // (id, assay) -> line
    for (size_t r = 1; r < rows.size(); ++r) {
        int line = static_cast<int>(r) + 1;
        const auto& fields = rows[r];
        if (fields.size() < header.size()) {
            result.errors.push_back({line, "MissingColumn", "short row"});
            continue;
        }
        AssayRecord rec;
        rec.smiles = fields[col["smiles"]];
        rec.assay = fields[col["assay"]];
        rec.molecule_id = has_id ? fields[col["molecule_id"]] : rec.smiles;
        rec.source_line = line;
        try {
            rec.value = std::stod(fields[col["value"]]);
            if (!std::isfinite(rec.value)) throw std::invalid_argument("non-finite");
        } catch (const std::exception&) {
            result.errors.push_back({line, "BadValue", "unparseable value '" +
                                                        fields[col["value"]] + "'"});
            continue;
        }
        try {
            rec.date = Date::parse(fields[col["date"]]);
        } catch (const NamedError& e) {
            result.errors.push_back({line, e.name(), e.what()});
            continue;
        }
        std::optional<MolecularGraph> graph;
        try {
            graph = parse_smiles(rec.smiles);
        } catch (const NamedError& e) {
            result.errors.push_back({line, e.name(), e.what()});
            continue;
        }
        auto key = std::make_pair(rec.molecule_id, rec.assay);
        auto it = seen.find(key);
        if (it != seen.end()) {
            throw DuplicateRecord("duplicate (" + rec.molecule_id + ", " + rec.assay +
                                  ") at lines " + std::to_string(it->second) + " and " +
                                  std::to_string(line));
        }
        seen[key] = line;
        result.dataset.records.push_back(std::move(rec));
        result.dataset.graphs.push_back(std::move(*graph));
    }
    if (result.dataset.records.empty()) throw EmptyDataset("no valid data rows");
    return result;
}

LoadResult load_dataset(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw EmptyDataset("cannot open '" + path + "'");
    std::stringstream buffer;
    buffer << is.rdbuf();
    return load_dataset_text(buffer.str());
}

void write_dataset_csv(const AssayDataset& dataset, const std::string& path) {
    std::ofstream os(path);
    os << "molecule_id,smiles,assay,value,date\n";
    for (const AssayRecord& r : dataset.records) {
        os << csv_escape(r.molecule_id) << "," << csv_escape(r.smiles) << ","
           << csv_escape(r.assay) << "," << r.value << "," << r.date.to_string() << "\n";
    }
}

std::string split_kind_name(SplitKind kind) {
    switch (kind) {
        case SplitKind::Temporal: return "temporal";
        case SplitKind::TemporalMw: return "temporal_mw";
        case SplitKind::TemporalTanimoto: return "temporal_tanimoto";
        case SplitKind::Ablation: return "ablation";
    }
    return "?";
}

SplitKind split_kind_from_name(const std::string& name) {
    if (name == "temporal") return SplitKind::Temporal;
    if (name == "temporal_mw") return SplitKind::TemporalMw;
    if (name == "temporal_tanimoto") return SplitKind::TemporalTanimoto;
    if (name == "ablation") return SplitKind::Ablation;
    throw ConfigError("unknown split kind '" + name + "'");
}

SplitResult split(const AssayDataset& dataset, const SplitSpec& spec) {
    if (dataset.records.empty()) throw EmptyDataset("cannot split an empty dataset");
    if (!(spec.date_i < spec.date_j)) throw ConfigError("split requires date_i < date_j");

    AssayDataset train, valid, test;
    auto push = [](AssayDataset& part, const AssayDataset& src, size_t i) {
        part.records.push_back(src.records[i]);
        part.graphs.push_back(src.graphs[i]);
    };
    // boundary dates go to the later partition: date_i itself is valid,
    // date_j itself is test
    for (size_t i = 0; i < dataset.records.size(); ++i) {
        const Date& d = dataset.records[i].date;
        if (d < spec.date_i) push(train, dataset, i);
        else if (d < spec.date_j) push(valid, dataset, i);
        else push(test, dataset, i);
    }

    if (spec.kind == SplitKind::TemporalMw) {
        auto filter = [&](AssayDataset& part, bool is_test) {
            AssayDataset kept;
            for (size_t i = 0; i < part.records.size(); ++i) {
                double mw = molecular_weight(part.graphs[i]);
                bool keep = is_test ? mw >= spec.test_min_mw : mw <= spec.train_max_mw;
                if (keep) push(kept, part, i);
            }
            part = std::move(kept);
        };
        filter(train, false);
        filter(valid, false);
        filter(test, true);
    } else if (spec.kind == SplitKind::TemporalTanimoto) {
        std::vector<Fingerprint> train_fps;
        for (const MolecularGraph& g : train.graphs)
            train_fps.push_back(circular_fingerprint(g, 2));
        AssayDataset kept;
        for (size_t i = 0; i < test.records.size(); ++i) {
            Fingerprint fp = circular_fingerprint(test.graphs[i], 2);
            double max_sim = 0.0;
            for (const Fingerprint& tfp : train_fps)
                max_sim = std::max(max_sim, tanimoto(fp, tfp));
            if (max_sim < spec.tanimoto_cutoff) push(kept, test, i);
        }
        test = std::move(kept);
    } else if (spec.kind == SplitKind::Ablation) {
        // drop the chronologically latest (1 - keep_fraction) of train+valid,
        // then re-derive the validation partition as the latest fifth of what
        // remains so the shrunken history still has held-out tuning data
        struct Tagged { Date date; bool from_train; size_t index; };
        std::vector<Tagged> pool;
        for (size_t i = 0; i < train.records.size(); ++i)
            pool.push_back({train.records[i].date, true, i});
        for (size_t i = 0; i < valid.records.size(); ++i)
            pool.push_back({valid.records[i].date, false, i});
        std::stable_sort(pool.begin(), pool.end(),
                         [](const Tagged& a, const Tagged& b) { return a.date < b.date; });
        size_t n_keep = static_cast<size_t>(
            std::floor(spec.ablation_keep_fraction * pool.size() + 1e-9));
        size_t n_train = static_cast<size_t>(std::floor(0.8 * n_keep + 1e-9));
        AssayDataset new_train, new_valid;
        for (size_t k = 0; k < n_keep; ++k) {
            const Tagged& t = pool[k];
            const AssayDataset& src = t.from_train ? train : valid;
            push(k < n_train ? new_train : new_valid, src, t.index);
        }
        train = std::move(new_train);
        valid = std::move(new_valid);
    }

    if (train.records.empty()) throw EmptyPartition("train");
    if (valid.records.empty()) throw EmptyPartition("valid");
    if (test.records.empty()) throw EmptyPartition("test");
    return SplitResult{std::move(train), std::move(valid), TestPartition(std::move(test))};
}

double absolute_improvement(double pn_r2, double rf_r2) { return pn_r2 - rf_r2; }

std::optional<double> percentage_improvement(double pn_r2, double rf_r2) {
    if (rf_r2 <= 0.0) return std::nullopt;  // reported as n/a, see report docs
    return 100.0 * (pn_r2 - rf_r2) / rf_r2;
}

namespace {

double mean_of(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    size_t n = v.size();
    return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

std::pair<double, double> rho_confidence_interval(double rho, int n) {
    if (n < 4) throw InsufficientN("confidence interval needs n >= 4");
    double r = std::clamp(rho, -1.0 + 1e-12, 1.0 - 1e-12);
    double z = std::atanh(r);
    double hw = 1.96 / std::sqrt(static_cast<double>(n - 3));
    return {std::tanh(z - hw), std::tanh(z + hw)};
}

}  // namespace

void aggregate_report(EvalReport& report) {
    std::map<std::string, std::vector<double>> per_method;
    std::vector<double> abs_impr, pct_impr;
    for (const AssayReportRow& row : report.rows) {
        for (const auto& [method, r2] : row.r2) per_method[method].push_back(r2);
        if (row.absolute_improvement) abs_impr.push_back(*row.absolute_improvement);
        if (row.percentage_improvement) pct_impr.push_back(*row.percentage_improvement);
    }
    report.mean_r2.clear();
    report.median_r2.clear();
    for (const auto& [method, values] : per_method) {
        report.mean_r2[method] = mean_of(values);
        report.median_r2[method] = median_of(values);
    }
    if (!abs_impr.empty()) {
        report.mean_absolute_improvement = mean_of(abs_impr);
        report.median_absolute_improvement = median_of(abs_impr);
    }
    if (!pct_impr.empty()) {
        report.mean_percentage_improvement = mean_of(pct_impr);
        report.median_percentage_improvement = median_of(pct_impr);
    }
}

LabeledGraphs to_labeled_graphs(const AssayDataset& dataset,
                                const std::vector<std::string>& task_names) {
    LabeledGraphs out;
    out.task_names = task_names;
    std::map<std::string, int> task_index;
    for (size_t t = 0; t < task_names.size(); ++t)
        task_index[task_names[t]] = static_cast<int>(t);
    std::map<std::string, int> mol_index;
    for (size_t i = 0; i < dataset.records.size(); ++i) {
        const AssayRecord& r = dataset.records[i];
        if (!mol_index.count(r.molecule_id)) {
            mol_index[r.molecule_id] = static_cast<int>(out.molecules.size());
            out.molecules.push_back(dataset.graphs[i]);
            out.molecule_ids.push_back(r.molecule_id);
        }
    }
    int n = static_cast<int>(out.molecules.size());
    int t = static_cast<int>(task_names.size());
    out.labels = Tensor(n, t);
    out.mask = Tensor(n, t);
    for (const AssayRecord& r : dataset.records) {
        auto ti = task_index.find(r.assay);
        if (ti == task_index.end()) continue;
        int mi = mol_index[r.molecule_id];
        out.labels.at(mi, ti->second) = r.value;
        out.mask.at(mi, ti->second) = 1.0;
    }
    return out;
}

namespace {

struct MethodPredictions {
    // per test-record raw (standardized) and rescaled predictions
    std::vector<double> raw, rescaled;
};

MethodPredictions predict_rf_method(const AssayDataset& train, const AssayDataset& test,
                                    const std::string& assay, const RFConfig& config) {
    std::vector<DescriptorBag> train_bags;
    std::vector<double> y;
    for (size_t i = 0; i < train.records.size(); ++i) {
        if (train.records[i].assay != assay) continue;
        train_bags.push_back(apdp_descriptors(train.graphs[i]));
        y.push_back(train.records[i].value);
    }
    DescriptorMatrix X = build_descriptor_matrix(train_bags);
    RandomForestModel model = fit_rf(X, y, config);
    std::vector<DescriptorBag> test_bags;
    for (size_t i = 0; i < test.records.size(); ++i) {
        if (test.records[i].assay != assay) continue;
        test_bags.push_back(apdp_descriptors(test.graphs[i]));
    }
    auto rows = transform_descriptors(X.columns, test_bags);
    MethodPredictions mp;
    mp.rescaled = predict_rf(model, rows);
    mp.raw = mp.rescaled;
    return mp;
}

MethodPredictions predict_mlp_method(const AssayDataset& train, const AssayDataset& test,
                                     const std::string& assay, const MLPConfig& config) {
    std::vector<DescriptorBag> train_bags;
    std::vector<double> y;
    for (size_t i = 0; i < train.records.size(); ++i) {
        if (train.records[i].assay != assay) continue;
        train_bags.push_back(apdp_descriptors(train.graphs[i]));
        y.push_back(train.records[i].value);
    }
    DescriptorMatrix X = build_descriptor_matrix(train_bags);
    MLPModel model = fit_mlp(X, y, config);
    std::vector<DescriptorBag> test_bags;
    for (size_t i = 0; i < test.records.size(); ++i) {
        if (test.records[i].assay != assay) continue;
        test_bags.push_back(apdp_descriptors(test.graphs[i]));
    }
    auto rows = transform_descriptors(X.columns, test_bags);
    MethodPredictions mp;
    mp.rescaled = predict_mlp(model, rows);
    mp.raw = mp.rescaled;
    return mp;
}

}  // namespace

BenchmarkResult run_benchmark(const AssayDataset& dataset, const BenchmarkConfig& config) {
    SplitResult sp = split(dataset, config.split_spec);
    std::vector<std::string> tasks = sp.train.assays();

    // held-out set retrieved exactly once for the whole run
    const AssayDataset& test = sp.test.get();

    // method -> assay -> predictions aligned with that assay's test records
    std::map<std::string, std::map<std::string, MethodPredictions>> all_preds;

    for (const std::string& method : config.methods) {
        if (method == "rf_sklearn" || method == "rf_mix") {
            RFConfig rf = method == "rf_mix" ? RFConfig::mix_preset(config.seed)
                                             : RFConfig::sklearn_preset(config.seed);
            if (config.rf_config.n_trees > 0 && method == "rf_sklearn" &&
                config.rf_config.n_trees != 500)
                rf = config.rf_config;  // explicit override from the config file
            for (const std::string& assay : tasks)
                all_preds[method][assay] = predict_rf_method(sp.train, test, assay, rf);
        } else if (method == "mlp") {
            MLPConfig mlp = config.mlp_config;
            mlp.seed = config.seed;
            for (const std::string& assay : tasks)
                all_preds[method][assay] = predict_mlp_method(sp.train, test, assay, mlp);
        } else if (method == "potentialnet" || method == "potentialnet_singletask") {
            ModelConfig pn = config.pn_config;
            pn.seed = config.seed;
            auto run_tasks = [&](const std::vector<std::string>& task_set) {
                ModelConfig cfg = pn;
                cfg.fc_dims.back() = static_cast<int>(task_set.size());
                LabeledGraphs train_lg = to_labeled_graphs(sp.train, task_set);
                LabeledGraphs valid_lg = to_labeled_graphs(sp.valid, task_set);
                TrainResult tr = train_multitask(train_lg, valid_lg, cfg);
                for (const TaskCheckpoint& cp : tr.checkpoints) {
                    std::vector<MolecularGraph> mols;
                    for (size_t i = 0; i < test.records.size(); ++i)
                        if (test.records[i].assay == cp.task) mols.push_back(test.graphs[i]);
                    MethodPredictions mp;
                    mp.rescaled = predict(cp, mols);
                    for (double v : mp.rescaled)
                        mp.raw.push_back((v - cp.label_mean) / cp.label_std);
                    all_preds[method][cp.task] = std::move(mp);
                }
            };
            if (method == "potentialnet") {
                run_tasks(tasks);
            } else {
                for (const std::string& assay : tasks) run_tasks({assay});
            }
        } else if (method == "gcnn") {
            throw ConfigError("gcnn benchmark training is driven through cmd_train");
        } else {
            throw ConfigError("unknown model kind '" + method + "'");
        }
    }

    BenchmarkResult result;
    std::string rf_key, pn_key;
    for (const std::string& m : config.methods) {
        if (m.rfind("rf_", 0) == 0 && rf_key.empty()) rf_key = m;
        if (m == "potentialnet") pn_key = m;
    }

    for (const std::string& assay : tasks) {
        AssayReportRow row;
        row.assay = assay;
        std::vector<double> actual;
        std::vector<const AssayRecord*> test_records;
        for (size_t i = 0; i < test.records.size(); ++i) {
            if (test.records[i].assay == assay) {
                actual.push_back(test.records[i].value);
                test_records.push_back(&test.records[i]);
            }
        }
        for (const AssayRecord& r : sp.train.records)
            if (r.assay == assay) ++row.n_train;
        row.n_test = static_cast<int>(actual.size());

        for (const auto& [method, per_assay] : all_preds) {
            const MethodPredictions& mp = per_assay.at(assay);
            row.r2[method] = pearson_r2(mp.rescaled, actual);
            auto ci = r2_confidence_interval(row.r2[method], row.n_test);
            row.ci_low[method] = ci.first;
            row.ci_high[method] = ci.second;
            row.rho[method] = spearman_rho(mp.rescaled, actual);
            auto rci = rho_confidence_interval(row.rho[method], row.n_test);
            row.rho_ci_low[method] = rci.first;
            row.rho_ci_high[method] = rci.second;
            for (size_t k = 0; k < mp.rescaled.size(); ++k) {
                result.predictions.push_back({test_records[k]->molecule_id, assay,
                                              "test:" + method, actual[k], mp.raw[k],
                                              mp.rescaled[k]});
            }
        }
        if (!rf_key.empty() && !pn_key.empty()) {
            row.absolute_improvement = absolute_improvement(row.r2[pn_key], row.r2[rf_key]);
            row.percentage_improvement =
                percentage_improvement(row.r2[pn_key], row.r2[rf_key]);
        }
        result.report.rows.push_back(std::move(row));
    }
    aggregate_report(result.report);
    result.test_accesses = sp.test.access_count();
    return result;
}

std::string report_to_json(const EvalReport& report, const BenchmarkConfig& config) {
    nlohmann::json j;
    j["ci_method"] = report.ci_method;
    j["tanimoto_fingerprint"] = report.tanimoto_fingerprint;
    j["config"] = {{"dataset", config.dataset_path},
                   {"split", split_kind_name(config.split_spec.kind)},
                   {"date_i", config.split_spec.date_i.to_string()},
                   {"date_j", config.split_spec.date_j.to_string()},
                   {"train_max_mw", config.split_spec.train_max_mw},
                   {"test_min_mw", config.split_spec.test_min_mw},
                   {"tanimoto_cutoff", config.split_spec.tanimoto_cutoff},
                   {"ablation_keep_fraction", config.split_spec.ablation_keep_fraction},
                   {"methods", config.methods},
                   {"seed", config.seed}};
    nlohmann::json rows = nlohmann::json::array();
    for (const AssayReportRow& row : report.rows) {
        nlohmann::json r;
        r["assay"] = row.assay;
        r["n_train"] = row.n_train;
        r["n_test"] = row.n_test;
        for (const auto& [method, r2] : row.r2) {
            r["methods"][method] = {{"r2", r2},
                                    {"ci_low", row.ci_low.at(method)},
                                    {"ci_high", row.ci_high.at(method)},
                                    {"rho", row.rho.at(method)},
                                    {"rho_ci_low", row.rho_ci_low.at(method)},
                                    {"rho_ci_high", row.rho_ci_high.at(method)}};
        }
        if (row.absolute_improvement) r["absolute_improvement"] = *row.absolute_improvement;
        if (row.percentage_improvement)
            r["percentage_improvement"] = *row.percentage_improvement;
        else if (row.absolute_improvement)
            r["percentage_improvement"] = "n/a";
        rows.push_back(std::move(r));
    }
    j["rows"] = std::move(rows);
    nlohmann::json agg;
    for (const auto& [method, v] : report.mean_r2) agg["mean_r2"][method] = v;
    for (const auto& [method, v] : report.median_r2) agg["median_r2"][method] = v;
    if (report.mean_absolute_improvement)
        agg["mean_absolute_improvement"] = *report.mean_absolute_improvement;
    if (report.median_absolute_improvement)
        agg["median_absolute_improvement"] = *report.median_absolute_improvement;
    if (report.mean_percentage_improvement)
        agg["mean_percentage_improvement"] = *report.mean_percentage_improvement;
    if (report.median_percentage_improvement)
        agg["median_percentage_improvement"] = *report.median_percentage_improvement;
    j["aggregate"] = std::move(agg);
    return j.dump(2);
}

std::string report_to_csv(const EvalReport& report) {
    std::ostringstream os;
    os << "assay,method,r2,ci_low,ci_high,rho,n_train,n_test\n";
    os.precision(12);
    for (const AssayReportRow& row : report.rows) {
        for (const auto& [method, r2] : row.r2) {
            os << csv_escape(row.assay) << "," << method << "," << r2 << ","
               << row.ci_low.at(method) << "," << row.ci_high.at(method) << ","
               << row.rho.at(method) << "," << row.n_train << "," << row.n_test << "\n";
        }
    }
    return os.str();
}

std::string predictions_to_csv(const std::vector<PredictionRow>& predictions) {
    std::ostringstream os;
    os << "molecule_id,assay,split,actual,predicted_raw,predicted_rescaled\n";
    os.precision(12);
    for (const PredictionRow& p : predictions) {
        os << csv_escape(p.molecule_id) << "," << csv_escape(p.assay) << "," << p.split
           << "," << p.actual << "," << p.predicted_raw << "," << p.predicted_rescaled
           << "\n";
    }
    return os.str();
}

namespace {

Date date_from_serial(int days_since_2014) {
    using namespace std::chrono;
    sys_days base = sys_days(year{2014} / January / 1);
    year_month_day ymd(base + days{days_since_2014});
    return Date{static_cast<int>(ymd.year()), static_cast<int>(unsigned(ymd.month())),
                static_cast<int>(unsigned(ymd.day()))};
}

std::string random_smiles(std::mt19937_64& rng) {
    int target = 3 + static_cast<int>(rng() % 48);
    std::string s;
    int heavy = 0;
    bool last_was_c = false;
    bool last_aromatic = false;
    while (heavy < target) {
        double roll = static_cast<double>(rng() % 1000) / 1000.0;
        if (last_was_c && roll < 0.10) {
            static const char* branches[] = {"(C)", "(O)", "(N)", "(Cl)", "(CC)"};
            const char* b = branches[rng() % 5];
            s += b;
            heavy += b[1] == 'C' && b[2] == 'C' ? 2 : 1;
            last_was_c = false;
            last_aromatic = false;
            continue;
        }
        if (roll < 0.18 && heavy + 7 <= target) {
            // a spacer carbon keeps consecutive rings from fusing into an
            // aromatic-default bond between separate rings
            if (last_aromatic) {
                s += "C";
                ++heavy;
            }
            s += "c1ccccc1";
            heavy += 6;
            last_was_c = false;
            last_aromatic = true;
            continue;
        }
        if (roll < 0.26 && heavy + 5 <= target) {
            s += "C1CCCC1";
            heavy += 5;
            last_was_c = true;
            last_aromatic = false;
            continue;
        }
        double pick = static_cast<double>(rng() % 1000) / 1000.0;
        if (pick < 0.70) {
            s += "C";
            last_was_c = true;
        } else if (pick < 0.82) {
            s += "O";
            last_was_c = false;
        } else if (pick < 0.92) {
            s += "N";
            last_was_c = false;
        } else {
            s += "S";
            last_was_c = false;
        }
        last_aromatic = false;
        ++heavy;
    }
    // occasional charged or halogen terminal
    double tail = static_cast<double>(rng() % 1000) / 1000.0;
    if (last_was_c && tail < 0.10) s += "[O-]";
    else if (last_was_c && tail < 0.18) s += "Cl";
    else if (last_was_c && tail < 0.24) s += "[N+](C)(C)C";
    return s;
}

}  // namespace

AssayDataset synthetic_fixture(int n_molecules, uint64_t seed) {
    std::mt19937_64 rng(seed);
    AssayDataset ds;
    const char* assay_names[] = {"permeability", "solubility", "clearance"};
    int made = 0;
    while (made < n_molecules) {
        std::string smiles = random_smiles(rng);
        MolecularGraph graph = parse_smiles(smiles);  // generator emits valid grammar

        double mw = molecular_weight(graph);
        int nc = 0, no = 0, nn = 0, ns = 0, narom = 0;
        for (const Atom& a : graph.atoms()) {
            if (a.element == "C") ++nc;
            if (a.element == "O") ++no;
            if (a.element == "N") ++nn;
            if (a.element == "S") ++ns;
            if (a.aromatic) ++narom;
        }
        double jitter =
            (static_cast<double>(fnv1a64(smiles) % 1000) / 1000.0 - 0.5) * 0.2;
        double labels[3] = {
            0.05 * nc + 0.20 * narom - 0.40 * no - 0.30 * nn + jitter,
            5.0 - mw / 100.0 + 0.50 * (no + nn) + jitter,
            0.01 * mw + 0.80 * ns - 0.05 * nn + jitter,
        };

        char idbuf[16];
        std::snprintf(idbuf, sizeof(idbuf), "M%05d", made);
        Date date = date_from_serial(static_cast<int>(rng() % 1826));

        bool any = false;
        bool observe[3];
        for (int t = 0; t < 3; ++t) {
            observe[t] = rng() % 100 < 85;
            any = any || observe[t];
        }
        if (!any) observe[0] = true;
        for (int t = 0; t < 3; ++t) {
            if (!observe[t]) continue;
            AssayRecord rec;
            rec.molecule_id = idbuf;
            rec.smiles = smiles;
            rec.assay = assay_names[t];
            rec.value = labels[t];
            rec.date = date;
            ds.records.push_back(std::move(rec));
            ds.graphs.push_back(graph);
        }
        ++made;
    }
    return ds;
}

}  // namespace admet
