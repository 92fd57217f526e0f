#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "admet/baselines.hpp"
#include "admet/metrics.hpp"
#include "admet/molgraph.hpp"
#include "admet/potentialnet.hpp"

namespace admet {

struct Date {
    int year = 1970, month = 1, day = 1;

    static Date parse(const std::string& iso);  // YYYY-MM-DD
    std::string to_string() const;
    int key() const { return year * 10000 + month * 100 + day; }
    auto operator<=>(const Date&) const = default;
};

struct AssayRecord {
    std::string molecule_id;
    std::string smiles;
    std::string assay;
    double value = 0.0;
    Date date;
    int source_line = 0;
};

struct AssayDataset {
    std::vector<AssayRecord> records;
    std::vector<MolecularGraph> graphs;  // parallel to records

    size_t size() const { return records.size(); }
    std::vector<std::string> assays() const;  // sorted unique assay names
};

struct LoadError {
    int line = 0;
    std::string error_name;
    std::string message;
};

struct LoadResult {
    AssayDataset dataset;
    std::vector<LoadError> errors;  // rejected rows, for the sidecar report
};

// CSV columns: optional molecule_id, then smiles,assay,value,date (RFC-4180).
LoadResult load_dataset(const std::string& path);
LoadResult load_dataset_text(const std::string& csv_text);
void write_dataset_csv(const AssayDataset& dataset, const std::string& path);

enum class SplitKind { Temporal, TemporalMw, TemporalTanimoto, Ablation };

std::string split_kind_name(SplitKind kind);
SplitKind split_kind_from_name(const std::string& name);

struct SplitSpec {
    SplitKind kind = SplitKind::Temporal;
    Date date_i, date_j;
    double train_max_mw = 500.0;
    double test_min_mw = 600.0;
    double tanimoto_cutoff = 1.0;
    double ablation_keep_fraction = 1.0;
};

// Test partition guarded by an access counter so a benchmark run can prove
// it touched the held-out set exactly once.
class TestPartition {
public:
    explicit TestPartition(AssayDataset data) : data_(std::move(data)) {}
    const AssayDataset& get() const {
        ++access_count_;
        return data_;
    }
    int access_count() const { return access_count_; }
    size_t size() const { return data_.size(); }  // does not count as access

private:
    AssayDataset data_;
    mutable int access_count_ = 0;
};

struct SplitResult {
    AssayDataset train;
    AssayDataset valid;
    TestPartition test;
};

SplitResult split(const AssayDataset& dataset, const SplitSpec& spec);

struct AssayReportRow {
    std::string assay;
    int n_train = 0;
    int n_test = 0;
    std::map<std::string, double> r2;       // method -> R^2
    std::map<std::string, double> ci_low, ci_high;
    std::map<std::string, double> rho;
    std::map<std::string, double> rho_ci_low, rho_ci_high;
    std::optional<double> absolute_improvement;    // PN - RF
    std::optional<double> percentage_improvement;  // n/a when RF R^2 <= 0
};

struct EvalReport {
    std::vector<AssayReportRow> rows;
    std::map<std::string, double> mean_r2, median_r2;  // per method
    std::optional<double> mean_absolute_improvement, median_absolute_improvement;
    std::optional<double> mean_percentage_improvement, median_percentage_improvement;
    std::string ci_method = "fisher-z";
    std::string tanimoto_fingerprint = "circular r=2, 2048 bits";
};

// Improvement arithmetic shared with the report generator.
double absolute_improvement(double pn_r2, double rf_r2);
std::optional<double> percentage_improvement(double pn_r2, double rf_r2);

struct PredictionRow {
    std::string molecule_id, assay, split;
    double actual = 0.0, predicted_raw = 0.0, predicted_rescaled = 0.0;
};

struct BenchmarkConfig {
    std::string dataset_path;
    SplitSpec split_spec;
    std::vector<std::string> methods = {"rf_sklearn", "potentialnet"};
    ModelConfig pn_config;
    RFConfig rf_config = RFConfig::sklearn_preset();
    MLPConfig mlp_config;
    uint64_t seed = 1;
    std::string output_dir;
};

struct BenchmarkResult {
    EvalReport report;
    std::vector<PredictionRow> predictions;
    int test_accesses = 0;
};

BenchmarkResult run_benchmark(const AssayDataset& dataset, const BenchmarkConfig& config);

std::string report_to_json(const EvalReport& report, const BenchmarkConfig& config);
std::string report_to_csv(const EvalReport& report);
std::string predictions_to_csv(const std::vector<PredictionRow>& predictions);

// Aggregates a report from finished per-assay rows (used by tests to recheck
// the arithmetic independently of run_benchmark).
void aggregate_report(EvalReport& report);

// Deterministic synthetic dataset: generated molecules spanning the 500/600
// g/mol thresholds, synthetic dates, labels from closed-form descriptor
// functions, three assays with missing cells.
AssayDataset synthetic_fixture(int n_molecules, uint64_t seed);

// Multitask view of a record set: unique molecules x assays with mask.
LabeledGraphs to_labeled_graphs(const AssayDataset& dataset,
                                const std::vector<std::string>& task_names);

}  // namespace admet
