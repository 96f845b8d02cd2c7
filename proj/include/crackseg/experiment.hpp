#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "crackseg/augment.hpp"
#include "crackseg/inference.hpp"
#include "crackseg/metrics.hpp"
#include "crackseg/network.hpp"
#include "crackseg/training.hpp"

namespace crackseg {

/// How test-time augmentation is chosen for each test set.
enum class TtaChoice {
    off,
    fixed,  // the plan in ExperimentConfig::tta_plan for every test set
    automatic,  // by test set: DeepCrack-DB fixed sizes, CRKWH100/Stone331 wide factors, else CFD factors
};

/// JSON schema (every key except train_manifest and test_manifests is optional):
/// {
///   "name": "cfd-baseline",
///   "train_manifest": "manifests/cfd.tsv",
///   "test_manifests": ["manifests/cfd.tsv", "manifests/stone331.tsv"],
///   "runs": 10, "seeds": [1, 2, ...],
///   "model": {...}, "augment": {...}, "training": {...}, "loss": {...},
///   "tta": "off" | "auto" | {"mode": ..., "factors": [...], "sizes": [[w, h], ...], "aggregation": ...},
///   "also_without_tta": true,
///   "pretrained": "weights.crkw",
///   "distance_metric": "euclidean",
///   "save_predictions": true
/// }
struct ExperimentConfig {
    std::string name = "experiment";
    std::filesystem::path train_manifest;
    std::vector<std::filesystem::path> test_manifests;
    int runs = 10;
    std::vector<std::uint64_t> seeds;  // empty means 1..runs
    ModelConfig model;
    AugmentPolicy augment;
    TrainConfig training;
    LossConfig loss;
    TtaChoice tta = TtaChoice::off;
    TtaPlan tta_plan;
    bool also_without_tta = true;
    std::optional<std::filesystem::path> pretrained;
    DistanceMetric distance_metric = DistanceMetric::euclidean;
    bool save_predictions = true;

    /// Seeds in use: `seeds` or 1..runs.
    std::vector<std::uint64_t> resolved_seeds() const;
    void validate() const;

    std::string to_json() const;
    static ExperimentConfig from_json(const std::string& text);
    static ExperimentConfig load(const std::filesystem::path& path);
    /// 16 hex digits of the FNV-1a hash of the canonical JSON form.
    std::string hash() const;
};

struct MeanStd {
    double mean = 0;
    double stdev = 0;  // sample standard deviation; NaN for a single value
    std::size_t n = 0;
};

/// Mean and sample (n - 1) standard deviation. Throws on an empty series.
MeanStd mean_std(const std::vector<double>& values);

struct SummaryRow {
    std::string train_set;
    std::string test_set;
    bool tta = false;
    std::vector<std::uint64_t> seeds;
    std::vector<MetricReport> runs;
    MeanStd ois, ods, cods;
};

struct RunSummary {
    std::string config_hash;
    std::vector<SummaryRow> rows;
};

/// Fills the MeanStd fields of every row from its per-run reports.
void summarize(RunSummary& summary);

struct ExperimentOptions {
    /// Called with progress lines; may be empty.
    std::function<void(const std::string&)> log;
};

/// For every seed: initialize, train on the train manifest, predict every test manifest's test
/// split (with and/or without TTA) and evaluate with that manifest's tolerance and regions.
/// Artifacts go to `out_root/<config hash>/seed-<n>/`; a seed whose `run.json` exists is
/// loaded instead of recomputed. A failing seed aborts with an Error naming it.
RunSummary run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_root,
                          const ExperimentOptions& options = {});

/// Rebuilds the summary from the per-run reports below `dir` (an experiment directory or
/// a results root holding several).
RunSummary load_summary(const std::filesystem::path& dir);

enum class ReportFormat { markdown_table, csv, json };
ReportFormat parse_report_format(const std::string& s);

/// One row per (train set, test set, TTA state). Markdown shows percentages as
/// "mean±std" with 2 decimals; CSV and JSON carry full-precision fractions.
std::string report(const RunSummary& summary, ReportFormat format);

/// Parses the CSV form back into rows (per-run reports are not part of the CSV).
std::vector<SummaryRow> parse_summary_csv(const std::string& text);

/// "97.20±0.20" from fractions 0.972 and 0.002; "n/a" for an undefined deviation.
std::string format_mean_std(const MeanStd& v, double scale = 100.0);

}  // namespace crackseg
