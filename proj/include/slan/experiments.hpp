#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "slan/ists.hpp"
#include "slan/training.hpp"

namespace slan::exp {

/// Settings shared by every experiment command. Built from CLI flags (or the
/// C API option handle) layered over the built-in defaults.
struct RunOptions {
  std::string data_dir;
  std::string out_dir = ".";
  std::string checkpoint;  // eval: directory or file; importance: file
  std::vector<std::uint64_t> seeds{2024, 2025, 2026};
  train::TrainConfig train;
  data::ImputeMode impute = data::ImputeMode::none;
  double drop = 0.0;
  std::vector<double> fractions;  // study grid; empty = command default
  data::SyntheticConfig synthetic;
  std::uint64_t split_seed = 2024;
  std::size_t bench_max_steps = 20;
  bool verbose = false;
};

/// Applies `key=value` (CLI flag names without dashes) onto opts.
void apply_option(RunOptions& opts, const std::string& key, const std::string& value);

/// Threads to use: SLAN_THREADS when set, else hardware concurrency.
std::size_t default_threads();

/// A split ready for the model: drop -> train statistics -> impute -> standardize.
struct PreparedSplits {
  data::DatasetMeta meta;
  data::Dataset train, val, test;  // transformed datasets
  std::vector<train::Example> train_ex, val_ex, test_ex;
};

PreparedSplits prepare_splits(const data::Splits& raw, data::ImputeMode impute, double drop,
                              std::uint64_t drop_seed);

struct RunResult {
  std::string variant;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  double test_auprc = 0.0;
  double test_auroc = 0.0;
  double best_val_auprc = 0.0;
  std::size_t best_epoch = 0;
  std::size_t epochs_run = 0;
};

struct VariantSummary {
  std::string variant;
  std::size_t runs = 0;
  double auprc_mean = 0.0, auprc_std = 0.0;
  double auroc_mean = 0.0, auroc_std = 0.0;
};

/// Mean and sample standard deviation (n - 1; 0 for a single value).
std::pair<double, double> mean_std(const std::vector<double>& xs);
/// Half-width of the two-sided 95% Student-t interval of the mean.
double ci95_halfwidth(const std::vector<double>& xs);
/// "55.20 ± 0.65" from values in [0, 1].
std::string format_pct(double mean, double std);

std::vector<VariantSummary> summarize(const std::vector<RunResult>& runs);
void write_summary_csv(const std::vector<VariantSummary>& rows, const std::string& path);
void write_runs_csv(const std::vector<RunResult>& runs, const std::string& path);

/// Trains one seed and evaluates on test. Writes trace_<seed>.csv and
/// checkpoint_<seed>.bin into run_dir.
RunResult run_one(const PreparedSplits& data, const train::TrainConfig& cfg,
                  const std::string& variant, std::uint64_t seed, const std::string& run_dir);

// Commands. Each returns normally when every run succeeded and throws
// slan::Error otherwise (after writing whatever completed).
void cmd_generate(const RunOptions& opts);
void cmd_train(const RunOptions& opts);
void cmd_eval(const RunOptions& opts);
enum class AblationKind { aggregation, imputation, concat };
void cmd_ablate(AblationKind kind, const RunOptions& opts);
void cmd_drop_study(const RunOptions& opts);
void cmd_scale_study(const RunOptions& opts);
void cmd_importance(const RunOptions& opts);
void cmd_bench(const RunOptions& opts);

/// Dispatch by command name ("train", "ablate-agg", ...).
void run_command(const std::string& command, const RunOptions& opts);

// Importance

struct SensorImportance {
  std::uint32_t sensor = 0;
  std::string name;
  std::size_t count = 0;        // measurements in the split
  double rate_per_hour = 0.0;   // count / observed hours
  double sum_importance = 0.0;  // sum of attention weights
  double mean_importance = 0.0;
  double norm_importance = 0.0;
};

struct ImportanceReport {
  std::vector<SensorImportance> sensors;  // observed sensors only
  std::vector<std::uint32_t> unobserved;
  double observed_hours = 0.0;
};

ImportanceReport compute_importance(const model::SlanParams& params,
                                    std::span<const train::Example> examples,
                                    const data::DatasetInfo& info);

// Generated-dataset statistics (#Instances, #Sensors, #Static, avg steps,
// missing cells, imbalance %).
struct DatasetStats {
  std::size_t instances = 0;
  std::size_t sensors = 0;
  std::size_t statics = 0;
  double avg_observations = 0.0;
  std::size_t missing_cells = 0;
  double imbalance_pct = 0.0;
};

DatasetStats dataset_stats(const data::Splits& splits);

// Output helpers

/// Minimal CSV reader for the files this tool writes (no quoting).
std::vector<std::vector<std::string>> read_csv(const std::string& path);

struct Series {
  std::string name;
  std::vector<double> y;
  std::vector<double> err;  // optional symmetric error bars
};

std::string line_chart_svg(const std::string& title, const std::string& x_label,
                           const std::string& y_label, const std::vector<double>& x,
                           const std::vector<Series>& series);
std::string bar_chart_svg(const std::string& title, const std::vector<std::string>& labels,
                          const std::vector<Series>& series);

}  // namespace slan::exp
