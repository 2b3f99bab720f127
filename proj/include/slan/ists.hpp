#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace slan::data {

/// Events closer than this (hours) belong to the same step.
inline constexpr double kTimeTolerance = 1e-9;

struct Observation {
  double time = 0.0;  // hours
  std::uint32_t sensor = 0;
  double value = 0.0;

  bool operator==(const Observation&) const = default;
};

/// One record: sparse timestamped sensor events plus optional statics.
struct Instance {
  std::string id;
  std::vector<Observation> events;  // sorted by (time, sensor)
  std::optional<std::vector<double>> statics;
  int label = 0;

  bool operator==(const Instance&) const = default;
};

struct DatasetInfo {
  std::size_t sensor_count = 0;
  std::size_t static_count = 0;
  std::vector<std::string> sensor_names;

  bool operator==(const DatasetInfo&) const = default;
};

struct Dataset {
  DatasetInfo info;
  std::vector<Instance> instances;

  std::size_t size() const noexcept { return instances.size(); }
  bool operator==(const Dataset&) const = default;
};

struct Splits {
  Dataset train;
  Dataset val;
  Dataset test;
};

/// Throws ErrorKind::invalid_argument describing the first violated invariant.
void validate(const Instance& instance, const DatasetInfo& info);

// ---------------------------------------------------------------------------
// Switch schedule

struct Activation {
  std::uint32_t sensor = 0;
  double value = 0.0;
  double delay = 0.0;  // time since the sensor's previous observation, 0 at first

  bool operator==(const Activation&) const = default;
};

struct Step {
  double time = 0.0;
  std::vector<Activation> active;  // nonempty, ascending sensor

  bool operator==(const Step&) const = default;
};

/// Per-instance execution plan: which sensor cells fire at each distinct
/// timestamp, with their delays.
struct SwitchSchedule {
  std::size_t sensor_count = 0;
  std::vector<Step> steps;
  /// Index of each sensor's final observed step; nullopt if never observed.
  std::vector<std::optional<std::size_t>> last_seen;

  bool operator==(const SwitchSchedule&) const = default;
};

SwitchSchedule build_schedule(const Instance& instance, std::size_t sensor_count);

/// Canonical byte encoding, used to compare schedules exactly.
std::string encode_schedule(const SwitchSchedule& schedule);

// ---------------------------------------------------------------------------
// Statistics and transforms

struct DatasetMeta {
  std::size_t sensor_count = 0;
  std::size_t static_count = 0;
  std::vector<double> sensor_mean;
  std::vector<double> sensor_std;
  std::vector<double> static_mean;
  std::vector<double> static_std;
  std::size_t negatives = 0;
  std::size_t positives = 0;
};

/// Train-split statistics. Sensors (or statics) that are constant or never
/// observed get std 1 so standardization maps them to 0; never-observed
/// sensors get mean 0.
DatasetMeta compute_meta(const Dataset& train);

Dataset standardize(const Dataset& dataset, const DatasetMeta& meta);
Dataset destandardize(const Dataset& dataset, const DatasetMeta& meta);

enum class ImputeMode { none, ffill, mean, interpolation };

ImputeMode parse_impute_mode(const std::string& name);
const char* impute_mode_name(ImputeMode mode) noexcept;

/// Densify: every distinct timestamp gets a value for every sensor.
/// ImputeMode::none returns the instance unchanged.
Instance impute(const Instance& instance, ImputeMode mode, const DatasetMeta& meta);
Dataset impute(const Dataset& dataset, ImputeMode mode, const DatasetMeta& meta);

/// Removes round(fraction * n) uniformly chosen events. If that would leave
/// nothing, one uniformly chosen event survives and `*warnings` is incremented.
Instance drop_observations(const Instance& instance, double fraction, std::uint64_t seed,
                           std::size_t* warnings = nullptr);
Dataset drop_observations(const Dataset& dataset, double fraction, std::uint64_t seed,
                          std::size_t* warnings = nullptr);

/// First ceil(fraction * n) instances.
Dataset prefix(const Dataset& dataset, double fraction);

/// Deterministic 70/15/15 split after a seeded shuffle.
Splits split_dataset(const Dataset& dataset, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Sampling

/// Infinite stream of instance indices. Each draw picks a class with
/// probability proportional to the inverse class frequency (so 1/2 each for two
/// classes), then an instance uniformly within that class.
class WeightedSampler {
 public:
  WeightedSampler(const std::vector<int>& labels, std::uint64_t seed);

  std::size_t next();

 private:
  std::vector<std::size_t> by_class_[2];
  double class1_probability_ = 0.5;
  std::mt19937_64 rng_;
};

// ---------------------------------------------------------------------------
// Synthetic data

struct SyntheticConfig {
  std::size_t n = 1000;
  std::size_t sensors = 5;
  std::size_t max_steps = 50;
  double missing_rate = 0.3;
  /// Observation probability of informative sensors depends on the latent value.
  bool informative = false;
  /// Number of leading sensors whose trajectories depend on the class.
  std::size_t informative_sensors = 0;  // 0 => ceil(sensors / 2)
  double drift = 1.0;                   // class-1 drift, class 0 gets -drift
  double noise = 0.0;                   // stddev of additive latent noise
  double missingness_strength = 2.0;    // slope of the value-dependent observation model
  double positive_rate = 0.5;
  std::size_t static_count = 0;
  std::uint64_t seed = 2024;
};

void validate(const SyntheticConfig& config);
Dataset generate_synthetic(const SyntheticConfig& config);

// ---------------------------------------------------------------------------
// I/O

Dataset read_jsonl(const std::string& path, const DatasetInfo& info);
void write_jsonl(const Dataset& dataset, const std::string& path);

DatasetInfo read_meta_json(const std::string& path);
void write_meta_json(const DatasetInfo& info, const std::string& path);

/// Directory layout: meta.json, train.jsonl, val.jsonl, test.jsonl.
Splits read_split_dir(const std::string& dir);
void write_split_dir(const Splits& splits, const std::string& dir);

}  // namespace slan::data
