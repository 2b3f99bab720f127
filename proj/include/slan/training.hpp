#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "slan/ists.hpp"
#include "slan/model.hpp"

namespace slan::train {

struct AdamWConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-2;
};

struct OptimizerState {
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  std::uint64_t step = 0;
  std::size_t skipped = 0;  // steps rejected for non-finite gradients
};

OptimizerState make_optimizer_state(std::span<Tensor* const> params);

/// Decoupled weight decay (theta -= lr * wd * theta) followed by the
/// bias-corrected Adam update. Returns false, leaving params untouched and
/// bumping state.skipped, when any gradient entry is non-finite.
bool adamw_step(std::span<Tensor* const> params, std::span<const Tensor> grads,
                OptimizerState& state, double lr, const AdamWConfig& cfg);

/// Rescales grads in place so their global L2 norm is at most max_norm.
/// Returns the norm before clipping.
double clip_global_norm(std::span<Tensor> grads, double max_norm);

struct TrainConfig {
  std::size_t epochs = 20;
  std::size_t patience = 5;
  double lr = 5e-4;
  double lr_decay = 0.5;
  std::size_t batch_size = 16;
  std::size_t hidden = 64;
  std::size_t t2v_dim = 16;
  model::Aggregation aggregation = model::Aggregation::mean;
  model::ConcatMode concat = model::ConcatMode::both;
  model::StateInit state_init = model::StateInit::zeros;
  std::uint64_t seed = 2024;
  AdamWConfig adam;
  double clip_norm = 0.0;  // 0 disables clipping
  double min_improvement = 1e-6;
  std::size_t threads = 1;
};

void validate(const TrainConfig& cfg);

/// An instance prepared for the model: its schedule is built once.
struct Example {
  std::string id;
  data::SwitchSchedule schedule;
  std::optional<std::vector<double>> statics;
  int label = 0;
};

std::vector<Example> prepare(const data::Dataset& dataset);

/// Mean cross-entropy over `indices`; writes the mean gradient into `grads`
/// (overwritten). Per-instance gradients are reduced in index order, so the
/// result does not depend on `threads`.
double batch_loss_and_grad(const model::SlanParams& params, std::span<const Example> examples,
                           std::span<const std::size_t> indices, model::Gradients& grads,
                           std::size_t threads = 1);

struct EvalReport {
  double auroc = 0.0;
  double auprc = 0.0;
  std::vector<double> scores;  // P(label = 1) per instance
  std::vector<int> labels;
};

/// Deterministic forward passes over every example.
EvalReport evaluate(const model::SlanParams& params, std::span<const Example> examples,
                    std::size_t threads = 1);

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_auprc = 0.0;
  double val_auroc = 0.0;
  double lr = 0.0;
  double seconds = 0.0;
};

struct TrainResult {
  model::SlanParams best;
  std::vector<EpochRecord> trace;
  std::size_t best_epoch = 0;
  double best_val_auprc = 0.0;
  std::size_t skipped_steps = 0;
  std::size_t sampled_minority = 0;  // minority-class draws over all epochs
  std::size_t sampled_total = 0;
};

model::ModelConfig model_config(const TrainConfig& cfg, const data::DatasetInfo& info);

/// Weighted-oversampling AdamW training with plateau LR decay and early
/// stopping on validation AUPRC. Returns the best-validation checkpoint.
TrainResult train(std::span<const Example> train_set, std::span<const Example> val_set,
                  const data::DatasetInfo& info, const TrainConfig& cfg,
                  const std::function<void(const EpochRecord&)>& on_epoch = {});

void write_trace_csv(std::span<const EpochRecord> trace, const std::string& path);
std::vector<EpochRecord> read_trace_csv(const std::string& path);

}  // namespace slan::train
