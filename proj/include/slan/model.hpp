#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "slan/ists.hpp"
#include "slan/tape.hpp"
#include "slan/tensor.hpp"

namespace slan::model {

enum class Aggregation : std::uint32_t { mean = 0, max = 1, attention = 2 };
/// What the prediction head sees: global summary, local summaries, or both.
enum class ConcatMode : std::uint32_t { both = 0, global_only = 1, local_only = 2 };
enum class StateInit : std::uint32_t { zeros = 0, random = 1 };

Aggregation parse_aggregation(const std::string& name);
const char* aggregation_name(Aggregation a) noexcept;
ConcatMode parse_concat(const std::string& name);
const char* concat_name(ConcatMode c) noexcept;
StateInit parse_state_init(const std::string& name);
const char* state_init_name(StateInit s) noexcept;

struct ModelConfig {
  std::size_t sensors = 0;
  std::size_t hidden = 64;
  std::size_t t2v_dim = 16;
  std::size_t static_count = 0;
  Aggregation aggregation = Aggregation::mean;
  ConcatMode concat = ConcatMode::both;
  StateInit state_init = StateInit::zeros;
  std::uint64_t seed = 2024;

  bool operator==(const ModelConfig&) const = default;
};

inline constexpr std::size_t kDecayGates = 3;  // gamma_1, gamma_2, gamma_3
inline constexpr std::size_t kCellGates = 4;   // f, i, o, candidate
enum CellGate : std::size_t { gate_f = 0, gate_i = 1, gate_o = 2, gate_c = 3 };

/// Everything owned by one sensor's cell. No sharing across sensors.
struct SensorParams {
  Tensor omega;  // (d_t2v x 1) Time2Vec frequencies
  Tensor phase;  // (d_t2v x 1) Time2Vec phases
  std::array<Tensor, kDecayGates> decay_w;  // (H x 1)
  std::array<Tensor, kDecayGates> decay_v;  // (H x d_t2v)
  std::array<Tensor, kDecayGates> decay_b;  // (H x 1)
  std::array<Tensor, kCellGates> gate_w;    // (H x 1)
  std::array<Tensor, kCellGates> gate_v;    // (H x H)
  std::array<Tensor, kCellGates> gate_b;    // (H x 1)
};

struct SlanParams {
  ModelConfig config;
  std::vector<SensorParams> sensors;
  Tensor head_w;    // (2 x concat_dim)
  Tensor head_b;    // (2 x 1)
  Tensor static_w;  // (H x d_static), empty without statics
  Tensor static_b;  // (H x 1)
  Tensor attn_w;    // (1 x H), attention aggregation only
  Tensor attn_b;    // (1 x 1)
  std::vector<Tensor> h0;  // initial local state per sensor, not trained
  Tensor c0;               // initial global summary, not trained

  std::size_t concat_dim() const;

  /// Visits every tensor in a fixed order with a stable name. Initial states
  /// are included only when `with_state` is set.
  void for_each(const std::function<void(const std::string&, Tensor&)>& f,
                bool with_state = false);
  void for_each(const std::function<void(const std::string&, const Tensor&)>& f,
                bool with_state = false) const;

  /// Trainable tensors in for_each order.
  std::vector<Tensor*> trainable();
  std::vector<std::string> trainable_names() const;
  std::size_t trainable_count() const;
};

/// Zero-shaped storage mirroring SlanParams::trainable().
using Gradients = std::vector<Tensor>;
Gradients zero_gradients(const SlanParams& params);

/// Glorot-uniform weights, zero biases, omega ~ U(0,1), phase ~ U(0, 2pi).
/// Deterministic in config.seed.
SlanParams init_params(const ModelConfig& config);

// ---------------------------------------------------------------------------
// Differentiable building blocks

struct BoundSensor {
  ad::Var omega, phase;
  std::array<ad::Var, kDecayGates> decay_w, decay_v, decay_b;
  std::array<ad::Var, kCellGates> gate_w, gate_v, gate_b;
};

/// All parameters registered on one tape, in SlanParams::trainable() order.
struct BoundParams {
  const SlanParams* params = nullptr;
  std::vector<BoundSensor> sensors;
  ad::Var head_w, head_b, static_w, static_b, attn_w, attn_b, c0;
  std::vector<ad::Var> h0;
  std::vector<ad::Var> trainable;
};

BoundParams bind(ad::Tape& tape, const SlanParams& params);
/// Same, reusing caller-registered Vars for the trainable tensors.
BoundParams bind(ad::Tape& tape, const SlanParams& params, std::span<const ad::Var> trainable);

/// sin(omega * delay + phase)
ad::Var time2vec(const BoundSensor& p, double delay);

/// tanh(W x + V t2v + b) for decay gate `gate` in [0, 3).
ad::Var decay_gate(const BoundSensor& p, std::size_t gate, double x, ad::Var t2v);

struct CellOutput {
  ad::Var h;
  ad::Var c;
};

/// One sensor-cell update. Both memory terms read the incoming global summary
/// `c_global`, never the sensor's own previous cell state:
///   h~ = g1 * h_prev
///   c  = f * c_global + i * c~ * g2
///   h  = o * tanh(f * c_global + i * c~ * g3)
CellOutput cell_step(const BoundSensor& p, double x, double delay, ad::Var h_prev,
                     ad::Var c_global);

/// Combines active cell states into the global summary. For attention, the
/// softmax-normalized weights are appended to `weights` when non-null.
ad::Var aggregate(Aggregation kind, const BoundParams& p, std::span<const ad::Var> cells,
                  std::vector<double>* weights = nullptr);

// ---------------------------------------------------------------------------
// Rollout

struct CellCall {
  std::size_t step = 0;
  std::uint32_t sensor = 0;
  double delay = 0.0;
  std::optional<std::size_t> input_state_step;  // step that produced h_prev; nullopt = initial
};

struct ConcatPart {
  enum class Kind { global, local, statics } kind = Kind::global;
  std::uint32_t sensor = 0;
  std::optional<std::size_t> step;  // producing step; nullopt = initial state

  bool operator==(const ConcatPart&) const = default;
};

struct RolloutTrace {
  std::vector<CellCall> calls;
  /// Per step, attention weights aligned with the step's active sensors.
  std::vector<std::vector<double>> attention;
  std::vector<ConcatPart> concat;
  std::vector<Tensor> final_local;  // per sensor
  Tensor final_global;
};

/// Runs the switch-scheduled rollout and returns the (2 x 1) logits node.
ad::Var forward(const BoundParams& p, const data::SwitchSchedule& schedule,
                const std::optional<std::vector<double>>& statics,
                RolloutTrace* trace = nullptr);

/// Convenience: forward on a private tape, returns logits.
Tensor predict_logits(const SlanParams& params, const data::SwitchSchedule& schedule,
                      const std::optional<std::vector<double>>& statics,
                      RolloutTrace* trace = nullptr);

/// softmax(logits)[1]
double positive_probability(const Tensor& logits);

/// Cross-entropy loss of one instance; adds d loss / d theta into `grads`.
double loss_and_grad(const SlanParams& params, const data::SwitchSchedule& schedule,
                     const std::optional<std::vector<double>>& statics, int label,
                     Gradients& grads, ad::Tape& tape);

// ---------------------------------------------------------------------------
// Checkpoints

void save_checkpoint(const SlanParams& params, const std::string& path);
SlanParams load_checkpoint(const std::string& path);

}  // namespace slan::model
