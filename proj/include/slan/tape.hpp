#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "slan/tensor.hpp"

namespace slan::ad {

class Tape;

/// Handle to a node recorded on a tape.
struct Var {
  Tape* tape = nullptr;
  std::uint32_t id = 0;
};

enum class Op : std::uint8_t {
  param,
  input,
  matmul,
  add,
  sub,
  hadamard,
  scale,
  concat_rows,
  slice,
  sigmoid,
  tanh,
  sin,
  softmax,
  cross_entropy,
  sum,
  mean_of,
  max_of,
  weighted_sum,
  custom,
};

const char* op_name(Op op) noexcept;

/// Adjoint rule for a user-defined op: accumulate into grad_inputs[k] the
/// contribution of grad_out to input k.
using CustomBackward = std::function<void(std::span<const Tensor* const> inputs,
                                          const Tensor& output,
                                          const Tensor& grad_out,
                                          std::span<Tensor* const> grad_inputs)>;

/// Append-only record of a computation. Nodes are stored in creation order, so
/// the sequence is always topologically sorted.
///
/// A tape is single-threaded and single-use: run forward, call backward() once,
/// read gradients, then clear() before recording again.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Borrowed leaf: the tensor must outlive the tape's use of it.
  Var param(const Tensor& value);
  /// Owned leaf.
  Var input(Tensor value);

  const Tensor& value(Var v) const;
  double scalar(Var v) const;

  /// Reverse sweep from a scalar root. Throws on a non-scalar root or when
  /// called a second time without clear().
  void backward(Var root);

  /// Gradient of the last backward root with respect to v (zeros if v did not
  /// contribute).
  const Tensor& grad(Var v);

  void clear();
  std::size_t size() const noexcept { return nodes_.size(); }
  Op op(Var v) const { return nodes_[v.id].op; }

 private:
  struct Node {
    Op op = Op::input;
    std::vector<std::uint32_t> inputs;
    double scalar = 0.0;
    std::size_t offset = 0;
    const Tensor* external = nullptr;
    Tensor owned;
    CustomBackward custom;
  };

  friend Var record(Tape&, Op, std::vector<std::uint32_t>, Tensor, double,
                    std::size_t, CustomBackward);

  const Tensor& node_value(std::uint32_t id) const {
    const Node& n = nodes_[id];
    return n.external ? *n.external : n.owned;
  }
  Tensor& grad_slot(std::uint32_t id);
  void backprop_node(std::uint32_t id);

  std::vector<Node> nodes_;
  std::vector<Tensor> grads_;
  bool backward_done_ = false;
};

// Tensor algebra. Shapes must match exactly (no broadcasting); a mismatch
// throws ErrorKind::invalid_argument naming both shapes. Every op checks its
// output for NaN/Inf and throws ErrorKind::numeric naming the node.
Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var hadamard(Var a, Var b);
Var scale(Var a, double k);
Var concat_rows(std::span<const Var> parts);
Var slice(Var a, std::size_t row_offset, std::size_t row_count);

Var sigmoid(Var a);
Var tanh(Var a);
Var sin(Var a);

Var softmax(Var logits);
/// -log softmax(logits)[label], stabilized by max subtraction.
Var cross_entropy(Var logits, std::size_t label);

Var sum(Var a);
Var mean_of(std::span<const Var> items);
/// Elementwise maximum; ties route the gradient to the first maximal input.
Var max_of(std::span<const Var> items);
/// sum_k weights[k] * items[k] with weights a (k x 1) column.
Var weighted_sum(Var weights, std::span<const Var> items);

Var custom(std::span<const Var> inputs, Tensor output, CustomBackward backward);

}  // namespace slan::ad
