#include "slan/tape.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "slan/error.hpp"

namespace slan::ad {

const char* op_name(Op op) noexcept {
  switch (op) {
    case Op::param: return "param";
    case Op::input: return "input";
    case Op::matmul: return "matmul";
    case Op::add: return "add";
    case Op::sub: return "sub";
    case Op::hadamard: return "hadamard";
    case Op::scale: return "scale";
    case Op::concat_rows: return "concat_rows";
    case Op::slice: return "slice";
    case Op::sigmoid: return "sigmoid";
    case Op::tanh: return "tanh";
    case Op::sin: return "sin";
    case Op::softmax: return "softmax";
    case Op::cross_entropy: return "cross_entropy";
    case Op::sum: return "sum";
    case Op::mean_of: return "mean_of";
    case Op::max_of: return "max_of";
    case Op::weighted_sum: return "weighted_sum";
    case Op::custom: return "custom";
  }
  return "?";
}

Var record(Tape& tape, Op op, std::vector<std::uint32_t> inputs, Tensor value,
           double scalar, std::size_t offset, CustomBackward custom_fn) {
  const auto id = static_cast<std::uint32_t>(tape.nodes_.size());
  for (double x : value.data) {
    if (!std::isfinite(x)) {
      fail(ErrorKind::numeric, std::string("non-finite output from ") +
                                   op_name(op) + " node #" + std::to_string(id));
    }
  }
  Tape::Node n;
  n.op = op;
  n.inputs = std::move(inputs);
  n.scalar = scalar;
  n.offset = offset;
  n.owned = std::move(value);
  n.custom = std::move(custom_fn);
  tape.nodes_.push_back(std::move(n));
  return Var{&tape, id};
}

namespace {

Tape& tape_of(Var a) {
  if (a.tape == nullptr) fail(ErrorKind::invalid_argument, "unbound Var");
  return *a.tape;
}

Tape& tape_of(Var a, Var b) {
  if (a.tape != b.tape || a.tape == nullptr) {
    fail(ErrorKind::invalid_argument, "operands recorded on different tapes");
  }
  return *a.tape;
}

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) {
    fail(ErrorKind::invalid_argument, std::string(op) + ": shape mismatch " +
                                          a.shape_str() + " vs " + b.shape_str());
  }
}

// C += A * B
void gemm_acc(const Tensor& a, const Tensor& b, Tensor& c) {
  const std::size_t n = a.rows, k = a.cols, m = b.cols;
  if (m == 1) {
    for (std::size_t i = 0; i < n; ++i) {
      const double* arow = &a.data[i * k];
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += arow[p] * b.data[p];
      c.data[i] += acc;
    }
    return;
  }
  for (std::size_t i = 0; i < n; ++i) {
    double* crow = &c.data[i * m];
    const double* arow = &a.data[i * k];
    for (std::size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      if (av == 0.0) continue;
      const double* brow = &b.data[p * m];
      for (std::size_t j = 0; j < m; ++j) crow[j] += av * brow[j];
    }
  }
}

std::vector<std::uint32_t> ids_of(std::span<const Var> vars) {
  std::vector<std::uint32_t> ids;
  ids.reserve(vars.size());
  for (const Var& v : vars) ids.push_back(v.id);
  return ids;
}

Tape& common_tape(std::span<const Var> vars, const char* op) {
  if (vars.empty()) {
    fail(ErrorKind::invalid_argument, std::string(op) + ": empty operand list");
  }
  Tape* t = vars.front().tape;
  for (const Var& v : vars) {
    if (v.tape != t || t == nullptr) {
      fail(ErrorKind::invalid_argument, std::string(op) +
                                            ": operands recorded on different tapes");
    }
  }
  return *t;
}

template <class F>
Tensor map(const Tensor& a, F f) {
  Tensor out(a.rows, a.cols);
  for (std::size_t i = 0; i < a.size(); ++i) out.data[i] = f(a.data[i]);
  return out;
}

}  // namespace

Var Tape::param(const Tensor& value) {
  const auto id = static_cast<std::uint32_t>(nodes_.size());
  Node n;
  n.op = Op::param;
  n.external = &value;
  nodes_.push_back(std::move(n));
  return Var{this, id};
}

Var Tape::input(Tensor value) {
  return record(*this, Op::input, {}, std::move(value), 0.0, 0, {});
}

const Tensor& Tape::value(Var v) const { return node_value(v.id); }

double Tape::scalar(Var v) const {
  const Tensor& t = node_value(v.id);
  if (!t.is_scalar()) {
    fail(ErrorKind::invalid_argument, "scalar(): node has shape " + t.shape_str());
  }
  return t.data[0];
}

void Tape::clear() {
  nodes_.clear();
  grads_.clear();
  backward_done_ = false;
}

Tensor& Tape::grad_slot(std::uint32_t id) {
  Tensor& g = grads_[id];
  if (g.data.empty()) {
    const Tensor& v = node_value(id);
    g = Tensor(v.rows, v.cols);
  }
  return g;
}

const Tensor& Tape::grad(Var v) {
  if (!backward_done_) fail(ErrorKind::state, "grad() requested before backward()");
  return grad_slot(v.id);
}

void Tape::backward(Var root) {
  if (backward_done_) {
    fail(ErrorKind::state, "backward() called twice on the same tape; clear() first");
  }
  if (root.tape != this) fail(ErrorKind::invalid_argument, "root belongs to another tape");
  if (!node_value(root.id).is_scalar()) {
    fail(ErrorKind::invalid_argument,
         "backward() root must be scalar, got " + node_value(root.id).shape_str());
  }
  grads_.assign(nodes_.size(), Tensor{});
  backward_done_ = true;
  grad_slot(root.id).data[0] = 1.0;
  for (std::uint32_t id = root.id + 1; id-- > 0;) {
    if (grads_[id].data.empty()) continue;
    backprop_node(id);
  }
}

void Tape::backprop_node(std::uint32_t id) {
  const Node& n = nodes_[id];
  const Tensor& g = grads_[id];
  const Tensor& y = node_value(id);
  switch (n.op) {
    case Op::param:
    case Op::input:
      return;
    case Op::matmul: {
      const Tensor& a = node_value(n.inputs[0]);
      const Tensor& b = node_value(n.inputs[1]);
      Tensor& ga = grad_slot(n.inputs[0]);
      if (b.cols == 1) {
        // matrix-vector: dA += g b^T, db += A^T g
        Tensor& gb = grad_slot(n.inputs[1]);
        for (std::size_t i = 0; i < a.rows; ++i) {
          const double gi = g.data[i];
          double* garow = &ga.data[i * a.cols];
          const double* arow = &a.data[i * a.cols];
          for (std::size_t p = 0; p < a.cols; ++p) {
            garow[p] += gi * b.data[p];
            gb.data[p] += gi * arow[p];
          }
        }
        return;
      }
      // dA += dC * B^T
      for (std::size_t i = 0; i < a.rows; ++i) {
        const double* grow = &g.data[i * g.cols];
        for (std::size_t p = 0; p < a.cols; ++p) {
          const double* brow = &b.data[p * b.cols];
          double acc = 0.0;
          for (std::size_t j = 0; j < b.cols; ++j) acc += grow[j] * brow[j];
          ga.data[i * a.cols + p] += acc;
        }
      }
      // dB += A^T * dC
      Tensor& gb = grad_slot(n.inputs[1]);
      for (std::size_t i = 0; i < a.rows; ++i) {
        const double* grow = &g.data[i * g.cols];
        for (std::size_t p = 0; p < a.cols; ++p) {
          const double av = a.data[i * a.cols + p];
          if (av == 0.0) continue;
          double* gbrow = &gb.data[p * b.cols];
          for (std::size_t j = 0; j < b.cols; ++j) gbrow[j] += av * grow[j];
        }
      }
      return;
    }
    case Op::add: {
      Tensor& ga = grad_slot(n.inputs[0]);
      for (std::size_t i = 0; i < g.size(); ++i) ga.data[i] += g.data[i];
      Tensor& gb = grad_slot(n.inputs[1]);
      for (std::size_t i = 0; i < g.size(); ++i) gb.data[i] += g.data[i];
      return;
    }
    case Op::sub: {
      Tensor& ga = grad_slot(n.inputs[0]);
      for (std::size_t i = 0; i < g.size(); ++i) ga.data[i] += g.data[i];
      Tensor& gb = grad_slot(n.inputs[1]);
      for (std::size_t i = 0; i < g.size(); ++i) gb.data[i] -= g.data[i];
      return;
    }
    case Op::hadamard: {
      const Tensor& a = node_value(n.inputs[0]);
      const Tensor& b = node_value(n.inputs[1]);
      Tensor& ga = grad_slot(n.inputs[0]);
      for (std::size_t i = 0; i < g.size(); ++i) ga.data[i] += g.data[i] * b.data[i];
      Tensor& gb = grad_slot(n.inputs[1]);
      for (std::size_t i = 0; i < g.size(); ++i) gb.data[i] += g.data[i] * a.data[i];
      return;
    }
    case Op::scale: {
      Tensor& ga = grad_slot(n.inputs[0]);
      for (std::size_t i = 0; i < g.size(); ++i) ga.data[i] += n.scalar * g.data[i];
      return;
    }
    case Op::concat_rows: {
      std::size_t at = 0;
      for (std::uint32_t in : n.inputs) {
        Tensor& gi = grad_slot(in);
        for (std::size_t i = 0; i < gi.size(); ++i) gi.data[i] += g.data[at + i];
        at += gi.size();
      }
      return;
    }
    case Op::slice: {
      Tensor& ga = grad_slot(n.inputs[0]);
      const std::size_t base = n.offset * ga.cols;
      for (std::size_t i = 0; i < g.size(); ++i) ga.data[base + i] += g.data[i];
      return;
    }
    case Op::sigmoid: {
      Tensor& ga = grad_slot(n.inputs[0]);
      for (std::size_t i = 0; i < g.size(); ++i) {
        ga.data[i] += g.data[i] * y.data[i] * (1.0 - y.data[i]);
      }
      return;
    }
    case Op::tanh: {
      Tensor& ga = grad_slot(n.inputs[0]);
      for (std::size_t i = 0; i < g.size(); ++i) {
        ga.data[i] += g.data[i] * (1.0 - y.data[i] * y.data[i]);
      }
      return;
    }
    case Op::sin: {
      const Tensor& a = node_value(n.inputs[0]);
      Tensor& ga = grad_slot(n.inputs[0]);
      for (std::size_t i = 0; i < g.size(); ++i) ga.data[i] += g.data[i] * std::cos(a.data[i]);
      return;
    }
    case Op::softmax: {
      double dot = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) dot += g.data[i] * y.data[i];
      Tensor& ga = grad_slot(n.inputs[0]);
      for (std::size_t i = 0; i < g.size(); ++i) ga.data[i] += y.data[i] * (g.data[i] - dot);
      return;
    }
    case Op::cross_entropy: {
      const Tensor& z = node_value(n.inputs[0]);
      const double zmax = *std::max_element(z.data.begin(), z.data.end());
      double denom = 0.0;
      for (double v : z.data) denom += std::exp(v - zmax);
      Tensor& ga = grad_slot(n.inputs[0]);
      for (std::size_t i = 0; i < z.size(); ++i) {
        const double p = std::exp(z.data[i] - zmax) / denom;
        ga.data[i] += g.data[0] * (p - (i == n.offset ? 1.0 : 0.0));
      }
      return;
    }
    case Op::sum: {
      Tensor& ga = grad_slot(n.inputs[0]);
      for (double& v : ga.data) v += g.data[0];
      return;
    }
    case Op::mean_of: {
      const double w = 1.0 / static_cast<double>(n.inputs.size());
      for (std::uint32_t in : n.inputs) {
        Tensor& gi = grad_slot(in);
        for (std::size_t i = 0; i < g.size(); ++i) gi.data[i] += w * g.data[i];
      }
      return;
    }
    case Op::max_of: {
      for (std::size_t i = 0; i < g.size(); ++i) {
        std::uint32_t best = n.inputs[0];
        for (std::uint32_t in : n.inputs) {
          if (node_value(in).data[i] > node_value(best).data[i]) best = in;
        }
        grad_slot(best).data[i] += g.data[i];
      }
      return;
    }
    case Op::weighted_sum: {
      const Tensor& w = node_value(n.inputs[0]);
      for (std::size_t k = 1; k < n.inputs.size(); ++k) {
        const Tensor& x = node_value(n.inputs[k]);
        double dw = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) dw += g.data[i] * x.data[i];
        grad_slot(n.inputs[0]).data[k - 1] += dw;
        Tensor& gx = grad_slot(n.inputs[k]);
        for (std::size_t i = 0; i < g.size(); ++i) gx.data[i] += w.data[k - 1] * g.data[i];
      }
      return;
    }
    case Op::custom: {
      std::vector<const Tensor*> ins;
      std::vector<Tensor*> gins;
      for (std::uint32_t in : n.inputs) {
        ins.push_back(&node_value(in));
        gins.push_back(&grad_slot(in));
      }
      n.custom(ins, y, g, gins);
      return;
    }
  }
}

Var matmul(Var a, Var b) {
  Tape& t = tape_of(a, b);
  const Tensor& av = t.value(a);
  const Tensor& bv = t.value(b);
  if (av.cols != bv.rows) {
    fail(ErrorKind::invalid_argument,
         "matmul: shape mismatch " + av.shape_str() + " vs " + bv.shape_str());
  }
  Tensor out(av.rows, bv.cols);
  gemm_acc(av, bv, out);
  return record(t, Op::matmul, {a.id, b.id}, std::move(out), 0.0, 0, {});
}

namespace {

template <class F>
Var binary(Op op, Var a, Var b, F f) {
  Tape& t = tape_of(a, b);
  const Tensor& av = t.value(a);
  const Tensor& bv = t.value(b);
  require_same_shape(op_name(op), av, bv);
  Tensor out(av.rows, av.cols);
  for (std::size_t i = 0; i < av.size(); ++i) out.data[i] = f(av.data[i], bv.data[i]);
  return record(t, op, {a.id, b.id}, std::move(out), 0.0, 0, {});
}

template <class F>
Var unary(Op op, Var a, F f) {
  Tape& t = tape_of(a);
  return record(t, op, {a.id}, map(t.value(a), f), 0.0, 0, {});
}

}  // namespace

Var add(Var a, Var b) {
  return binary(Op::add, a, b, [](double x, double y) { return x + y; });
}
Var sub(Var a, Var b) {
  return binary(Op::sub, a, b, [](double x, double y) { return x - y; });
}
Var hadamard(Var a, Var b) {
  return binary(Op::hadamard, a, b, [](double x, double y) { return x * y; });
}

Var scale(Var a, double k) {
  Tape& t = tape_of(a);
  return record(t, Op::scale, {a.id}, map(t.value(a), [k](double x) { return k * x; }), k,
                0, {});
}

Var concat_rows(std::span<const Var> parts) {
  Tape& t = common_tape(parts, "concat_rows");
  const std::size_t cols = t.value(parts.front()).cols;
  std::size_t rows = 0;
  for (const Var& p : parts) {
    const Tensor& v = t.value(p);
    if (v.cols != cols) {
      fail(ErrorKind::invalid_argument, "concat_rows: shape mismatch " +
                                            t.value(parts.front()).shape_str() + " vs " +
                                            v.shape_str());
    }
    rows += v.rows;
  }
  Tensor out(rows, cols);
  std::size_t at = 0;
  for (const Var& p : parts) {
    const Tensor& v = t.value(p);
    std::copy(v.data.begin(), v.data.end(), out.data.begin() + static_cast<std::ptrdiff_t>(at));
    at += v.size();
  }
  return record(t, Op::concat_rows, ids_of(parts), std::move(out), 0.0, 0, {});
}

Var slice(Var a, std::size_t row_offset, std::size_t row_count) {
  Tape& t = tape_of(a);
  const Tensor& av = t.value(a);
  if (row_offset + row_count > av.rows || row_count == 0) {
    fail(ErrorKind::invalid_argument, "slice: rows [" + std::to_string(row_offset) + ", " +
                                          std::to_string(row_offset + row_count) +
                                          ") out of range for " + av.shape_str());
  }
  Tensor out(row_count, av.cols);
  const auto first = av.data.begin() + static_cast<std::ptrdiff_t>(row_offset * av.cols);
  std::copy(first, first + static_cast<std::ptrdiff_t>(out.size()), out.data.begin());
  return record(t, Op::slice, {a.id}, std::move(out), 0.0, row_offset, {});
}

Var sigmoid(Var a) {
  return unary(Op::sigmoid, a, [](double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
  });
}

Var tanh(Var a) {
  return unary(Op::tanh, a, [](double x) { return std::tanh(x); });
}

Var sin(Var a) {
  return unary(Op::sin, a, [](double x) { return std::sin(x); });
}

Var softmax(Var logits) {
  Tape& t = tape_of(logits);
  const Tensor& z = t.value(logits);
  const double zmax = *std::max_element(z.data.begin(), z.data.end());
  Tensor out(z.rows, z.cols);
  double denom = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    out.data[i] = std::exp(z.data[i] - zmax);
    denom += out.data[i];
  }
  for (double& v : out.data) v /= denom;
  return record(t, Op::softmax, {logits.id}, std::move(out), 0.0, 0, {});
}

Var cross_entropy(Var logits, std::size_t label) {
  Tape& t = tape_of(logits);
  const Tensor& z = t.value(logits);
  if (label >= z.size()) {
    fail(ErrorKind::invalid_argument, "cross_entropy: label " + std::to_string(label) +
                                          " out of range for " + z.shape_str());
  }
  const double zmax = *std::max_element(z.data.begin(), z.data.end());
  double denom = 0.0;
  for (double v : z.data) denom += std::exp(v - zmax);
  const double loss = zmax + std::log(denom) - z.data[label];
  return record(t, Op::cross_entropy, {logits.id}, Tensor::scalar(loss), 0.0, label, {});
}

Var sum(Var a) {
  Tape& t = tape_of(a);
  double s = 0.0;
  for (double v : t.value(a).data) s += v;
  return record(t, Op::sum, {a.id}, Tensor::scalar(s), 0.0, 0, {});
}

Var mean_of(std::span<const Var> items) {
  Tape& t = common_tape(items, "mean_of");
  Tensor out = t.value(items.front());
  for (std::size_t k = 1; k < items.size(); ++k) {
    const Tensor& v = t.value(items[k]);
    require_same_shape("mean_of", out, v);
    for (std::size_t i = 0; i < v.size(); ++i) out.data[i] += v.data[i];
  }
  const double w = 1.0 / static_cast<double>(items.size());
  for (double& v : out.data) v *= w;
  return record(t, Op::mean_of, ids_of(items), std::move(out), 0.0, 0, {});
}

Var max_of(std::span<const Var> items) {
  Tape& t = common_tape(items, "max_of");
  Tensor out = t.value(items.front());
  for (std::size_t k = 1; k < items.size(); ++k) {
    const Tensor& v = t.value(items[k]);
    require_same_shape("max_of", out, v);
    for (std::size_t i = 0; i < v.size(); ++i) out.data[i] = std::max(out.data[i], v.data[i]);
  }
  return record(t, Op::max_of, ids_of(items), std::move(out), 0.0, 0, {});
}

Var weighted_sum(Var weights, std::span<const Var> items) {
  Tape& t = common_tape(items, "weighted_sum");
  const Tensor& w = t.value(weights);
  if (weights.tape != &t) fail(ErrorKind::invalid_argument, "weighted_sum: foreign weights");
  if (w.size() != items.size()) {
    fail(ErrorKind::invalid_argument, "weighted_sum: " + std::to_string(items.size()) +
                                          " items but weights " + w.shape_str());
  }
  Tensor out(t.value(items.front()).rows, t.value(items.front()).cols);
  for (std::size_t k = 0; k < items.size(); ++k) {
    const Tensor& v = t.value(items[k]);
    require_same_shape("weighted_sum", out, v);
    for (std::size_t i = 0; i < v.size(); ++i) out.data[i] += w.data[k] * v.data[i];
  }
  std::vector<std::uint32_t> ids{weights.id};
  for (const Var& v : items) ids.push_back(v.id);
  return record(t, Op::weighted_sum, std::move(ids), std::move(out), 0.0, 0, {});
}

Var custom(std::span<const Var> inputs, Tensor output, CustomBackward backward) {
  Tape& t = common_tape(inputs, "custom");
  return record(t, Op::custom, ids_of(inputs), std::move(output), 0.0, 0, std::move(backward));
}

}  // namespace slan::ad
