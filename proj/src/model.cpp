#include "slan/model.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "slan/error.hpp"

namespace slan::model {

Aggregation parse_aggregation(const std::string& name) {
  if (name == "mean") return Aggregation::mean;
  if (name == "max") return Aggregation::max;
  if (name == "attention" || name == "att") return Aggregation::attention;
  fail(ErrorKind::invalid_argument, "unknown aggregation '" + name + "'");
}

const char* aggregation_name(Aggregation a) noexcept {
  switch (a) {
    case Aggregation::mean: return "mean";
    case Aggregation::max: return "max";
    case Aggregation::attention: return "attention";
  }
  return "?";
}

ConcatMode parse_concat(const std::string& name) {
  if (name == "both") return ConcatMode::both;
  if (name == "global") return ConcatMode::global_only;
  if (name == "local") return ConcatMode::local_only;
  fail(ErrorKind::invalid_argument, "unknown concat mode '" + name + "'");
}

const char* concat_name(ConcatMode c) noexcept {
  switch (c) {
    case ConcatMode::both: return "both";
    case ConcatMode::global_only: return "global";
    case ConcatMode::local_only: return "local";
  }
  return "?";
}

StateInit parse_state_init(const std::string& name) {
  if (name == "zeros") return StateInit::zeros;
  if (name == "random") return StateInit::random;
  fail(ErrorKind::invalid_argument, "unknown state init '" + name + "'");
}

const char* state_init_name(StateInit s) noexcept {
  return s == StateInit::zeros ? "zeros" : "random";
}

std::size_t SlanParams::concat_dim() const {
  const std::size_t h = config.hidden;
  std::size_t d = 0;
  switch (config.concat) {
    case ConcatMode::both: d = h * (config.sensors + 1); break;
    case ConcatMode::global_only: d = h; break;
    case ConcatMode::local_only: d = h * config.sensors; break;
  }
  if (config.static_count > 0) d += h;
  return d;
}

namespace {

constexpr const char* kGateNames[kCellGates] = {"f", "i", "o", "c"};

template <class Self, class F>
void visit(Self& self, F&& f, bool with_state) {
  for (std::size_t m = 0; m < self.sensors.size(); ++m) {
    auto& sp = self.sensors[m];
    const std::string pre = "sensor" + std::to_string(m) + ".";
    f(pre + "t2v.omega", sp.omega);
    f(pre + "t2v.phase", sp.phase);
    for (std::size_t g = 0; g < kDecayGates; ++g) {
      const std::string gp = pre + "decay" + std::to_string(g + 1) + ".";
      f(gp + "W", sp.decay_w[g]);
      f(gp + "V", sp.decay_v[g]);
      f(gp + "b", sp.decay_b[g]);
    }
    for (std::size_t g = 0; g < kCellGates; ++g) {
      const std::string gp = pre + "gate_" + kGateNames[g] + ".";
      f(gp + "W", sp.gate_w[g]);
      f(gp + "V", sp.gate_v[g]);
      f(gp + "b", sp.gate_b[g]);
    }
  }
  if (self.config.static_count > 0) {
    f(std::string("static.W"), self.static_w);
    f(std::string("static.b"), self.static_b);
  }
  if (self.config.aggregation == Aggregation::attention) {
    f(std::string("attention.w"), self.attn_w);
    f(std::string("attention.b"), self.attn_b);
  }
  f(std::string("head.W"), self.head_w);
  f(std::string("head.b"), self.head_b);
  if (with_state) {
    for (std::size_t m = 0; m < self.h0.size(); ++m) {
      f("init.h" + std::to_string(m), self.h0[m]);
    }
    f(std::string("init.c"), self.c0);
  }
}

}  // namespace

void SlanParams::for_each(const std::function<void(const std::string&, Tensor&)>& f,
                          bool with_state) {
  visit(*this, f, with_state);
}

void SlanParams::for_each(const std::function<void(const std::string&, const Tensor&)>& f,
                          bool with_state) const {
  visit(*this, f, with_state);
}

std::vector<Tensor*> SlanParams::trainable() {
  std::vector<Tensor*> out;
  for_each([&](const std::string&, Tensor& t) { out.push_back(&t); });
  return out;
}

std::vector<std::string> SlanParams::trainable_names() const {
  std::vector<std::string> out;
  for_each([&](const std::string& n, const Tensor&) { out.push_back(n); });
  return out;
}

std::size_t SlanParams::trainable_count() const {
  std::size_t n = 0;
  for_each([&](const std::string&, const Tensor&) { ++n; });
  return n;
}

Gradients zero_gradients(const SlanParams& params) {
  Gradients g;
  params.for_each([&](const std::string&, const Tensor& t) { g.emplace_back(t.rows, t.cols); });
  return g;
}

SlanParams init_params(const ModelConfig& config) {
  if (config.sensors == 0 || config.hidden == 0 || config.t2v_dim == 0) {
    fail(ErrorKind::invalid_argument, "init_params: sensors, hidden and t2v_dim must be positive");
  }
  const std::size_t h = config.hidden;
  const std::size_t d = config.t2v_dim;
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  auto glorot = [&](std::size_t rows, std::size_t cols) {
    Tensor t(rows, cols);
    const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
    for (double& v : t.data) v = bound * (2.0 * unit(rng) - 1.0);
    return t;
  };

  SlanParams p;
  p.config = config;
  p.sensors.resize(config.sensors);
  for (SensorParams& sp : p.sensors) {
    sp.omega = Tensor(d, 1);
    sp.phase = Tensor(d, 1);
    for (double& v : sp.omega.data) v = unit(rng);
    for (double& v : sp.phase.data) v = 2.0 * std::numbers::pi * unit(rng);
    for (std::size_t g = 0; g < kDecayGates; ++g) {
      sp.decay_w[g] = glorot(h, 1);
      sp.decay_v[g] = glorot(h, d);
      sp.decay_b[g] = Tensor(h, 1);
    }
    for (std::size_t g = 0; g < kCellGates; ++g) {
      sp.gate_w[g] = glorot(h, 1);
      sp.gate_v[g] = glorot(h, h);
      sp.gate_b[g] = Tensor(h, 1);
    }
  }
  if (config.static_count > 0) {
    p.static_w = glorot(h, config.static_count);
    p.static_b = Tensor(h, 1);
  }
  if (config.aggregation == Aggregation::attention) {
    p.attn_w = glorot(1, h);
    p.attn_b = Tensor(1, 1);
  }
  p.head_w = glorot(2, p.concat_dim());
  p.head_b = Tensor(2, 1);

  p.h0.assign(config.sensors, Tensor(h, 1));
  p.c0 = Tensor(h, 1);
  if (config.state_init == StateInit::random) {
    for (Tensor& t : p.h0) {
      for (double& v : t.data) v = unit(rng) - 0.5;
    }
    for (double& v : p.c0.data) v = unit(rng) - 0.5;
  }
  return p;
}

// ---------------------------------------------------------------------------

BoundParams bind(ad::Tape& tape, const SlanParams& params, std::span<const ad::Var> vars) {
  if (vars.size() != params.trainable_count()) {
    fail(ErrorKind::invalid_argument, "bind: expected " + std::to_string(params.trainable_count()) +
                                          " vars, got " + std::to_string(vars.size()));
  }
  BoundParams b;
  b.params = &params;
  std::size_t next = 0;
  auto reg = [&](const Tensor&) {
    ad::Var v = vars[next++];
    b.trainable.push_back(v);
    return v;
  };
  b.sensors.reserve(params.sensors.size());
  for (const SensorParams& sp : params.sensors) {
    BoundSensor bs;
    bs.omega = reg(sp.omega);
    bs.phase = reg(sp.phase);
    for (std::size_t g = 0; g < kDecayGates; ++g) {
      bs.decay_w[g] = reg(sp.decay_w[g]);
      bs.decay_v[g] = reg(sp.decay_v[g]);
      bs.decay_b[g] = reg(sp.decay_b[g]);
    }
    for (std::size_t g = 0; g < kCellGates; ++g) {
      bs.gate_w[g] = reg(sp.gate_w[g]);
      bs.gate_v[g] = reg(sp.gate_v[g]);
      bs.gate_b[g] = reg(sp.gate_b[g]);
    }
    b.sensors.push_back(bs);
  }
  if (params.config.static_count > 0) {
    b.static_w = reg(params.static_w);
    b.static_b = reg(params.static_b);
  }
  if (params.config.aggregation == Aggregation::attention) {
    b.attn_w = reg(params.attn_w);
    b.attn_b = reg(params.attn_b);
  }
  b.head_w = reg(params.head_w);
  b.head_b = reg(params.head_b);
  for (const Tensor& t : params.h0) b.h0.push_back(tape.param(t));
  b.c0 = tape.param(params.c0);
  return b;
}

BoundParams bind(ad::Tape& tape, const SlanParams& params) {
  std::vector<ad::Var> vars;
  params.for_each([&](const std::string&, const Tensor& t) { vars.push_back(tape.param(t)); });
  return model::bind(tape, params, std::span<const ad::Var>(vars));
}

namespace {

// W x + V v + b
ad::Var affine(ad::Var w, double x, ad::Var v_mat, ad::Var v, ad::Var b) {
  return ad::add(ad::add(ad::scale(w, x), ad::matmul(v_mat, v)), b);
}

}  // namespace

ad::Var time2vec(const BoundSensor& p, double delay) {
  return ad::sin(ad::add(ad::scale(p.omega, delay), p.phase));
}

ad::Var decay_gate(const BoundSensor& p, std::size_t gate, double x, ad::Var t2v) {
  if (gate >= kDecayGates) fail(ErrorKind::invalid_argument, "decay_gate: gate index out of range");
  return ad::tanh(affine(p.decay_w[gate], x, p.decay_v[gate], t2v, p.decay_b[gate]));
}

CellOutput cell_step(const BoundSensor& p, double x, double delay, ad::Var h_prev,
                     ad::Var c_global) {
  const ad::Var t2v = time2vec(p, delay);
  const ad::Var g1 = decay_gate(p, 0, x, t2v);
  const ad::Var g2 = decay_gate(p, 1, x, t2v);
  const ad::Var g3 = decay_gate(p, 2, x, t2v);

  const ad::Var h_decayed = ad::hadamard(g1, h_prev);
  auto gate = [&](std::size_t g) {
    return affine(p.gate_w[g], x, p.gate_v[g], h_decayed, p.gate_b[g]);
  };
  const ad::Var f = ad::sigmoid(gate(gate_f));
  const ad::Var i = ad::sigmoid(gate(gate_i));
  const ad::Var o = ad::sigmoid(gate(gate_o));
  const ad::Var cand = ad::tanh(gate(gate_c));

  const ad::Var carried = ad::hadamard(f, c_global);
  const ad::Var written = ad::hadamard(i, cand);
  const ad::Var c = ad::add(carried, ad::hadamard(written, g2));
  const ad::Var h = ad::hadamard(o, ad::tanh(ad::add(carried, ad::hadamard(written, g3))));
  return {h, c};
}

ad::Var aggregate(Aggregation kind, const BoundParams& p, std::span<const ad::Var> cells,
                  std::vector<double>* weights) {
  if (cells.empty()) fail(ErrorKind::invalid_argument, "aggregate: no active cell states");
  switch (kind) {
    case Aggregation::mean:
      return ad::mean_of(cells);
    case Aggregation::max:
      return ad::max_of(cells);
    case Aggregation::attention: {
      std::vector<ad::Var> scores;
      scores.reserve(cells.size());
      for (const ad::Var& c : cells) scores.push_back(ad::add(ad::matmul(p.attn_w, c), p.attn_b));
      const ad::Var a = ad::softmax(ad::concat_rows(scores));
      if (weights) {
        const Tensor& av = a.tape->value(a);
        weights->assign(av.data.begin(), av.data.end());
      }
      return ad::weighted_sum(a, cells);
    }
  }
  fail(ErrorKind::invalid_argument, "aggregate: unknown kind");
}

ad::Var forward(const BoundParams& p, const data::SwitchSchedule& schedule,
                const std::optional<std::vector<double>>& statics, RolloutTrace* trace) {
  const SlanParams& params = *p.params;
  const ModelConfig& cfg = params.config;
  if (schedule.sensor_count != cfg.sensors) {
    fail(ErrorKind::invalid_argument, "forward: schedule has " +
                                          std::to_string(schedule.sensor_count) +
                                          " sensors, model has " + std::to_string(cfg.sensors));
  }
  if (schedule.steps.empty()) fail(ErrorKind::invalid_argument, "forward: empty schedule");
  ad::Tape& tape = *p.c0.tape;

  std::vector<ad::Var> h = p.h0;
  std::vector<std::optional<std::size_t>> h_step(cfg.sensors);
  ad::Var c = p.c0;
  std::vector<ad::Var> cells;

  for (std::size_t j = 0; j < schedule.steps.size(); ++j) {
    const data::Step& step = schedule.steps[j];
    cells.clear();
    for (const data::Activation& a : step.active) {
      if (trace) trace->calls.push_back(CellCall{j, a.sensor, a.delay, h_step[a.sensor]});
      CellOutput out;
      try {
        out = cell_step(p.sensors[a.sensor], a.value, a.delay, h[a.sensor], c);
      } catch (const Error& e) {
        fail(e.kind(), "sensor " + std::to_string(a.sensor) + ", step " + std::to_string(j) +
                           ": " + e.what());
      }
      h[a.sensor] = out.h;
      h_step[a.sensor] = j;
      cells.push_back(out.c);
    }
    std::vector<double> weights;
    c = aggregate(cfg.aggregation, p, cells,
                  trace && cfg.aggregation == Aggregation::attention ? &weights : nullptr);
    if (trace) trace->attention.push_back(std::move(weights));
  }

  std::vector<ad::Var> parts;
  if (cfg.concat != ConcatMode::local_only) {
    parts.push_back(c);
    if (trace) trace->concat.push_back({ConcatPart::Kind::global, 0, schedule.steps.size() - 1});
  }
  if (cfg.concat != ConcatMode::global_only) {
    for (std::size_t m = 0; m < cfg.sensors; ++m) {
      parts.push_back(h[m]);
      if (trace) {
        trace->concat.push_back(
            {ConcatPart::Kind::local, static_cast<std::uint32_t>(m), h_step[m]});
      }
    }
  }
  if (cfg.static_count > 0) {
    if (!statics || statics->size() != cfg.static_count) {
      fail(ErrorKind::invalid_argument,
           "forward: expected " + std::to_string(cfg.static_count) + " statics");
    }
    const Tensor x = Tensor::column(*statics);
    const ad::Var sx = tape.input(x);
    parts.push_back(ad::tanh(ad::add(ad::matmul(p.static_w, sx), p.static_b)));
    if (trace) trace->concat.push_back({ConcatPart::Kind::statics, 0, std::nullopt});
  }
  if (trace) {
    trace->final_local.clear();
    for (const ad::Var& v : h) trace->final_local.push_back(tape.value(v));
    trace->final_global = tape.value(c);
  }
  const ad::Var concat = ad::concat_rows(parts);
  return ad::add(ad::matmul(p.head_w, concat), p.head_b);
}

Tensor predict_logits(const SlanParams& params, const data::SwitchSchedule& schedule,
                      const std::optional<std::vector<double>>& statics, RolloutTrace* trace) {
  ad::Tape tape;
  const BoundParams b = bind(tape, params);
  return tape.value(forward(b, schedule, statics, trace));
}

double positive_probability(const Tensor& logits) {
  const double z0 = logits.data[0], z1 = logits.data[1];
  // softmax over two logits == logistic(z1 - z0)
  const double d = z1 - z0;
  if (d >= 0.0) return 1.0 / (1.0 + std::exp(-d));
  const double e = std::exp(d);
  return e / (1.0 + e);
}

double loss_and_grad(const SlanParams& params, const data::SwitchSchedule& schedule,
                     const std::optional<std::vector<double>>& statics, int label,
                     Gradients& grads, ad::Tape& tape) {
  tape.clear();
  const BoundParams b = bind(tape, params);
  const ad::Var loss = ad::cross_entropy(forward(b, schedule, statics),
                                         static_cast<std::size_t>(label));
  tape.backward(loss);
  if (grads.size() != b.trainable.size()) {
    fail(ErrorKind::invalid_argument, "loss_and_grad: gradient buffer does not match params");
  }
  for (std::size_t k = 0; k < b.trainable.size(); ++k) {
    const Tensor& g = tape.grad(b.trainable[k]);
    Tensor& acc = grads[k];
    for (std::size_t i = 0; i < g.size(); ++i) acc.data[i] += g.data[i];
  }
  return tape.scalar(loss);
}

}  // namespace slan::model
