#include "slan/training.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#include "slan/error.hpp"
#include "slan/metrics.hpp"

namespace slan::train {

OptimizerState make_optimizer_state(std::span<Tensor* const> params) {
  OptimizerState s;
  for (const Tensor* p : params) {
    s.m.emplace_back(p->rows, p->cols);
    s.v.emplace_back(p->rows, p->cols);
  }
  return s;
}

bool adamw_step(std::span<Tensor* const> params, std::span<const Tensor> grads,
                OptimizerState& state, double lr, const AdamWConfig& cfg) {
  if (params.size() != grads.size() || params.size() != state.m.size()) {
    fail(ErrorKind::invalid_argument, "adamw_step: parameter/gradient/state count mismatch");
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (!params[k]->same_shape(grads[k]) || !params[k]->same_shape(state.m[k])) {
      fail(ErrorKind::invalid_argument, "adamw_step: shape mismatch " +
                                            params[k]->shape_str() + " vs " +
                                            grads[k].shape_str());
    }
    for (double g : grads[k].data) {
      if (!std::isfinite(g)) {
        ++state.skipped;
        return false;
      }
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(cfg.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& p = *params[k];
    const Tensor& g = grads[k];
    Tensor& m = state.m[k];
    Tensor& v = state.v[k];
    for (std::size_t i = 0; i < p.size(); ++i) {
      p.data[i] -= lr * cfg.weight_decay * p.data[i];
      m.data[i] = cfg.beta1 * m.data[i] + (1.0 - cfg.beta1) * g.data[i];
      v.data[i] = cfg.beta2 * v.data[i] + (1.0 - cfg.beta2) * g.data[i] * g.data[i];
      const double mhat = m.data[i] / bc1;
      const double vhat = v.data[i] / bc2;
      p.data[i] -= lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
  }
  return true;
}

double clip_global_norm(std::span<Tensor> grads, double max_norm) {
  double sq = 0.0;
  for (const Tensor& g : grads) {
    for (double x : g.data) sq += x * x;
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double k = max_norm / norm;
    for (Tensor& g : grads) {
      for (double& x : g.data) x *= k;
    }
  }
  return norm;
}

void validate(const TrainConfig& c) {
  auto req = [](bool ok, const char* what) {
    if (!ok) fail(ErrorKind::invalid_argument, std::string("train config: ") + what);
  };
  req(c.epochs > 0, "epochs must be positive");
  req(c.patience > 0, "patience must be positive");
  req(c.patience <= c.epochs, "patience must not exceed epochs");
  req(c.lr > 0.0, "lr must be positive");
  req(c.lr_decay > 0.0 && c.lr_decay <= 1.0, "lr_decay must lie in (0, 1]");
  req(c.batch_size > 0, "batch size must be positive");
  req(c.hidden > 0 && c.t2v_dim > 0, "hidden and t2v_dim must be positive");
  req(c.adam.beta1 > 0.0 && c.adam.beta1 < 1.0, "beta1 must lie in (0, 1)");
  req(c.adam.beta2 > 0.0 && c.adam.beta2 < 1.0, "beta2 must lie in (0, 1)");
  req(c.adam.eps > 0.0, "eps must be positive");
  req(c.adam.weight_decay >= 0.0, "weight_decay must be nonnegative");
  req(c.clip_norm >= 0.0, "clip norm must be nonnegative");
  req(c.threads > 0, "threads must be positive");
}

std::vector<Example> prepare(const data::Dataset& dataset) {
  std::vector<Example> out;
  out.reserve(dataset.size());
  for (const data::Instance& inst : dataset.instances) {
    out.push_back(Example{inst.id, data::build_schedule(inst, dataset.info.sensor_count),
                          inst.statics, inst.label});
  }
  return out;
}

namespace {

// Runs f(k) for k in [0, n) on up to `threads` workers; the first exception
// is rethrown on the caller.
template <class F>
void parallel_for(std::size_t n, std::size_t threads, F&& f) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads == 1) {
    for (std::size_t k = 0; k < n; ++k) f(k, 0);
    return;
  }
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t k = w; k < n; k += threads) f(k, w);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

double batch_loss_and_grad(const model::SlanParams& params, std::span<const Example> examples,
                           std::span<const std::size_t> indices, model::Gradients& grads,
                           std::size_t threads) {
  if (indices.empty()) fail(ErrorKind::invalid_argument, "batch_loss_and_grad: empty batch");
  grads = model::zero_gradients(params);
  double loss = 0.0;
  if (threads <= 1) {
    ad::Tape tape;
    for (std::size_t idx : indices) {
      const Example& ex = examples[idx];
      loss += model::loss_and_grad(params, ex.schedule, ex.statics, ex.label, grads, tape);
    }
  } else {
    std::vector<model::Gradients> per(indices.size());
    std::vector<double> losses(indices.size());
    std::vector<ad::Tape> tapes(threads);
    parallel_for(indices.size(), threads, [&](std::size_t k, std::size_t w) {
      const Example& ex = examples[indices[k]];
      per[k] = model::zero_gradients(params);
      losses[k] = model::loss_and_grad(params, ex.schedule, ex.statics, ex.label, per[k], tapes[w]);
    });
    for (std::size_t k = 0; k < indices.size(); ++k) {
      loss += losses[k];
      for (std::size_t p = 0; p < grads.size(); ++p) {
        for (std::size_t i = 0; i < grads[p].size(); ++i) grads[p].data[i] += per[k][p].data[i];
      }
    }
  }
  const double inv = 1.0 / static_cast<double>(indices.size());
  for (Tensor& g : grads) {
    for (double& x : g.data) x *= inv;
  }
  return loss * inv;
}

EvalReport evaluate(const model::SlanParams& params, std::span<const Example> examples,
                    std::size_t threads) {
  if (examples.empty()) fail(ErrorKind::invalid_argument, "evaluate: empty split");
  EvalReport r;
  r.scores.resize(examples.size());
  r.labels.resize(examples.size());
  parallel_for(examples.size(), threads, [&](std::size_t k, std::size_t) {
    const Example& ex = examples[k];
    r.scores[k] = model::positive_probability(
        model::predict_logits(params, ex.schedule, ex.statics));
    r.labels[k] = ex.label;
  });
  r.auroc = metrics::auroc(r.scores, r.labels);
  r.auprc = metrics::auprc(r.scores, r.labels);
  return r;
}

model::ModelConfig model_config(const TrainConfig& cfg, const data::DatasetInfo& info) {
  model::ModelConfig mc;
  mc.sensors = info.sensor_count;
  mc.static_count = info.static_count;
  mc.hidden = cfg.hidden;
  mc.t2v_dim = cfg.t2v_dim;
  mc.aggregation = cfg.aggregation;
  mc.concat = cfg.concat;
  mc.state_init = cfg.state_init;
  mc.seed = cfg.seed;
  return mc;
}

TrainResult train(std::span<const Example> train_set, std::span<const Example> val_set,
                  const data::DatasetInfo& info, const TrainConfig& cfg,
                  const std::function<void(const EpochRecord&)>& on_epoch) {
  validate(cfg);
  if (train_set.empty() || val_set.empty()) {
    fail(ErrorKind::invalid_argument, "train: train and validation splits must be nonempty");
  }
  std::vector<int> labels;
  labels.reserve(train_set.size());
  std::size_t positives = 0;
  for (const Example& ex : train_set) {
    labels.push_back(ex.label);
    positives += ex.label == 1 ? 1 : 0;
  }
  const int minority = positives * 2 <= train_set.size() ? 1 : 0;

  model::SlanParams params = model::init_params(model_config(cfg, info));
  std::vector<Tensor*> trainable = params.trainable();
  OptimizerState opt = make_optimizer_state(trainable);
  data::WeightedSampler sampler(labels, cfg.seed ^ 0x9e3779b97f4a7c15ULL);

  TrainResult result;
  result.best = params;
  result.best_val_auprc = -std::numeric_limits<double>::infinity();

  const std::size_t batches = (train_set.size() + cfg.batch_size - 1) / cfg.batch_size;
  double lr = cfg.lr;
  std::size_t stagnant = 0;
  model::Gradients grads;
  std::vector<std::size_t> batch(cfg.batch_size);

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    double loss_sum = 0.0;
    for (std::size_t b = 0; b < batches; ++b) {
      for (std::size_t& idx : batch) {
        idx = sampler.next();
        result.sampled_minority += train_set[idx].label == minority ? 1 : 0;
        ++result.sampled_total;
      }
      const double loss = batch_loss_and_grad(params, train_set, batch, grads, cfg.threads);
      if (!std::isfinite(loss)) {
        fail(ErrorKind::numeric, "training diverged: non-finite loss at epoch " +
                                     std::to_string(epoch) + ", batch " + std::to_string(b));
      }
      loss_sum += loss;
      if (cfg.clip_norm > 0.0) clip_global_norm(grads, cfg.clip_norm);
      adamw_step(trainable, grads, opt, lr, cfg.adam);
    }
    const EvalReport val = evaluate(params, val_set, cfg.threads);
    const auto t1 = std::chrono::steady_clock::now();

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(batches);
    rec.val_auprc = val.auprc;
    rec.val_auroc = val.auroc;
    rec.lr = lr;
    rec.seconds = std::chrono::duration<double>(t1 - t0).count();
    result.trace.push_back(rec);
    if (on_epoch) on_epoch(rec);

    if (val.auprc > result.best_val_auprc + cfg.min_improvement) {
      result.best_val_auprc = val.auprc;
      result.best_epoch = epoch;
      result.best = params;
      stagnant = 0;
    } else {
      ++stagnant;
      lr *= cfg.lr_decay;
      if (stagnant >= cfg.patience) break;
    }
  }
  result.skipped_steps = opt.skipped;
  return result;
}

void write_trace_csv(std::span<const EpochRecord> trace, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorKind::io, "cannot write " + path);
  out << "epoch,train_loss,val_auprc,val_auroc,lr,seconds\n";
  out.precision(17);
  for (const EpochRecord& r : trace) {
    out << r.epoch << ',' << r.train_loss << ',' << r.val_auprc << ',' << r.val_auroc << ','
        << r.lr << ',' << r.seconds << '\n';
  }
  if (!out) fail(ErrorKind::io, "write failed: " + path);
}

std::vector<EpochRecord> read_trace_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::not_found, "cannot open " + path);
  std::string line;
  std::getline(in, line);
  if (line != "epoch,train_loss,val_auprc,val_auroc,lr,seconds") {
    fail(ErrorKind::parse, path + ": unexpected trace header");
  }
  std::vector<EpochRecord> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ss(line);
    EpochRecord r;
    char c1, c2, c3, c4, c5;
    ss >> r.epoch >> c1 >> r.train_loss >> c2 >> r.val_auprc >> c3 >> r.val_auroc >> c4 >> r.lr >>
        c5 >> r.seconds;
    if (!ss || c1 != ',' || c2 != ',' || c3 != ',' || c4 != ',' || c5 != ',') {
      fail(ErrorKind::parse, path + ":" + std::to_string(line_no) + ": malformed trace row");
    }
    out.push_back(r);
  }
  return out;
}

}  // namespace slan::train
