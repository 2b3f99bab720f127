#include "slan/slan.h"

#include <exception>
#include <new>
#include <string>

#include "slan/error.hpp"
#include "slan/experiments.hpp"
#include "slan/metrics.hpp"
#include "slan/model.hpp"

struct slan_options {
  slan::exp::RunOptions opts;
};

struct slan_dataset {
  slan::exp::PreparedSplits splits;
};

struct slan_model {
  slan::model::SlanParams params;
};

namespace {

thread_local std::string last_error;

slan_status status_of(slan::ErrorKind kind) {
  switch (kind) {
    case slan::ErrorKind::invalid_argument: return SLAN_INVALID_ARGUMENT;
    case slan::ErrorKind::not_found: return SLAN_NOT_FOUND;
    case slan::ErrorKind::io: return SLAN_IO;
    case slan::ErrorKind::parse: return SLAN_PARSE;
    case slan::ErrorKind::numeric: return SLAN_NUMERIC;
    case slan::ErrorKind::state: return SLAN_STATE;
  }
  return SLAN_INTERNAL;
}

template <class F>
slan_status guard(F&& f) {
  try {
    f();
    last_error.clear();
    return SLAN_OK;
  } catch (const slan::Error& e) {
    last_error = e.what();
    return status_of(e.kind());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return SLAN_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return SLAN_INTERNAL;
  } catch (...) {
    last_error = "unknown error";
    return SLAN_INTERNAL;
  }
}

void require(const void* p, const char* what) {
  if (p == nullptr) slan::fail(slan::ErrorKind::invalid_argument, std::string(what) + " is null");
}

const std::vector<slan::train::Example>& examples(const slan_dataset* ds, slan_split split) {
  switch (split) {
    case SLAN_TRAIN: return ds->splits.train_ex;
    case SLAN_VAL: return ds->splits.val_ex;
    case SLAN_TEST: return ds->splits.test_ex;
  }
  slan::fail(slan::ErrorKind::invalid_argument, "unknown split");
}

}  // namespace

extern "C" {

const char* slan_last_error(void) { return last_error.c_str(); }

const char* slan_version(void) { return "1.0.0"; }

slan_status slan_options_create(slan_options** out) {
  return guard([&] {
    require(out, "out");
    *out = new slan_options;
    (*out)->opts.train.threads = slan::exp::default_threads();
  });
}

void slan_options_destroy(slan_options* opts) { delete opts; }

slan_status slan_options_set(slan_options* opts, const char* key, const char* value) {
  return guard([&] {
    require(opts, "options");
    require(key, "key");
    require(value, "value");
    slan::exp::apply_option(opts->opts, key, value);
  });
}

slan_status slan_run(const char* command, const slan_options* opts) {
  return guard([&] {
    require(command, "command");
    require(opts, "options");
    slan::exp::run_command(command, opts->opts);
  });
}

slan_status slan_dataset_load(const char* dir, const char* impute, slan_dataset** out) {
  return guard([&] {
    require(dir, "dir");
    require(out, "out");
    const auto mode = slan::data::parse_impute_mode(impute ? impute : "none");
    auto* ds = new slan_dataset{slan::exp::prepare_splits(slan::data::read_split_dir(dir), mode, 0.0, 0)};
    *out = ds;
  });
}

void slan_dataset_destroy(slan_dataset* ds) { delete ds; }

slan_status slan_dataset_size(const slan_dataset* ds, slan_split split, size_t* out) {
  return guard([&] {
    require(ds, "dataset");
    require(out, "out");
    *out = examples(ds, split).size();
  });
}

slan_status slan_dataset_labels(const slan_dataset* ds, slan_split split, int* labels,
                                size_t capacity) {
  return guard([&] {
    require(ds, "dataset");
    require(labels, "labels");
    const auto& ex = examples(ds, split);
    if (capacity < ex.size()) slan::fail(slan::ErrorKind::invalid_argument, "labels buffer too small");
    for (std::size_t i = 0; i < ex.size(); ++i) labels[i] = ex[i].label;
  });
}

slan_status slan_model_load(const char* checkpoint, slan_model** out) {
  return guard([&] {
    require(checkpoint, "checkpoint");
    require(out, "out");
    *out = new slan_model{slan::model::load_checkpoint(checkpoint)};
  });
}

void slan_model_destroy(slan_model* model) { delete model; }

slan_status slan_model_info(const slan_model* model, size_t* sensors, size_t* hidden,
                            size_t* parameters) {
  return guard([&] {
    require(model, "model");
    if (sensors) *sensors = model->params.config.sensors;
    if (hidden) *hidden = model->params.config.hidden;
    if (parameters) *parameters = model->params.trainable_count();
  });
}

slan_status slan_model_predict(const slan_model* model, const slan_dataset* ds, slan_split split,
                               double* scores, size_t capacity) {
  return guard([&] {
    require(model, "model");
    require(ds, "dataset");
    require(scores, "scores");
    const auto& ex = examples(ds, split);
    if (capacity < ex.size()) slan::fail(slan::ErrorKind::invalid_argument, "scores buffer too small");
    if (ds->splits.train.info.sensor_count != model->params.config.sensors) {
      slan::fail(slan::ErrorKind::invalid_argument, "dataset has " +
                     std::to_string(ds->splits.train.info.sensor_count) + " sensors, model expects " +
                     std::to_string(model->params.config.sensors));
    }
    const auto rep = slan::train::evaluate(model->params, ex, 1);
    for (std::size_t i = 0; i < ex.size(); ++i) scores[i] = rep.scores[i];
  });
}

slan_status slan_metrics(const double* scores, const int* labels, size_t n, double* auroc,
                         double* auprc) {
  return guard([&] {
    require(scores, "scores");
    require(labels, "labels");
    const std::span<const double> s(scores, n);
    const std::span<const int> l(labels, n);
    const double roc = slan::metrics::auroc(s, l);
    const double pr = slan::metrics::auprc(s, l);
    if (auroc) *auroc = roc;
    if (auprc) *auprc = pr;
  });
}

}  // extern "C"
