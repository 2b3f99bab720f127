#include "slan/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>
#include <thread>

#include "slan/error.hpp"
#include "slan/model.hpp"

namespace slan::exp {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Options

namespace {

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    fail(ErrorKind::invalid_argument, "option " + key + ": expected a number, got '" + v + "'");
  }
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos) {
    fail(ErrorKind::invalid_argument,
         "option " + key + ": expected a nonnegative integer, got '" + v + "'");
  }
  try {
    return std::stoull(v);
  } catch (const std::exception&) {
    fail(ErrorKind::invalid_argument, "option " + key + ": integer out of range");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  fail(ErrorKind::invalid_argument, "option " + key + ": expected a boolean, got '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream ss(v);
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

void apply_option(RunOptions& o, const std::string& key, const std::string& v) {
  train::TrainConfig& t = o.train;
  data::SyntheticConfig& s = o.synthetic;
  if (key == "data") o.data_dir = v;
  else if (key == "out") o.out_dir = v;
  else if (key == "checkpoint") o.checkpoint = v;
  else if (key == "seeds") {
    o.seeds.clear();
    for (const std::string& item : split_list(v)) o.seeds.push_back(to_u64(key, item));
    if (o.seeds.empty()) fail(ErrorKind::invalid_argument, "option seeds: list is empty");
  } else if (key == "epochs") {
    t.epochs = to_u64(key, v);
    t.patience = std::min(t.patience, t.epochs);  // explicit patience is applied after epochs
  }
  else if (key == "patience") t.patience = to_u64(key, v);
  else if (key == "lr") t.lr = to_double(key, v);
  else if (key == "lr-decay") t.lr_decay = to_double(key, v);
  else if (key == "batch") t.batch_size = to_u64(key, v);
  else if (key == "hidden") t.hidden = to_u64(key, v);
  else if (key == "t2v-dim") t.t2v_dim = to_u64(key, v);
  else if (key == "agg") t.aggregation = model::parse_aggregation(v);
  else if (key == "concat") t.concat = model::parse_concat(v);
  else if (key == "init") t.state_init = model::parse_state_init(v);
  else if (key == "clip") t.clip_norm = to_double(key, v);
  else if (key == "weight-decay") t.adam.weight_decay = to_double(key, v);
  else if (key == "beta1") t.adam.beta1 = to_double(key, v);
  else if (key == "beta2") t.adam.beta2 = to_double(key, v);
  else if (key == "eps") t.adam.eps = to_double(key, v);
  else if (key == "threads") t.threads = std::max<std::uint64_t>(1, to_u64(key, v));
  else if (key == "impute") o.impute = data::parse_impute_mode(v);
  else if (key == "drop") o.drop = to_double(key, v);
  else if (key == "fractions") {
    o.fractions.clear();
    for (const std::string& item : split_list(v)) o.fractions.push_back(to_double(key, item));
  } else if (key == "n") s.n = to_u64(key, v);
  else if (key == "sensors") s.sensors = to_u64(key, v);
  else if (key == "max-steps") s.max_steps = to_u64(key, v);
  else if (key == "missing-rate") s.missing_rate = to_double(key, v);
  else if (key == "informative") s.informative = to_bool(key, v);
  else if (key == "informative-sensors") s.informative_sensors = to_u64(key, v);
  else if (key == "noise") s.noise = to_double(key, v);
  else if (key == "drift") s.drift = to_double(key, v);
  else if (key == "strength") s.missingness_strength = to_double(key, v);
  else if (key == "positive-rate") s.positive_rate = to_double(key, v);
  else if (key == "statics") s.static_count = to_u64(key, v);
  else if (key == "seed") s.seed = to_u64(key, v);
  else if (key == "split-seed") o.split_seed = to_u64(key, v);
  else if (key == "bench-steps") o.bench_max_steps = to_u64(key, v);
  else if (key == "verbose") o.verbose = to_bool(key, v);
  else fail(ErrorKind::invalid_argument, "unknown option '" + key + "'");
}

std::size_t default_threads() {
  std::size_t n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("SLAN_THREADS")) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (end != env && cap > 0) n = std::min(n, static_cast<std::size_t>(cap));
  }
  return n;
}

// ---------------------------------------------------------------------------
// Pipeline

PreparedSplits prepare_splits(const data::Splits& raw, data::ImputeMode impute, double drop,
                              std::uint64_t drop_seed) {
  PreparedSplits p;
  data::Dataset train = raw.train, val = raw.val, test = raw.test;
  if (drop > 0.0) {
    train = data::drop_observations(train, drop, drop_seed);
    val = data::drop_observations(val, drop, drop_seed + 1);
    test = data::drop_observations(test, drop, drop_seed + 2);
  }
  p.meta = data::compute_meta(train);
  if (impute != data::ImputeMode::none) {
    train = data::impute(train, impute, p.meta);
    val = data::impute(val, impute, p.meta);
    test = data::impute(test, impute, p.meta);
  }
  p.train = data::standardize(train, p.meta);
  p.val = data::standardize(val, p.meta);
  p.test = data::standardize(test, p.meta);
  p.train_ex = train::prepare(p.train);
  p.val_ex = train::prepare(p.val);
  p.test_ex = train::prepare(p.test);
  return p;
}

RunResult run_one(const PreparedSplits& data, const train::TrainConfig& base,
                  const std::string& variant, std::uint64_t seed, const std::string& run_dir) {
  RunResult r;
  r.variant = variant;
  r.seed = seed;
  train::TrainConfig cfg = base;
  cfg.seed = seed;
  fs::create_directories(run_dir);
  const train::TrainResult tr = train::train(data.train_ex, data.val_ex, data.train.info, cfg);
  train::write_trace_csv(tr.trace, (fs::path(run_dir) / ("trace_" + std::to_string(seed) + ".csv")).string());
  model::save_checkpoint(tr.best,
                         (fs::path(run_dir) / ("checkpoint_" + std::to_string(seed) + ".bin")).string());
  const train::EvalReport test = train::evaluate(tr.best, data.test_ex, cfg.threads);
  r.ok = true;
  r.test_auprc = test.auprc;
  r.test_auroc = test.auroc;
  r.best_val_auprc = tr.best_val_auprc;
  r.best_epoch = tr.best_epoch;
  r.epochs_run = tr.trace.size();
  return r;
}

std::vector<VariantSummary> summarize(const std::vector<RunResult>& runs) {
  std::vector<VariantSummary> out;
  for (const RunResult& r : runs) {
    if (std::none_of(out.begin(), out.end(),
                     [&](const VariantSummary& v) { return v.variant == r.variant; })) {
      out.push_back(VariantSummary{r.variant});
    }
  }
  for (VariantSummary& v : out) {
    std::vector<double> pr, roc;
    for (const RunResult& r : runs) {
      if (r.variant != v.variant || !r.ok) continue;
      pr.push_back(r.test_auprc);
      roc.push_back(r.test_auroc);
    }
    v.runs = pr.size();
    std::tie(v.auprc_mean, v.auprc_std) = mean_std(pr);
    std::tie(v.auroc_mean, v.auroc_std) = mean_std(roc);
  }
  return out;
}

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorKind::io, "cannot write " + path);
  return out;
}

std::string fixed(double v, int digits = 10) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string join(const fs::path& dir, const std::string& file) { return (dir / file).string(); }

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out = open_out(path);
  out << text;
}

// Throws listing every failed (variant, seed) pair.
void check_failures(const std::vector<RunResult>& runs) {
  std::string msg;
  for (const RunResult& r : runs) {
    if (r.ok) continue;
    msg += "\n  (" + r.variant + ", " + std::to_string(r.seed) + "): " + r.error;
  }
  if (!msg.empty()) fail(ErrorKind::state, "some runs failed:" + msg);
}

// Runs one seed; a failure is recorded rather than thrown so the grid continues.
RunResult guarded(const std::function<RunResult()>& f, const std::string& variant,
                  std::uint64_t seed) {
  try {
    return f();
  } catch (const std::exception& e) {
    RunResult r;
    r.variant = variant;
    r.seed = seed;
    r.error = e.what();
    return r;
  }
}

void log_run(const RunOptions& o, const RunResult& r) {
  if (!r.ok) {
    std::cerr << "[" << r.variant << " seed " << r.seed << "] failed: " << r.error << '\n';
  } else if (o.verbose) {
    std::cerr << "[" << r.variant << " seed " << r.seed << "] test AUPRC "
              << fixed(100 * r.test_auprc, 2) << " AUROC " << fixed(100 * r.test_auroc, 2)
              << " (" << r.epochs_run << " epochs, best " << r.best_epoch << ")\n";
  }
}

void print_summary(const std::vector<VariantSummary>& rows) {
  std::printf("%-16s %5s  %-16s %-16s\n", "variant", "runs", "AUPRC", "AUROC");
  for (const VariantSummary& v : rows) {
    std::printf("%-16s %5zu  %-16s %-16s\n", v.variant.c_str(), v.runs,
                format_pct(v.auprc_mean, v.auprc_std).c_str(),
                format_pct(v.auroc_mean, v.auroc_std).c_str());
  }
}

train::TrainConfig effective(const RunOptions& o) {
  train::TrainConfig cfg = o.train;
  train::validate(cfg);
  return cfg;
}

data::Splits load(const RunOptions& o) {
  if (o.data_dir.empty()) fail(ErrorKind::invalid_argument, "--data is required");
  return data::read_split_dir(o.data_dir);
}

std::string fraction_label(double f) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", f);
  return buf;
}

}  // namespace

void write_summary_csv(const std::vector<VariantSummary>& rows, const std::string& path) {
  std::ofstream out = open_out(path);
  out << "variant,runs,auprc_mean,auprc_std,auroc_mean,auroc_std,auprc_x100,auroc_x100\n";
  for (const VariantSummary& v : rows) {
    out << v.variant << ',' << v.runs << ',' << fixed(v.auprc_mean) << ',' << fixed(v.auprc_std)
        << ',' << fixed(v.auroc_mean) << ',' << fixed(v.auroc_std) << ','
        << format_pct(v.auprc_mean, v.auprc_std) << ',' << format_pct(v.auroc_mean, v.auroc_std)
        << '\n';
  }
}

void write_runs_csv(const std::vector<RunResult>& runs, const std::string& path) {
  std::ofstream out = open_out(path);
  out << "variant,seed,ok,test_auprc,test_auroc,best_val_auprc,best_epoch,epochs_run\n";
  for (const RunResult& r : runs) {
    out << r.variant << ',' << r.seed << ',' << (r.ok ? 1 : 0) << ',' << fixed(r.test_auprc)
        << ',' << fixed(r.test_auroc) << ',' << fixed(r.best_val_auprc) << ',' << r.best_epoch
        << ',' << r.epochs_run << '\n';
  }
}

// ---------------------------------------------------------------------------
// Commands

DatasetStats dataset_stats(const data::Splits& splits) {
  DatasetStats st;
  st.sensors = splits.train.info.sensor_count;
  st.statics = splits.train.info.static_count;
  std::size_t steps = 0, positives = 0;
  for (const data::Dataset* d : {&splits.train, &splits.val, &splits.test}) {
    for (const data::Instance& inst : d->instances) {
      const data::SwitchSchedule sch = data::build_schedule(inst, st.sensors);
      steps += sch.steps.size();
      st.missing_cells += sch.steps.size() * st.sensors - inst.events.size();
      positives += inst.label == 1 ? 1 : 0;
      ++st.instances;
    }
  }
  if (st.instances > 0) {
    st.avg_observations = static_cast<double>(steps) / static_cast<double>(st.instances);
    const std::size_t minority = std::min(positives, st.instances - positives);
    st.imbalance_pct = 100.0 * static_cast<double>(minority) / static_cast<double>(st.instances);
  }
  return st;
}

void cmd_generate(const RunOptions& o) {
  const data::Dataset ds = data::generate_synthetic(o.synthetic);
  const data::Splits splits = data::split_dataset(ds, o.split_seed);
  data::write_split_dir(splits, o.out_dir);
  // recompute from the written files so the table reflects what is on disk
  const DatasetStats st = dataset_stats(data::read_split_dir(o.out_dir));
  std::ofstream out = open_out(join(o.out_dir, "stats.csv"));
  out << "instances,sensors,static,avg_observations,missing_cells,imbalance_pct\n";
  out << st.instances << ',' << st.sensors << ',' << st.statics << ','
      << fixed(st.avg_observations, 2) << ',' << st.missing_cells << ','
      << fixed(st.imbalance_pct, 2) << '\n';
  std::printf("%-22s %s\n", "#Instances", std::to_string(st.instances).c_str());
  std::printf("%-22s %zu\n", "#Sensors", st.sensors);
  std::printf("%-22s %zu\n", "#Static", st.statics);
  std::printf("%-22s %.1f\n", "#Observations(avg.)", st.avg_observations);
  std::printf("%-22s %zu\n", "#Num-Imputation", st.missing_cells);
  std::printf("%-22s %.2f\n", "Imbalance (%)", st.imbalance_pct);
}

namespace {

// Runs every seed for one variant into run_dir.
void run_seeds(const RunOptions& o, const data::Splits& raw, const train::TrainConfig& cfg,
               data::ImputeMode impute, double drop, const std::string& variant,
               const std::string& run_dir, std::vector<RunResult>& runs) {
  std::optional<PreparedSplits> shared;
  if (drop == 0.0) shared = prepare_splits(raw, impute, 0.0, 0);
  for (std::uint64_t seed : o.seeds) {
    RunResult r = guarded(
        [&] {
          if (shared) return run_one(*shared, cfg, variant, seed, run_dir);
          const PreparedSplits p = prepare_splits(raw, impute, drop, seed);
          return run_one(p, cfg, variant, seed, run_dir);
        },
        variant, seed);
    log_run(o, r);
    runs.push_back(std::move(r));
  }
}

}  // namespace

void cmd_train(const RunOptions& o) {
  const train::TrainConfig cfg = effective(o);
  const data::Splits raw = load(o);
  fs::create_directories(o.out_dir);
  std::vector<RunResult> runs;
  run_seeds(o, raw, cfg, o.impute, o.drop, "slan", o.out_dir, runs);
  write_runs_csv(runs, join(o.out_dir, "runs.csv"));
  const auto rows = summarize(runs);
  write_summary_csv(rows, join(o.out_dir, "summary.csv"));
  print_summary(rows);
  check_failures(runs);
}

void cmd_eval(const RunOptions& o) {
  const data::Splits raw = load(o);
  const std::string ckpt = o.checkpoint.empty() ? o.out_dir : o.checkpoint;
  std::vector<std::pair<std::uint64_t, std::string>> targets;
  if (fs::is_regular_file(ckpt)) {
    targets.emplace_back(o.seeds.front(), ckpt);
  } else {
    for (std::uint64_t seed : o.seeds) {
      targets.emplace_back(seed, join(ckpt, "checkpoint_" + std::to_string(seed) + ".bin"));
    }
  }
  for (const auto& [seed, path] : targets) {
    if (!fs::exists(path)) fail(ErrorKind::not_found, "no such checkpoint: " + path);
  }
  fs::create_directories(o.out_dir);
  std::vector<RunResult> runs;
  std::optional<PreparedSplits> shared;
  if (o.drop == 0.0) shared = prepare_splits(raw, o.impute, 0.0, 0);
  for (const auto& [seed, path] : targets) {
    RunResult r = guarded(
        [&, seed = seed, path = path] {
          const PreparedSplits p = shared ? *shared : prepare_splits(raw, o.impute, o.drop, seed);
          const model::SlanParams params = model::load_checkpoint(path);
          const train::EvalReport rep = train::evaluate(params, p.test_ex, o.train.threads);
          RunResult rr;
          rr.variant = "eval";
          rr.seed = seed;
          rr.ok = true;
          rr.test_auprc = rep.auprc;
          rr.test_auroc = rep.auroc;
          return rr;
        },
        "eval", seed);
    log_run(o, r);
    runs.push_back(std::move(r));
  }
  write_runs_csv(runs, join(o.out_dir, "eval_runs.csv"));
  const auto rows = summarize(runs);
  write_summary_csv(rows, join(o.out_dir, "summary.csv"));
  print_summary(rows);
  check_failures(runs);
}

void cmd_ablate(AblationKind kind, const RunOptions& o) {
  const train::TrainConfig base = effective(o);
  const data::Splits raw = load(o);
  fs::create_directories(o.out_dir);

  struct Variant {
    std::string name;
    train::TrainConfig cfg;
    data::ImputeMode impute;
  };
  std::vector<Variant> grid;
  std::string block;
  switch (kind) {
    case AblationKind::aggregation:
      block = "Aggregation Function";
      for (auto a : {model::Aggregation::max, model::Aggregation::attention, model::Aggregation::mean}) {
        train::TrainConfig c = base;
        c.aggregation = a;
        grid.push_back({model::aggregation_name(a), c, o.impute});
      }
      break;
    case AblationKind::imputation:
      block = "Imputation";
      for (auto m : {data::ImputeMode::ffill, data::ImputeMode::mean,
                     data::ImputeMode::interpolation, data::ImputeMode::none}) {
        grid.push_back({data::impute_mode_name(m), base, m});
      }
      break;
    case AblationKind::concat:
      block = "Concat";
      for (auto c : {model::ConcatMode::global_only, model::ConcatMode::local_only,
                     model::ConcatMode::both}) {
        train::TrainConfig cfg = base;
        cfg.concat = c;
        grid.push_back({model::concat_name(c), cfg, o.impute});
      }
      break;
  }

  std::vector<RunResult> runs;
  for (const Variant& v : grid) {
    run_seeds(o, raw, v.cfg, v.impute, o.drop, v.name, join(o.out_dir, v.name), runs);
  }
  write_runs_csv(runs, join(o.out_dir, "runs.csv"));
  const auto rows = summarize(runs);
  write_summary_csv(rows, join(o.out_dir, "summary.csv"));

  std::ofstream md = open_out(join(o.out_dir, "table.md"));
  md << "| " << block << " | AUPRC | AUROC |\n|---|---|---|\n";
  for (const VariantSummary& v : rows) {
    md << "| " << v.variant << " | " << format_pct(v.auprc_mean, v.auprc_std) << " | "
       << format_pct(v.auroc_mean, v.auroc_std) << " |\n";
  }
  print_summary(rows);
  check_failures(runs);
}

void cmd_drop_study(const RunOptions& o) {
  const train::TrainConfig cfg = effective(o);
  const data::Splits raw = load(o);
  fs::create_directories(o.out_dir);
  std::vector<double> fractions = o.fractions.empty() ? std::vector<double>{0.25, 0.5, 0.75}
                                                      : o.fractions;
  if (std::find(fractions.begin(), fractions.end(), 0.0) == fractions.end()) {
    fractions.insert(fractions.begin(), 0.0);
  }
  std::sort(fractions.begin(), fractions.end());

  std::vector<RunResult> runs;
  for (double f : fractions) {
    const std::string name = "drop_" + fraction_label(f);
    run_seeds(o, raw, cfg, o.impute, f, name, join(o.out_dir, name), runs);
  }
  {
    std::ofstream out = open_out(join(o.out_dir, "drop.csv"));
    out << "fraction,seed,test_auprc,test_auroc\n";
    for (std::size_t k = 0; k < runs.size(); ++k) {
      const RunResult& r = runs[k];
      if (!r.ok) continue;
      out << r.variant.substr(5) << ',' << r.seed << ',' << fixed(r.test_auprc) << ','
          << fixed(r.test_auroc) << '\n';
    }
  }
  const auto rows = summarize(runs);
  write_summary_csv(rows, join(o.out_dir, "summary.csv"));

  // absolute and relative change against the undropped baseline
  std::ofstream out = open_out(join(o.out_dir, "drop_summary.csv"));
  out << "fraction,runs,auprc_mean,auprc_std,auroc_mean,auroc_std,auprc_abs_delta,"
         "auprc_rel_delta_pct\n";
  const double base = rows.empty() ? 0.0 : rows.front().auprc_mean;
  std::vector<double> ys, es;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const VariantSummary& v = rows[k];
    const double abs_delta = v.auprc_mean - base;
    const double rel = base > 0.0 ? 100.0 * abs_delta / base : 0.0;
    out << fraction_label(fractions[k]) << ',' << v.runs << ',' << fixed(v.auprc_mean) << ','
        << fixed(v.auprc_std) << ',' << fixed(v.auroc_mean) << ',' << fixed(v.auroc_std) << ','
        << fixed(abs_delta) << ',' << fixed(rel, 4) << '\n';
    ys.push_back(100.0 * v.auprc_mean);
    es.push_back(100.0 * v.auprc_std);
  }
  std::vector<double> xs;
  for (double f : fractions) xs.push_back(100.0 * f);
  write_text(join(o.out_dir, "chart.svg"),
             line_chart_svg("AUPRC vs dropped observations", "dropped observations (%)",
                            "AUPRC (x100)", xs, {Series{"SLAN", ys, es}}));
  print_summary(rows);
  check_failures(runs);
}

void cmd_scale_study(const RunOptions& o) {
  const train::TrainConfig cfg = effective(o);
  const data::Splits raw = load(o);
  fs::create_directories(o.out_dir);
  std::vector<double> fractions =
      o.fractions.empty() ? std::vector<double>{0.25, 0.5, 0.75, 1.0} : o.fractions;
  std::sort(fractions.begin(), fractions.end());

  std::vector<RunResult> runs;
  for (double f : fractions) {
    data::Splits sub = raw;
    sub.train = data::prefix(raw.train, f);
    const std::string name = "train_" + fraction_label(f);
    run_seeds(o, sub, cfg, o.impute, o.drop, name, join(o.out_dir, name), runs);
  }
  {
    std::ofstream out = open_out(join(o.out_dir, "scale.csv"));
    out << "fraction,seed,test_auprc,test_auroc\n";
    for (const RunResult& r : runs) {
      if (!r.ok) continue;
      out << r.variant.substr(6) << ',' << r.seed << ',' << fixed(r.test_auprc) << ','
          << fixed(r.test_auroc) << '\n';
    }
  }
  const auto rows = summarize(runs);
  write_summary_csv(rows, join(o.out_dir, "summary.csv"));

  std::ofstream out = open_out(join(o.out_dir, "scale_summary.csv"));
  out << "fraction,runs,auprc_mean,auprc_ci95,auroc_mean,auroc_ci95\n";
  std::vector<double> ypr, epr, yroc, eroc;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    std::vector<double> pr, roc;
    for (const RunResult& r : runs) {
      if (r.ok && r.variant == rows[k].variant) {
        pr.push_back(r.test_auprc);
        roc.push_back(r.test_auroc);
      }
    }
    const double cpr = ci95_halfwidth(pr), croc = ci95_halfwidth(roc);
    out << fraction_label(fractions[k]) << ',' << rows[k].runs << ','
        << fixed(rows[k].auprc_mean) << ',' << fixed(cpr) << ',' << fixed(rows[k].auroc_mean)
        << ',' << fixed(croc) << '\n';
    ypr.push_back(100.0 * rows[k].auprc_mean);
    epr.push_back(100.0 * cpr);
    yroc.push_back(100.0 * rows[k].auroc_mean);
    eroc.push_back(100.0 * croc);
  }
  std::vector<double> xs;
  for (double f : fractions) xs.push_back(100.0 * f);
  write_text(join(o.out_dir, "chart.svg"),
             line_chart_svg("SLAN on training-data prefixes (mean, 95% CI)",
                            "training data used (%)", "metric (x100)", xs,
                            {Series{"AUPRC", ypr, epr}, Series{"AUROC", yroc, eroc}}));
  print_summary(rows);
  check_failures(runs);
}

ImportanceReport compute_importance(const model::SlanParams& params,
                                    std::span<const train::Example> examples,
                                    const data::DatasetInfo& info) {
  if (params.config.aggregation != model::Aggregation::attention) {
    fail(ErrorKind::invalid_argument,
         "importance requires a checkpoint trained with attention aggregation");
  }
  const std::size_t s = params.config.sensors;
  std::vector<double> sum(s, 0.0);
  std::vector<std::size_t> count(s, 0);
  ImportanceReport rep;
  for (const train::Example& ex : examples) {
    model::RolloutTrace trace;
    model::predict_logits(params, ex.schedule, ex.statics, &trace);
    for (std::size_t j = 0; j < ex.schedule.steps.size(); ++j) {
      const auto& active = ex.schedule.steps[j].active;
      for (std::size_t k = 0; k < active.size(); ++k) {
        sum[active[k].sensor] += trace.attention[j][k];
        ++count[active[k].sensor];
      }
    }
    rep.observed_hours += ex.schedule.steps.back().time - ex.schedule.steps.front().time;
  }
  double total_mean = 0.0;
  for (std::size_t m = 0; m < s; ++m) {
    if (count[m] == 0) {
      rep.unobserved.push_back(static_cast<std::uint32_t>(m));
      continue;
    }
    SensorImportance si;
    si.sensor = static_cast<std::uint32_t>(m);
    si.name = m < info.sensor_names.size() ? info.sensor_names[m] : "sensor_" + std::to_string(m);
    si.count = count[m];
    si.rate_per_hour = rep.observed_hours > 0.0
                           ? static_cast<double>(count[m]) / rep.observed_hours
                           : 0.0;
    si.sum_importance = sum[m];
    si.mean_importance = sum[m] / static_cast<double>(count[m]);
    total_mean += si.mean_importance;
    rep.sensors.push_back(si);
  }
  for (SensorImportance& si : rep.sensors) si.norm_importance = si.mean_importance / total_mean;
  return rep;
}

void cmd_importance(const RunOptions& o) {
  if (o.checkpoint.empty()) fail(ErrorKind::invalid_argument, "--checkpoint is required");
  const data::Splits raw = load(o);
  const model::SlanParams params = model::load_checkpoint(o.checkpoint);
  const PreparedSplits p = prepare_splits(raw, o.impute, o.drop, o.seeds.front());
  const ImportanceReport rep = compute_importance(params, p.test_ex, raw.train.info);
  fs::create_directories(o.out_dir);

  auto rank_by = [&](auto key) {
    std::vector<std::size_t> order(rep.sensors.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return key(rep.sensors[a]) > key(rep.sensors[b]); });
    std::vector<std::size_t> rank(order.size());
    for (std::size_t r = 0; r < order.size(); ++r) rank[order[r]] = r + 1;
    return rank;
  };
  const auto imp_rank = rank_by([](const SensorImportance& s) { return s.norm_importance; });
  const auto rate_rank = rank_by([](const SensorImportance& s) { return s.rate_per_hour; });

  std::ofstream out = open_out(join(o.out_dir, "summary.csv"));
  out << "sensor,name,count,rate_per_hour,sum_importance,mean_importance,norm_importance,"
         "importance_rank,rate_rank\n";
  std::printf("%-14s %7s %10s %10s %8s %8s\n", "sensor", "count", "rate/h", "normI", "rank(I)",
              "rank(r)");
  for (std::size_t k = 0; k < rep.sensors.size(); ++k) {
    const SensorImportance& si = rep.sensors[k];
    out << si.sensor << ',' << si.name << ',' << si.count << ',' << fixed(si.rate_per_hour) << ','
        << fixed(si.sum_importance) << ',' << fixed(si.mean_importance) << ','
        << fixed(si.norm_importance, 12) << ',' << imp_rank[k] << ',' << rate_rank[k] << '\n';
    std::printf("%-14s %7zu %10.4f %10.4f %8zu %8zu\n", si.name.c_str(), si.count,
                si.rate_per_hour, si.norm_importance, imp_rank[k], rate_rank[k]);
  }
  for (std::uint32_t m : rep.unobserved) {
    std::printf("note: sensor %u never measured in the test split; excluded\n", m);
  }

  std::vector<std::string> labels;
  std::vector<double> norm_i, norm_r;
  double rate_total = 0.0;
  for (const SensorImportance& si : rep.sensors) rate_total += si.rate_per_hour;
  for (const SensorImportance& si : rep.sensors) {
    labels.push_back(si.name);
    norm_i.push_back(si.norm_importance);
    norm_r.push_back(rate_total > 0.0 ? si.rate_per_hour / rate_total : 0.0);
  }
  write_text(join(o.out_dir, "chart.svg"),
             bar_chart_svg("Sensor importance vs sampling rate", labels,
                           {Series{"normI", norm_i, {}}, Series{"sampling rate share", norm_r, {}}}));
}

void cmd_bench(const RunOptions& o) {
  train::TrainConfig cfg = effective(o);
  cfg.epochs = 1;
  cfg.patience = 1;
  fs::create_directories(o.out_dir);
  std::ofstream out = open_out(join(o.out_dir, "bench.csv"));
  out << "max_steps,avg_steps,cell_updates,seconds_per_epoch\n";
  std::vector<double> secs;
  for (std::size_t steps : {o.bench_max_steps, 2 * o.bench_max_steps}) {
    data::SyntheticConfig sc = o.synthetic;
    sc.max_steps = steps;
    const data::Splits raw = data::split_dataset(data::generate_synthetic(sc), o.split_seed);
    const PreparedSplits p = prepare_splits(raw, o.impute, 0.0, 0);
    std::size_t nsteps = 0, updates = 0;
    for (const train::Example& ex : p.train_ex) {
      nsteps += ex.schedule.steps.size();
      for (const data::Step& st : ex.schedule.steps) updates += st.active.size();
    }
    double best = std::numeric_limits<double>::infinity();
    for (int rep = 0; rep < 2; ++rep) {
      const train::TrainResult tr = train::train(p.train_ex, p.val_ex, p.train.info, cfg);
      best = std::min(best, tr.trace.front().seconds);
    }
    secs.push_back(best);
    out << steps << ',' << fixed(static_cast<double>(nsteps) / static_cast<double>(p.train_ex.size()), 3)
        << ',' << updates << ',' << fixed(best, 4) << '\n';
    std::printf("max_steps %4zu  epoch %.3f s\n", steps, best);
  }
  const double ratio = secs[1] / secs[0];
  std::printf("time ratio for doubled T: %.3f (linear = 2, tolerance <= 4): %s\n", ratio,
              ratio <= 4.0 ? "within 2x of linear" : "exceeds 2x of linear");
}

void run_command(const std::string& command, const RunOptions& o) {
  if (command == "generate") return cmd_generate(o);
  if (command == "train") return cmd_train(o);
  if (command == "eval") return cmd_eval(o);
  if (command == "ablate-agg") return cmd_ablate(AblationKind::aggregation, o);
  if (command == "ablate-impute") return cmd_ablate(AblationKind::imputation, o);
  if (command == "ablate-concat") return cmd_ablate(AblationKind::concat, o);
  if (command == "drop-study") return cmd_drop_study(o);
  if (command == "scale-study") return cmd_scale_study(o);
  if (command == "importance") return cmd_importance(o);
  if (command == "bench") return cmd_bench(o);
  fail(ErrorKind::invalid_argument, "unknown command '" + command + "'");
}

}  // namespace slan::exp
