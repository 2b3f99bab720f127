#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "slan/error.hpp"
#include "slan/experiments.hpp"
#include "support.hpp"

using namespace slan;
using namespace slan::exp;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Tiny but learnable settings so every command finishes in well under a second.
RunOptions tiny(const testing::TempDir& dir, const std::string& out) {
  RunOptions o;
  o.data_dir = dir.file("data");
  o.out_dir = dir.file(out);
  o.seeds = {1, 2};
  o.train.epochs = 2;
  o.train.patience = 2;
  o.train.hidden = 4;
  o.train.t2v_dim = 2;
  o.train.lr = 5e-3;
  o.synthetic.n = 120;
  o.synthetic.sensors = 3;
  o.synthetic.max_steps = 8;
  return o;
}

void generate(const testing::TempDir& dir, double missing_rate = 0.3) {
  RunOptions o = tiny(dir, "data");
  o.synthetic.missing_rate = missing_rate;
  o.out_dir = dir.file("data");
  cmd_generate(o);
}

std::size_t count_rows(const std::string& csv) { return read_csv(csv).size() - 1; }

}  // namespace

TEST_SUITE("experiments") {

TEST_CASE("summary statistics") {
  const auto [m, s] = mean_std({0.5, 0.6, 0.7});
  CHECK(m == doctest::Approx(0.6));
  CHECK(s == doctest::Approx(0.1));
  CHECK(mean_std({0.4}).second == 0.0);
  // Two degrees of freedom: t_p = (2p - 1) / sqrt(2p(1 - p)).
  const double t = 0.95 / std::sqrt(2.0 * 0.975 * 0.025);
  CHECK(ci95_halfwidth({0.5, 0.6, 0.7}) == doctest::Approx(t * 0.1 / std::sqrt(3.0)).epsilon(1e-12));
  CHECK(format_pct(0.552, 0.0065) == "55.20 ± 0.65");
}

TEST_CASE("options: parsing, unknown keys, bad values") {
  RunOptions o;
  apply_option(o, "seeds", "2024,2025");
  CHECK(o.seeds == std::vector<std::uint64_t>{2024, 2025});
  apply_option(o, "agg", "attention");
  CHECK(o.train.aggregation == model::Aggregation::attention);
  apply_option(o, "epochs", "3");
  CHECK(o.train.patience == 3);
  apply_option(o, "patience", "2");
  CHECK(o.train.patience == 2);
  CHECK_THROWS_AS(apply_option(o, "colour", "red"), Error);
  CHECK_THROWS_AS(apply_option(o, "lr", "fast"), Error);
  CHECK_THROWS_AS(apply_option(o, "seeds", ""), Error);
  CHECK_THROWS_AS(apply_option(o, "impute", "median"), Error);
}

TEST_CASE("generate: stats match the written files and are seed-deterministic") {
  testing::TempDir a("gen_a"), b("gen_b");
  generate(a);
  generate(b);
  for (const char* f : {"meta.json", "train.jsonl", "val.jsonl", "test.jsonl", "stats.csv"}) {
    CHECK(slurp(a.file(std::string("data/") + f)) == slurp(b.file(std::string("data/") + f)));
  }
  const data::Splits s = data::read_split_dir(a.file("data"));
  std::size_t n = 0, steps = 0, pos = 0;
  for (const data::Dataset* d : {&s.train, &s.val, &s.test}) {
    for (const data::Instance& inst : d->instances) {
      std::set<double> times;
      for (const auto& e : inst.events) times.insert(e.time);
      steps += times.size();
      pos += static_cast<std::size_t>(inst.label);
      ++n;
    }
  }
  const auto rows = read_csv(a.file("data/stats.csv"));
  REQUIRE(rows.size() == 2);
  CHECK(rows[1][0] == std::to_string(n));
  CHECK(rows[1][1] == "3");
  CHECK(std::stod(rows[1][3]) == doctest::Approx(static_cast<double>(steps) / n).epsilon(0.01));
  const double minority = 100.0 * std::min(pos, n - pos) / n;
  CHECK(std::stod(rows[1][5]) == doctest::Approx(minority).epsilon(1e-3));
}

TEST_CASE("train: one trace and checkpoint per seed, one summary row, deterministic") {
  testing::TempDir dir("train");
  generate(dir);
  RunOptions o = tiny(dir, "run1");
  cmd_train(o);
  for (int seed : {1, 2}) {
    CHECK(fs::exists(dir.file("run1/trace_" + std::to_string(seed) + ".csv")));
    CHECK(fs::exists(dir.file("run1/checkpoint_" + std::to_string(seed) + ".bin")));
  }
  CHECK(count_rows(dir.file("run1/summary.csv")) == 1);
  CHECK(count_rows(dir.file("run1/runs.csv")) == 2);
  o.out_dir = dir.file("run2");
  cmd_train(o);
  CHECK(slurp(dir.file("run1/summary.csv")) == slurp(dir.file("run2/summary.csv")));

  RunOptions e = tiny(dir, "eval");
  e.checkpoint = dir.file("run1");
  cmd_eval(e);
  const auto train_rows = read_csv(dir.file("run1/summary.csv"));
  const auto eval_rows = read_csv(dir.file("eval/summary.csv"));
  CHECK(train_rows[1][2] == eval_rows[1][2]);
  CHECK(train_rows[1][4] == eval_rows[1][4]);
}

TEST_CASE("missing dataset directory is not_found and names the path") {
  testing::TempDir dir("missing");
  RunOptions o = tiny(dir, "out");
  o.data_dir = dir.file("no_such_dir");
  try {
    cmd_train(o);
    FAIL("expected not_found");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::not_found);
    CHECK(std::string(e.what()).find("no_such_dir") != std::string::npos);
  }
}

TEST_CASE("ablate-concat: both matches train, table has variants x seeds runs") {
  testing::TempDir dir("concat");
  generate(dir);
  RunOptions o = tiny(dir, "abl");
  cmd_ablate(AblationKind::concat, o);
  CHECK(count_rows(dir.file("abl/runs.csv")) == 3 * 2);
  const std::string table = slurp(dir.file("abl/table.md"));
  CHECK(table.find("| global |") != std::string::npos);
  CHECK(table.find("| local |") != std::string::npos);
  RunOptions t = tiny(dir, "train");
  cmd_train(t);
  for (int seed : {1, 2}) {
    const std::string name = "trace_" + std::to_string(seed) + ".csv";
    const auto a = train::read_trace_csv(dir.file("abl/both/" + name));
    const auto b = train::read_trace_csv(dir.file("train/" + name));
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].val_auprc == b[i].val_auprc);
  }
}

TEST_CASE("ablate-impute: dense data gives identical none and ffill schedules") {
  testing::TempDir dir("impute");
  generate(dir, 0.0);
  const data::Splits raw = data::read_split_dir(dir.file("data"));
  const PreparedSplits none = prepare_splits(raw, data::ImputeMode::none, 0.0, 0);
  const PreparedSplits ffill = prepare_splits(raw, data::ImputeMode::ffill, 0.0, 0);
  for (std::size_t i = 0; i < none.train_ex.size(); ++i) {
    CHECK(data::encode_schedule(none.train_ex[i].schedule) ==
          data::encode_schedule(ffill.train_ex[i].schedule));
  }
  RunOptions o = tiny(dir, "abl");
  o.seeds = {3};
  cmd_ablate(AblationKind::imputation, o);
  CHECK(count_rows(dir.file("abl/runs.csv")) == 4);
  const auto a = train::read_trace_csv(dir.file("abl/none/trace_3.csv"));
  const auto b = train::read_trace_csv(dir.file("abl/ffill/trace_3.csv"));
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].train_loss == b[i].train_loss);
}

TEST_CASE("drop study: baseline row, one row per fraction and seed, chart") {
  testing::TempDir dir("drop");
  generate(dir);
  RunOptions o = tiny(dir, "drop");
  cmd_drop_study(o);
  CHECK(count_rows(dir.file("drop/drop.csv")) == 4 * 2);
  const auto summary = read_csv(dir.file("drop/drop_summary.csv"));
  REQUIRE(summary.size() == 5);
  CHECK(summary[1][0] == "0.00");
  CHECK(std::stod(summary[1][6]) == 0.0);
  CHECK(slurp(dir.file("drop/chart.svg")).rfind("<svg", 0) == 0);
  RunOptions t = tiny(dir, "train");
  cmd_train(t);
  const auto base = read_csv(dir.file("train/summary.csv"));
  CHECK(summary[1][2] == base[1][2]);
}

TEST_CASE("scale study: four fractions per seed, full prefix equals baseline") {
  testing::TempDir dir("scale");
  generate(dir);
  RunOptions o = tiny(dir, "scale");
  cmd_scale_study(o);
  CHECK(count_rows(dir.file("scale/scale.csv")) == 4 * 2);
  const auto rows = read_csv(dir.file("scale/scale_summary.csv"));
  REQUIRE(rows.size() == 5);
  CHECK(rows[4][0] == "1.00");
  RunOptions t = tiny(dir, "train");
  cmd_train(t);
  CHECK(rows[4][2] == read_csv(dir.file("train/summary.csv"))[1][2]);
}

TEST_CASE("importance: normalization, attention requirement, unobserved sensors") {
  testing::TempDir dir("imp");
  generate(dir);
  RunOptions o = tiny(dir, "attn");
  o.seeds = {1};
  o.train.aggregation = model::Aggregation::attention;
  cmd_train(o);
  RunOptions q = tiny(dir, "imp");
  q.checkpoint = dir.file("attn/checkpoint_1.bin");
  cmd_importance(q);
  double total = 0.0;
  const auto rows = read_csv(dir.file("imp/summary.csv"));
  for (std::size_t i = 1; i < rows.size(); ++i) total += std::stod(rows[i][6]);
  CHECK(std::abs(total - 1.0) <= 1e-9);  // CSV carries 12 decimals

  const model::SlanParams p = model::load_checkpoint(q.checkpoint);
  const PreparedSplits splits =
      prepare_splits(data::read_split_dir(dir.file("data")), data::ImputeMode::none, 0.0, 0);
  const ImportanceReport rep = compute_importance(p, splits.test_ex, splits.test.info);
  double exact = 0.0;
  for (const SensorImportance& s : rep.sensors) exact += s.norm_importance;
  CHECK(std::abs(exact - 1.0) <= 1e-12);

  // Sensor 2 never appears: excluded and reported.
  std::vector<train::Example> subset;
  for (train::Example ex : splits.test_ex) {
    for (data::Step& st : ex.schedule.steps) {
      std::erase_if(st.active, [](const data::Activation& a) { return a.sensor == 2; });
    }
    std::erase_if(ex.schedule.steps, [](const data::Step& st) { return st.active.empty(); });
    if (ex.schedule.steps.empty()) continue;
    ex.schedule.last_seen[2].reset();
    subset.push_back(ex);
  }
  const ImportanceReport part = compute_importance(p, subset, splits.test.info);
  CHECK(part.sensors.size() == 2);
  CHECK(part.unobserved == std::vector<std::uint32_t>{2});

  RunOptions m = tiny(dir, "imp2");
  m.checkpoint = dir.file("attn/checkpoint_1.bin");
  RunOptions mean_run = tiny(dir, "mean");
  mean_run.seeds = {1};
  cmd_train(mean_run);
  m.checkpoint = dir.file("mean/checkpoint_1.bin");
  CHECK_THROWS_AS(cmd_importance(m), Error);
}

TEST_CASE("importance on a single-sensor model is 1") {
  model::ModelConfig c;
  c.sensors = 1;
  c.hidden = 3;
  c.t2v_dim = 2;
  c.aggregation = model::Aggregation::attention;
  const model::SlanParams p = model::init_params(c);
  train::Example ex;
  ex.schedule = data::build_schedule(
      testing::make_instance({{0.0, 0, 0.1}, {1.0, 0, 0.4}, {2.5, 0, -0.3}}), 1);
  const std::vector<train::Example> xs{ex};
  const ImportanceReport rep = compute_importance(p, xs, testing::info_for(1));
  REQUIRE(rep.sensors.size() == 1);
  CHECK(rep.sensors[0].norm_importance == 1.0);
  CHECK(rep.sensors[0].count == 3);
  CHECK(rep.sensors[0].rate_per_hour == doctest::Approx(3.0 / 2.5));
}

TEST_CASE("partial failures are listed by variant and seed") {
  testing::TempDir dir("fail");
  data::Splits s;
  s.train.info = s.val.info = s.test.info = testing::info_for(2);
  for (int i = 0; i < 6; ++i) {
    auto inst = testing::make_instance({{0.0, 0, 1.0 * i}, {1.0, 1, 0.5}}, i % 2, "t" + std::to_string(i));
    s.train.instances.push_back(inst);
    inst.label = 0;  // single-class validation split makes AUPRC undefined
    s.val.instances.push_back(inst);
    inst.label = i % 2;
    s.test.instances.push_back(inst);
  }
  data::write_split_dir(s, dir.file("data"));
  RunOptions o = tiny(dir, "out");
  try {
    cmd_train(o);
    FAIL("expected failure");
  } catch (const Error& e) {
    const std::string msg = e.what();
    CHECK(msg.find("(slan, 1)") != std::string::npos);
    CHECK(msg.find("(slan, 2)") != std::string::npos);
  }
  const auto runs = read_csv(dir.file("out/runs.csv"));
  REQUIRE(runs.size() == 3);
  CHECK(runs[1][2] == "0");
}

TEST_CASE("bench writes two timed rows") {
  testing::TempDir dir("bench");
  RunOptions o = tiny(dir, "bench");
  o.bench_max_steps = 4;
  cmd_bench(o);
  const auto rows = read_csv(dir.file("bench/bench.csv"));
  REQUIRE(rows.size() == 3);
  CHECK(rows[1][0] == "4");
  CHECK(rows[2][0] == "8");
}

TEST_CASE("svg charts are well-formed text") {
  const std::string line = line_chart_svg("t", "x", "y", {0, 25, 50}, {Series{"a", {1, 2, 3}, {0.1, 0.1, 0.1}}});
  CHECK(line.rfind("<svg", 0) == 0);
  CHECK(line.find("</svg>") != std::string::npos);
  CHECK(line.find("<polyline") != std::string::npos);
  const std::string bars = bar_chart_svg("t", {"a", "b"}, {Series{"s", {0.4, 0.6}, {}}});
  CHECK(bars.find("<rect") != std::string::npos);
}

}  // TEST_SUITE
