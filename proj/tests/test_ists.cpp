#include <doctest.h>

#include <fstream>
#include <map>
#include <numeric>

#include "slan/error.hpp"
#include "slan/ists.hpp"
#include "support.hpp"

using namespace slan;
using namespace slan::data;
using testing::info_for;
using testing::make_instance;

namespace {

Dataset dataset_of(std::vector<Instance> xs, std::size_t sensors) {
  Dataset d;
  d.info = info_for(sensors);
  d.instances = std::move(xs);
  return d;
}

bool is_subsequence(const std::vector<Observation>& sub, const std::vector<Observation>& full) {
  std::size_t k = 0;
  for (const Observation& o : full) {
    if (k < sub.size() && sub[k] == o) ++k;
  }
  return k == sub.size();
}

}  // namespace

TEST_SUITE("ists") {

TEST_CASE("validate rejects unsorted events and names the instance") {
  const Instance bad = make_instance({{1.0, 0, 1.0}, {0.5, 1, 2.0}}, 0, "patient-17");
  try {
    validate(bad, info_for(2));
    FAIL("expected rejection");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::invalid_argument);
    CHECK(std::string(e.what()).find("patient-17") != std::string::npos);
  }
}

TEST_CASE("validate rejects out-of-range sensors, bad labels and empty instances") {
  CHECK_THROWS_AS(validate(make_instance({{0.0, 3, 1.0}}), info_for(2)), Error);
  CHECK_THROWS_AS(validate(make_instance({{0.0, 0, 1.0}}, 2), info_for(2)), Error);
  CHECK_THROWS_AS(validate(make_instance({}), info_for(2)), Error);
  CHECK_NOTHROW(validate(make_instance({{0.0, 0, 1.0}, {0.0, 1, 2.0}}), info_for(2)));
}

TEST_CASE("schedule groups timestamps and computes per-sensor delays") {
  const Instance x = make_instance({{0.0, 0, 1.0},
                                    {0.0, 2, 2.0},
                                    {1.5, 1, 3.0},
                                    {1.5 + 5e-10, 2, 4.0},
                                    {4.0, 0, 5.0}});
  const SwitchSchedule s = build_schedule(x, 4);
  REQUIRE(s.steps.size() == 3);
  REQUIRE(s.steps[0].active.size() == 2);
  CHECK(s.steps[0].active[0].delay == 0.0);
  CHECK(s.steps[0].active[1].delay == 0.0);
  REQUIRE(s.steps[1].active.size() == 2);
  CHECK(s.steps[1].active[0].sensor == 1);
  CHECK(s.steps[1].active[0].delay == 0.0);
  CHECK(s.steps[1].active[1].sensor == 2);
  CHECK(s.steps[1].active[1].delay == doctest::Approx(1.5));
  CHECK(s.steps[2].active[0].delay == doctest::Approx(4.0));
  CHECK(s.last_seen[0] == std::optional<std::size_t>(2));
  CHECK(s.last_seen[1] == std::optional<std::size_t>(1));
  CHECK(s.last_seen[2] == std::optional<std::size_t>(1));
  CHECK_FALSE(s.last_seen[3].has_value());
}

TEST_CASE("cumulative delays equal time since first observation") {
  SyntheticConfig cfg;
  cfg.n = 50;
  cfg.seed = 11;
  const Dataset d = generate_synthetic(cfg);
  for (const Instance& inst : d.instances) {
    const SwitchSchedule s = build_schedule(inst, cfg.sensors);
    std::map<std::uint32_t, double> first, total;
    for (const Step& st : s.steps) {
      for (const Activation& a : st.active) {
        if (!first.count(a.sensor)) first[a.sensor] = st.time;
        total[a.sensor] += a.delay;
        CHECK(total[a.sensor] == doctest::Approx(st.time - first[a.sensor]).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("drop fraction 0 is the identity") {
  const Instance x = testing::toy_instance();
  CHECK(drop_observations(x, 0.0, 5) == x);
}

TEST_CASE("drop removes exactly round(f n) events and keeps survivors in order") {
  std::vector<Observation> ev;
  for (int k = 0; k < 100; ++k) ev.push_back({static_cast<double>(k), 0, static_cast<double>(k)});
  Instance x = make_instance(ev, 1, "d");
  x.statics = std::vector<double>{0.5, -1.0};
  for (std::uint64_t seed : {1u, 2u, 99u}) {
    const Instance y = drop_observations(x, 0.25, seed);
    CHECK(y.events.size() == 75);
    CHECK(y.label == x.label);
    CHECK(y.statics == x.statics);
    CHECK(is_subsequence(y.events, x.events));
  }
}

TEST_CASE("drop keeps one event when the fraction would empty the instance") {
  const Instance x = make_instance({{0.0, 0, 1.0}, {1.0, 1, 2.0}});
  std::size_t warnings = 0;
  const Instance y = drop_observations(x, 0.9, 3, &warnings);
  CHECK(y.events.size() == 1);
  CHECK(warnings == 1);
  CHECK_THROWS_AS(drop_observations(x, 1.0, 3), Error);
  CHECK_THROWS_AS(drop_observations(x, -0.1, 3), Error);
}

TEST_CASE("drop retention per sensor is close to 1 - f") {
  std::vector<Instance> xs;
  for (int i = 0; i < 100; ++i) {
    std::vector<Observation> ev;
    for (int k = 0; k < 50; ++k) {
      ev.push_back({static_cast<double>(k), 0, 1.0});
      ev.push_back({static_cast<double>(k), 1, 1.0});
    }
    xs.push_back(make_instance(ev, i % 2, "i" + std::to_string(i)));
  }
  const Dataset d = dataset_of(xs, 2);
  const Dataset y = drop_observations(d, 0.25, 2024);
  double kept[2] = {0, 0};
  for (const Instance& inst : y.instances) {
    for (const Observation& o : inst.events) kept[o.sensor] += 1;
  }
  CHECK(kept[0] / 5000.0 == doctest::Approx(0.75).epsilon(0.02 / 0.75));
  CHECK(kept[1] / 5000.0 == doctest::Approx(0.75).epsilon(0.02 / 0.75));
}

TEST_CASE("standardize maps mean to 0 and mean + std to 1 and round-trips") {
  const Dataset train = dataset_of({make_instance({{0.0, 0, 1.0}, {1.0, 0, 3.0}}, 0, "a"),
                                    make_instance({{0.0, 0, 5.0}, {0.0, 1, 7.0}}, 1, "b")},
                                   2);
  const DatasetMeta meta = compute_meta(train);
  CHECK(meta.sensor_mean[0] == doctest::Approx(3.0));
  CHECK(meta.sensor_std[1] == 1.0);  // constant sensor
  const double mu = meta.sensor_mean[0], sd = meta.sensor_std[0];
  const Dataset probe = dataset_of({make_instance({{0.0, 0, mu}, {1.0, 0, mu + sd}, {1.0, 1, 7.0}})}, 2);
  const Dataset z = standardize(probe, meta);
  CHECK(z.instances[0].events[0].value == 0.0);
  CHECK(z.instances[0].events[1].value == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(z.instances[0].events[2].value == 0.0);

  SyntheticConfig cfg;
  cfg.n = 40;
  cfg.static_count = 2;
  const Dataset syn = generate_synthetic(cfg);
  const DatasetMeta m2 = compute_meta(syn);
  const Dataset back = destandardize(standardize(syn, m2), m2);
  for (std::size_t i = 0; i < syn.size(); ++i) {
    for (std::size_t k = 0; k < syn.instances[i].events.size(); ++k) {
      CHECK(std::abs(back.instances[i].events[k].value - syn.instances[i].events[k].value) <= 1e-12);
    }
    for (std::size_t k = 0; k < 2; ++k) {
      CHECK(std::abs((*back.instances[i].statics)[k] - (*syn.instances[i].statics)[k]) <= 1e-12);
    }
  }
}

TEST_CASE("standardized training split has zero mean and unit std per sensor") {
  SyntheticConfig cfg;
  cfg.n = 300;
  const Dataset d = generate_synthetic(cfg);
  const Dataset z = standardize(d, compute_meta(d));
  for (std::uint32_t m = 0; m < cfg.sensors; ++m) {
    std::vector<double> v;
    for (const Instance& inst : z.instances) {
      for (const Observation& o : inst.events) {
        if (o.sensor == m) v.push_back(o.value);
      }
    }
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double sq = 0.0;
    for (double x : v) sq += (x - mean) * (x - mean);
    CHECK(std::abs(mean) < 1e-10);
    CHECK(std::abs(std::sqrt(sq / static_cast<double>(v.size())) - 1.0) < 1e-10);
  }
}

TEST_CASE("imputation leaves a dense instance unchanged") {
  const Instance x = make_instance({{0.0, 0, 1.0}, {0.0, 1, 2.0}, {1.0, 0, 3.0}, {1.0, 1, 4.0}});
  const DatasetMeta meta = compute_meta(dataset_of({x}, 2));
  for (ImputeMode mode : {ImputeMode::ffill, ImputeMode::mean, ImputeMode::interpolation}) {
    CHECK(impute(x, mode, meta) == x);
  }
}

TEST_CASE("interpolation takes the linear midpoint") {
  const Instance x = make_instance({{0.0, 0, 2.0}, {0.0, 1, 0.0}, {1.0, 1, 0.0}, {2.0, 0, 4.0}});
  const DatasetMeta meta = compute_meta(dataset_of({x}, 2));
  const Instance y = impute(x, ImputeMode::interpolation, meta);
  bool found = false;
  for (const Observation& o : y.events) {
    if (o.sensor == 0 && o.time == 1.0) {
      CHECK(o.value == doctest::Approx(3.0));
      found = true;
    }
  }
  CHECK(found);
}

TEST_CASE("ffill uses the train mean before the first observation and the last value after") {
  const Instance train = make_instance({{0.0, 0, 10.0}, {0.0, 1, 1.0}, {1.0, 0, 20.0}});
  const DatasetMeta meta = compute_meta(dataset_of({train}, 2));
  const Instance x = make_instance({{0.0, 0, 1.0}, {1.0, 1, 5.0}, {2.0, 0, 2.0}});
  const Instance y = impute(x, ImputeMode::ffill, meta);
  std::map<std::pair<double, std::uint32_t>, double> cell;
  for (const Observation& o : y.events) cell[{o.time, o.sensor}] = o.value;
  CHECK(cell.size() == 6);
  CHECK(cell[{0.0, 1}] == doctest::Approx(1.0));  // train mean of sensor 1
  CHECK(cell[{1.0, 0}] == doctest::Approx(1.0));
  CHECK(cell[{2.0, 1}] == doctest::Approx(5.0));
}

TEST_CASE("mean imputation fills a never-observed sensor with its train mean") {
  const Instance train = make_instance({{0.0, 0, 1.0}, {0.0, 1, 4.0}, {1.0, 1, 6.0}});
  const DatasetMeta meta = compute_meta(dataset_of({train}, 2));
  const Instance x = make_instance({{0.0, 0, 1.0}, {3.0, 0, 2.0}});
  const Instance y = impute(x, ImputeMode::mean, meta);
  int seen = 0;
  for (const Observation& o : y.events) {
    if (o.sensor == 1) {
      CHECK(o.value == doctest::Approx(5.0));
      ++seen;
    }
  }
  CHECK(seen == 2);
}

TEST_CASE("imputed schedules activate every sensor at every step") {
  SyntheticConfig cfg;
  cfg.n = 30;
  const Dataset d = generate_synthetic(cfg);
  const DatasetMeta meta = compute_meta(d);
  for (ImputeMode mode : {ImputeMode::ffill, ImputeMode::mean, ImputeMode::interpolation}) {
    for (const Instance& inst : impute(d, mode, meta).instances) {
      for (const Step& st : build_schedule(inst, cfg.sensors).steps) {
        CHECK(st.active.size() == cfg.sensors);
      }
    }
  }
}

TEST_CASE("unknown imputation mode is rejected") {
  CHECK_THROWS_AS(parse_impute_mode("median"), Error);
  CHECK(parse_impute_mode("interpolation") == ImputeMode::interpolation);
}

TEST_CASE("sampler: balanced draws, imbalance correction, determinism, single class") {
  std::vector<int> balanced(100);
  for (std::size_t i = 0; i < balanced.size(); ++i) balanced[i] = static_cast<int>(i % 2);
  std::vector<int> skewed(1000, 0);
  for (std::size_t i = 0; i < 100; ++i) skewed[i * 10] = 1;

  WeightedSampler a(skewed, 7), b(skewed, 7);
  std::size_t minority = 0;
  const std::size_t draws = 100000;
  for (std::size_t k = 0; k < draws; ++k) {
    const std::size_t i = a.next();
    CHECK_EQ(i, b.next());
    minority += static_cast<std::size_t>(skewed[i]);
  }
  CHECK(static_cast<double>(minority) / draws == doctest::Approx(0.5).epsilon(0.02));

  WeightedSampler c(balanced, 3);
  std::size_t ones = 0;
  for (int k = 0; k < 20000; ++k) ones += static_cast<std::size_t>(balanced[c.next()]);
  CHECK(ones / 20000.0 == doctest::Approx(0.5).epsilon(0.04));

  CHECK_THROWS_AS(WeightedSampler(std::vector<int>(10, 1), 1), Error);
}

TEST_CASE("synthetic: dense regular series when missing_rate is 0") {
  SyntheticConfig cfg;
  cfg.n = 20;
  cfg.missing_rate = 0.0;
  cfg.max_steps = 12;
  for (const Instance& inst : generate_synthetic(cfg).instances) {
    const SwitchSchedule s = build_schedule(inst, cfg.sensors);
    REQUIRE(s.steps.size() == 12);
    for (std::size_t j = 0; j < s.steps.size(); ++j) {
      CHECK(s.steps[j].time == static_cast<double>(j));
      CHECK(s.steps[j].active.size() == cfg.sensors);
    }
  }
}

TEST_CASE("synthetic: noiseless drift makes each informative sensor's last value separable") {
  SyntheticConfig cfg;
  cfg.n = 400;
  cfg.noise = 0.0;
  cfg.drift = 1.0;
  const Dataset d = generate_synthetic(cfg);
  const std::size_t informative = (cfg.sensors + 1) / 2;
  for (std::uint32_t m = 0; m < informative; ++m) {
    double max0 = -1e300, min0 = 1e300, max1 = -1e300, min1 = 1e300;
    for (const Instance& inst : d.instances) {
      std::optional<double> last;
      for (const Observation& o : inst.events) {
        if (o.sensor == m) last = o.value;
      }
      if (!last) continue;
      if (inst.label == 0) max0 = std::max(max0, *last), min0 = std::min(min0, *last);
      else max1 = std::max(max1, *last), min1 = std::min(min1, *last);
    }
    CHECK((max0 < min1 || max1 < min0));
  }
}

TEST_CASE("synthetic: default config is balanced and seed-deterministic") {
  SyntheticConfig cfg;
  cfg.n = 2000;
  const Dataset d = generate_synthetic(cfg);
  double pos = 0;
  for (const Instance& inst : d.instances) pos += inst.label;
  CHECK(pos / 2000.0 == doctest::Approx(0.5).epsilon(0.04));
  CHECK(generate_synthetic(cfg) == d);
  for (const Instance& inst : d.instances) CHECK_NOTHROW(validate(inst, d.info));
}

TEST_CASE("synthetic: degenerate configs are rejected") {
  SyntheticConfig cfg;
  cfg.n = 1;
  CHECK_THROWS_AS(generate_synthetic(cfg), Error);
  cfg = {};
  cfg.sensors = 1;
  CHECK_THROWS_AS(generate_synthetic(cfg), Error);
  cfg = {};
  cfg.missing_rate = 1.0;
  CHECK_THROWS_AS(generate_synthetic(cfg), Error);
}

TEST_CASE("split is 70/15/15 and deterministic") {
  SyntheticConfig cfg;
  cfg.n = 200;
  const Dataset d = generate_synthetic(cfg);
  const Splits a = split_dataset(d, 5), b = split_dataset(d, 5);
  CHECK(a.train.size() == 140);
  CHECK(a.val.size() == 30);
  CHECK(a.test.size() == 30);
  CHECK(a.train == b.train);
  CHECK(a.test == b.test);
  CHECK(prefix(a.train, 0.25).size() == 35);
  CHECK(prefix(a.train, 1.0) == a.train);
}

TEST_CASE("jsonl round trip, empty file and malformed input") {
  testing::TempDir dir("io");
  SyntheticConfig cfg;
  cfg.n = 25;
  cfg.static_count = 2;
  const Dataset d = generate_synthetic(cfg);
  write_jsonl(d, dir.file("d.jsonl"));
  CHECK(read_jsonl(dir.file("d.jsonl"), d.info) == d);

  { std::ofstream(dir.file("empty.jsonl")); }
  CHECK(read_jsonl(dir.file("empty.jsonl"), d.info).size() == 0);

  {
    std::ofstream out(dir.file("bad.jsonl"));
    out << R"({"id":"a","label":0,"statics":[1,2],"events":[[0,0,1.0]]})" << "\n";
    out << "{not json\n";
  }
  try {
    read_jsonl(dir.file("bad.jsonl"), d.info);
    FAIL("expected parse error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::parse);
    CHECK(std::string(e.what()).find(":2:") != std::string::npos);
  }

  {
    std::ofstream out(dir.file("unsorted.jsonl"));
    out << R"({"id":"late","label":0,"statics":[1,2],"events":[[2,0,1.0],[1,0,1.0]]})" << "\n";
  }
  try {
    read_jsonl(dir.file("unsorted.jsonl"), d.info);
    FAIL("expected rejection");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("late") != std::string::npos);
  }

  CHECK_THROWS_AS(read_jsonl(dir.file("missing.jsonl"), d.info), Error);
}

TEST_CASE("split directory round trip") {
  testing::TempDir dir("split");
  SyntheticConfig cfg;
  cfg.n = 30;
  const Splits s = split_dataset(generate_synthetic(cfg), 1);
  write_split_dir(s, dir.path.string());
  const Splits r = read_split_dir(dir.path.string());
  CHECK(r.train == s.train);
  CHECK(r.val == s.val);
  CHECK(r.test == s.test);
  try {
    read_split_dir(dir.file("nope"));
    FAIL("expected not_found");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::not_found);
    CHECK(std::string(e.what()).find("nope") != std::string::npos);
  }
}

}  // TEST_SUITE
