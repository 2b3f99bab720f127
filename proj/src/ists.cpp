#include "slan/ists.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

#include "slan/error.hpp"

namespace slan::data {

void validate(const Instance& instance, const DatasetInfo& info) {
  const std::string where = "instance '" + instance.id + "': ";
  if (instance.events.empty()) fail(ErrorKind::invalid_argument, where + "no events");
  if (instance.label != 0 && instance.label != 1) {
    fail(ErrorKind::invalid_argument, where + "label must be 0 or 1");
  }
  for (std::size_t k = 0; k < instance.events.size(); ++k) {
    const Observation& e = instance.events[k];
    if (!std::isfinite(e.time) || e.time < 0.0) {
      fail(ErrorKind::invalid_argument, where + "event " + std::to_string(k) +
                                            " has invalid time " + std::to_string(e.time));
    }
    if (!std::isfinite(e.value)) {
      fail(ErrorKind::invalid_argument, where + "event " + std::to_string(k) +
                                            " has non-finite value");
    }
    if (e.sensor >= info.sensor_count) {
      fail(ErrorKind::invalid_argument, where + "sensor " + std::to_string(e.sensor) +
                                            " out of range (sensor_count " +
                                            std::to_string(info.sensor_count) + ")");
    }
    if (k > 0) {
      const Observation& p = instance.events[k - 1];
      if (e.time < p.time || (e.time == p.time && e.sensor <= p.sensor)) {
        fail(ErrorKind::invalid_argument,
             where + "events not sorted by (time, sensor) at index " + std::to_string(k));
      }
    }
  }
  if (instance.statics) {
    if (instance.statics->size() != info.static_count) {
      fail(ErrorKind::invalid_argument, where + "expected " +
                                            std::to_string(info.static_count) +
                                            " statics, got " +
                                            std::to_string(instance.statics->size()));
    }
    for (double v : *instance.statics) {
      if (!std::isfinite(v)) fail(ErrorKind::invalid_argument, where + "non-finite static");
    }
  } else if (info.static_count != 0) {
    fail(ErrorKind::invalid_argument, where + "missing statics");
  }
}

namespace {

// Groups events into steps: an event joins the current step when it lies
// within kTimeTolerance of the step's first event.
template <class F>
void for_each_step(const std::vector<Observation>& events, F&& f) {
  std::size_t begin = 0;
  while (begin < events.size()) {
    std::size_t end = begin + 1;
    while (end < events.size() && events[end].time - events[begin].time <= kTimeTolerance) ++end;
    f(events[begin].time, begin, end);
    begin = end;
  }
}

}  // namespace

SwitchSchedule build_schedule(const Instance& instance, std::size_t sensor_count) {
  if (instance.events.empty()) {
    fail(ErrorKind::invalid_argument,
         "build_schedule: instance '" + instance.id + "' has no events");
  }
  SwitchSchedule sched;
  sched.sensor_count = sensor_count;
  sched.last_seen.assign(sensor_count, std::nullopt);
  std::vector<double> last_time(sensor_count, 0.0);

  for_each_step(instance.events, [&](double time, std::size_t begin, std::size_t end) {
    Step step;
    step.time = time;
    for (std::size_t k = begin; k < end; ++k) {
      const Observation& e = instance.events[k];
      if (e.sensor >= sensor_count) {
        fail(ErrorKind::invalid_argument, "build_schedule: sensor " +
                                              std::to_string(e.sensor) + " out of range");
      }
      const auto m = e.sensor;
      const double delay = sched.last_seen[m] ? time - last_time[m] : 0.0;
      step.active.push_back(Activation{m, e.value, delay});
    }
    std::sort(step.active.begin(), step.active.end(),
              [](const Activation& a, const Activation& b) { return a.sensor < b.sensor; });
    for (std::size_t k = 1; k < step.active.size(); ++k) {
      if (step.active[k].sensor == step.active[k - 1].sensor) {
        fail(ErrorKind::invalid_argument,
             "build_schedule: instance '" + instance.id + "' observes sensor " +
                 std::to_string(step.active[k].sensor) + " twice at time " +
                 std::to_string(time));
      }
    }
    const std::size_t index = sched.steps.size();
    for (const Activation& a : step.active) {
      sched.last_seen[a.sensor] = index;
      last_time[a.sensor] = time;
    }
    sched.steps.push_back(std::move(step));
  });
  return sched;
}

namespace {

template <class T>
void put(std::string& out, const T& v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

}  // namespace

std::string encode_schedule(const SwitchSchedule& schedule) {
  std::string out;
  put(out, static_cast<std::uint64_t>(schedule.sensor_count));
  put(out, static_cast<std::uint64_t>(schedule.steps.size()));
  for (const Step& step : schedule.steps) {
    put(out, step.time);
    put(out, static_cast<std::uint64_t>(step.active.size()));
    for (const Activation& a : step.active) {
      put(out, a.sensor);
      put(out, a.value);
      put(out, a.delay);
    }
  }
  for (const auto& seen : schedule.last_seen) {
    put(out, seen ? static_cast<std::int64_t>(*seen) : std::int64_t{-1});
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

void mean_std(const std::vector<double>& sum, const std::vector<double>& sumsq,
              const std::vector<std::size_t>& count, std::vector<double>& mean,
              std::vector<double>& stddev) {
  const std::size_t n = sum.size();
  mean.assign(n, 0.0);
  stddev.assign(n, 1.0);
  for (std::size_t m = 0; m < n; ++m) {
    if (count[m] == 0) continue;
    const double c = static_cast<double>(count[m]);
    mean[m] = sum[m] / c;
    const double var = std::max(0.0, sumsq[m] / c);
    const double sd = std::sqrt(var);
    // constant sensors map to 0 rather than dividing by ~0
    stddev[m] = sd > 1e-12 * std::max(1.0, std::abs(mean[m])) ? sd : 1.0;
  }
}

}  // namespace

DatasetMeta compute_meta(const Dataset& train) {
  DatasetMeta meta;
  meta.sensor_count = train.info.sensor_count;
  meta.static_count = train.info.static_count;

  const std::size_t s = meta.sensor_count;
  std::vector<double> sum(s, 0.0);
  std::vector<std::size_t> count(s, 0);
  for (const Instance& inst : train.instances) {
    for (const Observation& e : inst.events) {
      sum[e.sensor] += e.value;
      ++count[e.sensor];
    }
    (inst.label == 1 ? meta.positives : meta.negatives) += 1;
  }
  // two-pass variance: accumulate squared deviations from the mean
  std::vector<double> mean0(s, 0.0);
  for (std::size_t m = 0; m < s; ++m) {
    if (count[m] != 0) mean0[m] = sum[m] / static_cast<double>(count[m]);
  }
  std::vector<double> dev_sum(s, 0.0), sq(s, 0.0);
  for (const Instance& inst : train.instances) {
    for (const Observation& e : inst.events) {
      const double d = e.value - mean0[e.sensor];
      dev_sum[e.sensor] += d;
      sq[e.sensor] += d * d;
    }
  }
  mean_std(dev_sum, sq, count, meta.sensor_mean, meta.sensor_std);
  for (std::size_t m = 0; m < s; ++m) meta.sensor_mean[m] += mean0[m];

  const std::size_t d = meta.static_count;
  std::vector<double> ssum(d, 0.0);
  std::vector<std::size_t> scount(d, 0);
  for (const Instance& inst : train.instances) {
    if (!inst.statics) continue;
    for (std::size_t k = 0; k < d; ++k) {
      ssum[k] += (*inst.statics)[k];
      ++scount[k];
    }
  }
  std::vector<double> smean0(d, 0.0);
  for (std::size_t k = 0; k < d; ++k) {
    if (scount[k] != 0) smean0[k] = ssum[k] / static_cast<double>(scount[k]);
  }
  std::vector<double> sdev(d, 0.0), ssq(d, 0.0);
  for (const Instance& inst : train.instances) {
    if (!inst.statics) continue;
    for (std::size_t k = 0; k < d; ++k) {
      const double dv = (*inst.statics)[k] - smean0[k];
      sdev[k] += dv;
      ssq[k] += dv * dv;
    }
  }
  mean_std(sdev, ssq, scount, meta.static_mean, meta.static_std);
  for (std::size_t k = 0; k < d; ++k) meta.static_mean[k] += smean0[k];
  return meta;
}

namespace {

template <class F, class G>
Dataset map_values(const Dataset& dataset, F&& sensor_fn, G&& static_fn) {
  Dataset out = dataset;
  for (Instance& inst : out.instances) {
    for (Observation& e : inst.events) e.value = sensor_fn(e.sensor, e.value);
    if (inst.statics) {
      for (std::size_t k = 0; k < inst.statics->size(); ++k) {
        (*inst.statics)[k] = static_fn(k, (*inst.statics)[k]);
      }
    }
  }
  return out;
}

void check_meta(const Dataset& dataset, const DatasetMeta& meta) {
  if (meta.sensor_count != dataset.info.sensor_count ||
      meta.static_count != dataset.info.static_count) {
    fail(ErrorKind::invalid_argument, "dataset statistics do not match dataset dimensions");
  }
}

}  // namespace

Dataset standardize(const Dataset& dataset, const DatasetMeta& meta) {
  check_meta(dataset, meta);
  return map_values(
      dataset,
      [&](std::size_t m, double v) { return (v - meta.sensor_mean[m]) / meta.sensor_std[m]; },
      [&](std::size_t k, double v) { return (v - meta.static_mean[k]) / meta.static_std[k]; });
}

Dataset destandardize(const Dataset& dataset, const DatasetMeta& meta) {
  check_meta(dataset, meta);
  return map_values(
      dataset,
      [&](std::size_t m, double v) { return v * meta.sensor_std[m] + meta.sensor_mean[m]; },
      [&](std::size_t k, double v) { return v * meta.static_std[k] + meta.static_mean[k]; });
}

// ---------------------------------------------------------------------------

ImputeMode parse_impute_mode(const std::string& name) {
  if (name == "none") return ImputeMode::none;
  if (name == "ffill") return ImputeMode::ffill;
  if (name == "mean") return ImputeMode::mean;
  if (name == "interpolation" || name == "interp") return ImputeMode::interpolation;
  fail(ErrorKind::invalid_argument, "unknown imputation mode '" + name + "'");
}

const char* impute_mode_name(ImputeMode mode) noexcept {
  switch (mode) {
    case ImputeMode::none: return "none";
    case ImputeMode::ffill: return "ffill";
    case ImputeMode::mean: return "mean";
    case ImputeMode::interpolation: return "interpolation";
  }
  return "?";
}

Instance impute(const Instance& instance, ImputeMode mode, const DatasetMeta& meta) {
  if (mode == ImputeMode::none) return instance;
  const std::size_t s = meta.sensor_count;
  const SwitchSchedule sched = build_schedule(instance, s);
  const std::size_t l = sched.steps.size();

  // observed[m][j] -> value, if any
  std::vector<std::vector<std::optional<double>>> observed(
      s, std::vector<std::optional<double>>(l));
  for (std::size_t j = 0; j < l; ++j) {
    for (const Activation& a : sched.steps[j].active) observed[a.sensor][j] = a.value;
  }

  Instance out;
  out.id = instance.id;
  out.label = instance.label;
  out.statics = instance.statics;
  out.events.reserve(l * s);

  std::vector<std::vector<double>> filled(s, std::vector<double>(l));
  for (std::size_t m = 0; m < s; ++m) {
    const double fallback = meta.sensor_mean[m];
    std::optional<std::size_t> prev;
    for (std::size_t j = 0; j < l; ++j) {
      if (observed[m][j]) {
        filled[m][j] = *observed[m][j];
        prev = j;
        continue;
      }
      switch (mode) {
        case ImputeMode::mean:
          filled[m][j] = fallback;
          break;
        case ImputeMode::ffill:
          filled[m][j] = prev ? *observed[m][*prev] : fallback;
          break;
        case ImputeMode::interpolation: {
          if (!prev) {
            filled[m][j] = fallback;
            break;
          }
          std::optional<std::size_t> next;
          for (std::size_t k = j + 1; k < l; ++k) {
            if (observed[m][k]) {
              next = k;
              break;
            }
          }
          const double va = *observed[m][*prev];
          if (!next) {
            filled[m][j] = va;
            break;
          }
          const double ta = sched.steps[*prev].time;
          const double tb = sched.steps[*next].time;
          const double vb = *observed[m][*next];
          filled[m][j] = va + (vb - va) * (sched.steps[j].time - ta) / (tb - ta);
          break;
        }
        case ImputeMode::none:
          break;
      }
    }
  }
  for (std::size_t j = 0; j < l; ++j) {
    for (std::size_t m = 0; m < s; ++m) {
      out.events.push_back(
          Observation{sched.steps[j].time, static_cast<std::uint32_t>(m), filled[m][j]});
    }
  }
  return out;
}

Dataset impute(const Dataset& dataset, ImputeMode mode, const DatasetMeta& meta) {
  Dataset out;
  out.info = dataset.info;
  out.instances.reserve(dataset.size());
  for (const Instance& inst : dataset.instances) out.instances.push_back(impute(inst, mode, meta));
  return out;
}

// ---------------------------------------------------------------------------

namespace {

Instance drop_with(const Instance& instance, double fraction, std::mt19937_64& rng,
                   std::size_t* warnings) {
  if (!(fraction >= 0.0 && fraction < 1.0)) {
    fail(ErrorKind::invalid_argument,
         "drop fraction must lie in [0, 1), got " + std::to_string(fraction));
  }
  const std::size_t n = instance.events.size();
  auto remove = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  if (remove == 0) return instance;
  if (remove >= n) {
    remove = n - 1;
    if (warnings) ++*warnings;
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<bool> keep(n, true);
  for (std::size_t k = 0; k < remove; ++k) keep[order[k]] = false;

  Instance out;
  out.id = instance.id;
  out.label = instance.label;
  out.statics = instance.statics;
  out.events.reserve(n - remove);
  for (std::size_t k = 0; k < n; ++k) {
    if (keep[k]) out.events.push_back(instance.events[k]);
  }
  return out;
}

}  // namespace

Instance drop_observations(const Instance& instance, double fraction, std::uint64_t seed,
                           std::size_t* warnings) {
  std::mt19937_64 rng(seed);
  return drop_with(instance, fraction, rng, warnings);
}

Dataset drop_observations(const Dataset& dataset, double fraction, std::uint64_t seed,
                          std::size_t* warnings) {
  Dataset out;
  out.info = dataset.info;
  out.instances.reserve(dataset.size());
  std::mt19937_64 rng(seed);
  for (const Instance& inst : dataset.instances) {
    out.instances.push_back(drop_with(inst, fraction, rng, warnings));
  }
  return out;
}

Dataset prefix(const Dataset& dataset, double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    fail(ErrorKind::invalid_argument,
         "prefix fraction must lie in (0, 1], got " + std::to_string(fraction));
  }
  const auto n = static_cast<std::size_t>(
      std::ceil(fraction * static_cast<double>(dataset.size()) - 1e-9));
  Dataset out;
  out.info = dataset.info;
  out.instances.assign(dataset.instances.begin(),
                       dataset.instances.begin() +
                           static_cast<std::ptrdiff_t>(std::max<std::size_t>(1, n)));
  return out;
}

Splits split_dataset(const Dataset& dataset, std::uint64_t seed) {
  const std::size_t n = dataset.size();
  if (n < 3) fail(ErrorKind::invalid_argument, "split needs at least 3 instances");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  const auto n_train = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(0.70 * static_cast<double>(n))));
  const auto n_val = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(0.15 * static_cast<double>(n))));
  if (n_train + n_val >= n) fail(ErrorKind::invalid_argument, "dataset too small to split");

  Splits splits;
  splits.train.info = splits.val.info = splits.test.info = dataset.info;
  for (std::size_t k = 0; k < n; ++k) {
    Dataset& target = k < n_train ? splits.train : (k < n_train + n_val ? splits.val : splits.test);
    target.instances.push_back(dataset.instances[order[k]]);
  }
  return splits;
}

// ---------------------------------------------------------------------------

WeightedSampler::WeightedSampler(const std::vector<int>& labels, std::uint64_t seed)
    : rng_(seed) {
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) {
      fail(ErrorKind::invalid_argument, "sampler: labels must be 0 or 1");
    }
    by_class_[labels[i]].push_back(i);
  }
  if (by_class_[0].empty() || by_class_[1].empty()) {
    fail(ErrorKind::invalid_argument, "sampler: both classes must be present");
  }
  // class mass = count * (1 / count); each class ends up with equal mass
  const double w0 = static_cast<double>(by_class_[0].size()) / static_cast<double>(by_class_[0].size());
  const double w1 = static_cast<double>(by_class_[1].size()) / static_cast<double>(by_class_[1].size());
  class1_probability_ = w1 / (w0 + w1);
}

std::size_t WeightedSampler::next() {
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  const int cls = coin(rng_) < class1_probability_ ? 1 : 0;
  const auto& pool = by_class_[cls];
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  return pool[pick(rng_)];
}

}  // namespace slan::data
