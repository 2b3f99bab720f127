#include <algorithm>
#include <cmath>
#include <numbers>

#include "slan/error.hpp"
#include "slan/ists.hpp"

namespace slan::data {

void validate(const SyntheticConfig& c) {
  if (c.n < 2) fail(ErrorKind::invalid_argument, "synthetic: n must be >= 2");
  if (c.sensors < 2) fail(ErrorKind::invalid_argument, "synthetic: sensors must be >= 2");
  if (c.max_steps < 1) fail(ErrorKind::invalid_argument, "synthetic: max_steps must be >= 1");
  if (!(c.missing_rate >= 0.0 && c.missing_rate < 1.0)) {
    fail(ErrorKind::invalid_argument, "synthetic: missing_rate must lie in [0, 1)");
  }
  if (!(c.positive_rate > 0.0 && c.positive_rate < 1.0)) {
    fail(ErrorKind::invalid_argument, "synthetic: positive_rate must lie in (0, 1)");
  }
  if (c.informative_sensors > c.sensors) {
    fail(ErrorKind::invalid_argument, "synthetic: informative_sensors exceeds sensors");
  }
  if (!(c.noise >= 0.0) || !std::isfinite(c.drift) || !std::isfinite(c.missingness_strength)) {
    fail(ErrorKind::invalid_argument, "synthetic: noise, drift and strength must be finite");
  }
}

namespace {

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

// Latent model per instance with class y:
//   informative sensor m:  u = d_y * (0.5 + t / max_steps) + noise * N(0,1),
//                          d_1 = +drift, d_0 = -drift
//   other sensors:         u = a * sin(t / 3 + phase) + noise * N(0,1),
//                          a, phase drawn per instance independently of y
//   recorded value:        offset_m + scale_m * u
// Each (step, sensor) cell is observed with probability 1 - missing_rate, or,
// for informative sensors when `informative` is set, with
//   clamp((1 - missing_rate) * 2 * logistic(strength * u), 0.02, 1)
// so that elevated latent values get measured more often.
Dataset generate_synthetic(const SyntheticConfig& c) {
  validate(c);
  std::mt19937_64 rng(c.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  const std::size_t s = c.sensors;
  const std::size_t k_inf =
      c.informative_sensors != 0 ? c.informative_sensors : (s + 1) / 2;

  std::vector<double> offset(s), scale(s);
  for (std::size_t m = 0; m < s; ++m) {
    offset[m] = -2.0 + 4.0 * unit(rng);
    scale[m] = 0.5 + 2.5 * unit(rng);
  }

  Dataset ds;
  ds.info.sensor_count = s;
  ds.info.static_count = c.static_count;
  for (std::size_t m = 0; m < s; ++m) ds.info.sensor_names.push_back("sensor_" + std::to_string(m));
  ds.instances.reserve(c.n);

  const bool dense = c.missing_rate == 0.0;
  const double horizon = static_cast<double>(c.max_steps);

  for (std::size_t i = 0; i < c.n; ++i) {
    Instance inst;
    inst.id = "syn-" + std::to_string(i);
    inst.label = unit(rng) < c.positive_rate ? 1 : 0;
    const double d = inst.label == 1 ? c.drift : -c.drift;

    std::size_t steps = c.max_steps;
    if (!dense) {
      const std::size_t lo = std::max<std::size_t>(1, c.max_steps / 2);
      steps = lo + static_cast<std::size_t>(unit(rng) * static_cast<double>(c.max_steps - lo + 1));
      steps = std::min(steps, c.max_steps);
    }
    std::vector<double> amp(s), phase(s);
    for (std::size_t m = 0; m < s; ++m) {
      amp[m] = 0.5 + unit(rng);
      phase[m] = 2.0 * std::numbers::pi * unit(rng);
    }

    double t = 0.0;
    for (std::size_t j = 0; j < steps; ++j) {
      if (j > 0) t += dense ? 1.0 : 0.2 + 1.6 * unit(rng);
      for (std::size_t m = 0; m < s; ++m) {
        const bool inf = m < k_inf;
        double u = inf ? d * (0.5 + t / horizon) : amp[m] * std::sin(t / 3.0 + phase[m]);
        if (c.noise > 0.0) u += c.noise * gauss(rng);
        bool observed = true;
        if (!dense) {
          double p = 1.0 - c.missing_rate;
          if (c.informative && inf) {
            p = std::clamp(p * 2.0 * logistic(c.missingness_strength * u), 0.02, 1.0);
          }
          observed = unit(rng) < p;
        }
        if (observed) {
          inst.events.push_back(
              Observation{t, static_cast<std::uint32_t>(m), offset[m] + scale[m] * u});
        }
      }
    }
    if (inst.events.empty()) {
      const auto m = static_cast<std::uint32_t>(unit(rng) * static_cast<double>(s)) %
                     static_cast<std::uint32_t>(s);
      const double u = m < k_inf ? 0.5 * d : 0.0;
      inst.events.push_back(Observation{0.0, m, offset[m] + scale[m] * u});
    }
    if (c.static_count > 0) {
      std::vector<double> st(c.static_count);
      for (std::size_t k = 0; k < c.static_count; ++k) {
        st[k] = gauss(rng) + (k == 0 ? 0.5 * d : 0.0);
      }
      inst.statics = std::move(st);
    }
    ds.instances.push_back(std::move(inst));
  }
  return ds;
}

}  // namespace slan::data
