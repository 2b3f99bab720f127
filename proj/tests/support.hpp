// Test-only oracles and fixtures. Nothing here calls into the code under test
// except to build inputs.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "slan/ists.hpp"
#include "slan/model.hpp"
#include "slan/tape.hpp"
#include "slan/tensor.hpp"

namespace testing {

using slan::Tensor;

inline Tensor random_tensor(std::size_t r, std::size_t c, std::mt19937_64& rng, double lo = -1.0,
                            double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor t(r, c);
  for (double& v : t.data) v = u(rng);
  return t;
}

inline Tensor naive_matmul(const Tensor& a, const Tensor& b) {
  Tensor out(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i) {
    for (std::size_t j = 0; j < b.cols; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols; ++k) s += a(i, k) * b(k, j);
      out(i, j) = s;
    }
  }
  return out;
}

/// O(n^2) Mann-Whitney: wins count 1, ties 1/2, over positive-negative pairs.
inline double pairwise_auroc(const std::vector<double>& s, const std::vector<int>& y) {
  double wins = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (y[i] != 1) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[j] != 0) continue;
      pairs += 1.0;
      if (s[i] > s[j]) wins += 1.0;
      else if (s[i] == s[j]) wins += 0.5;
    }
  }
  return wins / pairs;
}

/// Average precision by enumerating every distinct threshold t (predict
/// positive when score >= t) from high to low: sum of precision(t) times the
/// recall gained at t.
inline double threshold_ap(const std::vector<double>& s, const std::vector<int>& y) {
  std::set<double, std::greater<>> thresholds(s.begin(), s.end());
  double positives = 0.0;
  for (int l : y) positives += l;
  double ap = 0.0, prev_recall = 0.0;
  for (double t : thresholds) {
    double tp = 0.0, predicted = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] >= t) {
        predicted += 1.0;
        tp += y[i];
      }
    }
    const double recall = tp / positives;
    ap += (recall - prev_recall) * (tp / predicted);
    prev_recall = recall;
  }
  return ap;
}

inline slan::data::Instance make_instance(std::vector<slan::data::Observation> events, int label = 0,
                                          std::string id = "x") {
  slan::data::Instance inst;
  inst.id = std::move(id);
  inst.events = std::move(events);
  inst.label = label;
  return inst;
}

inline slan::data::DatasetInfo info_for(std::size_t sensors, std::size_t statics = 0) {
  slan::data::DatasetInfo info;
  info.sensor_count = sensors;
  info.static_count = statics;
  for (std::size_t m = 0; m < sensors; ++m) info.sensor_names.push_back("s" + std::to_string(m));
  return info;
}

/// Three sensors, five irregular steps, every sensor observed at least once.
inline slan::data::Instance toy_instance() {
  return make_instance({{0.0, 0, 0.3},
                        {0.0, 2, -1.1},
                        {0.7, 1, 0.5},
                        {0.7, 2, 0.9},
                        {1.9, 0, -0.4},
                        {2.4, 1, 1.3},
                        {3.1, 0, 0.2},
                        {3.1, 1, -0.7},
                        {3.1, 2, 0.1}},
                       1, "toy");
}

/// Cross-entropy loss of `params` on one schedule, built from caller Vars.
inline slan::ad::Var model_loss(slan::ad::Tape& tape, const slan::model::SlanParams& params,
                                std::span<const slan::ad::Var> vars,
                                const slan::data::SwitchSchedule& schedule,
                                const std::optional<std::vector<double>>& statics, int label) {
  const slan::model::BoundParams b = slan::model::bind(tape, params, vars);
  return slan::ad::cross_entropy(slan::model::forward(b, schedule, statics),
                                 static_cast<std::size_t>(label));
}

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    path = std::filesystem::temp_directory_path() /
           ("slan_test_" + tag + "_" + std::to_string(std::random_device{}()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

}  // namespace testing
