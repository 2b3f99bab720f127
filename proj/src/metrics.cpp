#include "slan/metrics.hpp"

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "slan/error.hpp"

namespace slan::metrics {

namespace {

struct Counts {
  std::size_t pos = 0;
  std::size_t neg = 0;
};

Counts count_labels(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) {
    fail(ErrorKind::invalid_argument, "metrics: " + std::to_string(scores.size()) +
                                          " scores but " + std::to_string(labels.size()) +
                                          " labels");
  }
  Counts c;
  for (int y : labels) {
    if (y == 1) {
      ++c.pos;
    } else if (y == 0) {
      ++c.neg;
    } else {
      fail(ErrorKind::invalid_argument, "metrics: labels must be 0 or 1");
    }
  }
  return c;
}

// Indices sorted by score, descending.
std::vector<std::size_t> descending(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

}  // namespace

double auroc(std::span<const double> scores, std::span<const int> labels) {
  const Counts c = count_labels(scores, labels);
  if (c.pos == 0 || c.neg == 0) {
    fail(ErrorKind::invalid_argument, "auroc: both classes must be present");
  }
  const std::vector<std::size_t> order = descending(scores);
  // Walk tie groups from the top; each positive beats every negative in lower
  // groups and ties with negatives in its own group. Count in half-units so the
  // tally stays an exact integer.
  std::uint64_t halves = 0;
  std::size_t neg_below = c.neg;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    std::size_t gp = 0, gn = 0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      (labels[order[j]] == 1 ? gp : gn) += 1;
      ++j;
    }
    neg_below -= gn;
    halves += 2 * static_cast<std::uint64_t>(gp) * neg_below +
              static_cast<std::uint64_t>(gp) * gn;
    i = j;
  }
  return static_cast<double>(halves) / 2.0 /
         (static_cast<double>(c.pos) * static_cast<double>(c.neg));
}

double auprc(std::span<const double> scores, std::span<const int> labels) {
  const Counts c = count_labels(scores, labels);
  if (c.pos == 0) fail(ErrorKind::invalid_argument, "auprc: no positive labels");
  const std::vector<std::size_t> order = descending(scores);
  double ap = 0.0;
  std::size_t tp = 0, fp = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    std::size_t gp = 0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      (labels[order[j]] == 1 ? gp : fp) += 1;
      ++j;
    }
    tp += gp;
    if (gp > 0) {
      const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
      ap += precision * static_cast<double>(gp) / static_cast<double>(c.pos);
    }
    i = j;
  }
  return ap;
}

}  // namespace slan::metrics
