#pragma once

#include <span>

namespace slan::metrics {

/// Mann-Whitney estimate P(s+ > s-) + P(s+ == s-)/2. Throws when either class
/// is absent or the spans differ in length.
double auroc(std::span<const double> scores, std::span<const int> labels);

/// Average precision: sum over score-descending threshold groups of
/// precision * (recall increment). Tied scores form a single threshold.
/// Throws when there are no positives.
double auprc(std::span<const double> scores, std::span<const int> labels);

}  // namespace slan::metrics
