#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "slan/tape.hpp"

namespace slan::ad {

/// Records a scalar loss on `tape` given one bound Var per parameter tensor.
using TapeFn = std::function<Var(Tape& tape, std::span<const Var> params)>;

struct ParamCheck {
  std::string name;
  double max_rel_error = 0.0;
  bool pass = true;
};

struct GradCheckReport {
  std::vector<ParamCheck> params;
  double max_rel_error = 0.0;
  bool pass = true;
};

/// |a - b| / max(1, |a|, |b|)
double relative_error(double a, double b) noexcept;

/// Compares reverse-mode gradients of f against central differences with step h.
/// Parameters are perturbed in place and restored before returning.
GradCheckReport check_gradients(const TapeFn& f, std::span<Tensor* const> params, double h,
                                double tol, std::span<const std::string> names = {});

}  // namespace slan::ad
