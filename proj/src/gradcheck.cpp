#include "slan/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "slan/error.hpp"

namespace slan::ad {

double relative_error(double a, double b) noexcept {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

namespace {

double evaluate(const TapeFn& f, std::span<Tensor* const> params) {
  Tape tape;
  std::vector<Var> vars;
  vars.reserve(params.size());
  for (Tensor* p : params) vars.push_back(tape.param(*p));
  return tape.scalar(f(tape, vars));
}

}  // namespace

GradCheckReport check_gradients(const TapeFn& f, std::span<Tensor* const> params, double h,
                                double tol, std::span<const std::string> names) {
  if (!(h > 0.0)) fail(ErrorKind::invalid_argument, "check_gradients: step must be positive");

  std::vector<Tensor> analytic;
  {
    Tape tape;
    std::vector<Var> vars;
    for (Tensor* p : params) vars.push_back(tape.param(*p));
    tape.backward(f(tape, vars));
    for (const Var& v : vars) analytic.push_back(tape.grad(v));
  }

  GradCheckReport report;
  for (std::size_t k = 0; k < params.size(); ++k) {
    ParamCheck pc;
    pc.name = k < names.size() ? names[k] : "param" + std::to_string(k);
    Tensor& p = *params[k];
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double saved = p.data[i];
      p.data[i] = saved + h;
      const double up = evaluate(f, params);
      p.data[i] = saved - h;
      const double down = evaluate(f, params);
      p.data[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      pc.max_rel_error = std::max(pc.max_rel_error, relative_error(analytic[k].data[i], numeric));
    }
    pc.pass = pc.max_rel_error <= tol;
    report.max_rel_error = std::max(report.max_rel_error, pc.max_rel_error);
    report.pass = report.pass && pc.pass;
    report.params.push_back(std::move(pc));
  }
  return report;
}

}  // namespace slan::ad
