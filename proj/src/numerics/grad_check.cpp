#include "coldrec/numerics/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "coldrec/error.hpp"

namespace coldrec {

double gradient_relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max(std::abs(numeric), kGradCheckFloor);
}

GradCheckReport grad_check(const std::function<double()>& loss,
                           std::span<const ParamSlot> params, double tolerance,
                           double step) {
  GradCheckReport report;
  report.tolerance = tolerance;
  auto evaluate = [&]() {
    const double v = loss();
    if (!std::isfinite(v)) throw NumericError("grad_check: loss is not finite");
    return v;
  };
  evaluate();

  for (std::size_t b = 0; b < params.size(); ++b) {
    auto values = params[b].values;
    auto grads = params[b].grads;
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + step;
      const double plus = evaluate();
      values[i] = saved - step;
      const double minus = evaluate();
      values[i] = saved;

      const double numeric = (plus - minus) / (2.0 * step);
      const double err = gradient_relative_error(grads[i], numeric);
      ++report.coordinates;
      if (err > report.max_relative_error) {
        report.max_relative_error = err;
        report.worst_block = b;
        report.worst_index = i;
        report.worst_analytic = grads[i];
        report.worst_numeric = numeric;
      }
    }
  }
  report.passed = report.max_relative_error < tolerance;
  return report;
}

}  // namespace coldrec
