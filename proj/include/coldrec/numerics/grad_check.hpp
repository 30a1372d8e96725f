#pragma once

#include <cstddef>
#include <functional>
#include <span>

#include "coldrec/numerics/params.hpp"

namespace coldrec {

inline constexpr double kGradCheckStep = 1e-5;
// Denominator floor for the relative error, so coordinates whose true
// gradient is ~0 are judged on absolute error instead.
inline constexpr double kGradCheckFloor = 1e-6;

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::size_t worst_block = 0;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t coordinates = 0;
  double tolerance = 0.0;
  bool passed = true;
};

// |analytic - numeric| / max(|numeric|, kGradCheckFloor)
double gradient_relative_error(double analytic, double numeric);

// Compares the analytic gradients already stored in `params[*].grads` with
// central finite differences of `loss`, perturbing `params[*].values` in place
// (each coordinate is restored exactly afterwards).
GradCheckReport grad_check(const std::function<double()>& loss,
                           std::span<const ParamSlot> params, double tolerance,
                           double step = kGradCheckStep);

}  // namespace coldrec
