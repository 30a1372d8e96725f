#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "coldrec/numerics/params.hpp"

namespace coldrec {

enum class OptimizerKind { kAdam, kSgd };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::kAdam;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Moment accumulators are allocated on the first step, shaped like the
// parameter list they are used with; later steps must present the same shapes.
struct AdamState {
  OptimizerConfig config;
  std::size_t step = 0;
  std::vector<Vector> first_moment;
  std::vector<Vector> second_moment;
};

// Applies one update to every slot's values using its grads.
void optimizer_step(std::span<const ParamSlot> params, AdamState& state);

std::string to_string(OptimizerKind kind);
OptimizerKind optimizer_from_string(const std::string& name);

}  // namespace coldrec
