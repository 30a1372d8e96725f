#include "coldrec/numerics/optimizer.hpp"

#include <cmath>

#include "coldrec/error.hpp"

namespace coldrec {

namespace {

void check_shapes(std::span<const ParamSlot> params, const AdamState& state) {
  for (const auto& slot : params) {
    if (slot.values.size() != slot.grads.size()) {
      throw ShapeError("optimizer_step: parameter " + length_string(slot.values.size()) +
                       " vs gradient " + length_string(slot.grads.size()));
    }
  }
  if (state.first_moment.empty() && state.second_moment.empty()) return;
  if (state.first_moment.size() != params.size() ||
      state.second_moment.size() != params.size()) {
    throw ShapeError("optimizer_step: state holds " +
                     std::to_string(state.first_moment.size()) +
                     " blocks, parameters have " + std::to_string(params.size()));
  }
  for (std::size_t b = 0; b < params.size(); ++b) {
    if (state.first_moment[b].size() != params[b].values.size() ||
        state.second_moment[b].size() != params[b].values.size()) {
      throw ShapeError("optimizer_step: block " + std::to_string(b) + " state " +
                       length_string(state.first_moment[b].size()) + " vs parameter " +
                       length_string(params[b].values.size()));
    }
  }
}

}  // namespace

void optimizer_step(std::span<const ParamSlot> params, AdamState& state) {
  check_shapes(params, state);
  const OptimizerConfig& cfg = state.config;
  ++state.step;

  if (cfg.kind == OptimizerKind::kSgd) {
    for (const auto& slot : params) {
      for (std::size_t i = 0; i < slot.values.size(); ++i) {
        slot.values[i] -= cfg.learning_rate * slot.grads[i];
      }
    }
    return;
  }

  if (state.first_moment.empty()) {
    for (const auto& slot : params) {
      state.first_moment.emplace_back(slot.values.size(), 0.0);
      state.second_moment.emplace_back(slot.values.size(), 0.0);
    }
  }
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t b = 0; b < params.size(); ++b) {
    auto values = params[b].values;
    auto grads = params[b].grads;
    Vector& m = state.first_moment[b];
    Vector& v = state.second_moment[b];
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double g = grads[i];
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      values[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
    }
  }
}

std::string to_string(OptimizerKind kind) {
  return kind == OptimizerKind::kAdam ? "adam" : "sgd";
}

OptimizerKind optimizer_from_string(const std::string& name) {
  if (name == "adam") return OptimizerKind::kAdam;
  if (name == "sgd") return OptimizerKind::kSgd;
  throw ConfigError("unknown optimizer '" + name + "'");
}

}  // namespace coldrec
