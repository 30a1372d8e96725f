#pragma once

#include <span>
#include <string>
#include <vector>

#include "coldrec/numerics/matrix.hpp"

namespace coldrec {

enum class Activation { kIdentity, kRelu, kSigmoid, kTanh };

// Pre-activations are clamped to this range before any exponentiation.
inline constexpr double kExpClamp = 60.0;

double sigmoid(double x);
double activate(Activation act, double pre);
// d activate / d pre, given the pre-activation and the activated value.
double activation_derivative(Activation act, double pre, double out);

std::string to_string(Activation act);
Activation activation_from_string(const std::string& name);

struct DenseLayer {
  Matrix weight;  // out x in
  Vector bias;    // out
  Activation activation = Activation::kIdentity;

  std::size_t in_dim() const { return weight.cols(); }
  std::size_t out_dim() const { return weight.rows(); }

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

// Everything backward needs from the forward pass. A default-constructed
// cache is "missing" and rejected by dense_backward.
struct DenseCache {
  Vector input;
  Vector pre_activation;
  Vector output;

  bool empty() const { return pre_activation.empty(); }
};

struct DenseForward {
  Vector output;
  DenseCache cache;
};

struct DenseGradients {
  Matrix weight;
  Vector bias;
};

struct DenseBackward {
  Vector input_grad;
  DenseGradients params;
};

DenseForward dense_forward(const DenseLayer& layer, std::span<const double> input);
// Forward without keeping a cache.
Vector dense_apply(const DenseLayer& layer, std::span<const double> input);

DenseBackward dense_backward(const DenseLayer& layer, const DenseCache& cache,
                             std::span<const double> upstream);

// Accumulating variant used by the training loops: adds parameter gradients
// into `grads` (shaped like `layer`) and returns the input gradient.
Vector dense_backward_accumulate(const DenseLayer& layer, const DenseCache& cache,
                                 std::span<const double> upstream, DenseLayer& grads);

// Input gradient only, for layers that are frozen.
Vector dense_input_grad(const DenseLayer& layer, const DenseCache& cache,
                        std::span<const double> upstream);

// A stack of dense layers applied in order.
using LayerStack = std::vector<DenseLayer>;

struct StackForward {
  Vector output;
  std::vector<DenseCache> caches;
};

StackForward stack_forward(const LayerStack& layers, std::span<const double> input);
Vector stack_apply(const LayerStack& layers, std::span<const double> input);
Vector stack_backward_accumulate(const LayerStack& layers,
                                 const std::vector<DenseCache>& caches,
                                 std::span<const double> upstream, LayerStack& grads);

Vector stack_input_grad(const LayerStack& layers, const std::vector<DenseCache>& caches,
                        std::span<const double> upstream);

// Layer with the same shapes and activation as `layer`, all values zero.
DenseLayer zeros_like(const DenseLayer& layer);
LayerStack zeros_like(const LayerStack& layers);

}  // namespace coldrec
