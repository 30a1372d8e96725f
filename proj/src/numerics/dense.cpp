#include "coldrec/numerics/dense.hpp"

#include <algorithm>
#include <cmath>

#include "coldrec/error.hpp"

namespace coldrec {

double sigmoid(double x) {
  x = std::clamp(x, -kExpClamp, kExpClamp);
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double activate(Activation act, double pre) {
  switch (act) {
    case Activation::kIdentity:
      return pre;
    case Activation::kRelu:
      return pre > 0.0 ? pre : 0.0;
    case Activation::kSigmoid:
      return sigmoid(pre);
    case Activation::kTanh:
      return std::tanh(std::clamp(pre, -kExpClamp, kExpClamp));
  }
  return pre;
}

double activation_derivative(Activation act, double pre, double out) {
  switch (act) {
    case Activation::kIdentity:
      return 1.0;
    case Activation::kRelu:
      return pre > 0.0 ? 1.0 : 0.0;
    case Activation::kSigmoid:
      return std::abs(pre) > kExpClamp ? 0.0 : out * (1.0 - out);
    case Activation::kTanh:
      return std::abs(pre) > kExpClamp ? 0.0 : 1.0 - out * out;
  }
  return 1.0;
}

std::string to_string(Activation act) {
  switch (act) {
    case Activation::kIdentity:
      return "identity";
    case Activation::kRelu:
      return "relu";
    case Activation::kSigmoid:
      return "sigmoid";
    case Activation::kTanh:
      return "tanh";
  }
  return "identity";
}

Activation activation_from_string(const std::string& name) {
  if (name == "identity") return Activation::kIdentity;
  if (name == "relu") return Activation::kRelu;
  if (name == "sigmoid") return Activation::kSigmoid;
  if (name == "tanh") return Activation::kTanh;
  throw ConfigError("unknown activation '" + name + "'");
}

namespace {

void check_layer(const DenseLayer& layer) {
  if (layer.bias.size() != layer.weight.rows()) {
    throw ShapeError("dense layer: weight " + layer.weight.shape_string() +
                     " vs bias " + length_string(layer.bias.size()));
  }
}

void check_input(const DenseLayer& layer, std::span<const double> input) {
  check_layer(layer);
  if (input.size() != layer.weight.cols()) {
    throw ShapeError("dense_forward: weight " + layer.weight.shape_string() +
                     " vs input " + length_string(input.size()));
  }
}

}  // namespace

DenseForward dense_forward(const DenseLayer& layer, std::span<const double> input) {
  check_input(layer, input);
  DenseForward result;
  DenseCache& cache = result.cache;
  cache.input.assign(input.begin(), input.end());
  cache.pre_activation = matvec(layer.weight, input);
  cache.output.resize(cache.pre_activation.size());
  for (std::size_t i = 0; i < cache.pre_activation.size(); ++i) {
    cache.pre_activation[i] += layer.bias[i];
    cache.output[i] = activate(layer.activation, cache.pre_activation[i]);
  }
  result.output = cache.output;
  return result;
}

Vector dense_apply(const DenseLayer& layer, std::span<const double> input) {
  check_input(layer, input);
  Vector out = matvec(layer.weight, input);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = activate(layer.activation, out[i] + layer.bias[i]);
  }
  return out;
}

namespace {

Vector local_gradient(const DenseLayer& layer, const DenseCache& cache,
                      std::span<const double> upstream) {
  if (cache.empty()) {
    throw UsageError("dense_backward called without a forward cache");
  }
  if (upstream.size() != layer.weight.rows()) {
    throw ShapeError("dense_backward: weight " + layer.weight.shape_string() +
                     " vs upstream " + length_string(upstream.size()));
  }
  if (cache.pre_activation.size() != layer.weight.rows() ||
      cache.input.size() != layer.weight.cols()) {
    throw ShapeError("dense_backward: cache does not match weight " +
                     layer.weight.shape_string());
  }
  Vector delta(upstream.size());
  for (std::size_t i = 0; i < upstream.size(); ++i) {
    delta[i] = upstream[i] * activation_derivative(layer.activation,
                                                   cache.pre_activation[i],
                                                   cache.output[i]);
  }
  return delta;
}

}  // namespace

DenseBackward dense_backward(const DenseLayer& layer, const DenseCache& cache,
                             std::span<const double> upstream) {
  const Vector delta = local_gradient(layer, cache, upstream);
  DenseBackward result;
  result.params.weight = Matrix(layer.weight.rows(), layer.weight.cols());
  add_outer(result.params.weight, delta, cache.input);
  result.params.bias = delta;
  result.input_grad = matvec_transposed(layer.weight, delta);
  return result;
}

Vector dense_backward_accumulate(const DenseLayer& layer, const DenseCache& cache,
                                 std::span<const double> upstream, DenseLayer& grads) {
  const Vector delta = local_gradient(layer, cache, upstream);
  add_outer(grads.weight, delta, cache.input);
  axpy(grads.bias, 1.0, delta);
  return matvec_transposed(layer.weight, delta);
}

Vector dense_input_grad(const DenseLayer& layer, const DenseCache& cache,
                        std::span<const double> upstream) {
  return matvec_transposed(layer.weight, local_gradient(layer, cache, upstream));
}

StackForward stack_forward(const LayerStack& layers, std::span<const double> input) {
  StackForward result;
  result.caches.reserve(layers.size());
  Vector current(input.begin(), input.end());
  for (const DenseLayer& layer : layers) {
    DenseForward f = dense_forward(layer, current);
    current = std::move(f.output);
    result.caches.push_back(std::move(f.cache));
  }
  result.output = std::move(current);
  return result;
}

Vector stack_apply(const LayerStack& layers, std::span<const double> input) {
  Vector current(input.begin(), input.end());
  for (const DenseLayer& layer : layers) current = dense_apply(layer, current);
  return current;
}

Vector stack_backward_accumulate(const LayerStack& layers,
                                 const std::vector<DenseCache>& caches,
                                 std::span<const double> upstream, LayerStack& grads) {
  if (caches.size() != layers.size() || grads.size() != layers.size()) {
    throw UsageError("stack_backward: cache/gradient count does not match layers");
  }
  Vector g(upstream.begin(), upstream.end());
  for (std::size_t k = layers.size(); k-- > 0;) {
    g = dense_backward_accumulate(layers[k], caches[k], g, grads[k]);
  }
  return g;
}

Vector stack_input_grad(const LayerStack& layers, const std::vector<DenseCache>& caches,
                        std::span<const double> upstream) {
  if (caches.size() != layers.size()) {
    throw UsageError("stack_input_grad: cache count does not match layers");
  }
  Vector g(upstream.begin(), upstream.end());
  for (std::size_t k = layers.size(); k-- > 0;) g = dense_input_grad(layers[k], caches[k], g);
  return g;
}

DenseLayer zeros_like(const DenseLayer& layer) {
  return DenseLayer{Matrix(layer.weight.rows(), layer.weight.cols()),
                    Vector(layer.bias.size(), 0.0), layer.activation};
}

LayerStack zeros_like(const LayerStack& layers) {
  LayerStack out;
  out.reserve(layers.size());
  for (const auto& l : layers) out.push_back(zeros_like(l));
  return out;
}

}  // namespace coldrec
