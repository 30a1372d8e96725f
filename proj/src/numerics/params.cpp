#include "coldrec/numerics/params.hpp"

#include <cmath>

#include "coldrec/error.hpp"

namespace coldrec {

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double standard_normal(Rng& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  return dist(rng);
}

double uniform01(Rng& rng) {
  // 53 random mantissa bits.
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::size_t uniform_index(Rng& rng, std::size_t n) {
  if (n == 0) throw ArgumentError("uniform_index over an empty range");
  std::uniform_int_distribution<std::size_t> dist(0, n - 1);
  return dist(rng);
}

void append_slots(ParamList& out, Matrix& values, Matrix& grads) {
  if (values.rows() != grads.rows() || values.cols() != grads.cols()) {
    throw ShapeError("parameter " + values.shape_string() + " vs gradient " +
                     grads.shape_string());
  }
  out.push_back({values.values(), grads.values()});
}

void append_slots(ParamList& out, Vector& values, Vector& grads) {
  if (values.size() != grads.size()) {
    throw ShapeError("parameter " + length_string(values.size()) + " vs gradient " +
                     length_string(grads.size()));
  }
  out.push_back({values, grads});
}

void append_slots(ParamList& out, DenseLayer& values, DenseLayer& grads) {
  append_slots(out, values.weight, grads.weight);
  append_slots(out, values.bias, grads.bias);
}

void append_slots(ParamList& out, LayerStack& values, LayerStack& grads) {
  if (values.size() != grads.size()) {
    throw ShapeError("layer stack of " + std::to_string(values.size()) +
                     " vs gradient stack of " + std::to_string(grads.size()));
  }
  for (std::size_t i = 0; i < values.size(); ++i) append_slots(out, values[i], grads[i]);
}

void zero_grads(const ParamList& params) {
  for (const auto& slot : params) {
    for (double& g : slot.grads) g = 0.0;
  }
}

std::size_t parameter_count(const ParamList& params) {
  std::size_t n = 0;
  for (const auto& slot : params) n += slot.values.size();
  return n;
}

Matrix init_params(std::size_t rows, std::size_t cols, Rng& rng, InitScheme scheme) {
  if (rows == 0 || cols == 0) {
    throw ArgumentError("init_params: zero dimension in shape " + std::to_string(rows) +
                        "x" + std::to_string(cols));
  }
  Matrix m(rows, cols);
  if (scheme == InitScheme::kZeros) return m;
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  for (double& v : m.values()) v = (2.0 * uniform01(rng) - 1.0) * bound;
  return m;
}

Matrix init_params(std::size_t rows, std::size_t cols, std::uint64_t seed,
                   InitScheme scheme) {
  Rng rng(seed);
  return init_params(rows, cols, rng, scheme);
}

DenseLayer make_dense(std::size_t in, std::size_t out, Activation act, Rng& rng) {
  return DenseLayer{init_params(out, in, rng, InitScheme::kXavierUniform),
                    Vector(out, 0.0), act};
}

}  // namespace coldrec
