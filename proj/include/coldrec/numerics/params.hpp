#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "coldrec/numerics/dense.hpp"
#include "coldrec/numerics/matrix.hpp"

namespace coldrec {

using Rng = std::mt19937_64;

// Independent stream seed derived from (base, stream) via splitmix64.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

double standard_normal(Rng& rng);
double uniform01(Rng& rng);
// Uniform integer in [0, n).
std::size_t uniform_index(Rng& rng, std::size_t n);

// A parameter block and its gradient accumulator, viewed as flat arrays.
struct ParamSlot {
  std::span<double> values;
  std::span<double> grads;
};

using ParamList = std::vector<ParamSlot>;

void append_slots(ParamList& out, Matrix& values, Matrix& grads);
void append_slots(ParamList& out, Vector& values, Vector& grads);
void append_slots(ParamList& out, DenseLayer& values, DenseLayer& grads);
void append_slots(ParamList& out, LayerStack& values, LayerStack& grads);

void zero_grads(const ParamList& params);
std::size_t parameter_count(const ParamList& params);

enum class InitScheme { kXavierUniform, kZeros };

// rows = fan_out, cols = fan_in. Xavier bound sqrt(6 / (fan_in + fan_out)).
Matrix init_params(std::size_t rows, std::size_t cols, std::uint64_t seed,
                   InitScheme scheme);
Matrix init_params(std::size_t rows, std::size_t cols, Rng& rng, InitScheme scheme);

// Xavier-uniform weights, zero bias.
DenseLayer make_dense(std::size_t in, std::size_t out, Activation act, Rng& rng);

}  // namespace coldrec
