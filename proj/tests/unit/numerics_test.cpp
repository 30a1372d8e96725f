#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "coldrec/error.hpp"
#include "coldrec/numerics/dense.hpp"
#include "coldrec/numerics/grad_check.hpp"
#include "coldrec/numerics/optimizer.hpp"
#include "coldrec/numerics/params.hpp"

namespace coldrec {
namespace {

DenseLayer layer_of(Matrix w, Vector b, Activation act) {
  return DenseLayer{std::move(w), std::move(b), act};
}

TEST(DenseForward, ZeroSigmoidLayerGivesHalf) {
  const auto layer = layer_of(Matrix(3, 4), Vector(3, 0.0), Activation::kSigmoid);
  const auto f = dense_forward(layer, Vector{1.0, -2.0, 3.0, 0.5});
  ASSERT_EQ(f.output.size(), 3u);
  for (double v : f.output) EXPECT_EQ(v, 0.5);
}

TEST(DenseForward, IdentityLayerIsPassThrough) {
  const auto layer = layer_of(Matrix::identity(3), Vector(3, 0.0), Activation::kIdentity);
  const Vector x{0.25, -7.0, 3.5};
  EXPECT_EQ(dense_forward(layer, x).output, x);
}

TEST(DenseForward, AffineRelu) {
  // relu(1*3 + 2*(-2) + 1) = relu(0) = 0
  const auto layer = layer_of(Matrix::from_rows({{1.0, 2.0}}), Vector{1.0}, Activation::kRelu);
  const auto f = dense_forward(layer, Vector{3.0, -2.0});
  ASSERT_EQ(f.output.size(), 1u);
  EXPECT_EQ(f.output[0], 0.0);
  EXPECT_EQ(f.cache.pre_activation[0], 0.0);
}

TEST(DenseForward, ShapeErrorNamesBothShapes) {
  const auto layer = layer_of(Matrix(2, 3), Vector(2, 0.0), Activation::kIdentity);
  try {
    dense_forward(layer, Vector{1.0, 2.0});
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("2x3"), std::string::npos) << msg;
    EXPECT_NE(msg.find("[2]"), std::string::npos) << msg;
  }
}

TEST(DenseBackward, ScalarIdentityDerivative) {
  const auto layer = layer_of(Matrix::from_rows({{2.0}}), Vector{0.0}, Activation::kIdentity);
  const auto f = dense_forward(layer, Vector{1.5});
  const auto b = dense_backward(layer, f.cache, Vector{1.0});
  EXPECT_EQ(b.input_grad[0], 2.0);
  EXPECT_EQ(b.params.weight(0, 0), 1.5);
  EXPECT_EQ(b.params.bias[0], 1.0);
}

TEST(DenseBackward, SigmoidAtZeroScalesByQuarter) {
  const auto layer = layer_of(Matrix::from_rows({{1.0}}), Vector{0.0}, Activation::kSigmoid);
  const auto f = dense_forward(layer, Vector{0.0});
  const auto b = dense_backward(layer, f.cache, Vector{4.0});
  EXPECT_DOUBLE_EQ(b.params.bias[0], 1.0);
  EXPECT_DOUBLE_EQ(b.input_grad[0], 1.0);
}

TEST(DenseBackward, ZeroUpstreamGivesZeroGradients) {
  Rng rng(3);
  const auto layer = make_dense(4, 3, Activation::kTanh, rng);
  const auto f = dense_forward(layer, Vector{0.1, -0.2, 0.3, 0.4});
  const auto b = dense_backward(layer, f.cache, Vector(3, 0.0));
  for (double v : b.input_grad) EXPECT_EQ(v, 0.0);
  for (double v : b.params.weight.values()) EXPECT_EQ(v, 0.0);
  for (double v : b.params.bias) EXPECT_EQ(v, 0.0);
}

TEST(DenseBackward, MissingCacheIsUsageError) {
  const auto layer = layer_of(Matrix(1, 1), Vector{0.0}, Activation::kIdentity);
  EXPECT_THROW(dense_backward(layer, DenseCache{}, Vector{1.0}), UsageError);
}

// Scalar-output layer: backward with upstream 1 must equal the numeric
// gradient of the output with respect to the input.
TEST(DenseBackward, MatchesNumericJacobianOnScalarOutput) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const Activation acts[] = {Activation::kIdentity, Activation::kSigmoid,
                               Activation::kTanh, Activation::kRelu};
    const auto layer = make_dense(5, 1, acts[seed % 4], rng);
    Vector x(5);
    for (double& v : x) v = standard_normal(rng);
    const auto f = dense_forward(layer, x);
    const auto b = dense_backward(layer, f.cache, Vector{1.0});
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double h = 1e-6;
      Vector xp = x, xm = x;
      xp[j] += h;
      xm[j] -= h;
      const double numeric =
          (dense_apply(layer, xp)[0] - dense_apply(layer, xm)[0]) / (2 * h);
      EXPECT_NEAR(b.input_grad[j], numeric, 1e-6) << "seed " << seed << " coord " << j;
    }
  }
}

TEST(Activation, StableSigmoidStaysFinite) {
  EXPECT_EQ(sigmoid(0.0), 0.5);
  EXPECT_GT(sigmoid(-1e6), 0.0);
  EXPECT_LE(sigmoid(1e6), 1.0);
  EXPECT_TRUE(std::isfinite(sigmoid(-800.0)));
  EXPECT_NEAR(sigmoid(1.0), 0.7310585786300049, 1e-15);
}

TEST(Optimizer, ZeroGradientLeavesParamsAndCountsStep) {
  Vector p{1.0, -2.0}, g{0.0, 0.0};
  ParamList slots{{p, g}};
  AdamState state;
  optimizer_step(slots, state);
  EXPECT_EQ(p, (Vector{1.0, -2.0}));
  EXPECT_EQ(state.step, 1u);
}

TEST(Optimizer, ZeroLearningRateLeavesParams) {
  for (auto kind : {OptimizerKind::kAdam, OptimizerKind::kSgd}) {
    Vector p{1.0, -2.0}, g{0.3, -4.0};
    ParamList slots{{p, g}};
    AdamState state;
    state.config.kind = kind;
    state.config.learning_rate = 0.0;
    for (int i = 0; i < 5; ++i) optimizer_step(slots, state);
    EXPECT_EQ(p, (Vector{1.0, -2.0}));
  }
}

// Independent Adam recurrence written out per step; the library must follow
// it and the parameter must move monotonically against sign(g).
TEST(Optimizer, ConstantGradientMatchesOracleLoopAndIsMonotone) {
  const double g_const = 0.7;
  Vector p{0.5}, g{g_const};
  ParamList slots{{p, g}};
  AdamState state;

  double oracle = 0.5, m = 0.0, v = 0.0;
  double b1t = 1.0, b2t = 1.0;
  double previous = p[0];
  for (int t = 1; t <= 200; ++t) {
    optimizer_step(slots, state);
    m = 0.9 * m + 0.1 * g_const;
    v = 0.999 * v + 0.001 * g_const * g_const;
    b1t *= 0.9;
    b2t *= 0.999;
    oracle -= 1e-3 * (m / (1 - b1t)) / (std::sqrt(v / (1 - b2t)) + 1e-8);
    EXPECT_NEAR(p[0], oracle, 1e-12) << "step " << t;
    EXPECT_LT(p[0], previous);
    previous = p[0];
  }
  EXPECT_EQ(state.step, 200u);
}

TEST(Optimizer, ShapeMismatchAgainstExistingState) {
  Vector p{1.0, 2.0}, g{0.1, 0.1};
  ParamList slots{{p, g}};
  AdamState state;
  optimizer_step(slots, state);
  Vector q{1.0}, h{0.1};
  ParamList other{{q, h}};
  EXPECT_THROW(optimizer_step(other, state), ShapeError);
  Vector short_grad{0.1};
  ParamList bad{{p, short_grad}};
  EXPECT_THROW(optimizer_step(bad, state), ShapeError);
}

TEST(InitParams, ZerosScheme) {
  const Matrix m = init_params(3, 4, 9, InitScheme::kZeros);
  for (double v : m.values()) EXPECT_EQ(v, 0.0);
}

TEST(InitParams, DeterministicForSeed) {
  EXPECT_EQ(init_params(7, 5, 123, InitScheme::kXavierUniform),
            init_params(7, 5, 123, InitScheme::kXavierUniform));
  EXPECT_NE(init_params(7, 5, 123, InitScheme::kXavierUniform),
            init_params(7, 5, 124, InitScheme::kXavierUniform));
}

TEST(InitParams, XavierWithinBound) {
  const Matrix m = init_params(100, 100, 5, InitScheme::kXavierUniform);
  const double bound = std::sqrt(6.0 / 200.0);
  double max_abs = 0.0;
  for (double v : m.values()) max_abs = std::max(max_abs, std::abs(v));
  EXPECT_LE(max_abs, bound);
  // The draws should actually fill the interval.
  EXPECT_GT(max_abs, 0.99 * bound);
}

TEST(InitParams, ZeroDimensionRejected) {
  EXPECT_THROW(init_params(0, 3, 1, InitScheme::kZeros), ArgumentError);
  EXPECT_THROW(init_params(3, 0, 1, InitScheme::kXavierUniform), ArgumentError);
}

TEST(GradCheck, QuadraticLoss) {
  Vector x{0.3, -1.2, 2.5, 0.0, 4.0}, g(5);
  for (std::size_t i = 0; i < x.size(); ++i) g[i] = x[i];
  ParamList slots{{x, g}};
  auto loss = [&] { return 0.5 * dot(x, x); };
  const auto report = grad_check(loss, slots, 1e-8);
  EXPECT_TRUE(report.passed) << report.max_relative_error;
  EXPECT_LT(report.max_relative_error, 1e-8);
  EXPECT_EQ(report.coordinates, 5u);
  EXPECT_EQ(x, (Vector{0.3, -1.2, 2.5, 0.0, 4.0}));
}

TEST(GradCheck, DoubledGradientIsCaught) {
  Vector x{0.3, -1.2, 2.5}, g(3);
  for (std::size_t i = 0; i < x.size(); ++i) g[i] = 2.0 * x[i];
  ParamList slots{{x, g}};
  auto loss = [&] { return 0.5 * dot(x, x); };
  const auto report = grad_check(loss, slots, 1e-4);
  EXPECT_FALSE(report.passed);
  EXPECT_NEAR(report.max_relative_error, 1.0, 1e-6);
}

TEST(GradCheck, ConstantLossPasses) {
  Vector x{1.0, 2.0}, g{0.0, 0.0};
  ParamList slots{{x, g}};
  const auto report = grad_check([] { return 3.0; }, slots, 1e-4);
  EXPECT_TRUE(report.passed);
  EXPECT_EQ(report.max_relative_error, 0.0);
}

TEST(GradCheck, NonFiniteLossIsNumericError) {
  Vector x{1.0}, g{0.0};
  ParamList slots{{x, g}};
  EXPECT_THROW(grad_check([] { return std::numeric_limits<double>::quiet_NaN(); }, slots, 1e-4),
               NumericError);
}

// Random MLP stacks with a squared-error head.
TEST(GradCheck, MlpStacksAtRandomPoints) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    LayerStack stack{make_dense(6, 8, Activation::kTanh, rng),
                     make_dense(8, 5, Activation::kRelu, rng),
                     make_dense(5, 3, Activation::kSigmoid, rng),
                     make_dense(3, 2, Activation::kIdentity, rng)};
    for (auto& l : stack) {
      for (double& b : l.bias) b = 0.1 * standard_normal(rng);
    }
    Vector x(6), target{0.3, -0.4};
    for (double& v : x) v = standard_normal(rng);
    auto loss = [&] {
      const Vector y = stack_apply(stack, x);
      return 0.5 * ((y[0] - target[0]) * (y[0] - target[0]) +
                    (y[1] - target[1]) * (y[1] - target[1]));
    };
    LayerStack grads = zeros_like(stack);
    const auto f = stack_forward(stack, x);
    const Vector up{f.output[0] - target[0], f.output[1] - target[1]};
    stack_backward_accumulate(stack, f.caches, up, grads);
    ParamList slots;
    append_slots(slots, stack, grads);
    const auto report = grad_check(loss, slots, 1e-4);
    EXPECT_TRUE(report.passed) << "seed " << seed << " err " << report.max_relative_error;
  }
}

}  // namespace
}  // namespace coldrec
