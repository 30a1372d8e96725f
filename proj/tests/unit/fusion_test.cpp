#include <gtest/gtest.h>

#include <algorithm>

#include "coldrec/fusion/fusion.hpp"
#include "coldrec/numerics/grad_check.hpp"

namespace coldrec::fusion {
namespace {

ModalityEmbedding emb(Modality m, Vector v) {
  return ModalityEmbedding{"i1", embeddings::EntityKind::kItem, m, std::move(v)};
}

Vector random_vector(std::size_t n, Rng& rng) {
  Vector v(n);
  for (double& x : v) x = standard_normal(rng);
  return v;
}

TEST(FuseEarly, DimIsSumOfDims) {
  const auto f = fuse_early({emb(Modality::kText, Vector(3, 1.0)),
                             emb(Modality::kImage, Vector(5, 2.0))});
  EXPECT_EQ(f.dim(), 8u);
}

TEST(FuseEarly, SingleModalityIsIdentity) {
  const Vector v{0.5, -1.5, 2.0};
  EXPECT_EQ(fuse_early({emb(Modality::kImage, v)}).values, v);
}

TEST(FuseEarly, InputOrderDoesNotMatter) {
  const auto t = emb(Modality::kText, {1.0, 2.0});
  const auto i = emb(Modality::kImage, {3.0});
  const auto s = emb(Modality::kSide, {4.0, 5.0});
  const auto a = fuse_early({t, i, s});
  const auto b = fuse_early({s, i, t});
  EXPECT_EQ(a.values, b.values);
  EXPECT_EQ(a.values, (Vector{1.0, 2.0, 3.0, 4.0, 5.0}));
  EXPECT_EQ(b.sources, (std::vector<Modality>{Modality::kText, Modality::kImage, Modality::kSide}));
}

TEST(FuseEarly, EveryCoordinateAppearsOnce) {
  // Tagged sentinels: modality index * 100 + position.
  std::vector<ModalityEmbedding> in;
  std::vector<double> expected;
  for (int m : {2, 0, 1}) {
    Vector v;
    for (int k = 0; k < 4 + m; ++k) v.push_back(m * 100 + k);
    in.push_back(emb(static_cast<Modality>(m), v));
    expected.insert(expected.end(), v.begin(), v.end());
  }
  auto out = fuse_early(in).values;
  std::sort(out.begin(), out.end());
  std::sort(expected.begin(), expected.end());
  EXPECT_EQ(out, expected);
}

TEST(FuseEarly, EmptyRejected) { EXPECT_THROW(fuse_early({}), ArgumentError); }

FusionConfig config_of(CombineMode combine, std::size_t pd) {
  FusionConfig c;
  c.mode = FusionMode::kIntermediate;
  c.combine = combine;
  c.projection_dim = pd;
  return c;
}

TEST(FuseIntermediate, ZeroProjectionsWeightedSumGiveZero) {
  Rng rng(1);
  const auto cfg = config_of(CombineMode::kWeightedSum, 4);
  auto p = make_intermediate_fusion({Modality::kText, Modality::kImage}, {3, 5}, cfg, rng);
  for (auto& layer : p.projections) {
    layer.weight.fill(0.0);
    std::fill(layer.bias.begin(), layer.bias.end(), 0.0);
  }
  const auto f = fuse_intermediate(
      {emb(Modality::kText, {1.0, 2.0, 3.0}), emb(Modality::kImage, Vector(5, -1.0))}, p, cfg);
  EXPECT_EQ(f.values, Vector(4, 0.0));
}

TEST(FuseIntermediate, IdentityProjectionsWithConcatEqualEarly) {
  Rng rng(2);
  const auto cfg = config_of(CombineMode::kConcat, 6);
  auto p = make_intermediate_fusion({Modality::kImage, Modality::kText}, {6, 6}, cfg, rng);
  for (auto& layer : p.projections) {
    layer = DenseLayer{Matrix::identity(6), Vector(6, 0.0), Activation::kIdentity};
  }
  for (int trial = 0; trial < 20; ++trial) {
    const std::vector<ModalityEmbedding> in = {emb(Modality::kImage, random_vector(6, rng)),
                                               emb(Modality::kText, random_vector(6, rng))};
    const auto a = fuse_intermediate(in, p, cfg).values;
    const auto b = fuse_early(in).values;
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t k = 0; k < a.size(); ++k) EXPECT_NEAR(a[k], b[k], 1e-12);
  }
}

TEST(FuseIntermediate, ConcatShape) {
  Rng rng(3);
  const auto cfg = config_of(CombineMode::kConcat, 16);
  auto p = make_intermediate_fusion({Modality::kText, Modality::kImage}, {32, 64}, cfg, rng);
  const auto f = fuse_intermediate(
      {emb(Modality::kText, Vector(32, 0.1)), emb(Modality::kImage, Vector(64, 0.2))}, p, cfg);
  EXPECT_EQ(f.dim(), 32u);
}

TEST(FuseIntermediate, MlpAndWeightedSumShape) {
  Rng rng(4);
  for (auto combine : {CombineMode::kMlp, CombineMode::kWeightedSum}) {
    const auto cfg = config_of(combine, 8);
    auto p = make_intermediate_fusion({Modality::kText, Modality::kImage}, {3, 4}, cfg, rng);
    const auto f = fuse_intermediate(
        {emb(Modality::kText, Vector(3, 0.1)), emb(Modality::kImage, Vector(4, 0.2))}, p, cfg);
    EXPECT_EQ(f.dim(), 8u);
  }
}

TEST(FuseIntermediate, MissingProjectionIsConfigError) {
  Rng rng(5);
  const auto cfg = config_of(CombineMode::kConcat, 4);
  auto p = make_intermediate_fusion({Modality::kText}, {3}, cfg, rng);
  EXPECT_THROW(fuse_intermediate({emb(Modality::kText, Vector(3, 0.0)),
                                  emb(Modality::kImage, Vector(3, 0.0))},
                                 p, cfg),
               ConfigError);
}

TEST(FuseLate, WeightedMean) {
  const Vector preds{0.2, 0.8};
  EXPECT_DOUBLE_EQ(fuse_late(preds, Vector{0.5, 0.5}), 0.5);
  EXPECT_EQ(fuse_late(preds, Vector{1.0, 0.0}), 0.2);
  EXPECT_EQ(fuse_late(Vector{0.3, 0.3, 0.3}, Vector{0.2, 0.3, 0.5}), 0.3);
}

TEST(FuseLate, ConvexOnRandomInputs) {
  Rng rng(6);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + uniform_index(rng, 5);
    Vector preds(n), w(n);
    double sum = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      preds[k] = uniform01(rng);
      w[k] = uniform01(rng);
      sum += w[k];
    }
    for (double& x : w) x /= sum;
    const double out = fuse_late(preds, w);
    EXPECT_GE(out, *std::min_element(preds.begin(), preds.end()));
    EXPECT_LE(out, *std::max_element(preds.begin(), preds.end()));
  }
}

TEST(FuseLate, LengthMismatch) {
  EXPECT_THROW(fuse_late(Vector{0.1, 0.2}, Vector{1.0}), ShapeError);
}

TEST(SideFeatures, OutputDimMatchesFused) {
  FusedVector f{"i1", Vector(32, 0.5), FusionMode::kEarly, {Modality::kText}};
  const auto side = emb(Modality::kSide, Vector(7, 1.0));
  const auto out = append_side_features(f, side, make_restore_layer(32, 7));
  EXPECT_EQ(out.dim(), 32u);
}

TEST(SideFeatures, ZeroSideWithBlockIdentityIsNoOp) {
  Rng rng(7);
  FusedVector f{"i1", random_vector(10, rng), FusionMode::kEarly, {Modality::kText}};
  const auto out =
      append_side_features(f, emb(Modality::kSide, Vector(3, 0.0)), make_restore_layer(10, 3));
  EXPECT_EQ(out.values, f.values);
}

TEST(SideFeatures, WrongRestoreShapeIsConfigError) {
  FusedVector f{"i1", Vector(32, 0.5), FusionMode::kEarly, {Modality::kText}};
  const auto side = emb(Modality::kSide, Vector(7, 1.0));
  EXPECT_THROW(append_side_features(f, side, make_restore_layer(32, 6)), ConfigError);
  DenseLayer wrong{Matrix(31, 39), Vector(31, 0.0), Activation::kIdentity};
  EXPECT_THROW(append_side_features(f, side, wrong), ConfigError);
}

class IntermediateGradient : public ::testing::TestWithParam<CombineMode> {};

TEST_P(IntermediateGradient, MatchesFiniteDifferences) {
  Rng rng(11);
  const auto cfg = config_of(GetParam(), 5);
  auto params = make_intermediate_fusion({Modality::kText, Modality::kImage, Modality::kSide},
                                         {4, 3, 2}, cfg, rng);
  // Lift biases so relu units sit away from their kink.
  for (auto& layer : params.projections) {
    for (double& b : layer.bias) b = 0.3 + 0.2 * uniform01(rng);
  }
  for (double& b : params.combine_layer.bias) b = 0.3;
  auto grads = zeros_like(params);
  ParamList slots;
  append_slots(slots, params, grads);
  const Vector x0 = random_vector(4, rng), x1 = random_vector(3, rng), x2 = random_vector(2, rng);
  const std::vector<const Vector*> inputs = {&x0, &x1, &x2};
  const Vector c = random_vector(intermediate_output_dim(params, cfg.combine), rng);

  auto loss = [&] {
    IntermediateCache cache;
    return dot(c, intermediate_forward(params, cfg.combine, inputs, cache));
  };
  IntermediateCache cache;
  intermediate_forward(params, cfg.combine, inputs, cache);
  intermediate_backward(params, cfg.combine, inputs, cache, c, grads);
  const auto report = grad_check(loss, slots, 1e-4);
  EXPECT_TRUE(report.passed) << report.max_relative_error;
}

INSTANTIATE_TEST_SUITE_P(AllCombines, IntermediateGradient,
                         ::testing::Values(CombineMode::kConcat, CombineMode::kWeightedSum,
                                           CombineMode::kMlp));

}  // namespace
}  // namespace coldrec::fusion
