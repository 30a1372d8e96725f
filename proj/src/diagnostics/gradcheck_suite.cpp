#include "coldrec/diagnostics/gradcheck_suite.hpp"

#include <fmt/format.h>

#include "coldrec/fusion/fusion.hpp"
#include "coldrec/recsys/model.hpp"
#include "coldrec/recsys/train.hpp"
#include "coldrec/vae/vae.hpp"

namespace coldrec::diagnostics {

namespace {

using embeddings::EntityKind;
using embeddings::Modality;

Vector random_vector(std::size_t n, Rng& rng) {
  Vector v(n);
  for (double& x : v) x = standard_normal(rng);
  return v;
}

// Biases away from zero keep relu units off their kink, where finite
// differences are meaningless.
void lift(DenseLayer& layer, Rng& rng) {
  for (double& b : layer.bias) b = 0.2 + 0.2 * uniform01(rng);
}

void numerics_cases(std::vector<GradCheckCase>& out) {
  const std::vector<std::vector<Activation>> shapes = {
      {Activation::kRelu, Activation::kIdentity},
      {Activation::kTanh, Activation::kRelu, Activation::kSigmoid, Activation::kIdentity},
      {Activation::kSigmoid, Activation::kTanh}};
  for (std::size_t s = 0; s < shapes.size(); ++s) {
    Rng rng(100 + s);
    const std::size_t in = 5;
    LayerStack stack;
    std::size_t width = in;
    for (std::size_t l = 0; l < shapes[s].size(); ++l) {
      const std::size_t next = l + 1 == shapes[s].size() ? 2 : 6 - l;
      stack.push_back(make_dense(width, next, shapes[s][l], rng));
      lift(stack.back(), rng);
      width = next;
    }
    const Vector x = random_vector(in, rng);
    const Vector target = random_vector(2, rng);
    auto loss = [&] {
      const Vector y = stack_apply(stack, x);
      double total = 0.0;
      for (std::size_t k = 0; k < y.size(); ++k) total += 0.5 * (y[k] - target[k]) * (y[k] - target[k]);
      return total;
    };
    LayerStack grads = zeros_like(stack);
    const auto f = stack_forward(stack, x);
    Vector up(2);
    for (std::size_t k = 0; k < 2; ++k) up[k] = f.output[k] - target[k];
    stack_backward_accumulate(stack, f.caches, up, grads);
    ParamList slots;
    append_slots(slots, stack, grads);
    out.push_back({"numerics", fmt::format("mlp_stack_{}", s), grad_check(loss, slots, kSuiteTolerance)});
  }
}

void vae_cases(std::vector<GradCheckCase>& out) {
  for (double beta : {0.0, 1.0}) {
    Rng rng(200 + static_cast<std::uint64_t>(beta));
    auto p = vae::make_vae(6, 3, 7, rng);
    lift(p.encoder[0], rng);
    lift(p.decoder[0], rng);
    auto grads = vae::zeros_like(p);
    ParamList slots;
    vae::append_slots(slots, p, grads);
    const Vector x = random_vector(6, rng);
    const Vector eps = random_vector(3, rng);
    vae::elbo_accumulate(p, x, eps, beta, 1.0, grads);
    auto loss = [&] {
      const vae::Posterior post = vae::encode(p, x);
      return vae::elbo_loss(x, vae::decode(p, vae::reparameterize(post.mu, post.logvar, eps)),
                            post.mu, post.logvar, beta)
          .total;
    };
    out.push_back({"vae", fmt::format("elbo_beta_{}", beta), grad_check(loss, slots, kSuiteTolerance)});
  }
  Rng rng(210);
  auto p = vae::make_vae(5, 2, 6, rng);
  lift(p.encoder[0], rng);
  lift(p.decoder[0], rng);
  Vector x = random_vector(5, rng);
  const Vector c = random_vector(5, rng);
  vae::ReconstructCache cache;
  vae::reconstruct_forward(p, x, cache);
  Vector analytic = vae::reconstruct_input_grad(p, cache, c);
  ParamList slots{ParamSlot{x, analytic}};
  out.push_back({"vae", "reconstruction_input",
                 grad_check([&] { return dot(c, vae::reconstruct(p, x)); }, slots, kSuiteTolerance)});
}

void fusion_cases(std::vector<GradCheckCase>& out) {
  for (auto combine : {fusion::CombineMode::kConcat, fusion::CombineMode::kWeightedSum,
                       fusion::CombineMode::kMlp}) {
    Rng rng(300 + static_cast<std::uint64_t>(combine));
    fusion::FusionConfig cfg;
    cfg.mode = fusion::FusionMode::kIntermediate;
    cfg.combine = combine;
    cfg.projection_dim = 4;
    auto params = fusion::make_intermediate_fusion({Modality::kText, Modality::kImage, Modality::kSide},
                                                   {5, 3, 2}, cfg, rng);
    for (auto& layer : params.projections) lift(layer, rng);
    lift(params.combine_layer, rng);
    auto grads = fusion::zeros_like(params);
    ParamList slots;
    fusion::append_slots(slots, params, grads);
    const Vector x0 = random_vector(5, rng), x1 = random_vector(3, rng), x2 = random_vector(2, rng);
    const std::vector<const Vector*> inputs = {&x0, &x1, &x2};
    const Vector c = random_vector(fusion::intermediate_output_dim(params, combine), rng);
    auto loss = [&] {
      fusion::IntermediateCache cache;
      return dot(c, fusion::intermediate_forward(params, combine, inputs, cache));
    };
    fusion::IntermediateCache cache;
    fusion::intermediate_forward(params, combine, inputs, cache);
    fusion::intermediate_backward(params, combine, inputs, cache, c, grads);
    out.push_back({"fusion", "intermediate_" + fusion::to_string(combine),
                   grad_check(loss, slots, kSuiteTolerance)});
  }
  // Side restore layer: identity activation over [fused | side].
  Rng rng(310);
  DenseLayer restore = fusion::make_restore_layer(4, 3);
  for (double& w : restore.weight.values()) w += 0.1 * standard_normal(rng);
  DenseLayer grads = zeros_like(restore);
  ParamList slots;
  append_slots(slots, restore, grads);
  const Vector input = random_vector(7, rng);
  const Vector c = random_vector(4, rng);
  const auto f = dense_forward(restore, input);
  dense_backward_accumulate(restore, f.cache, c, grads);
  out.push_back({"fusion", "side_restore",
                 grad_check([&] { return dot(c, dense_apply(restore, input)); }, slots,
                            kSuiteTolerance)});
}

recsys::EntityFeatures random_features(std::size_t n, std::size_t side_dim, Rng& rng) {
  recsys::EntityFeatures f;
  f.modalities = {Modality::kText, Modality::kImage};
  for (std::size_t e = 0; e < n; ++e) {
    f.values.push_back({random_vector(3, rng), random_vector(4, rng)});
    if (side_dim > 0) f.side.push_back(random_vector(side_dim, rng));
  }
  return f;
}

struct ModelCase {
  std::string name;
  recsys::ModelKind kind;
  Feedback feedback;
  fusion::FusionMode mode;
  fusion::CombineMode combine;
  bool side;
  bool vae;
};

GradCheckReport model_check(const ModelCase& c, std::uint64_t seed) {
  recsys::ModelSpec spec;
  spec.kind = c.kind;
  spec.feedback = c.feedback;
  spec.embedding_dim = 4;
  spec.hidden = {6, 3};
  spec.fusion.mode = c.mode;
  spec.fusion.combine = c.combine;
  spec.fusion.projection_dim = 3;
  spec.side_features = c.side;
  spec.vae_latent_dim = 2;
  spec.vae_hidden_dim = 5;
  Rng rng(seed);
  const recsys::FeatureSet fs{random_features(3, c.side ? 2 : 0, rng),
                              random_features(4, c.side ? 2 : 0, rng)};
  auto model = recsys::make_model(spec, 3, 4, &fs, seed + 1);
  auto* mm = dynamic_cast<recsys::MultimodalModel*>(model.get());
  if (c.vae) {
    for (EntityKind k : {EntityKind::kUser, EntityKind::kItem}) {
      mm->set_vae(k, vae::make_vae(mm->fused_dim(k), 2, 5, rng));
    }
  }
  for (const auto& slot : model->slots()) {
    for (double& v : slot.values) v += 1e-3;
  }
  if (mm) mm->refresh();

  std::vector<recsys::TrainingExample> examples;
  for (std::size_t u = 0; u < 3; ++u) {
    for (std::size_t i = 0; i < 4; i += 1 + u) {
      const double label = c.feedback == Feedback::kImplicit ? double((u + i) % 2) : uniform01(rng);
      examples.push_back({u, i, label, 0.5 + uniform01(rng), {}, {}});
    }
  }
  // A pseudo-sample style example whose user content is overridden.
  Vector override_vector;
  if (mm) {
    override_vector = random_vector(mm->fused_dim(EntityKind::kUser), rng);
    examples.push_back({1, 2, 1.0, 0.5, override_vector, {}});
  }
  const bool linear = model->linear_output();
  auto loss = [&] {
    double total = 0.0;
    for (const auto& ex : examples) {
      total += ex.weight * recsys::example_loss(c.feedback, linear, model->forward(ex), ex.label).loss;
    }
    return total;
  };
  zero_grads(model->slots());
  for (const auto& ex : examples) {
    const double logit = model->forward(ex);
    model->backward(ex.weight * recsys::example_loss(c.feedback, linear, logit, ex.label).dlogit);
  }
  return grad_check(loss, model->slots(), kSuiteTolerance);
}

void recsys_cases(std::vector<GradCheckCase>& out) {
  using recsys::ModelKind;
  using fusion::CombineMode;
  using fusion::FusionMode;
  const std::vector<ModelCase> cases = {
      {"mf_implicit", ModelKind::kMf, Feedback::kImplicit, FusionMode::kEarly, CombineMode::kConcat, false, false},
      {"mf_explicit", ModelKind::kMf, Feedback::kExplicit, FusionMode::kEarly, CombineMode::kConcat, false, false},
      {"neumf_implicit", ModelKind::kNeumf, Feedback::kImplicit, FusionMode::kEarly, CombineMode::kConcat, false, false},
      {"neumf_explicit", ModelKind::kNeumf, Feedback::kExplicit, FusionMode::kEarly, CombineMode::kConcat, false, false},
      {"early", ModelKind::kMultimodal, Feedback::kImplicit, FusionMode::kEarly, CombineMode::kConcat, false, false},
      {"early_side_vae", ModelKind::kMultimodal, Feedback::kExplicit, FusionMode::kEarly, CombineMode::kConcat, true, true},
      {"intermediate_concat_vae", ModelKind::kMultimodal, Feedback::kImplicit, FusionMode::kIntermediate, CombineMode::kConcat, false, true},
      {"intermediate_sum_side", ModelKind::kMultimodal, Feedback::kExplicit, FusionMode::kIntermediate, CombineMode::kWeightedSum, true, false},
      {"intermediate_mlp_side_vae", ModelKind::kMultimodal, Feedback::kImplicit, FusionMode::kIntermediate, CombineMode::kMlp, true, true},
  };
  for (std::size_t k = 0; k < cases.size(); ++k) {
    out.push_back({"recsys", cases[k].name, model_check(cases[k], 400 + 10 * k)});
  }
}

}  // namespace

std::vector<std::string> gradcheck_modules() { return {"numerics", "vae", "fusion", "recsys"}; }

std::vector<GradCheckCase> run_gradcheck_suite(const std::string& module) {
  std::vector<GradCheckCase> out;
  const bool all = module == "all";
  bool known = all;
  if (all || module == "numerics") known = true, numerics_cases(out);
  if (all || module == "vae") known = true, vae_cases(out);
  if (all || module == "fusion") known = true, fusion_cases(out);
  if (all || module == "recsys") known = true, recsys_cases(out);
  if (!known) throw ArgumentError("unknown gradcheck module '" + module + "'");
  return out;
}

}  // namespace coldrec::diagnostics
