#include "coldrec/fusion/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace coldrec::fusion {

std::string to_string(FusionMode mode) {
  switch (mode) {
    case FusionMode::kEarly:
      return "early";
    case FusionMode::kIntermediate:
      return "intermediate";
    case FusionMode::kLate:
      return "late";
  }
  return "early";
}

std::string to_string(CombineMode mode) {
  switch (mode) {
    case CombineMode::kConcat:
      return "concat";
    case CombineMode::kWeightedSum:
      return "weighted-sum";
    case CombineMode::kMlp:
      return "mlp";
  }
  return "concat";
}

FusionMode fusion_mode_from_string(const std::string& name) {
  if (name == "early") return FusionMode::kEarly;
  if (name == "intermediate" || name == "middle") return FusionMode::kIntermediate;
  if (name == "late") return FusionMode::kLate;
  throw ConfigError("unknown fusion mode '" + name + "'");
}

CombineMode combine_mode_from_string(const std::string& name) {
  if (name == "concat") return CombineMode::kConcat;
  if (name == "weighted-sum") return CombineMode::kWeightedSum;
  if (name == "mlp") return CombineMode::kMlp;
  throw ConfigError("unknown combine mode '" + name + "'");
}

void FusionConfig::validate() const {
  if (projection_dim == 0) throw ConfigError("projection_dim must be positive");
  if (!late_combine_weights.empty()) {
    double sum = 0.0;
    for (double w : late_combine_weights) {
      if (!(w >= 0.0)) throw ConfigError("late_combine_weights must be non-negative");
      sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("late_combine_weights must sum to 1");
  }
}

namespace {

std::vector<const ModalityEmbedding*> canonical_order(
    const std::vector<ModalityEmbedding>& embeddings) {
  std::vector<const ModalityEmbedding*> sorted;
  for (const auto& e : embeddings) sorted.push_back(&e);
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const auto* a, const auto* b) { return a->modality < b->modality; });
  for (std::size_t k = 1; k < sorted.size(); ++k) {
    if (sorted[k]->modality == sorted[k - 1]->modality) {
      throw ArgumentError("modality " + embeddings::to_string(sorted[k]->modality) +
                          " given twice");
    }
  }
  return sorted;
}

}  // namespace

FusedVector fuse_early(const std::vector<ModalityEmbedding>& embeddings) {
  if (embeddings.empty()) throw ArgumentError("fuse_early: no embeddings");
  FusedVector out;
  out.entity_id = embeddings.front().entity_id;
  out.mode = FusionMode::kEarly;
  for (const auto* e : canonical_order(embeddings)) {
    out.values.insert(out.values.end(), e->values.begin(), e->values.end());
    out.sources.push_back(e->modality);
  }
  return out;
}

std::size_t IntermediateFusionParams::projection_dim() const {
  return projections.empty() ? 0 : projections.front().out_dim();
}

std::size_t intermediate_output_dim(const IntermediateFusionParams& params,
                                    CombineMode combine) {
  return combine == CombineMode::kConcat ? params.projections.size() * params.projection_dim()
                                         : params.projection_dim();
}

IntermediateFusionParams make_intermediate_fusion(std::vector<Modality> modalities,
                                                  std::vector<std::size_t> input_dims,
                                                  const FusionConfig& config, Rng& rng) {
  config.validate();
  if (modalities.empty() || modalities.size() != input_dims.size()) {
    throw ConfigError("intermediate fusion needs one input dim per modality");
  }
  std::vector<std::size_t> order(modalities.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return modalities[a] < modalities[b]; });
  IntermediateFusionParams p;
  const std::size_t pd = config.projection_dim;
  for (std::size_t k : order) {
    p.modalities.push_back(modalities[k]);
    p.projections.push_back(make_dense(input_dims[k], pd, Activation::kRelu, rng));
  }
  const std::size_t m = p.modalities.size();
  p.sum_weights.assign(m, 1.0 / static_cast<double>(m));
  p.combine_layer = make_dense(m * pd, pd, Activation::kRelu, rng);
  return p;
}

IntermediateFusionParams zeros_like(const IntermediateFusionParams& params) {
  IntermediateFusionParams z;
  z.modalities = params.modalities;
  z.projections = coldrec::zeros_like(params.projections);
  z.sum_weights.assign(params.sum_weights.size(), 0.0);
  z.combine_layer = coldrec::zeros_like(params.combine_layer);
  return z;
}

void append_slots(ParamList& out, IntermediateFusionParams& values,
                  IntermediateFusionParams& grads) {
  coldrec::append_slots(out, values.projections, grads.projections);
  coldrec::append_slots(out, values.sum_weights, grads.sum_weights);
  coldrec::append_slots(out, values.combine_layer, grads.combine_layer);
}

Vector intermediate_forward(const IntermediateFusionParams& params, CombineMode combine,
                            std::span<const Vector* const> inputs, IntermediateCache& cache) {
  const std::size_t m = params.projections.size();
  if (inputs.size() != m) {
    throw ConfigError("intermediate fusion has " + std::to_string(m) +
                      " projections but got " + std::to_string(inputs.size()) + " inputs");
  }
  const std::size_t pd = params.projection_dim();
  cache.projections.resize(m);
  cache.combined_input.assign(m * pd, 0.0);
  for (std::size_t k = 0; k < m; ++k) {
    auto f = dense_forward(params.projections[k], *inputs[k]);
    std::copy(f.output.begin(), f.output.end(), cache.combined_input.begin() + k * pd);
    cache.projections[k] = std::move(f.cache);
  }
  switch (combine) {
    case CombineMode::kConcat:
      return cache.combined_input;
    case CombineMode::kWeightedSum: {
      if (params.sum_weights.size() != m) throw ConfigError("sum_weights length mismatch");
      Vector out(pd, 0.0);
      for (std::size_t k = 0; k < m; ++k) {
        axpy(out, params.sum_weights[k],
             std::span<const double>(cache.combined_input).subspan(k * pd, pd));
      }
      return out;
    }
    case CombineMode::kMlp: {
      if (params.combine_layer.in_dim() != m * pd || params.combine_layer.out_dim() != pd) {
        throw ConfigError("combine layer must be " + std::to_string(pd) + "x" +
                          std::to_string(m * pd) + ", got " +
                          params.combine_layer.weight.shape_string());
      }
      auto f = dense_forward(params.combine_layer, cache.combined_input);
      cache.combine = std::move(f.cache);
      return f.output;
    }
  }
  return {};
}

void intermediate_backward(const IntermediateFusionParams& params, CombineMode combine,
                           std::span<const Vector* const> inputs,
                           const IntermediateCache& cache, std::span<const double> upstream,
                           IntermediateFusionParams& grads) {
  (void)inputs;
  const std::size_t m = params.projections.size();
  const std::size_t pd = params.projection_dim();
  Vector projected_grad;
  switch (combine) {
    case CombineMode::kConcat:
      projected_grad.assign(upstream.begin(), upstream.end());
      break;
    case CombineMode::kWeightedSum:
      projected_grad.assign(m * pd, 0.0);
      for (std::size_t k = 0; k < m; ++k) {
        const auto block = std::span<const double>(cache.combined_input).subspan(k * pd, pd);
        grads.sum_weights[k] += dot(upstream, block);
        axpy(std::span<double>(projected_grad).subspan(k * pd, pd), params.sum_weights[k],
             upstream);
      }
      break;
    case CombineMode::kMlp:
      projected_grad = dense_backward_accumulate(params.combine_layer, cache.combine, upstream,
                                                 grads.combine_layer);
      break;
  }
  for (std::size_t k = 0; k < m; ++k) {
    dense_backward_accumulate(params.projections[k], cache.projections[k],
                              std::span<const double>(projected_grad).subspan(k * pd, pd),
                              grads.projections[k]);
  }
}

FusedVector fuse_intermediate(const std::vector<ModalityEmbedding>& embeddings,
                              const IntermediateFusionParams& params,
                              const FusionConfig& config) {
  config.validate();
  if (embeddings.empty()) throw ArgumentError("fuse_intermediate: no embeddings");
  const auto sorted = canonical_order(embeddings);
  std::vector<const Vector*> inputs;
  for (const auto* e : sorted) {
    const auto it = std::find(params.modalities.begin(), params.modalities.end(), e->modality);
    if (it == params.modalities.end()) {
      throw ConfigError("no projection for modality " + embeddings::to_string(e->modality));
    }
    const auto k = static_cast<std::size_t>(it - params.modalities.begin());
    if (params.projections[k].in_dim() != e->dim()) {
      throw ConfigError("projection for " + embeddings::to_string(e->modality) + " is " +
                        params.projections[k].weight.shape_string() + " but embedding has " +
                        length_string(e->dim()));
    }
    inputs.push_back(&e->values);
  }
  if (inputs.size() != params.modalities.size()) {
    throw ConfigError("fusion expects " + std::to_string(params.modalities.size()) +
                      " modalities, got " + std::to_string(inputs.size()));
  }
  IntermediateCache cache;
  FusedVector out;
  out.entity_id = embeddings.front().entity_id;
  out.mode = FusionMode::kIntermediate;
  out.sources = params.modalities;
  out.values = intermediate_forward(params, config.combine, inputs, cache);
  return out;
}

double fuse_late(std::span<const double> predictions, std::span<const double> weights) {
  if (predictions.size() != weights.size()) {
    throw ShapeError("fuse_late: " + length_string(predictions.size()) + " predictions but " +
                     length_string(weights.size()) + " weights");
  }
  if (predictions.empty()) throw ArgumentError("fuse_late: no predictions");
  double sum = 0.0;
  double total = 0.0;
  for (std::size_t k = 0; k < predictions.size(); ++k) {
    sum += weights[k] * predictions[k];
    total += weights[k];
  }
  if (std::abs(total - 1.0) > 1e-9) throw ArgumentError("fuse_late: weights must sum to 1");
  // Clamp the rounding drift so the result stays inside [min, max].
  const auto [lo, hi] = std::minmax_element(predictions.begin(), predictions.end());
  return std::clamp(sum, *lo, *hi);
}

DenseLayer make_restore_layer(std::size_t fused_dim, std::size_t side_dim) {
  if (fused_dim == 0) throw ArgumentError("restore layer: fused dim must be positive");
  DenseLayer layer{Matrix(fused_dim, fused_dim + side_dim), Vector(fused_dim, 0.0),
                   Activation::kIdentity};
  for (std::size_t k = 0; k < fused_dim; ++k) layer.weight(k, k) = 1.0;
  return layer;
}

FusedVector append_side_features(const FusedVector& fused, const ModalityEmbedding& side,
                                 const DenseLayer& restore) {
  const std::size_t in = fused.dim() + side.dim();
  if (restore.out_dim() != fused.dim() || restore.in_dim() != in) {
    throw ConfigError("restore layer must be " + std::to_string(fused.dim()) + "x" +
                      std::to_string(in) + ", got " + restore.weight.shape_string());
  }
  if (restore.activation != Activation::kIdentity) {
    throw ConfigError("restore layer must use the identity activation");
  }
  FusedVector out = fused;
  out.values = dense_apply(restore, concat(fused.values, side.values));
  if (std::find(out.sources.begin(), out.sources.end(), Modality::kSide) == out.sources.end()) {
    out.sources.push_back(Modality::kSide);
  }
  return out;
}

}  // namespace coldrec::fusion
