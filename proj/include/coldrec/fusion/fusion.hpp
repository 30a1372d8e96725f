#pragma once

#include <span>
#include <string>
#include <vector>

#include "coldrec/embeddings/embedding.hpp"
#include "coldrec/numerics/dense.hpp"
#include "coldrec/numerics/params.hpp"

namespace coldrec::fusion {

using embeddings::Modality;
using embeddings::ModalityEmbedding;

enum class FusionMode { kEarly, kIntermediate, kLate };
enum class CombineMode { kConcat, kWeightedSum, kMlp };

std::string to_string(FusionMode mode);
std::string to_string(CombineMode mode);
FusionMode fusion_mode_from_string(const std::string& name);
CombineMode combine_mode_from_string(const std::string& name);

struct FusionConfig {
  FusionMode mode = FusionMode::kIntermediate;
  std::size_t projection_dim = 32;
  CombineMode combine = CombineMode::kMlp;
  Vector late_combine_weights;  // empty = uniform

  // Throws ConfigError.
  void validate() const;
};

struct FusedVector {
  std::string entity_id;
  Vector values;
  FusionMode mode = FusionMode::kEarly;
  std::vector<Modality> sources;  // canonical order

  std::size_t dim() const { return values.size(); }
};

// Concatenation in canonical modality order, whatever the input order.
FusedVector fuse_early(const std::vector<ModalityEmbedding>& embeddings);

// Trainable parameters of intermediate fusion for one entity kind.
struct IntermediateFusionParams {
  std::vector<Modality> modalities;     // canonical order
  std::vector<DenseLayer> projections;  // one per modality, in -> projection_dim
  Vector sum_weights;                   // weighted-sum combine
  DenseLayer combine_layer;             // mlp combine: m*projection_dim -> projection_dim

  std::size_t projection_dim() const;
  friend bool operator==(const IntermediateFusionParams&,
                         const IntermediateFusionParams&) = default;
};

std::size_t intermediate_output_dim(const IntermediateFusionParams& params, CombineMode combine);

// Relu projections (Xavier), uniform sum weights, relu combine layer.
// `modalities` and `input_dims` are parallel and are sorted to canonical order.
IntermediateFusionParams make_intermediate_fusion(std::vector<Modality> modalities,
                                                  std::vector<std::size_t> input_dims,
                                                  const FusionConfig& config, Rng& rng);

IntermediateFusionParams zeros_like(const IntermediateFusionParams& params);
void append_slots(ParamList& out, IntermediateFusionParams& values,
                  IntermediateFusionParams& grads);

FusedVector fuse_intermediate(const std::vector<ModalityEmbedding>& embeddings,
                              const IntermediateFusionParams& params,
                              const FusionConfig& config);

// Training-path forward/backward over inputs already in the params' modality
// order. The inputs are fixed features, so backward only yields parameter
// gradients.
struct IntermediateCache {
  std::vector<DenseCache> projections;
  Vector combined_input;
  DenseCache combine;
};

Vector intermediate_forward(const IntermediateFusionParams& params, CombineMode combine,
                            std::span<const Vector* const> inputs, IntermediateCache& cache);
void intermediate_backward(const IntermediateFusionParams& params, CombineMode combine,
                           std::span<const Vector* const> inputs,
                           const IntermediateCache& cache, std::span<const double> upstream,
                           IntermediateFusionParams& grads);

// Weighted mean of per-modality predictions.
double fuse_late(std::span<const double> predictions, std::span<const double> weights);

// [I | 0] with zero bias: a restore layer that starts by ignoring the side block.
DenseLayer make_restore_layer(std::size_t fused_dim, std::size_t side_dim);

// Concatenates side features and projects back to fused.dim() through the
// identity-activation restore layer.
FusedVector append_side_features(const FusedVector& fused, const ModalityEmbedding& side,
                                 const DenseLayer& restore);

}  // namespace coldrec::fusion
