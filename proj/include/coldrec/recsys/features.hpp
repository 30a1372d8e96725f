#pragma once

#include <string>
#include <vector>

#include "coldrec/embeddings/embedding.hpp"

namespace coldrec::recsys {

using embeddings::EntityKind;
using embeddings::Modality;

// Content vectors for every entity of one kind, indexed like the IdIndex the
// ids came from.
struct EntityFeatures {
  std::vector<Modality> modalities;     // canonical order, side excluded
  std::vector<std::vector<Vector>> values;  // [entity][modality]
  std::vector<Vector> side;             // [entity]; empty when not loaded

  std::size_t size() const { return values.size(); }
  std::size_t dim(std::size_t modality_index) const;
  std::size_t side_dim() const { return side.empty() ? 0 : side.front().size(); }
  std::size_t concat_dim() const;
  Vector concatenated(std::size_t entity) const;
};

// Pulls the requested modalities (and side features when `with_side`) for
// every id. A missing embedding raises LookupError naming (id, modality).
EntityFeatures build_entity_features(const embeddings::EmbeddingStore& store, EntityKind kind,
                                     const std::vector<std::string>& ids,
                                     std::vector<Modality> modalities, bool with_side);

// Same entities restricted to one modality.
EntityFeatures select_modality(const EntityFeatures& features, Modality modality);

struct FeatureSet {
  EntityFeatures users;
  EntityFeatures items;
};

}  // namespace coldrec::recsys
