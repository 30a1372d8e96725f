#include "coldrec/recsys/features.hpp"

#include <algorithm>

namespace coldrec::recsys {

std::size_t EntityFeatures::dim(std::size_t modality_index) const {
  return values.empty() ? 0 : values.front().at(modality_index).size();
}

std::size_t EntityFeatures::concat_dim() const {
  std::size_t n = 0;
  for (std::size_t m = 0; m < modalities.size(); ++m) n += dim(m);
  return n;
}

Vector EntityFeatures::concatenated(std::size_t entity) const {
  Vector out;
  out.reserve(concat_dim());
  for (const auto& v : values.at(entity)) out.insert(out.end(), v.begin(), v.end());
  return out;
}

EntityFeatures build_entity_features(const embeddings::EmbeddingStore& store, EntityKind kind,
                                     const std::vector<std::string>& ids,
                                     std::vector<Modality> modalities, bool with_side) {
  std::erase(modalities, Modality::kSide);
  std::sort(modalities.begin(), modalities.end());
  modalities.erase(std::unique(modalities.begin(), modalities.end()), modalities.end());
  if (modalities.empty()) throw ConfigError("no content modalities selected");
  EntityFeatures f;
  f.modalities = modalities;
  f.values.reserve(ids.size());
  for (const auto& id : ids) {
    std::vector<Vector> row;
    for (Modality m : modalities) row.push_back(store.get(kind, id, m).values);
    f.values.push_back(std::move(row));
    if (with_side) f.side.push_back(store.get(kind, id, Modality::kSide).values);
  }
  return f;
}

EntityFeatures select_modality(const EntityFeatures& features, Modality modality) {
  const auto it = std::find(features.modalities.begin(), features.modalities.end(), modality);
  if (it == features.modalities.end()) {
    throw ConfigError("modality " + embeddings::to_string(modality) + " not loaded");
  }
  const auto m = static_cast<std::size_t>(it - features.modalities.begin());
  EntityFeatures out;
  out.modalities = {modality};
  out.side = features.side;
  out.values.reserve(features.size());
  for (const auto& row : features.values) out.values.push_back({row[m]});
  return out;
}

}  // namespace coldrec::recsys
