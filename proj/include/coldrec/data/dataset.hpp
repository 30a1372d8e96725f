#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "coldrec/embeddings/embedding.hpp"
#include "coldrec/ids.hpp"
#include "coldrec/json_util.hpp"
#include "coldrec/numerics/matrix.hpp"

namespace coldrec::data {

using embeddings::EntityKind;

// A rating outside the manifest's declared scale.
class ScaleError : public LoadError {
 public:
  using LoadError::LoadError;
};

struct RatingScale {
  double min = 0.0;
  double max = 1.0;

  double normalize(double rating) const { return (rating - min) / (max - min); }
  double denormalize(double score) const { return min + (max - min) * score; }
  bool contains(double rating) const { return rating >= min && rating <= max; }
  friend bool operator==(const RatingScale&, const RatingScale&) = default;
};

struct SideColumn {
  std::string name;
  bool categorical = false;
  std::vector<std::string> categories;  // one-hot order, categorical only

  std::size_t width() const { return categorical ? categories.size() : 1; }
  friend bool operator==(const SideColumn&, const SideColumn&) = default;
};

// manifest.json:
//   {"rating_scale": [1, 5], "implicit": false,
//    "side_features": [{"name": "age", "type": "numeric"},
//                      {"name": "segment", "type": "categorical",
//                       "categories": ["a", "b"]}],
//    "description": "..."}
struct Manifest {
  RatingScale scale;
  bool implicit = false;
  std::vector<SideColumn> side_columns;
  std::string description;

  std::size_t side_width() const;
  friend bool operator==(const Manifest&, const Manifest&) = default;
};

Json to_json(const Manifest& manifest);
Manifest manifest_from_json(const Json& json);
Manifest load_manifest(const std::string& path);

struct Interaction {
  std::size_t user = 0;
  std::size_t item = 0;
  double rating = 0.0;      // on the manifest scale
  double normalized = 0.0;  // in [0, 1]
  std::optional<std::int64_t> timestamp;
  friend bool operator==(const Interaction&, const Interaction&) = default;
};

struct Dataset {
  Manifest manifest;
  IdIndex users;
  IdIndex items;
  std::vector<Interaction> interactions;  // file order, duplicates resolved
  std::vector<Vector> user_side;          // per user index; empty when absent
  std::vector<Vector> item_side;
  std::size_t duplicate_rows = 0;         // rows overwritten by a later duplicate

  bool has_side_features() const { return !user_side.empty() || !item_side.empty(); }
  // Interaction count per user / item index.
  std::vector<std::size_t> user_degrees() const;
  std::vector<std::size_t> item_degrees() const;
};

// Interactions CSV with header `user_id,item_id,rating,timestamp` (timestamp
// may be empty). Ratings are checked against the manifest scale; a repeated
// (user, item) keeps the later row in the earlier row's position.
// Throws LoadError / ScaleError / ParseError carrying the 1-based line.
Dataset load_interactions(const std::string& path, const Manifest& manifest);
Dataset parse_interactions(std::istream& in, const Manifest& manifest);

// Side features CSV `entity_id,kind,<manifest column names...>`; categorical
// columns are expanded one-hot. Entities that only appear here join the id
// sets. Every user and item must end up with a row.
void load_side_features(const std::string& path, Dataset& dataset);
void parse_side_features(std::istream& in, Dataset& dataset);

// Header plus one LF-terminated row per interaction, ratings as exact decimals.
std::string interactions_to_csv(const Dataset& dataset);

// A dataset directory: manifest.json, interactions.csv, embeddings.jsonl and,
// when the manifest declares side columns, side_features.csv.
struct DatasetBundle {
  Dataset dataset;
  embeddings::EmbeddingStore embeddings;
};

DatasetBundle load_dataset_dir(const std::string& dir);

}  // namespace coldrec::data
