#pragma once

#include <array>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "coldrec/error.hpp"
#include "coldrec/numerics/matrix.hpp"

namespace coldrec::embeddings {

enum class EntityKind { kUser, kItem };

// Declaration order is the canonical modality order used everywhere.
enum class Modality { kText, kImage, kSide };
inline constexpr std::array<Modality, 3> kCanonicalModalities = {
    Modality::kText, Modality::kImage, Modality::kSide};

std::string to_string(EntityKind kind);
std::string to_string(Modality modality);
EntityKind entity_kind_from_string(const std::string& name);
Modality modality_from_string(const std::string& name);

struct ModalityEmbedding {
  std::string entity_id;
  EntityKind entity_kind = EntityKind::kItem;
  Modality modality = Modality::kText;
  Vector values;

  std::size_t dim() const { return values.size(); }
  friend bool operator==(const ModalityEmbedding&, const ModalityEmbedding&) = default;
};

class DuplicateKeyError : public SchemaError {
 public:
  using SchemaError::SchemaError;
};

// Immutable-after-load map from (kind, entity_id, modality) to embedding.
// Every embedding of one modality has the same dimension.
class EmbeddingStore {
 public:
  using Key = std::tuple<EntityKind, std::string, Modality>;

  // Throws DuplicateKeyError on a repeated key, SchemaError on a dim that
  // conflicts with the modality's declared dim, ArgumentError on dim 0 or
  // non-finite values.
  void insert(ModalityEmbedding embedding);

  bool contains(EntityKind kind, const std::string& entity_id, Modality modality) const;
  // Throws LookupError naming (entity_id, modality) when absent.
  const ModalityEmbedding& get(EntityKind kind, const std::string& entity_id,
                               Modality modality) const;

  std::optional<std::size_t> dim(Modality modality) const;
  // Modalities present for `kind`, in canonical order.
  std::vector<Modality> modalities(EntityKind kind) const;

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  friend bool operator==(const EmbeddingStore&, const EmbeddingStore&) = default;

 private:
  std::map<Key, ModalityEmbedding> entries_;
  std::map<Modality, std::size_t> dims_;
};

// Same as store.get; the lookup failure is what routes an entity to the
// cold-start path upstream.
const ModalityEmbedding& get_embedding(const EmbeddingStore& store, EntityKind kind,
                                       const std::string& entity_id, Modality modality);

// JSON-lines: one {"entity_id","entity_kind","modality","dim","values"} per line.
EmbeddingStore load_embedding_file(const std::string& path);
EmbeddingStore parse_embeddings(std::istream& in);

std::string embedding_to_json_line(const ModalityEmbedding& e);
// Records in key order, LF-terminated.
void write_embeddings(const EmbeddingStore& store, std::ostream& out);
void write_embedding_file(const EmbeddingStore& store, const std::string& path);

}  // namespace coldrec::embeddings
