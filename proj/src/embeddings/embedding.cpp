#include "coldrec/embeddings/embedding.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>

#include "json.hpp"

namespace coldrec::embeddings {

std::string to_string(EntityKind kind) {
  return kind == EntityKind::kUser ? "user" : "item";
}

std::string to_string(Modality modality) {
  switch (modality) {
    case Modality::kText:
      return "text";
    case Modality::kImage:
      return "image";
    case Modality::kSide:
      return "side";
  }
  return "text";
}

EntityKind entity_kind_from_string(const std::string& name) {
  if (name == "user") return EntityKind::kUser;
  if (name == "item") return EntityKind::kItem;
  throw ArgumentError("unknown entity kind '" + name + "'");
}

Modality modality_from_string(const std::string& name) {
  if (name == "text") return Modality::kText;
  if (name == "image") return Modality::kImage;
  if (name == "side") return Modality::kSide;
  throw ArgumentError("unknown modality '" + name + "'");
}

void EmbeddingStore::insert(ModalityEmbedding embedding) {
  if (embedding.values.empty()) {
    throw ArgumentError("embedding for '" + embedding.entity_id + "' has dim 0");
  }
  for (double v : embedding.values) {
    if (!std::isfinite(v)) {
      throw ArgumentError("embedding for '" + embedding.entity_id +
                          "' has a non-finite value");
    }
  }
  Key key{embedding.entity_kind, embedding.entity_id, embedding.modality};
  if (entries_.contains(key)) {
    throw DuplicateKeyError("duplicate embedding for (" + embedding.entity_id + ", " +
                            to_string(embedding.modality) + ")");
  }
  auto [it, inserted] = dims_.try_emplace(embedding.modality, embedding.dim());
  if (!inserted && it->second != embedding.dim()) {
    throw SchemaError("modality " + to_string(embedding.modality) + " declared dim " +
                      std::to_string(it->second) + " but '" + embedding.entity_id +
                      "' has dim " + std::to_string(embedding.dim()));
  }
  entries_.emplace(std::move(key), std::move(embedding));
}

bool EmbeddingStore::contains(EntityKind kind, const std::string& entity_id,
                              Modality modality) const {
  return entries_.contains(Key{kind, entity_id, modality});
}

const ModalityEmbedding& EmbeddingStore::get(EntityKind kind, const std::string& entity_id,
                                             Modality modality) const {
  auto it = entries_.find(Key{kind, entity_id, modality});
  if (it == entries_.end()) {
    throw LookupError("no embedding for (" + entity_id + ", " + to_string(modality) +
                      ")");
  }
  return it->second;
}

std::optional<std::size_t> EmbeddingStore::dim(Modality modality) const {
  auto it = dims_.find(modality);
  if (it == dims_.end()) return std::nullopt;
  return it->second;
}

std::vector<Modality> EmbeddingStore::modalities(EntityKind kind) const {
  std::set<Modality> seen;
  for (const auto& [key, e] : entries_) {
    if (std::get<0>(key) == kind) seen.insert(std::get<2>(key));
  }
  return {seen.begin(), seen.end()};
}

const ModalityEmbedding& get_embedding(const EmbeddingStore& store, EntityKind kind,
                                       const std::string& entity_id, Modality modality) {
  return store.get(kind, entity_id, modality);
}

namespace {

const std::set<std::string> kFields = {"entity_id", "entity_kind", "modality", "dim",
                                       "values"};

ModalityEmbedding parse_record(const std::string& line, std::size_t line_no) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what(), line_no);
  }
  if (!j.is_object()) throw ParseError("record is not a JSON object", line_no);
  for (const auto& [k, v] : j.items()) {
    if (!kFields.contains(k)) throw ParseError("unknown field '" + k + "'", line_no);
  }
  for (const auto& f : kFields) {
    if (!j.contains(f)) throw ParseError("missing field '" + f + "'", line_no);
  }
  if (!j["entity_id"].is_string() || j["entity_id"].get<std::string>().empty()) {
    throw ParseError("entity_id must be a non-empty string", line_no);
  }
  if (!j["entity_kind"].is_string() || !j["modality"].is_string()) {
    throw ParseError("entity_kind and modality must be strings", line_no);
  }
  if (!j["dim"].is_number_integer() || j["dim"].get<long long>() <= 0) {
    throw ParseError("dim must be a positive integer", line_no);
  }
  if (!j["values"].is_array()) throw ParseError("values must be an array", line_no);

  ModalityEmbedding e;
  e.entity_id = j["entity_id"].get<std::string>();
  try {
    e.entity_kind = entity_kind_from_string(j["entity_kind"].get<std::string>());
    e.modality = modality_from_string(j["modality"].get<std::string>());
  } catch (const ArgumentError& err) {
    throw ParseError(err.what(), line_no);
  }
  const auto dim = static_cast<std::size_t>(j["dim"].get<long long>());
  const auto& values = j["values"];
  if (values.size() != dim) {
    throw ParseError("declared dim " + std::to_string(dim) + " but " +
                         std::to_string(values.size()) + " values",
                     line_no);
  }
  e.values.reserve(dim);
  for (const auto& v : values) {
    if (!v.is_number()) throw ParseError("non-numeric value", line_no);
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ParseError("non-finite value", line_no);
    e.values.push_back(x);
  }
  return e;
}

}  // namespace

EmbeddingStore parse_embeddings(std::istream& in) {
  EmbeddingStore store;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    ModalityEmbedding e = parse_record(line, line_no);
    try {
      store.insert(std::move(e));
    } catch (const DuplicateKeyError& err) {
      throw DuplicateKeyError("line " + std::to_string(line_no) + ": " + err.what());
    } catch (const SchemaError& err) {
      throw SchemaError("line " + std::to_string(line_no) + ": " + err.what());
    }
  }
  return store;
}

EmbeddingStore load_embedding_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open embedding file '" + path + "'", 0);
  return parse_embeddings(in);
}

std::string embedding_to_json_line(const ModalityEmbedding& e) {
  nlohmann::ordered_json j;
  j["entity_id"] = e.entity_id;
  j["entity_kind"] = to_string(e.entity_kind);
  j["modality"] = to_string(e.modality);
  j["dim"] = e.dim();
  j["values"] = e.values;
  return j.dump();
}

void write_embeddings(const EmbeddingStore& store, std::ostream& out) {
  for (const auto& [key, e] : store) out << embedding_to_json_line(e) << '\n';
}

void write_embedding_file(const EmbeddingStore& store, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw LoadError("cannot write embedding file '" + path + "'", 0);
  write_embeddings(store, out);
}

}  // namespace coldrec::embeddings
