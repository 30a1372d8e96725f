#include "coldrec/data/dataset.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "coldrec/data/csv.hpp"

namespace coldrec::data {

std::size_t Manifest::side_width() const {
  std::size_t w = 0;
  for (const auto& c : side_columns) w += c.width();
  return w;
}

Json to_json(const Manifest& m) {
  Json cols = Json::array();
  for (const auto& c : m.side_columns) {
    Json col{{"name", c.name}, {"type", c.categorical ? "categorical" : "numeric"}};
    if (c.categorical) col["categories"] = c.categories;
    cols.push_back(std::move(col));
  }
  return Json{{"rating_scale", {m.scale.min, m.scale.max}},
              {"implicit", m.implicit},
              {"side_features", cols},
              {"description", m.description}};
}

Manifest manifest_from_json(const Json& json) {
  ObjectReader r(json, "manifest");
  Manifest m;
  const auto scale = r.numbers("rating_scale", {0.0, 1.0});
  if (scale.size() != 2 || !(scale[0] < scale[1])) {
    throw ConfigError("manifest.rating_scale must be [min, max] with min < max");
  }
  m.scale = {scale[0], scale[1]};
  m.implicit = r.flag("implicit", false);
  m.description = r.text("description", "");
  if (r.has("side_features")) {
    const Json& cols = r.raw("side_features");
    if (!cols.is_array()) throw ConfigError("manifest.side_features must be an array");
    for (std::size_t k = 0; k < cols.size(); ++k) {
      ObjectReader c(cols[k], "manifest.side_features[" + std::to_string(k) + "]");
      SideColumn col;
      col.name = c.text("name");
      const std::string type = c.text("type", "numeric");
      if (type == "categorical") {
        col.categorical = true;
        col.categories = c.texts("categories", {});
        if (col.categories.empty()) throw ConfigError("categorical column '" + col.name + "' has no categories");
      } else if (type != "numeric") {
        throw ConfigError("side feature '" + col.name + "' has unknown type '" + type + "'");
      }
      c.finish();
      for (const auto& existing : m.side_columns) {
        if (existing.name == col.name) throw ConfigError("duplicate side feature '" + col.name + "'");
      }
      m.side_columns.push_back(std::move(col));
    }
  }
  r.finish();
  return m;
}

Manifest load_manifest(const std::string& path) { return manifest_from_json(parse_json_file(path)); }

std::vector<std::size_t> Dataset::user_degrees() const {
  std::vector<std::size_t> d(users.size(), 0);
  for (const auto& x : interactions) ++d[x.user];
  return d;
}

std::vector<std::size_t> Dataset::item_degrees() const {
  std::vector<std::size_t> d(items.size(), 0);
  for (const auto& x : interactions) ++d[x.item];
  return d;
}

namespace {

double parse_number(const std::string& text, std::size_t line, const std::string& what) {
  double v = 0.0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (text.empty() || ec != std::errc() || ptr != end || !std::isfinite(v)) {
    throw LoadError(what + " '" + text + "' is not a finite number", line);
  }
  return v;
}

struct RawRow {
  std::string user;
  std::string item;
  double rating;
  std::optional<std::int64_t> timestamp;
  std::size_t line;
};

void index_interactions(Dataset& d, const std::vector<RawRow>& rows) {
  d.interactions.clear();
  d.interactions.reserve(rows.size());
  for (const auto& r : rows) {
    Interaction x;
    x.user = d.users.index(r.user);
    x.item = d.items.index(r.item);
    x.rating = r.rating;
    x.normalized = d.manifest.scale.normalize(r.rating);
    x.timestamp = r.timestamp;
    d.interactions.push_back(x);
  }
}

}  // namespace

Dataset parse_interactions(std::istream& in, const Manifest& manifest) {
  Dataset d;
  d.manifest = manifest;
  std::string line;
  if (!std::getline(in, line)) throw LoadError("empty interactions file", 1);
  const auto header = split_csv_line(line, 1);
  const std::vector<std::string> expected{"user_id", "item_id", "rating", "timestamp"};
  if (header != expected) {
    for (const auto& h : header) {
      if (std::find(expected.begin(), expected.end(), h) == expected.end()) {
        throw LoadError("unknown column '" + h + "'", 1);
      }
    }
    throw LoadError("header must be user_id,item_id,rating,timestamp", 1);
  }
  std::vector<RawRow> rows;
  std::map<std::pair<std::string, std::string>, std::size_t> seen;
  std::size_t line_number = 1;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv_line(line, line_number);
    if (f.size() != 4) {
      throw LoadError("expected 4 fields, found " + std::to_string(f.size()), line_number);
    }
    if (f[0].empty() || f[1].empty()) throw LoadError("empty user_id or item_id", line_number);
    RawRow row{f[0], f[1], parse_number(f[2], line_number, "rating"), std::nullopt, line_number};
    if (!manifest.scale.contains(row.rating)) {
      throw ScaleError("rating " + f[2] + " outside scale [" + exact_decimal(manifest.scale.min) +
                           ", " + exact_decimal(manifest.scale.max) + "]",
                       line_number);
    }
    if (!f[3].empty()) {
      std::int64_t t = 0;
      auto [ptr, ec] = std::from_chars(f[3].data(), f[3].data() + f[3].size(), t);
      if (ec != std::errc() || ptr != f[3].data() + f[3].size()) {
        throw LoadError("timestamp '" + f[3] + "' is not an integer", line_number);
      }
      row.timestamp = t;
    }
    auto key = std::make_pair(row.user, row.item);
    auto it = seen.find(key);
    if (it != seen.end()) {
      rows[it->second] = row;
      ++d.duplicate_rows;
    } else {
      seen.emplace(std::move(key), rows.size());
      rows.push_back(std::move(row));
    }
  }
  if (rows.empty()) throw LoadError("no interactions after the header", line_number);
  std::vector<std::string> users, items;
  for (const auto& r : rows) {
    users.push_back(r.user);
    items.push_back(r.item);
  }
  d.users = IdIndex(users);
  d.items = IdIndex(items);
  index_interactions(d, rows);
  return d;
}

Dataset load_interactions(const std::string& path, const Manifest& manifest) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open " + path, 0);
  return parse_interactions(in, manifest);
}

void parse_side_features(std::istream& in, Dataset& d) {
  const Manifest& m = d.manifest;
  std::string line;
  if (!std::getline(in, line)) throw LoadError("empty side features file", 1);
  const auto header = split_csv_line(line, 1);
  std::vector<std::string> expected{"entity_id", "kind"};
  for (const auto& c : m.side_columns) expected.push_back(c.name);
  if (header != expected) {
    for (const auto& h : header) {
      if (std::find(expected.begin(), expected.end(), h) == expected.end()) {
        throw LoadError("unknown column '" + h + "'", 1);
      }
    }
    throw LoadError("side features header must list entity_id,kind then the manifest columns", 1);
  }
  std::map<std::string, Vector> user_rows, item_rows;
  std::size_t line_number = 1;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv_line(line, line_number);
    if (f.size() != expected.size()) {
      throw LoadError("expected " + std::to_string(expected.size()) + " fields, found " +
                          std::to_string(f.size()),
                      line_number);
    }
    EntityKind kind;
    try {
      kind = embeddings::entity_kind_from_string(f[1]);
    } catch (const Error&) {
      throw LoadError("kind must be user or item, found '" + f[1] + "'", line_number);
    }
    Vector values;
    values.reserve(m.side_width());
    for (std::size_t c = 0; c < m.side_columns.size(); ++c) {
      const SideColumn& col = m.side_columns[c];
      const std::string& cell = f[c + 2];
      if (col.categorical) {
        auto it = std::find(col.categories.begin(), col.categories.end(), cell);
        if (it == col.categories.end()) {
          throw LoadError("'" + cell + "' is not a category of " + col.name, line_number);
        }
        for (std::size_t k = 0; k < col.categories.size(); ++k) {
          values.push_back(col.categories.begin() + static_cast<std::ptrdiff_t>(k) == it ? 1.0 : 0.0);
        }
      } else {
        values.push_back(parse_number(cell, line_number, col.name));
      }
    }
    auto& rows = kind == EntityKind::kUser ? user_rows : item_rows;
    if (!rows.emplace(f[0], std::move(values)).second) {
      throw LoadError("duplicate side features for " + f[1] + " '" + f[0] + "'", line_number);
    }
  }

  // Entities known only from this file join the id sets.
  std::vector<std::string> users = d.users.ids(), items = d.items.ids();
  for (const auto& [id, v] : user_rows) users.push_back(id);
  for (const auto& [id, v] : item_rows) items.push_back(id);
  IdIndex new_users(users), new_items(items);
  for (auto& x : d.interactions) {
    x.user = new_users.index(d.users.id(x.user));
    x.item = new_items.index(d.items.id(x.item));
  }
  d.users = std::move(new_users);
  d.items = std::move(new_items);

  auto fill = [](const IdIndex& ids, std::map<std::string, Vector>& rows, const char* kind) {
    std::vector<Vector> out;
    out.reserve(ids.size());
    for (const auto& id : ids.ids()) {
      auto it = rows.find(id);
      if (it == rows.end()) throw LoadError(std::string("no side features for ") + kind + " '" + id + "'", 0);
      out.push_back(std::move(it->second));
    }
    return out;
  };
  d.user_side = fill(d.users, user_rows, "user");
  d.item_side = fill(d.items, item_rows, "item");
}

void load_side_features(const std::string& path, Dataset& dataset) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open " + path, 0);
  parse_side_features(in, dataset);
}

std::string interactions_to_csv(const Dataset& d) {
  std::string out = "user_id,item_id,rating,timestamp\n";
  for (const auto& x : d.interactions) {
    out += csv_record({d.users.id(x.user), d.items.id(x.item), exact_decimal(x.rating),
                       x.timestamp ? std::to_string(*x.timestamp) : std::string()});
    out.push_back('\n');
  }
  return out;
}

DatasetBundle load_dataset_dir(const std::string& dir) {
  namespace fs = std::filesystem;
  const fs::path root(dir);
  if (!fs::is_directory(root)) throw LoadError("not a dataset directory: " + dir, 0);
  DatasetBundle b;
  const Manifest manifest = load_manifest((root / "manifest.json").string());
  b.dataset = load_interactions((root / "interactions.csv").string(), manifest);
  if (!manifest.side_columns.empty()) {
    load_side_features((root / "side_features.csv").string(), b.dataset);
  }
  const fs::path emb = root / "embeddings.jsonl";
  if (fs::exists(emb)) b.embeddings = embeddings::load_embedding_file(emb.string());
  return b;
}

}  // namespace coldrec::data
