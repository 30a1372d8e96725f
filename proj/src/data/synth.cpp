#include "coldrec/data/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <sstream>

#include "coldrec/data/csv.hpp"
#include "coldrec/numerics/params.hpp"

namespace coldrec::data {

void SynthSpec::validate() const {
  if (users < 2 || items < 2) throw ArgumentError("synth: need at least 2 users and 2 items");
  if (!(density > 0.0 && density <= 1.0)) throw ArgumentError("synth: density must lie in (0, 1]");
  if (latent_dim == 0 || text_dim == 0 || image_dim == 0) {
    throw ArgumentError("synth: dimensions must be positive");
  }
  if (!(noise >= 0.0) || !(view_noise >= 0.0) || !std::isfinite(nonlinearity)) {
    throw ArgumentError("synth: noise scales must be non-negative");
  }
  if (!(temperature > 0.0)) throw ArgumentError("synth: temperature must be positive");
  if (!(rating_min < rating_max)) throw ArgumentError("synth: rating_min must be below rating_max");
}

Json to_json(const SynthSpec& s) {
  return Json{{"users", s.users},          {"items", s.items},
              {"density", s.density},      {"latent_dim", s.latent_dim},
              {"noise", s.noise},          {"nonlinearity", s.nonlinearity},
              {"temperature", s.temperature}, {"text_dim", s.text_dim},
              {"image_dim", s.image_dim},  {"view_noise", s.view_noise},
              {"side_features", s.side_features}, {"rating_min", s.rating_min},
              {"rating_max", s.rating_max}, {"seed", s.seed}};
}

SynthSpec synth_spec_from_json(const Json& json) {
  ObjectReader r(json, "synth");
  SynthSpec s;
  s.users = r.count("users", s.users);
  s.items = r.count("items", s.items);
  s.density = r.number("density", s.density);
  s.latent_dim = r.count("latent_dim", s.latent_dim);
  s.noise = r.number("noise", s.noise);
  s.nonlinearity = r.number("nonlinearity", s.nonlinearity);
  s.temperature = r.number("temperature", s.temperature);
  s.text_dim = r.count("text_dim", s.text_dim);
  s.image_dim = r.count("image_dim", s.image_dim);
  s.view_noise = r.number("view_noise", s.view_noise);
  s.side_features = r.flag("side_features", s.side_features);
  s.rating_min = r.number("rating_min", s.rating_min);
  s.rating_max = r.number("rating_max", s.rating_max);
  s.seed = r.seed("seed", s.seed);
  r.finish();
  try {
    s.validate();
  } catch (const ArgumentError& e) {
    throw ConfigError(e.what());
  }
  return s;
}

namespace {

std::string padded_id(char prefix, std::size_t k, std::size_t n) {
  const std::size_t width = std::to_string(n - 1).size();
  std::string digits = std::to_string(k);
  return std::string(1, prefix) + std::string(width - digits.size(), '0') + digits;
}

Matrix gaussian(std::size_t rows, std::size_t cols, double scale, Rng& rng) {
  Matrix m(rows, cols);
  for (double& x : m.values()) x = scale * standard_normal(rng);
  return m;
}

Vector view(const Matrix& map, std::span<const double> latent, double noise, Rng& rng) {
  Vector v = matvec(map, latent);
  for (double& x : v) x += noise * standard_normal(rng);
  return v;
}

double round4(double x) { return std::round(x * 1e4) / 1e4; }

}  // namespace

SynthResult synth_generate(const SynthSpec& s) {
  s.validate();
  SynthResult out;
  const std::size_t L = s.latent_dim;
  Rng latent_rng(derive_seed(s.seed, 1));
  const double latent_scale = 1.0 / std::pow(static_cast<double>(L), 0.25);
  out.user_latents = gaussian(s.users, L, latent_scale, latent_rng);
  out.item_latents = gaussian(s.items, L, latent_scale, latent_rng);

  std::vector<double> unorm(s.users), inorm(s.items);
  for (std::size_t u = 0; u < s.users; ++u) unorm[u] = norm2(out.user_latents.row(u));
  for (std::size_t i = 0; i < s.items; ++i) inorm[i] = norm2(out.item_latents.row(i));
  const double mean_u = std::accumulate(unorm.begin(), unorm.end(), 0.0) / double(s.users);
  const double mean_i = std::accumulate(inorm.begin(), inorm.end(), 0.0) / double(s.items);
  auto affinity = [&](std::size_t u, std::size_t i) {
    return dot(out.user_latents.row(u), out.item_latents.row(i)) +
           s.nonlinearity * (unorm[u] * inorm[i] - mean_u * mean_i);
  };

  std::vector<std::string> user_ids(s.users), item_ids(s.items);
  for (std::size_t u = 0; u < s.users; ++u) user_ids[u] = padded_id('u', u, s.users);
  for (std::size_t i = 0; i < s.items; ++i) item_ids[i] = padded_id('i', i, s.items);

  Dataset& d = out.bundle.dataset;
  d.manifest.scale = {s.rating_min, s.rating_max};
  d.manifest.description = "synthetic";
  d.users = IdIndex(user_ids);
  d.items = IdIndex(item_ids);

  Rng pick_rng(derive_seed(s.seed, 2));
  Rng rating_rng(derive_seed(s.seed, 3));
  std::vector<std::pair<double, std::size_t>> keys(s.items);
  for (std::size_t u = 0; u < s.users; ++u) {
    std::size_t count = 0;
    for (std::size_t i = 0; i < s.items; ++i) count += uniform01(pick_rng) < s.density ? 1 : 0;
    for (std::size_t i = 0; i < s.items; ++i) {
      const double gumbel = -std::log(-std::log(std::max(uniform01(pick_rng), 1e-300)));
      keys[i] = {affinity(u, i) / s.temperature + gumbel, i};
    }
    std::partial_sort(keys.begin(), keys.begin() + static_cast<std::ptrdiff_t>(count), keys.end(),
                      [](const auto& a, const auto& b) {
                        return a.first != b.first ? a.first > b.first : a.second < b.second;
                      });
    std::vector<std::size_t> chosen;
    for (std::size_t k = 0; k < count; ++k) chosen.push_back(keys[k].second);
    std::sort(chosen.begin(), chosen.end());
    for (std::size_t i : chosen) {
      const double score = sigmoid(affinity(u, i) + s.noise * standard_normal(rating_rng));
      Interaction x;
      x.user = u;
      x.item = i;
      x.rating = std::clamp(round4(d.manifest.scale.denormalize(score)), s.rating_min, s.rating_max);
      x.normalized = d.manifest.scale.normalize(x.rating);
      d.interactions.push_back(x);
    }
  }

  Rng view_rng(derive_seed(s.seed, 4));
  const double map_scale = 1.0 / std::sqrt(static_cast<double>(L));
  struct Side {
    EntityKind kind;
    const Matrix* latents;
    const std::vector<std::string>* ids;
  };
  for (const Side& side : {Side{EntityKind::kUser, &out.user_latents, &user_ids},
                           Side{EntityKind::kItem, &out.item_latents, &item_ids}}) {
    const Matrix text_map = gaussian(s.text_dim, L, map_scale, view_rng);
    const Matrix image_map = gaussian(s.image_dim, L, map_scale, view_rng);
    for (std::size_t e = 0; e < side.ids->size(); ++e) {
      const auto latent = side.latents->row(e);
      out.bundle.embeddings.insert({(*side.ids)[e], side.kind, embeddings::Modality::kText,
                                    view(text_map, latent, s.view_noise, view_rng)});
      out.bundle.embeddings.insert({(*side.ids)[e], side.kind, embeddings::Modality::kImage,
                                    view(image_map, latent, s.view_noise, view_rng)});
    }
  }

  if (s.side_features) {
    d.manifest.side_columns = {SideColumn{"level", false, {}},
                               SideColumn{"segment", true, {"s0", "s1", "s2", "s3"}}};
    Rng side_rng(derive_seed(s.seed, 5));
    auto features = [&](const Matrix& latents) {
      std::vector<Vector> rows;
      for (std::size_t e = 0; e < latents.rows(); ++e) {
        const auto z = latents.row(e);
        Vector v{round4(z[0] + 0.1 * standard_normal(side_rng)), 0.0, 0.0, 0.0, 0.0};
        const std::size_t segment = (L > 1 && z[1] > 0 ? 1 : 0) + (L > 2 && z[2] > 0 ? 2 : 0);
        v[1 + segment] = 1.0;
        rows.push_back(std::move(v));
      }
      return rows;
    };
    d.user_side = features(out.user_latents);
    d.item_side = features(out.item_latents);
  }
  return out;
}

std::string side_features_to_csv(const Dataset& d) {
  const Manifest& m = d.manifest;
  std::vector<std::string> header{"entity_id", "kind"};
  for (const auto& c : m.side_columns) header.push_back(c.name);
  std::string out = csv_record(header) + "\n";
  auto rows = [&](const IdIndex& ids, const std::vector<Vector>& side, const char* kind) {
    for (std::size_t e = 0; e < ids.size(); ++e) {
      std::vector<std::string> f{ids.id(e), kind};
      std::size_t at = 0;
      for (const auto& c : m.side_columns) {
        if (c.categorical) {
          std::size_t hot = 0;
          for (std::size_t k = 0; k < c.categories.size(); ++k) {
            if (side[e][at + k] == 1.0) hot = k;
          }
          f.push_back(c.categories[hot]);
        } else {
          f.push_back(exact_decimal(side[e][at]));
        }
        at += c.width();
      }
      out += csv_record(f) + "\n";
    }
  };
  rows(d.users, d.user_side, "user");
  rows(d.items, d.item_side, "item");
  return out;
}

void write_dataset_dir(const DatasetBundle& b, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const fs::path root(dir);
  write_text_file((root / "manifest.json").string(), to_json(b.dataset.manifest).dump(2) + "\n");
  write_text_file((root / "interactions.csv").string(), interactions_to_csv(b.dataset));
  if (!b.dataset.manifest.side_columns.empty()) {
    write_text_file((root / "side_features.csv").string(), side_features_to_csv(b.dataset));
  }
  std::ostringstream emb;
  embeddings::write_embeddings(b.embeddings, emb);
  write_text_file((root / "embeddings.jsonl").string(), emb.str());
}

void write_synth_dir(const SynthResult& r, const SynthSpec& spec, const std::string& dir) {
  write_dataset_dir(r.bundle, dir);
  auto rows = [](const Matrix& m) {
    Json out = Json::array();
    for (std::size_t k = 0; k < m.rows(); ++k) {
      Json row = Json::array();
      for (double x : m.row(k)) row.push_back(exact_decimal(x));
      out.push_back(std::move(row));
    }
    return out;
  };
  const Json latents{{"spec", to_json(spec)},
                     {"user_latents", rows(r.user_latents)},
                     {"item_latents", rows(r.item_latents)}};
  write_text_file((std::filesystem::path(dir) / "latents.json").string(), latents.dump(1) + "\n");
}

}  // namespace coldrec::data
