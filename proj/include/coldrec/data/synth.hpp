#pragma once

#include <cstdint>
#include <string>

#include "coldrec/data/dataset.hpp"
#include "coldrec/json_util.hpp"
#include "coldrec/numerics/matrix.hpp"

namespace coldrec::data {

struct SynthSpec {
  std::size_t users = 200;
  std::size_t items = 300;
  double density = 0.02;
  std::size_t latent_dim = 8;
  double noise = 0.1;          // rating noise scale on the logit
  double nonlinearity = 0.5;   // weight of the centred latent-norm product
  double temperature = 0.5;    // preference sharpness when choosing observed items
  std::size_t text_dim = 24;
  std::size_t image_dim = 16;
  double view_noise = 0.1;
  bool side_features = true;
  double rating_min = 1.0;
  double rating_max = 5.0;
  std::uint64_t seed = 42;

  void validate() const;  // ArgumentError
};

Json to_json(const SynthSpec& spec);
SynthSpec synth_spec_from_json(const Json& json);

struct SynthResult {
  DatasetBundle bundle;
  Matrix user_latents;  // users x latent_dim, rows in user index order
  Matrix item_latents;
};

// Ground-truth latents p_u, q_i ~ N(0, I / sqrt(L)). Affinity
// a = p.q + c (|p||q| - mean |p||q|). Each user observes Binomial(items,
// density) items, chosen without replacement by Gumbel-top-k on a /
// temperature; their rating is min + (max - min) sigmoid(a + noise * e),
// rounded to 4 decimals. Text and image embeddings are fixed random linear
// maps of the latents plus N(0, view_noise^2) noise. Side features: a noisy
// numeric copy of the first latent and a 4-way segment from the signs of the
// next two.
SynthResult synth_generate(const SynthSpec& spec);

// Writes manifest.json, interactions.csv, embeddings.jsonl, side_features.csv
// (when present) and, for synthetic data, latents.json. Byte-stable.
void write_dataset_dir(const DatasetBundle& bundle, const std::string& dir);
void write_synth_dir(const SynthResult& result, const SynthSpec& spec, const std::string& dir);

std::string side_features_to_csv(const Dataset& dataset);

}  // namespace coldrec::data
