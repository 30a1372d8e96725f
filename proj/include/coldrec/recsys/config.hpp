#pragma once

#include "coldrec/json_util.hpp"
#include "coldrec/recsys/pipeline.hpp"

namespace coldrec::recsys {

// Training configuration document:
//   {"model": "multimodal", "feedback": "implicit", "embedding_dim": 16,
//    "hidden": [128, 64], "gmf_activation": "identity", "side_features": false,
//    "fusion": {"mode": "intermediate", "projection_dim": 32, "combine": "mlp",
//               "late_weights": []},
//    "train": {"epochs": 10, "batch_size": 16, "negatives": 4,
//              "optimizer": "adam", "learning_rate": 0.001},
//    "vae": {"enabled": true, "latent_dim": 8, "hidden_dim": 32, "beta": 1.0,
//            "epochs": 100, "batch_size": 32, "learning_rate": 0.001,
//            "tau": 0.2, "lambda": 0.5, "pseudo_per_cold": 5}}
// Every field is optional; unknown fields are rejected.
Json to_json(const ModelSpec& spec);
Json to_json(const FitConfig& config);
ModelSpec model_spec_from_json(const Json& json);
FitConfig fit_config_from_json(const Json& json);

// Reads the fields of a FitConfig out of a reader that may hold other keys too.
FitConfig read_fit_config(ObjectReader& reader);

}  // namespace coldrec::recsys
