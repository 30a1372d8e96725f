#pragma once

#include <memory>
#include <string>
#include <vector>

#include "coldrec/ids.hpp"
#include "coldrec/json_util.hpp"
#include "coldrec/recsys/model.hpp"

namespace coldrec::recsys {

// What a checkpoint says about itself before any parameters are read; enough
// to assemble the content features a multimodal model needs.
struct CheckpointHeader {
  ModelSpec spec;  // fusion.mode is kLate for a late-fusion ensemble
  IdIndex users;
  IdIndex items;
  std::vector<Modality> modalities;  // content modalities, canonical order
};

struct LoadedModel {
  CheckpointHeader header;
  std::unique_ptr<Scorer> scorer;  // prepared
};

// One JSON document: format tag, spec echo, id lists, and every parameter
// block as {name, rows, cols, values} with values as exact decimal strings.
Json checkpoint_to_json(Scorer& scorer, const IdIndex& users, const IdIndex& items);
CheckpointHeader read_checkpoint_header(const Json& json);
// `features` must cover the header's ids in index order for multimodal
// checkpoints; ignored otherwise. Throws SchemaError on any mismatch.
LoadedModel checkpoint_from_json(const Json& json, const FeatureSet* features);

void save_checkpoint(Scorer& scorer, const IdIndex& users, const IdIndex& items,
                     const std::string& path);

}  // namespace coldrec::recsys
