#include "coldrec/recsys/checkpoint.hpp"

#include <algorithm>

#include "coldrec/recsys/config.hpp"

namespace coldrec::recsys {

namespace {

constexpr const char* kFormat = "coldrec-checkpoint/1";

Json blocks_to_json(Model& model) {
  Json out = Json::array();
  for (const NamedBlock& b : model.blocks()) {
    Json values = Json::array();
    for (double v : b.values) values.push_back(exact_decimal(v));
    out.push_back({{"name", b.name}, {"rows", b.rows}, {"cols", b.cols}, {"values", values}});
  }
  return out;
}

Json member_to_json(Model& model) {
  Json j;
  auto* mm = dynamic_cast<MultimodalModel*>(&model);
  if (mm != nullptr) {
    j["vae"] = {{"user", mm->vae(EntityKind::kUser).has_value()},
                {"item", mm->vae(EntityKind::kItem).has_value()}};
  }
  j["blocks"] = blocks_to_json(model);
  return j;
}

void assign_blocks(Model& model, const Json& blocks, const std::string& context) {
  if (!blocks.is_array()) throw SchemaError(context + ": blocks must be an array");
  auto targets = model.blocks();
  if (targets.size() != blocks.size()) {
    throw SchemaError(context + ": expected " + std::to_string(targets.size()) +
                      " parameter blocks, found " + std::to_string(blocks.size()));
  }
  for (std::size_t k = 0; k < targets.size(); ++k) {
    const Json& b = blocks[k];
    NamedBlock& t = targets[k];
    try {
      ObjectReader r(b, context + ".blocks[" + std::to_string(k) + "]");
      const std::string name = r.text("name");
      const std::size_t rows = r.count("rows");
      const std::size_t cols = r.count("cols");
      const Json& values = r.raw("values");
      r.finish();
      if (name != t.name || rows != t.rows || cols != t.cols) {
        throw SchemaError(context + ": block " + std::to_string(k) + " is " + name + " " +
                          std::to_string(rows) + "x" + std::to_string(cols) + ", expected " +
                          t.name + " " + std::to_string(t.rows) + "x" + std::to_string(t.cols));
      }
      if (!values.is_array() || values.size() != t.values.size()) {
        throw SchemaError(context + ": block " + name + " has the wrong number of values");
      }
      for (std::size_t v = 0; v < values.size(); ++v) {
        if (!values[v].is_string()) throw SchemaError(context + ": block " + name + " value not a string");
        t.values[v] = parse_exact_decimal(values[v].get<std::string>());
      }
    } catch (const ConfigError& e) {
      throw SchemaError(e.what());
    } catch (const ParseError& e) {
      throw SchemaError(context + ": " + e.what());
    }
  }
}

std::unique_ptr<Model> load_member(const ModelSpec& spec, const CheckpointHeader& header,
                                   const FeatureSet* features, const Json& member,
                                   const std::string& context) {
  if (!member.is_object() || !member.contains("blocks")) {
    throw SchemaError(context + ": missing blocks");
  }
  auto model = make_model(spec, header.users.size(), header.items.size(), features, 0);
  if (auto* mm = dynamic_cast<MultimodalModel*>(model.get())) {
    if (member.contains("vae")) {
      const Json& v = member.at("vae");
      for (EntityKind kind : {EntityKind::kUser, EntityKind::kItem}) {
        const std::string key = embeddings::to_string(kind);
        if (v.value(key, false)) {
          Rng rng(0);
          mm->set_vae(kind, vae::make_vae(mm->fused_dim(kind), spec.vae_latent_dim,
                                          spec.vae_hidden_dim, rng));
        }
      }
    }
    assign_blocks(*model, member.at("blocks"), context);
    mm->refresh();
  } else {
    assign_blocks(*model, member.at("blocks"), context);
  }
  return model;
}

}  // namespace

Json checkpoint_to_json(Scorer& scorer, const IdIndex& users, const IdIndex& items) {
  Json j;
  j["format"] = kFormat;
  j["users"] = users.ids();
  j["items"] = items.ids();
  if (auto* late = dynamic_cast<LateFusionScorer*>(&scorer)) {
    ModelSpec spec = late->members().front()->spec();
    spec.fusion.mode = fusion::FusionMode::kLate;
    spec.fusion.late_combine_weights = late->weights();
    j["spec"] = to_json(spec);
    Json members = Json::array();
    Json modalities = Json::array();
    for (const auto& m : late->members()) {
      auto& mm = dynamic_cast<MultimodalModel&>(*m);
      Json mj = member_to_json(mm);
      const std::string modality = embeddings::to_string(mm.features().users.modalities.front());
      mj["modality"] = modality;
      modalities.push_back(modality);
      members.push_back(std::move(mj));
    }
    j["modalities"] = modalities;
    j["members"] = std::move(members);
    return j;
  }
  auto& model = dynamic_cast<Model&>(scorer);
  j["spec"] = to_json(model.spec());
  Json modalities = Json::array();
  if (auto* mm = dynamic_cast<MultimodalModel*>(&model)) {
    for (Modality m : mm->features().users.modalities) modalities.push_back(embeddings::to_string(m));
  }
  j["modalities"] = modalities;
  j["members"] = Json::array({member_to_json(model)});
  return j;
}

CheckpointHeader read_checkpoint_header(const Json& json) {
  if (!json.is_object() || json.value("format", "") != kFormat) {
    throw SchemaError("not a checkpoint (expected format \"" + std::string(kFormat) + "\")");
  }
  CheckpointHeader h;
  try {
    h.spec = model_spec_from_json(json.at("spec"));
    h.users = IdIndex(json.at("users").get<std::vector<std::string>>());
    h.items = IdIndex(json.at("items").get<std::vector<std::string>>());
    for (const auto& m : json.at("modalities")) {
      h.modalities.push_back(embeddings::modality_from_string(m.get<std::string>()));
    }
  } catch (const Json::exception& e) {
    throw SchemaError(std::string("checkpoint header: ") + e.what());
  } catch (const ConfigError& e) {
    throw SchemaError(std::string("checkpoint spec: ") + e.what());
  }
  if (h.users.size() != json.at("users").size() || h.items.size() != json.at("items").size()) {
    throw SchemaError("checkpoint id lists contain duplicates");
  }
  return h;
}

LoadedModel checkpoint_from_json(const Json& json, const FeatureSet* features) {
  LoadedModel out;
  out.header = read_checkpoint_header(json);
  const CheckpointHeader& h = out.header;
  if (!json.contains("members") || !json.at("members").is_array() || json.at("members").empty()) {
    throw SchemaError("checkpoint has no members");
  }
  const Json& members = json.at("members");
  const bool multimodal = h.spec.kind == ModelKind::kMultimodal;
  if (multimodal) {
    if (features == nullptr) throw SchemaError("multimodal checkpoint needs content features");
    if (features->users.size() != h.users.size() || features->items.size() != h.items.size()) {
      throw SchemaError("content features do not cover the checkpoint's entities");
    }
  }
  if (multimodal && h.spec.fusion.mode == fusion::FusionMode::kLate) {
    ModelSpec sub = h.spec;
    sub.fusion.mode = fusion::FusionMode::kEarly;
    std::vector<std::unique_ptr<Model>> models;
    for (std::size_t k = 0; k < members.size(); ++k) {
      const std::string context = "members[" + std::to_string(k) + "]";
      const Modality modality =
          embeddings::modality_from_string(members[k].value("modality", std::string("text")));
      FeatureSet single{select_modality(features->users, modality),
                        select_modality(features->items, modality)};
      models.push_back(load_member(sub, h, &single, members[k], context));
    }
    out.scorer = std::make_unique<LateFusionScorer>(std::move(models),
                                                    h.spec.fusion.late_combine_weights);
  } else {
    if (members.size() != 1) throw SchemaError("single-model checkpoint with several members");
    out.scorer = load_member(h.spec, h, multimodal ? features : nullptr, members[0], "members[0]");
  }
  out.scorer->prepare();
  return out;
}

void save_checkpoint(Scorer& scorer, const IdIndex& users, const IdIndex& items,
                     const std::string& path) {
  write_text_file(path, checkpoint_to_json(scorer, users, items).dump(1) + "\n");
}

}  // namespace coldrec::recsys
