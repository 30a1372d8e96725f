#include "coldrec/recsys/model.hpp"

#include <numeric>

namespace coldrec::recsys {

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::kMf:
      return "mf";
    case ModelKind::kNeumf:
      return "neumf";
    case ModelKind::kMultimodal:
      return "multimodal";
  }
  return "neumf";
}

ModelKind model_kind_from_string(const std::string& name) {
  if (name == "mf") return ModelKind::kMf;
  if (name == "neumf") return ModelKind::kNeumf;
  if (name == "multimodal") return ModelKind::kMultimodal;
  throw ConfigError("unknown model kind '" + name + "'");
}

Vector Scorer::score_items(std::size_t user, std::span<const std::size_t> items) const {
  Vector out(items.size());
  for (std::size_t k = 0; k < items.size(); ++k) out[k] = score(user, items[k]);
  return out;
}

bool Model::linear_output() const {
  return spec().kind == ModelKind::kMf && spec().feedback == Feedback::kExplicit;
}

double Model::output(double logit) const { return linear_output() ? logit : sigmoid(logit); }

namespace {

void add_matrix_block(std::vector<NamedBlock>& out, const std::string& name, Matrix& m) {
  out.push_back(NamedBlock{name, m.rows(), m.cols(), m.values()});
}

void add_vector_block(std::vector<NamedBlock>& out, const std::string& name, Vector& v) {
  out.push_back(NamedBlock{name, 1, v.size(), v});
}

void add_layer_blocks(std::vector<NamedBlock>& out, const std::string& prefix, DenseLayer& l) {
  add_matrix_block(out, prefix + ".weight", l.weight);
  add_vector_block(out, prefix + ".bias", l.bias);
}

void add_stack_blocks(std::vector<NamedBlock>& out, const std::string& prefix, LayerStack& s) {
  for (std::size_t k = 0; k < s.size(); ++k) {
    add_layer_blocks(out, prefix + "." + std::to_string(k), s[k]);
  }
}

void add_head_blocks(std::vector<NamedBlock>& out, NeuMFHead& head) {
  add_vector_block(out, "head.h", head.h);
  add_stack_blocks(out, "head.mlp", head.mlp);
}

void require_no_override(const TrainingExample& ex, const char* model) {
  if (!ex.user_features.empty() || !ex.item_features.empty()) {
    throw ArgumentError(std::string(model) + " has no content path for feature overrides");
  }
}

void check_ids(const TrainingExample& ex, std::size_t users, std::size_t items) {
  if (ex.user >= users) throw LookupError("unknown user index " + std::to_string(ex.user));
  if (ex.item >= items) throw LookupError("unknown item index " + std::to_string(ex.item));
}

}  // namespace

// ---- MF ----

MFModel::MFModel(ModelSpec spec, std::size_t users, std::size_t items, std::uint64_t seed)
    : spec_(std::move(spec)) {
  Rng rng(seed);
  const std::size_t d = spec_.embedding_dim;
  params_.P = init_params(users, d, rng, InitScheme::kXavierUniform);
  params_.Q = init_params(items, d, rng, InitScheme::kXavierUniform);
  params_.bias = 0.0;
  grad_p_ = Matrix(users, d);
  grad_q_ = Matrix(items, d);
  append_slots(slots_, params_.P, grad_p_);
  append_slots(slots_, params_.Q, grad_q_);
  slots_.push_back(ParamSlot{std::span<double>(&params_.bias, 1), std::span<double>(&grad_bias_, 1)});
}

double MFModel::score(std::size_t user, std::size_t item) const {
  return mf_predict(params_, user, item, spec_.feedback);
}

double MFModel::forward(const TrainingExample& ex) {
  require_no_override(ex, "MF");
  check_ids(ex, user_count(), item_count());
  last_user_ = ex.user;
  last_item_ = ex.item;
  return dot(params_.P.row(ex.user), params_.Q.row(ex.item)) + params_.bias;
}

void MFModel::backward(double dlogit) {
  axpy(grad_p_.row(last_user_), dlogit, params_.Q.row(last_item_));
  axpy(grad_q_.row(last_item_), dlogit, params_.P.row(last_user_));
  grad_bias_ += dlogit;
}

double MFModel::predict(const TrainingExample& ex) const {
  require_no_override(ex, "MF");
  return score(ex.user, ex.item);
}

std::vector<NamedBlock> MFModel::blocks() {
  std::vector<NamedBlock> out;
  add_matrix_block(out, "P", params_.P);
  add_matrix_block(out, "Q", params_.Q);
  out.push_back(NamedBlock{"bias", 1, 1, std::span<double>(&params_.bias, 1)});
  return out;
}

// ---- NeuMF ----

NeuMFModel::NeuMFModel(ModelSpec spec, std::size_t users, std::size_t items,
                       std::uint64_t seed)
    : spec_(std::move(spec)) {
  Rng rng(seed);
  const std::size_t d = spec_.embedding_dim;
  params_.P = init_params(users, d, rng, InitScheme::kXavierUniform);
  params_.Q = init_params(items, d, rng, InitScheme::kXavierUniform);
  params_.head = make_neumf_head(d, spec_.hidden, spec_.gmf_activation, rng);
  grad_p_ = Matrix(users, d);
  grad_q_ = Matrix(items, d);
  grad_head_ = zeros_like(params_.head);
  append_slots(slots_, params_.P, grad_p_);
  append_slots(slots_, params_.Q, grad_q_);
  append_slots(slots_, params_.head, grad_head_);
}

double NeuMFModel::score(std::size_t user, std::size_t item) const {
  return neumf_predict(params_, user, item);
}

double NeuMFModel::forward(const TrainingExample& ex) {
  require_no_override(ex, "NeuMF");
  check_ids(ex, user_count(), item_count());
  last_user_ = ex.user;
  last_item_ = ex.item;
  return head_forward(params_.head, params_.P.row(ex.user), params_.Q.row(ex.item), cache_);
}

void NeuMFModel::backward(double dlogit) {
  head_backward(params_.head, cache_, dlogit, grad_head_, grad_p_.row(last_user_),
                grad_q_.row(last_item_));
}

double NeuMFModel::predict(const TrainingExample& ex) const {
  require_no_override(ex, "NeuMF");
  return score(ex.user, ex.item);
}

std::vector<NamedBlock> NeuMFModel::blocks() {
  std::vector<NamedBlock> out;
  add_matrix_block(out, "P", params_.P);
  add_matrix_block(out, "Q", params_.Q);
  add_head_blocks(out, params_.head);
  return out;
}

// ---- Multimodal ----

MultimodalModel::MultimodalModel(ModelSpec spec, FeatureSet features, std::uint64_t seed)
    : spec_(std::move(spec)), features_(std::move(features)) {
  spec_.fusion.validate();
  if (spec_.fusion.mode == fusion::FusionMode::kLate) {
    throw ConfigError("late fusion combines separate per-modality models");
  }
  if (spec_.embedding_dim == 0) throw ConfigError("embedding_dim must be positive");
  for (const EntityFeatures* f : {&features_.users, &features_.items}) {
    if (f->size() == 0) throw ConfigError("multimodal model needs content for every entity");
    if (spec_.side_features && f->side.size() != f->size()) {
      throw ConfigError("side features requested but not loaded");
    }
  }
  Rng rng(seed);
  init_tower(users_, features_.users, rng);
  init_tower(items_, features_.items, rng);
  head_ = make_neumf_head(spec_.embedding_dim, spec_.hidden, spec_.gmf_activation, rng);
  head_grads_ = zeros_like(head_);
  append_slots(slots_, head_, head_grads_);
  for (Tower* t : {&users_, &items_}) {
    if (spec_.fusion.mode == fusion::FusionMode::kIntermediate) {
      fusion::append_slots(slots_, t->fusion, t->fusion_grads);
    }
    if (spec_.side_features) append_slots(slots_, t->restore, t->restore_grads);
    append_slots(slots_, t->proj, t->proj_grads);
  }
}

void MultimodalModel::init_tower(Tower& tower, const EntityFeatures& features, Rng& rng) {
  tower.features = &features;
  std::size_t fused = features.concat_dim();
  if (spec_.fusion.mode == fusion::FusionMode::kIntermediate) {
    std::vector<std::size_t> dims;
    for (std::size_t m = 0; m < features.modalities.size(); ++m) dims.push_back(features.dim(m));
    tower.fusion = fusion::make_intermediate_fusion(features.modalities, dims, spec_.fusion, rng);
    tower.fusion_grads = fusion::zeros_like(tower.fusion);
    fused = fusion::intermediate_output_dim(tower.fusion, spec_.fusion.combine);
  }
  if (spec_.side_features) {
    tower.restore = fusion::make_restore_layer(fused, features.side_dim());
    tower.restore_grads = zeros_like(tower.restore);
  }
  tower.proj = make_dense(fused, spec_.embedding_dim, Activation::kIdentity, rng);
  tower.proj_grads = zeros_like(tower.proj);
  refresh_tower(tower);
}

void MultimodalModel::refresh_tower(Tower& tower) {
  tower.fixed.clear();
  tower.reps.clear();
  if (spec_.fusion.mode != fusion::FusionMode::kEarly) return;
  tower.fixed.reserve(tower.features->size());
  for (std::size_t e = 0; e < tower.features->size(); ++e) {
    Vector x = tower.features->concatenated(e);
    if (tower.vae) x = vae::reconstruct(*tower.vae, x);
    tower.fixed.push_back(std::move(x));
  }
}

void MultimodalModel::refresh() {
  refresh_tower(users_);
  refresh_tower(items_);
}

std::size_t MultimodalModel::fused_dim(EntityKind kind) const { return tower(kind).proj.in_dim(); }

Vector MultimodalModel::pre_vae(const Tower& tower, std::size_t entity) const {
  if (spec_.fusion.mode == fusion::FusionMode::kEarly) {
    return tower.features->concatenated(entity);
  }
  std::vector<const Vector*> inputs;
  for (const auto& v : tower.features->values.at(entity)) inputs.push_back(&v);
  fusion::IntermediateCache cache;
  return fusion::intermediate_forward(tower.fusion, spec_.fusion.combine, inputs, cache);
}

Vector MultimodalModel::fused(EntityKind kind, std::size_t entity) const {
  return pre_vae(tower(kind), entity);
}

void MultimodalModel::set_vae(EntityKind kind, vae::VaeParams params) {
  Tower& t = tower(kind);
  if (params.input_dim() != fused_dim(kind)) {
    throw ShapeError("set_vae: VAE input " + length_string(params.input_dim()) +
                     " vs fused " + length_string(fused_dim(kind)));
  }
  t.vae = std::move(params);
  refresh_tower(t);
}

const std::optional<vae::VaeParams>& MultimodalModel::vae(EntityKind kind) const {
  return tower(kind).vae;
}

Vector MultimodalModel::tower_apply(const Tower& tower, std::size_t entity,
                                    std::span<const double> override_features) const {
  if (entity >= tower.features->size()) {
    throw LookupError("unknown entity index " + std::to_string(entity));
  }
  Vector post;
  if (!override_features.empty()) {
    if (override_features.size() != tower.proj.in_dim()) {
      throw ShapeError("feature override " + length_string(override_features.size()) +
                       " vs fused " + length_string(tower.proj.in_dim()));
    }
    post.assign(override_features.begin(), override_features.end());
  } else if (spec_.fusion.mode == fusion::FusionMode::kEarly) {
    post = tower.fixed[entity];
  } else {
    post = pre_vae(tower, entity);
    if (tower.vae) post = vae::reconstruct(*tower.vae, post);
  }
  if (spec_.side_features) post = dense_apply(tower.restore, concat(post, tower.features->side[entity]));
  return dense_apply(tower.proj, post);
}

Vector MultimodalModel::tower_forward(Tower& tower, std::size_t entity,
                                      std::span<const double> override_features) {
  if (entity >= tower.features->size()) {
    throw LookupError("unknown entity index " + std::to_string(entity));
  }
  tower.overridden = !override_features.empty();
  Vector post;
  if (tower.overridden) {
    if (override_features.size() != tower.proj.in_dim()) {
      throw ShapeError("feature override " + length_string(override_features.size()) +
                       " vs fused " + length_string(tower.proj.in_dim()));
    }
    post.assign(override_features.begin(), override_features.end());
  } else if (spec_.fusion.mode == fusion::FusionMode::kEarly) {
    post = tower.fixed[entity];
  } else {
    tower.inputs.clear();
    for (const auto& v : tower.features->values[entity]) tower.inputs.push_back(&v);
    post = fusion::intermediate_forward(tower.fusion, spec_.fusion.combine, tower.inputs,
                                        tower.fusion_cache);
    if (tower.vae) post = vae::reconstruct_forward(*tower.vae, post, tower.vae_cache);
  }
  if (spec_.side_features) {
    DenseForward f = dense_forward(tower.restore, concat(post, tower.features->side[entity]));
    tower.restore_cache = std::move(f.cache);
    post = std::move(f.output);
  }
  DenseForward f = dense_forward(tower.proj, post);
  tower.proj_cache = std::move(f.cache);
  return std::move(f.output);
}

void MultimodalModel::tower_backward(Tower& tower, std::span<const double> upstream) {
  Vector d = dense_backward_accumulate(tower.proj, tower.proj_cache, upstream, tower.proj_grads);
  if (spec_.side_features) {
    d = dense_backward_accumulate(tower.restore, tower.restore_cache, d, tower.restore_grads);
    d.resize(tower.restore.out_dim());
  }
  if (tower.overridden || spec_.fusion.mode == fusion::FusionMode::kEarly) return;
  if (tower.vae) d = vae::reconstruct_input_grad(*tower.vae, tower.vae_cache, d);
  fusion::intermediate_backward(tower.fusion, spec_.fusion.combine, tower.inputs,
                                tower.fusion_cache, d, tower.fusion_grads);
}

double MultimodalModel::forward(const TrainingExample& ex) {
  user_rep_ = tower_forward(users_, ex.user, ex.user_features);
  item_rep_ = tower_forward(items_, ex.item, ex.item_features);
  return head_forward(head_, user_rep_, item_rep_, head_cache_);
}

void MultimodalModel::backward(double dlogit) {
  Vector dp(spec_.embedding_dim, 0.0), dq(spec_.embedding_dim, 0.0);
  head_backward(head_, head_cache_, dlogit, head_grads_, dp, dq);
  tower_backward(users_, dp);
  tower_backward(items_, dq);
}

double MultimodalModel::predict(const TrainingExample& ex) const {
  return output(head_logit(head_, tower_apply(users_, ex.user, ex.user_features),
                           tower_apply(items_, ex.item, ex.item_features)));
}

void MultimodalModel::prepare() {
  for (Tower* t : {&users_, &items_}) {
    t->reps.clear();
    t->reps.reserve(t->features->size());
    for (std::size_t e = 0; e < t->features->size(); ++e) t->reps.push_back(tower_apply(*t, e, {}));
  }
}

double MultimodalModel::score(std::size_t user, std::size_t item) const {
  if (users_.reps.empty() || items_.reps.empty()) {
    throw UsageError("MultimodalModel::score called before prepare()");
  }
  return output(head_logit(head_, users_.reps.at(user), items_.reps.at(item)));
}

Vector MultimodalModel::score_items(std::size_t user, std::span<const std::size_t> items) const {
  Vector out(items.size());
  for (std::size_t k = 0; k < items.size(); ++k) out[k] = score(user, items[k]);
  return out;
}

void MultimodalModel::tower_blocks(Tower& t, const std::string& prefix,
                                   std::vector<NamedBlock>& out) {
  if (spec_.fusion.mode == fusion::FusionMode::kIntermediate) {
    add_stack_blocks(out, prefix + ".fusion.proj", t.fusion.projections);
    add_vector_block(out, prefix + ".fusion.sum_weights", t.fusion.sum_weights);
    add_layer_blocks(out, prefix + ".fusion.combine", t.fusion.combine_layer);
  }
  if (spec_.side_features) add_layer_blocks(out, prefix + ".restore", t.restore);
  add_layer_blocks(out, prefix + ".tower", t.proj);
  if (t.vae) {
    add_stack_blocks(out, prefix + ".vae.encoder", t.vae->encoder);
    add_layer_blocks(out, prefix + ".vae.mu", t.vae->mu_head);
    add_layer_blocks(out, prefix + ".vae.logvar", t.vae->logvar_head);
    add_stack_blocks(out, prefix + ".vae.decoder", t.vae->decoder);
  }
}

std::vector<NamedBlock> MultimodalModel::blocks() {
  std::vector<NamedBlock> out;
  add_head_blocks(out, head_);
  tower_blocks(users_, "user", out);
  tower_blocks(items_, "item", out);
  return out;
}

// ---- Late fusion ----

LateFusionScorer::LateFusionScorer(std::vector<std::unique_ptr<Model>> members, Vector weights)
    : members_(std::move(members)), weights_(std::move(weights)) {
  if (members_.empty()) throw ConfigError("late fusion needs at least one member model");
  if (weights_.empty()) weights_.assign(members_.size(), 1.0 / static_cast<double>(members_.size()));
  if (weights_.size() != members_.size()) {
    throw ConfigError("late fusion has " + std::to_string(members_.size()) + " models but " +
                      std::to_string(weights_.size()) + " weights");
  }
  fusion::FusionConfig check;
  check.late_combine_weights = weights_;
  check.validate();
  for (const auto& m : members_) {
    if (m->user_count() != members_.front()->user_count() ||
        m->item_count() != members_.front()->item_count()) {
      throw ConfigError("late fusion members disagree on entity counts");
    }
  }
}

std::size_t LateFusionScorer::user_count() const { return members_.front()->user_count(); }
std::size_t LateFusionScorer::item_count() const { return members_.front()->item_count(); }

void LateFusionScorer::prepare() {
  for (auto& m : members_) m->prepare();
}

double LateFusionScorer::score(std::size_t user, std::size_t item) const {
  Vector preds(members_.size());
  for (std::size_t k = 0; k < members_.size(); ++k) preds[k] = members_[k]->score(user, item);
  return fusion::fuse_late(preds, weights_);
}

Vector LateFusionScorer::score_items(std::size_t user, std::span<const std::size_t> items) const {
  std::vector<Vector> per_model;
  for (const auto& m : members_) per_model.push_back(m->score_items(user, items));
  Vector out(items.size());
  Vector preds(members_.size());
  for (std::size_t k = 0; k < items.size(); ++k) {
    for (std::size_t j = 0; j < members_.size(); ++j) preds[j] = per_model[j][k];
    out[k] = fusion::fuse_late(preds, weights_);
  }
  return out;
}

std::unique_ptr<Model> make_model(const ModelSpec& spec, std::size_t users, std::size_t items,
                                  const FeatureSet* features, std::uint64_t seed) {
  switch (spec.kind) {
    case ModelKind::kMf:
      return std::make_unique<MFModel>(spec, users, items, seed);
    case ModelKind::kNeumf:
      return std::make_unique<NeuMFModel>(spec, users, items, seed);
    case ModelKind::kMultimodal:
      if (features == nullptr) throw ConfigError("multimodal model needs content features");
      return std::make_unique<MultimodalModel>(spec, *features, seed);
  }
  throw ConfigError("unknown model kind");
}

}  // namespace coldrec::recsys
