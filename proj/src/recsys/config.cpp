#include "coldrec/recsys/config.hpp"

namespace coldrec::recsys {

namespace {

Json spec_fields(const ModelSpec& s) {
  Json j;
  j["model"] = to_string(s.kind);
  j["feedback"] = to_string(s.feedback);
  j["embedding_dim"] = s.embedding_dim;
  j["hidden"] = s.hidden;
  j["gmf_activation"] = to_string(s.gmf_activation);
  j["side_features"] = s.side_features;
  j["fusion"] = {{"mode", fusion::to_string(s.fusion.mode)},
                 {"projection_dim", s.fusion.projection_dim},
                 {"combine", fusion::to_string(s.fusion.combine)},
                 {"late_weights", s.fusion.late_combine_weights}};
  return j;
}

ModelSpec read_spec(ObjectReader& r, std::size_t& latent_dim, std::size_t& hidden_dim) {
  ModelSpec s;
  s.kind = model_kind_from_string(r.text("model", to_string(s.kind)));
  s.feedback = feedback_from_string(r.text("feedback", to_string(s.feedback)));
  s.embedding_dim = r.count("embedding_dim", s.embedding_dim);
  s.hidden = r.counts("hidden", s.hidden);
  s.gmf_activation = activation_from_string(r.text("gmf_activation", to_string(s.gmf_activation)));
  s.side_features = r.flag("side_features", s.side_features);
  if (r.has("fusion")) {
    ObjectReader f(r.raw("fusion"), r.context() + ".fusion");
    s.fusion.mode = fusion::fusion_mode_from_string(f.text("mode", fusion::to_string(s.fusion.mode)));
    s.fusion.projection_dim = f.count("projection_dim", s.fusion.projection_dim);
    s.fusion.combine =
        fusion::combine_mode_from_string(f.text("combine", fusion::to_string(s.fusion.combine)));
    s.fusion.late_combine_weights = f.numbers("late_weights", {});
    f.finish();
  }
  if (s.embedding_dim == 0) throw ConfigError(r.context() + ".embedding_dim must be positive");
  s.fusion.validate();
  s.vae_latent_dim = latent_dim;
  s.vae_hidden_dim = hidden_dim;
  return s;
}

}  // namespace

Json to_json(const ModelSpec& spec) {
  Json j = spec_fields(spec);
  j["vae_latent_dim"] = spec.vae_latent_dim;
  j["vae_hidden_dim"] = spec.vae_hidden_dim;
  return j;
}

ModelSpec model_spec_from_json(const Json& json) {
  ObjectReader r(json, "spec");
  const ModelSpec defaults;
  std::size_t latent = r.count("vae_latent_dim", defaults.vae_latent_dim);
  std::size_t hidden = r.count("vae_hidden_dim", defaults.vae_hidden_dim);
  ModelSpec s = read_spec(r, latent, hidden);
  r.finish();
  return s;
}

Json to_json(const FitConfig& c) {
  Json j = spec_fields(c.spec);
  j["train"] = {{"epochs", c.train.epochs},
                {"batch_size", c.train.batch_size},
                {"negatives", c.train.negatives},
                {"optimizer", to_string(c.train.optimizer.kind)},
                {"learning_rate", c.train.optimizer.learning_rate}};
  j["vae"] = {{"enabled", c.vae.enabled},
              {"latent_dim", c.spec.vae_latent_dim},
              {"hidden_dim", c.spec.vae_hidden_dim},
              {"beta", c.vae.beta},
              {"epochs", c.vae.epochs},
              {"batch_size", c.vae.batch_size},
              {"learning_rate", c.vae.learning_rate},
              {"tau", c.vae.tau},
              {"lambda", c.vae.lambda},
              {"pseudo_per_cold", c.vae.pseudo_per_cold}};
  return j;
}

FitConfig read_fit_config(ObjectReader& r) {
  FitConfig c;
  std::size_t latent = c.spec.vae_latent_dim;
  std::size_t hidden = c.spec.vae_hidden_dim;
  if (r.has("vae")) {
    ObjectReader v(r.raw("vae"), r.context() + ".vae");
    c.vae.enabled = v.flag("enabled", c.vae.enabled);
    latent = v.count("latent_dim", latent);
    hidden = v.count("hidden_dim", hidden);
    c.vae.beta = v.number("beta", c.vae.beta);
    c.vae.epochs = v.count("epochs", c.vae.epochs);
    c.vae.batch_size = v.count("batch_size", c.vae.batch_size);
    c.vae.learning_rate = v.number("learning_rate", c.vae.learning_rate);
    c.vae.tau = v.number("tau", c.vae.tau);
    c.vae.lambda = v.number("lambda", c.vae.lambda);
    c.vae.pseudo_per_cold = v.count("pseudo_per_cold", c.vae.pseudo_per_cold);
    v.finish();
    if (c.vae.tau < 0.0 || c.vae.tau >= 1.0) throw ConfigError("vae.tau must lie in [0, 1)");
    if (c.vae.lambda < 0.0 || c.vae.lambda > 1.0) throw ConfigError("vae.lambda must lie in [0, 1]");
    if (c.vae.beta < 0.0) throw ConfigError("vae.beta must be non-negative");
    if (latent == 0 || hidden == 0) throw ConfigError("vae dims must be positive");
  }
  c.spec = read_spec(r, latent, hidden);
  if (r.has("train")) {
    ObjectReader t(r.raw("train"), r.context() + ".train");
    c.train.epochs = t.count("epochs", c.train.epochs);
    c.train.batch_size = t.count("batch_size", c.train.batch_size);
    c.train.negatives = t.count("negatives", c.train.negatives);
    c.train.optimizer.kind = optimizer_from_string(t.text("optimizer", to_string(c.train.optimizer.kind)));
    c.train.optimizer.learning_rate = t.number("learning_rate", c.train.optimizer.learning_rate);
    t.finish();
    if (c.train.batch_size == 0) throw ConfigError("train.batch_size must be positive");
    if (c.train.optimizer.learning_rate <= 0.0) {
      throw ConfigError("train.learning_rate must be positive");
    }
  }
  if (c.vae.enabled && c.spec.kind != ModelKind::kMultimodal) {
    throw ConfigError("the VAE stage needs model \"multimodal\"");
  }
  return c;
}

FitConfig fit_config_from_json(const Json& json) {
  ObjectReader r(json, "config");
  FitConfig c = read_fit_config(r);
  r.finish();
  return c;
}

}  // namespace coldrec::recsys
