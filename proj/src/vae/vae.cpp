#include "coldrec/vae/vae.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace coldrec::vae {

std::size_t VaeParams::input_dim() const {
  return encoder.empty() ? mu_head.in_dim() : encoder.front().in_dim();
}

VaeParams make_vae(std::size_t input_dim, std::size_t latent_dim, std::size_t hidden_dim,
                   Rng& rng) {
  if (input_dim == 0 || latent_dim == 0 || hidden_dim == 0) {
    throw ArgumentError("make_vae: dimensions must be positive");
  }
  VaeParams p;
  p.latent_dim = latent_dim;
  p.encoder.push_back(make_dense(input_dim, hidden_dim, Activation::kRelu, rng));
  p.mu_head = make_dense(hidden_dim, latent_dim, Activation::kIdentity, rng);
  p.logvar_head = make_dense(hidden_dim, latent_dim, Activation::kIdentity, rng);
  p.decoder.push_back(make_dense(latent_dim, hidden_dim, Activation::kRelu, rng));
  p.decoder.push_back(make_dense(hidden_dim, input_dim, Activation::kIdentity, rng));
  return p;
}

VaeParams zeros_like(const VaeParams& params) {
  VaeParams z;
  z.latent_dim = params.latent_dim;
  z.encoder = coldrec::zeros_like(params.encoder);
  z.mu_head = coldrec::zeros_like(params.mu_head);
  z.logvar_head = coldrec::zeros_like(params.logvar_head);
  z.decoder = coldrec::zeros_like(params.decoder);
  return z;
}

void append_slots(ParamList& out, VaeParams& values, VaeParams& grads) {
  coldrec::append_slots(out, values.encoder, grads.encoder);
  coldrec::append_slots(out, values.mu_head, grads.mu_head);
  coldrec::append_slots(out, values.logvar_head, grads.logvar_head);
  coldrec::append_slots(out, values.decoder, grads.decoder);
}

namespace {

void check_latent(const VaeParams& params, std::size_t n, const char* what) {
  if (n != params.latent_dim) {
    throw ShapeError(std::string(what) + ": expected latent " +
                     length_string(params.latent_dim) + ", got " + length_string(n));
  }
}

double clamp_logvar(double v) { return std::clamp(v, -kLogvarClamp, kLogvarClamp); }

}  // namespace

Posterior encode(const VaeParams& params, std::span<const double> x) {
  if (x.size() != params.input_dim()) {
    throw ShapeError("encode: expected input " + length_string(params.input_dim()) + ", got " +
                     length_string(x.size()));
  }
  const Vector h = stack_apply(params.encoder, x);
  Posterior post{dense_apply(params.mu_head, h), dense_apply(params.logvar_head, h)};
  for (double& v : post.logvar) v = clamp_logvar(v);
  return post;
}

Vector reparameterize(std::span<const double> mu, std::span<const double> logvar,
                      std::span<const double> eps) {
  if (mu.size() != logvar.size() || mu.size() != eps.size()) {
    throw ShapeError("reparameterize: mu " + length_string(mu.size()) + ", logvar " +
                     length_string(logvar.size()) + ", eps " + length_string(eps.size()));
  }
  Vector z(mu.size());
  for (std::size_t k = 0; k < z.size(); ++k) z[k] = mu[k] + std::exp(logvar[k] / 2.0) * eps[k];
  return z;
}

Vector decode(const VaeParams& params, std::span<const double> z) {
  check_latent(params, z.size(), "decode");
  return stack_apply(params.decoder, z);
}

LatentSample sample_latent(const VaeParams& params, std::span<const double> x, Rng& rng) {
  Posterior post = encode(params, x);
  LatentSample s;
  s.eps.resize(params.latent_dim);
  for (double& e : s.eps) e = standard_normal(rng);
  s.z = reparameterize(post.mu, post.logvar, s.eps);
  s.mu = std::move(post.mu);
  s.logvar = std::move(post.logvar);
  return s;
}

ElboTerms elbo_loss(std::span<const double> x, std::span<const double> x_hat,
                    std::span<const double> mu, std::span<const double> logvar, double beta) {
  if (x.size() != x_hat.size() || mu.size() != logvar.size() || x.empty()) {
    throw ShapeError("elbo_loss: x " + length_string(x.size()) + ", x_hat " +
                     length_string(x_hat.size()) + ", mu " + length_string(mu.size()) +
                     ", logvar " + length_string(logvar.size()));
  }
  if (!(beta >= 0.0)) throw ArgumentError("elbo_loss: beta must be non-negative");
  require_finite(x, "elbo_loss x");
  require_finite(x_hat, "elbo_loss x_hat");
  require_finite(mu, "elbo_loss mu");
  require_finite(logvar, "elbo_loss logvar");
  ElboTerms t;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double d = x_hat[k] - x[k];
    t.recon += d * d;
  }
  t.recon /= static_cast<double>(x.size());
  for (std::size_t k = 0; k < mu.size(); ++k) {
    t.kl += 1.0 + logvar[k] - mu[k] * mu[k] - std::exp(logvar[k]);
  }
  t.kl *= -0.5;
  t.total = t.recon + beta * t.kl;
  return t;
}

ElboTerms elbo_accumulate(const VaeParams& params, std::span<const double> x,
                          std::span<const double> eps, double beta, double scale,
                          VaeParams& grads) {
  check_latent(params, eps.size(), "elbo_accumulate eps");
  const StackForward enc = stack_forward(params.encoder, x);
  const DenseForward mu_f = dense_forward(params.mu_head, enc.output);
  const DenseForward lv_f = dense_forward(params.logvar_head, enc.output);
  Vector logvar = lv_f.output;
  for (double& v : logvar) v = clamp_logvar(v);
  const Vector z = reparameterize(mu_f.output, logvar, eps);
  const StackForward dec = stack_forward(params.decoder, z);
  const ElboTerms terms = elbo_loss(x, dec.output, mu_f.output, logvar, beta);

  const double n = static_cast<double>(x.size());
  Vector d_xhat(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) d_xhat[k] = scale * 2.0 * (dec.output[k] - x[k]) / n;
  const Vector dz = stack_backward_accumulate(params.decoder, dec.caches, d_xhat, grads.decoder);

  const std::size_t m = params.latent_dim;
  Vector d_mu(m), d_lv(m);
  for (std::size_t k = 0; k < m; ++k) {
    const double sd = std::exp(logvar[k] / 2.0);
    d_mu[k] = dz[k] + scale * beta * mu_f.output[k];
    const double raw = lv_f.output[k];
    const bool clamped = raw < -kLogvarClamp || raw > kLogvarClamp;
    d_lv[k] = clamped ? 0.0
                      : dz[k] * eps[k] * sd / 2.0 + scale * beta * 0.5 * (std::exp(logvar[k]) - 1.0);
  }
  Vector dh = dense_backward_accumulate(params.mu_head, mu_f.cache, d_mu, grads.mu_head);
  axpy(dh, 1.0, dense_backward_accumulate(params.logvar_head, lv_f.cache, d_lv, grads.logvar_head));
  stack_backward_accumulate(params.encoder, enc.caches, dh, grads.encoder);
  return terms;
}

ElboTerms mean_elbo(const VaeParams& params, const std::vector<Vector>& data, double beta,
                    std::uint64_t seed) {
  if (data.empty()) throw ArgumentError("mean_elbo: empty dataset");
  Rng rng(seed);
  ElboTerms sum;
  for (const auto& x : data) {
    const LatentSample s = sample_latent(params, x, rng);
    const ElboTerms t = elbo_loss(x, decode(params, s.z), s.mu, s.logvar, beta);
    sum.total += t.total;
    sum.recon += t.recon;
    sum.kl += t.kl;
  }
  const double n = static_cast<double>(data.size());
  return ElboTerms{sum.total / n, sum.recon / n, sum.kl / n};
}

VaeTrainResult train_vae(VaeParams params, const std::vector<Vector>& data,
                         const VaeTrainConfig& config, std::uint64_t seed) {
  if (data.empty()) throw ArgumentError("train_vae: empty dataset");
  if (config.batch_size == 0) throw ArgumentError("train_vae: batch_size must be positive");
  for (const auto& x : data) {
    if (x.size() != params.input_dim()) {
      throw ShapeError("train_vae: expected samples of " + length_string(params.input_dim()) +
                       ", got " + length_string(x.size()));
    }
  }
  VaeTrainResult result;
  VaeParams grads = zeros_like(params);
  ParamList slots;
  append_slots(slots, params, grads);
  AdamState state;
  state.config = config.optimizer;
  Rng rng(seed);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  Vector eps(params.latent_dim);

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      const double scale = 1.0 / static_cast<double>(end - start);
      zero_grads(slots);
      for (std::size_t k = start; k < end; ++k) {
        for (double& e : eps) e = standard_normal(rng);
        epoch_loss += elbo_accumulate(params, data[order[k]], eps, config.beta, scale, grads).total;
      }
      optimizer_step(slots, state);
    }
    result.loss_trace.push_back(epoch_loss / static_cast<double>(data.size()));
  }
  result.params = std::move(params);
  return result;
}

Vector reconstruct(const VaeParams& params, std::span<const double> x) {
  return decode(params, encode(params, x).mu);
}

Vector reconstruct_forward(const VaeParams& params, std::span<const double> x,
                           ReconstructCache& cache) {
  StackForward enc = stack_forward(params.encoder, x);
  DenseForward mu = dense_forward(params.mu_head, enc.output);
  StackForward dec = stack_forward(params.decoder, mu.output);
  cache.encoder = std::move(enc.caches);
  cache.mu = std::move(mu.cache);
  cache.decoder = std::move(dec.caches);
  return dec.output;
}

Vector reconstruct_input_grad(const VaeParams& params, const ReconstructCache& cache,
                              std::span<const double> upstream) {
  const Vector dz = stack_input_grad(params.decoder, cache.decoder, upstream);
  const Vector dh = dense_input_grad(params.mu_head, cache.mu, dz);
  return stack_input_grad(params.encoder, cache.encoder, dh);
}

std::vector<PseudoSample> generate_pseudo_samples(const VaeParams& vae,
                                                  const PseudoLabeler& labeler,
                                                  const PseudoSampleConfig& config,
                                                  std::uint64_t seed) {
  if (!(config.tau >= 0.0 && config.tau < 1.0)) {
    throw ArgumentError("generate_pseudo_samples: tau must lie in [0, 1)");
  }
  if (!(config.lambda >= 0.0 && config.lambda <= 1.0)) {
    throw ArgumentError("generate_pseudo_samples: lambda must lie in [0, 1]");
  }
  if (!labeler) throw ArgumentError("generate_pseudo_samples: no labeler");
  std::vector<Posterior> anchor_posteriors;
  for (const auto& a : config.anchors) anchor_posteriors.push_back(encode(vae, a));

  Rng rng(seed);
  std::vector<PseudoSample> candidates;
  candidates.reserve(config.count);
  Vector eps(vae.latent_dim);
  for (std::size_t k = 0; k < config.count; ++k) {
    for (double& e : eps) e = standard_normal(rng);
    PseudoSample s;
    Vector z;
    if (anchor_posteriors.empty()) {
      z = eps;
    } else {
      s.anchor = k % anchor_posteriors.size();
      const auto& post = anchor_posteriors[s.anchor];
      z = reparameterize(post.mu, post.logvar, eps);
    }
    s.features = decode(vae, z);
    s.partner = config.partner_count > 0 ? uniform_index(rng, config.partner_count) : 0;
    s.source = config.source;
    s.weight = config.lambda;
    candidates.push_back(std::move(s));
  }

  std::vector<PseudoSample> kept;
  if (config.feedback == Feedback::kImplicit) {
    for (auto& s : candidates) {
      s.pseudo_label = labeler(s);
      if (std::abs(s.pseudo_label - 0.5) >= config.tau) kept.push_back(std::move(s));
    }
    return kept;
  }

  // Explicit ratings: gate on how well the VAE reproduces its own sample.
  Vector errors(candidates.size());
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    const Vector back = reconstruct(vae, candidates[k].features);
    double e = 0.0;
    for (std::size_t j = 0; j < back.size(); ++j) {
      const double d = back[j] - candidates[k].features[j];
      e += d * d;
    }
    errors[k] = e / static_cast<double>(back.size());
  }
  double threshold = 0.0;
  if (!errors.empty()) {
    Vector sorted = errors;
    std::sort(sorted.begin(), sorted.end());
    const auto rank = static_cast<std::size_t>(
        std::ceil((1.0 - config.tau) * static_cast<double>(sorted.size())));
    threshold = sorted[std::max<std::size_t>(rank, 1) - 1];
  }
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    if (errors[k] <= threshold) {
      candidates[k].pseudo_label =
          std::clamp(labeler(candidates[k]), 0.0, 1.0);
      kept.push_back(std::move(candidates[k]));
    }
  }
  return kept;
}

}  // namespace coldrec::vae
