#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "coldrec/feedback.hpp"
#include "coldrec/numerics/dense.hpp"
#include "coldrec/numerics/optimizer.hpp"
#include "coldrec/numerics/params.hpp"

namespace coldrec::vae {

inline constexpr double kLogvarClamp = 20.0;

struct VaeParams {
  LayerStack encoder;
  DenseLayer mu_head;      // identity activation
  DenseLayer logvar_head;  // identity activation
  LayerStack decoder;      // last layer identity activation
  std::size_t latent_dim = 0;

  std::size_t input_dim() const;
  friend bool operator==(const VaeParams&, const VaeParams&) = default;
};

// One relu hidden layer on each side.
VaeParams make_vae(std::size_t input_dim, std::size_t latent_dim, std::size_t hidden_dim,
                   Rng& rng);
VaeParams zeros_like(const VaeParams& params);
void append_slots(ParamList& out, VaeParams& values, VaeParams& grads);

struct Posterior {
  Vector mu;
  Vector logvar;  // clamped to [-kLogvarClamp, kLogvarClamp]
};

Posterior encode(const VaeParams& params, std::span<const double> x);
// z = mu + exp(logvar / 2) * eps
Vector reparameterize(std::span<const double> mu, std::span<const double> logvar,
                      std::span<const double> eps);
Vector decode(const VaeParams& params, std::span<const double> z);

struct LatentSample {
  Vector z;
  Vector mu;
  Vector logvar;
  Vector eps;
};

// Posterior draw for x with eps from `rng`.
LatentSample sample_latent(const VaeParams& params, std::span<const double> x, Rng& rng);

struct ElboTerms {
  double total = 0.0;
  double recon = 0.0;  // mean squared error over coordinates
  double kl = 0.0;
};

ElboTerms elbo_loss(std::span<const double> x, std::span<const double> x_hat,
                    std::span<const double> mu, std::span<const double> logvar, double beta);

// ELBO of one sample with eps held fixed; adds its parameter gradients
// into `grads`, scaled by `scale`.
ElboTerms elbo_accumulate(const VaeParams& params, std::span<const double> x,
                          std::span<const double> eps, double beta, double scale,
                          VaeParams& grads);

// Mean ELBO over `data` with one eps draw per sample from `seed`.
ElboTerms mean_elbo(const VaeParams& params, const std::vector<Vector>& data, double beta,
                    std::uint64_t seed);

struct VaeTrainConfig {
  std::size_t epochs = 30;
  std::size_t batch_size = 32;
  double beta = 1.0;
  OptimizerConfig optimizer{OptimizerKind::kAdam, 1e-3};
};

struct VaeTrainResult {
  VaeParams params;
  std::vector<double> loss_trace;  // mean total ELBO per epoch
};

VaeTrainResult train_vae(VaeParams params, const std::vector<Vector>& data,
                         const VaeTrainConfig& config, std::uint64_t seed);

// Deterministic reconstruction decode(mu(x)), the form the main model path
// consumes. The cache variant supports backpropagating to x through the
// frozen network.
struct ReconstructCache {
  std::vector<DenseCache> encoder;
  DenseCache mu;
  std::vector<DenseCache> decoder;
};

Vector reconstruct(const VaeParams& params, std::span<const double> x);
Vector reconstruct_forward(const VaeParams& params, std::span<const double> x,
                           ReconstructCache& cache);
Vector reconstruct_input_grad(const VaeParams& params, const ReconstructCache& cache,
                              std::span<const double> upstream);

enum class PseudoSource { kColdUser, kColdItem };

struct PseudoSample {
  Vector features;  // in the VAE's input space
  double pseudo_label = 0.0;
  double weight = 0.0;
  PseudoSource source = PseudoSource::kColdUser;
  std::size_t partner = 0;  // the other side of the pair the label refers to
  std::size_t anchor = 0;   // index into config.anchors when anchored
};

struct PseudoSampleConfig {
  std::size_t count = 0;
  double tau = 0.2;     // confidence gate, in [0, 1)
  double lambda = 0.5;  // loss weight attached to every kept sample, in [0, 1]
  Feedback feedback = Feedback::kImplicit;
  PseudoSource source = PseudoSource::kColdUser;
  std::size_t partner_count = 0;  // partners drawn uniformly from [0, partner_count)
  // When non-empty, sample k draws z from the posterior of anchors[k % n]
  // instead of the prior.
  std::vector<Vector> anchors;
};

// Labels a candidate from its features, anchor and partner (the current
// model's prediction).
using PseudoLabeler = std::function<double(const PseudoSample& sample)>;

// Implicit feedback keeps samples with |label - 0.5| >= tau. Explicit feedback
// keeps samples whose reconstruction error is within the (1 - tau) quantile of
// the batch. Returns at most config.count samples.
std::vector<PseudoSample> generate_pseudo_samples(const VaeParams& vae,
                                                  const PseudoLabeler& labeler,
                                                  const PseudoSampleConfig& config,
                                                  std::uint64_t seed);

}  // namespace coldrec::vae
