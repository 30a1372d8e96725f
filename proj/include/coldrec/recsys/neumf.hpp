#pragma once

#include <span>
#include <string>
#include <vector>

#include "coldrec/feedback.hpp"
#include "coldrec/numerics/dense.hpp"
#include "coldrec/numerics/params.hpp"

namespace coldrec::recsys {

// h^T t(p ⊙ q)
double gmf_score(std::span<const double> p, std::span<const double> q,
                 std::span<const double> h, Activation t);

// MLP path over [p ∥ q]; the last layer must output a scalar.
double mlp_score(std::span<const double> p, std::span<const double> q, const LayerStack& mlp);

// Everything in the scoring head except the user/item representations.
struct NeuMFHead {
  Vector h;
  Activation t = Activation::kIdentity;
  LayerStack mlp;

  std::size_t dim() const { return h.size(); }
  friend bool operator==(const NeuMFHead&, const NeuMFHead&) = default;
};

// Relu hidden layers of the given sizes, then an identity scalar layer.
NeuMFHead make_neumf_head(std::size_t dim, const std::vector<std::size_t>& hidden,
                          Activation t, Rng& rng);
NeuMFHead zeros_like(const NeuMFHead& head);
void append_slots(ParamList& out, NeuMFHead& values, NeuMFHead& grads);

struct HeadCache {
  Vector pq;      // p ⊙ q
  Vector t_out;   // t(p ⊙ q)
  Vector input;   // [p ∥ q]
  std::vector<DenseCache> mlp;
};

// gmf_score + mlp_score, the pre-sigmoid logit.
double head_logit(const NeuMFHead& head, std::span<const double> p, std::span<const double> q);
double head_forward(const NeuMFHead& head, std::span<const double> p,
                    std::span<const double> q, HeadCache& cache);
// Accumulates parameter gradients into `grads` and representation gradients
// into dp and dq.
void head_backward(const NeuMFHead& head, const HeadCache& cache, double dlogit,
                   NeuMFHead& grads, std::span<double> dp, std::span<double> dq);

struct NeuMFParams {
  Matrix P;  // users x d
  Matrix Q;  // items x d
  NeuMFHead head;
};

struct MFParams {
  Matrix P;
  Matrix Q;
  double bias = 0.0;
};

struct Prediction {
  std::string user_id;
  std::string item_id;
  double score = 0.0;
};

// σ(gmf + mlp). Throws LookupError for an index outside the tables.
double neumf_predict(const NeuMFParams& params, std::size_t user, std::size_t item);
// Implicit: σ(p·q + bias). Explicit: the raw p·q + bias.
double mf_predict(const MFParams& params, std::size_t user, std::size_t item,
                  Feedback feedback);

}  // namespace coldrec::recsys
