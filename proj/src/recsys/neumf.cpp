#include "coldrec/recsys/neumf.hpp"

#include <cmath>

namespace coldrec::recsys {

namespace {

void check_pair(std::span<const double> p, std::span<const double> q, const char* what) {
  if (p.size() != q.size()) {
    throw ShapeError(std::string(what) + ": p " + length_string(p.size()) + " vs q " +
                     length_string(q.size()));
  }
}

void check_index(std::size_t index, const Matrix& table, const char* what) {
  if (index >= table.rows()) {
    throw LookupError(std::string("no ") + what + " row " + std::to_string(index) + " (table has " +
                      std::to_string(table.rows()) + ")");
  }
}

}  // namespace

double gmf_score(std::span<const double> p, std::span<const double> q,
                 std::span<const double> h, Activation t) {
  check_pair(p, q, "gmf_score");
  if (h.size() != p.size()) {
    throw ShapeError("gmf_score: h " + length_string(h.size()) + " vs p " +
                     length_string(p.size()));
  }
  double s = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) s += h[k] * activate(t, p[k] * q[k]);
  return s;
}

double mlp_score(std::span<const double> p, std::span<const double> q, const LayerStack& mlp) {
  check_pair(p, q, "mlp_score");
  if (mlp.empty()) throw ShapeError("mlp_score: empty MLP path");
  if (mlp.back().out_dim() != 1) {
    throw ShapeError("mlp_score: final layer is " + mlp.back().weight.shape_string() +
                     ", expected a scalar output");
  }
  return stack_apply(mlp, concat(p, q))[0];
}

NeuMFHead make_neumf_head(std::size_t dim, const std::vector<std::size_t>& hidden,
                          Activation t, Rng& rng) {
  if (dim == 0) throw ArgumentError("make_neumf_head: dim must be positive");
  NeuMFHead head;
  head.t = t;
  const Matrix h = init_params(1, dim, rng, InitScheme::kXavierUniform);
  head.h.assign(h.values().begin(), h.values().end());
  std::size_t in = 2 * dim;
  for (std::size_t width : hidden) {
    head.mlp.push_back(make_dense(in, width, Activation::kRelu, rng));
    in = width;
  }
  head.mlp.push_back(make_dense(in, 1, Activation::kIdentity, rng));
  return head;
}

NeuMFHead zeros_like(const NeuMFHead& head) {
  return NeuMFHead{Vector(head.h.size(), 0.0), head.t, coldrec::zeros_like(head.mlp)};
}

void append_slots(ParamList& out, NeuMFHead& values, NeuMFHead& grads) {
  coldrec::append_slots(out, values.h, grads.h);
  coldrec::append_slots(out, values.mlp, grads.mlp);
}

double head_logit(const NeuMFHead& head, std::span<const double> p, std::span<const double> q) {
  return gmf_score(p, q, head.h, head.t) + mlp_score(p, q, head.mlp);
}

double head_forward(const NeuMFHead& head, std::span<const double> p,
                    std::span<const double> q, HeadCache& cache) {
  check_pair(p, q, "head_forward");
  const std::size_t d = p.size();
  cache.pq.resize(d);
  cache.t_out.resize(d);
  double gmf = 0.0;
  for (std::size_t k = 0; k < d; ++k) {
    cache.pq[k] = p[k] * q[k];
    cache.t_out[k] = activate(head.t, cache.pq[k]);
    gmf += head.h[k] * cache.t_out[k];
  }
  cache.input = concat(p, q);
  StackForward f = stack_forward(head.mlp, cache.input);
  cache.mlp = std::move(f.caches);
  return gmf + f.output[0];
}

void head_backward(const NeuMFHead& head, const HeadCache& cache, double dlogit,
                   NeuMFHead& grads, std::span<double> dp, std::span<double> dq) {
  const std::size_t d = cache.pq.size();
  const std::span<const double> p(cache.input.data(), d);
  const std::span<const double> q(cache.input.data() + d, d);
  for (std::size_t k = 0; k < d; ++k) {
    grads.h[k] += dlogit * cache.t_out[k];
    const double g =
        dlogit * head.h[k] * activation_derivative(head.t, cache.pq[k], cache.t_out[k]);
    dp[k] += g * q[k];
    dq[k] += g * p[k];
  }
  const double up[1] = {dlogit};
  const Vector din = stack_backward_accumulate(head.mlp, cache.mlp, up, grads.mlp);
  for (std::size_t k = 0; k < d; ++k) {
    dp[k] += din[k];
    dq[k] += din[d + k];
  }
}

double neumf_predict(const NeuMFParams& params, std::size_t user, std::size_t item) {
  check_index(user, params.P, "user");
  check_index(item, params.Q, "item");
  return sigmoid(head_logit(params.head, params.P.row(user), params.Q.row(item)));
}

double mf_predict(const MFParams& params, std::size_t user, std::size_t item,
                  Feedback feedback) {
  check_index(user, params.P, "user");
  check_index(item, params.Q, "item");
  const double raw = dot(params.P.row(user), params.Q.row(item)) + params.bias;
  return feedback == Feedback::kImplicit ? sigmoid(raw) : raw;
}

}  // namespace coldrec::recsys
