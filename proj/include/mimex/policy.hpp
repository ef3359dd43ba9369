#pragma once

#include <algorithm>
#include <cmath>
#include <cstring>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "mimex/env.hpp"
#include "mimex/errors.hpp"
#include "mimex/gaussian.hpp"
#include "mimex/mlp.hpp"
#include "mimex/optim.hpp"
#include "mimex/rng.hpp"
#include "mimex/tensor.hpp"

namespace mimex {

// Observations as networks see them (see EnvSpec::net_scale). Works on a
// single observation or a batch of rows.
inline Tensor apply_net_scale(const EnvSpec& spec, const Tensor& obs) {
  if (obs.row_width() != spec.observation_dim) {
    throw ShapeError("net_scale: row width " + std::to_string(obs.row_width()) +
                     " != observation_dim " + std::to_string(spec.observation_dim));
  }
  Tensor out = obs;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    std::span<double> row = out.row(r);
    for (std::size_t i = 0; i < row.size(); ++i) row[i] *= spec.net_scale[i];
  }
  return out;
}

struct PolicyOptions {
  std::size_t hidden = 32;
  double learning_rate = 3e-4;
  double init_log_std = -1.0;  // gaussian only
};

// Policy nets start with a shrunken output layer so the initial action
// distribution is near-neutral: an untrained continuous policy walks without
// drift and an untrained discrete one is near-uniform. Without this the
// no-reward baseline follows the init net's vector field instead of being a
// random walk.
inline MlpNetwork make_policy_net(std::size_t obs_dim, std::size_t hidden,
                                  std::size_t out_dim, Rng& rng) {
  MlpNetwork net = MlpNetwork::glorot({obs_dim, hidden, out_dim},
                                      {Activation::tanh, Activation::linear}, rng);
  auto& head = net.layer(net.layer_count() - 1);
  for (double& w : head.weight.values()) w *= 0.01;
  return net;
}

// Stochastic policy with analytic score-function gradients. sample() returns
// the raw (pre-clamp) draw; admissibility clamping is the caller's job and
// log-probabilities always refer to the raw draw.
class Policy {
 public:
  virtual ~Policy() = default;

  virtual const EnvSpec& spec() const = 0;

  virtual Tensor sample(const Tensor& obs, Rng& rng, double& log_prob) = 0;

  // Log-probability of each (state row, action row) pair.
  virtual std::vector<double> log_prob_batch(const Tensor& states,
                                             const Tensor& actions) const = 0;

  virtual double mean_entropy(const Tensor& states) const = 0;

  // One optimizer step up the objective
  //   (1/N) * sum_i coef[i] * log_prob(a_i | s_i)  +  ent_coef * mean entropy.
  virtual void ascend(const Tensor& states, const Tensor& actions,
                      std::span<const double> coef, double ent_coef) = 0;

  virtual std::vector<double> params_flat() const = 0;
  virtual void set_params_flat(std::span<const double> flat) = 0;
  virtual std::uint64_t param_digest() const = 0;
};

class GaussianPolicy final : public Policy {
 public:
  GaussianPolicy(const EnvSpec& spec, const PolicyOptions& opts, Rng rng)
      : spec_(spec),
        mean_net_(make_policy_net(spec.observation_dim, opts.hidden, spec.action_dim, rng)),
        log_std_(spec.action_dim, opts.init_log_std),
        opt_(opts.learning_rate) {
    if (spec.action_kind != ActionKind::continuous_box) {
      throw ConfigError("gaussian policy requires a continuous action space");
    }
    clamp_log_std();
  }

  const EnvSpec& spec() const override { return spec_; }
  const MlpNetwork& mean_net() const { return mean_net_; }
  std::span<const double> log_std() const { return log_std_; }

  Tensor sample(const Tensor& obs, Rng& rng, double& log_prob) override {
    Tensor mu = mean_net_.forward(apply_net_scale(spec_, obs));
    Tensor a({spec_.action_dim});
    for (std::size_t d = 0; d < spec_.action_dim; ++d) {
      a[d] = mu[d] + std::exp(log_std_[d]) * rng.normal();
    }
    log_prob = gaussian_log_prob_row(mu.values(), log_std_, a.values());
    return a;
  }

  std::vector<double> log_prob_batch(const Tensor& states, const Tensor& actions) const override {
    Tensor mu = mean_net_.forward(apply_net_scale(spec_, states));
    Tensor lp = gaussian_log_prob(mu, Tensor::vector(log_std_), actions);
    return std::vector<double>(lp.values().begin(), lp.values().end());
  }

  double mean_entropy(const Tensor&) const override { return gaussian_entropy(log_std_); }

  void ascend(const Tensor& states, const Tensor& actions, std::span<const double> coef,
              double ent_coef) override {
    std::size_t n = states.rows();
    if (actions.rows() != n || coef.size() != n) {
      throw ShapeError("policy ascend: row counts differ");
    }
    Tensor x = apply_net_scale(spec_, states);
    Tensor mu = mean_net_.forward(x);
    std::size_t d = spec_.action_dim;

    // d(lp)/d(mu) = (a - mu)/sigma^2;  d(lp)/d(log_std) = ((a - mu)/sigma)^2 - 1.
    Tensor mu_grad({n, d});
    std::vector<double> ls_grad(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        double inv_var = std::exp(-2.0 * log_std_[j]);
        double diff = actions(i, j) - mu(i, j);
        double w = coef[i] / double(n);
        mu_grad(i, j) = w * diff * inv_var;
        ls_grad[j] += w * (diff * diff * inv_var - 1.0);
      }
    }
    // Gaussian entropy is log_std + const per dimension.
    for (std::size_t j = 0; j < d; ++j) ls_grad[j] += ent_coef;

    MlpGradients net_grads = mean_net_.backward(x, mu_grad);
    std::vector<double> params = mean_net_.params_flat();
    params.insert(params.end(), log_std_.begin(), log_std_.end());
    std::vector<double> grads = net_grads.flat();
    grads.insert(grads.end(), ls_grad.begin(), ls_grad.end());
    for (double& g : grads) g = -g;  // optimizer descends; we want ascent
    opt_.step(params, grads);
    mean_net_.set_params_flat(std::span<const double>(params).first(mean_net_.param_count()));
    std::copy(params.end() - std::ptrdiff_t(d), params.end(), log_std_.begin());
    clamp_log_std();
  }

  std::vector<double> params_flat() const override {
    std::vector<double> out = mean_net_.params_flat();
    out.insert(out.end(), log_std_.begin(), log_std_.end());
    return out;
  }

  void set_params_flat(std::span<const double> flat) override {
    if (flat.size() != mean_net_.param_count() + log_std_.size()) {
      throw ShapeError("gaussian policy: bad parameter vector length");
    }
    mean_net_.set_params_flat(flat.first(mean_net_.param_count()));
    std::copy(flat.end() - std::ptrdiff_t(log_std_.size()), flat.end(), log_std_.begin());
    clamp_log_std();
  }

  std::uint64_t param_digest() const override {
    std::uint64_t h = mean_net_.param_digest();
    for (double v : log_std_) {
      std::uint64_t bits;
      std::memcpy(&bits, &v, sizeof(bits));
      for (int i = 0; i < 8; ++i) {
        h ^= (bits >> (8 * i)) & 0xff;
        h *= 0x100000001b3ULL;
      }
    }
    return h;
  }

 private:
  void clamp_log_std() {
    for (double& v : log_std_) v = std::clamp(v, -5.0, 2.0);
  }

  EnvSpec spec_;
  MlpNetwork mean_net_;
  std::vector<double> log_std_;
  AdamState opt_;
};

class CategoricalPolicy final : public Policy {
 public:
  CategoricalPolicy(const EnvSpec& spec, const PolicyOptions& opts, Rng rng)
      : spec_(spec),
        logit_net_(make_policy_net(spec.observation_dim, opts.hidden, spec.action_dim, rng)),
        opt_(opts.learning_rate) {
    if (spec.action_kind != ActionKind::discrete) {
      throw ConfigError("categorical policy requires a discrete action space");
    }
  }

  const EnvSpec& spec() const override { return spec_; }
  const MlpNetwork& logit_net() const { return logit_net_; }

  // Probabilities for one observation; sums to 1 by construction.
  std::vector<double> action_probs(const Tensor& obs) const {
    Tensor logits = logit_net_.forward(apply_net_scale(spec_, obs));
    std::vector<double> p(logits.values().begin(), logits.values().end());
    softmax_inplace(p);
    return p;
  }

  Tensor sample(const Tensor& obs, Rng& rng, double& log_prob) override {
    Tensor logits = logit_net_.forward(apply_net_scale(spec_, obs));
    std::vector<double> p(logits.values().begin(), logits.values().end());
    double lse = log_sum_exp(p);
    softmax_inplace(p);
    double u = rng.uniform();
    double acc = 0.0;
    std::size_t pick = p.size() - 1;
    for (std::size_t i = 0; i < p.size(); ++i) {
      acc += p[i];
      if (u < acc) {
        pick = i;
        break;
      }
    }
    // Same arithmetic as log_prob_batch so re-evaluating the draw is exact.
    log_prob = logits[pick] - lse;
    return Tensor::vector({double(pick)});
  }

  std::vector<double> log_prob_batch(const Tensor& states, const Tensor& actions) const override {
    Tensor logits = logit_net_.forward(apply_net_scale(spec_, states));
    std::size_t n = logits.rows();
    if (actions.rows() != n || actions.row_width() != 1) {
      throw ShapeError("categorical log_prob: actions must be one index per row");
    }
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> p(logits.row(i).begin(), logits.row(i).end());
      double lse = log_sum_exp(p);
      std::size_t a = index_of(actions.row(i)[0]);
      out[i] = logits(i, a) - lse;
    }
    return out;
  }

  double mean_entropy(const Tensor& states) const override {
    Tensor logits = logit_net_.forward(apply_net_scale(spec_, states));
    double h = 0.0;
    for (std::size_t i = 0; i < logits.rows(); ++i) {
      std::vector<double> p(logits.row(i).begin(), logits.row(i).end());
      softmax_inplace(p);
      h += entropy_of(p);
    }
    return h / double(logits.rows());
  }

  void ascend(const Tensor& states, const Tensor& actions, std::span<const double> coef,
              double ent_coef) override {
    std::size_t n = states.rows();
    if (actions.rows() != n || coef.size() != n) {
      throw ShapeError("policy ascend: row counts differ");
    }
    Tensor x = apply_net_scale(spec_, states);
    Tensor logits = logit_net_.forward(x);
    std::size_t k = spec_.action_dim;

    // d(lp_a)/d(z_j) = [a == j] - p_j;  d(H)/d(z_j) = -p_j (log p_j + H).
    Tensor z_grad({n, k});
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> p(logits.row(i).begin(), logits.row(i).end());
      softmax_inplace(p);
      double h = entropy_of(p);
      std::size_t a = index_of(actions.row(i)[0]);
      double w = 1.0 / double(n);
      for (std::size_t j = 0; j < k; ++j) {
        double dlp = (j == a ? 1.0 : 0.0) - p[j];
        double dh = -p[j] * (std::log(std::max(p[j], 1e-300)) + h);
        z_grad(i, j) = w * (coef[i] * dlp + ent_coef * dh);
      }
    }

    MlpGradients net_grads = logit_net_.backward(x, z_grad);
    std::vector<double> params = logit_net_.params_flat();
    std::vector<double> grads = net_grads.flat();
    for (double& g : grads) g = -g;
    opt_.step(params, grads);
    logit_net_.set_params_flat(params);
  }

  std::vector<double> params_flat() const override { return logit_net_.params_flat(); }
  void set_params_flat(std::span<const double> flat) override { logit_net_.set_params_flat(flat); }
  std::uint64_t param_digest() const override { return logit_net_.param_digest(); }

 private:
  static void softmax_inplace(std::vector<double>& v) {
    double mx = *std::max_element(v.begin(), v.end());
    double sum = 0.0;
    for (double& x : v) {
      x = std::exp(x - mx);
      sum += x;
    }
    for (double& x : v) x /= sum;
  }

  static double log_sum_exp(const std::vector<double>& v) {
    double mx = *std::max_element(v.begin(), v.end());
    double sum = 0.0;
    for (double x : v) sum += std::exp(x - mx);
    return mx + std::log(sum);
  }

  static double entropy_of(const std::vector<double>& p) {
    double h = 0.0;
    for (double x : p) {
      if (x > 0.0) h -= x * std::log(x);
    }
    return h;
  }

  std::size_t index_of(double a) const {
    auto idx = std::int64_t(a);
    if (idx < 0 || std::size_t(idx) >= spec_.action_dim) {
      throw ShapeError("categorical: action index out of range");
    }
    return std::size_t(idx);
  }

  EnvSpec spec_;
  MlpNetwork logit_net_;
  AdamState opt_;
};

inline std::unique_ptr<Policy> make_policy(const EnvSpec& spec, const PolicyOptions& opts,
                                           Rng rng) {
  if (spec.action_kind == ActionKind::discrete) {
    return std::make_unique<CategoricalPolicy>(spec, opts, rng);
  }
  return std::make_unique<GaussianPolicy>(spec, opts, rng);
}

struct ValueOptions {
  std::size_t hidden = 32;
  double learning_rate = 1e-3;
  std::size_t heads = 1;  // 2 in dual-discount mode (extrinsic head first)
};

// State-value regressor; mirrors the policy trunk. With two heads, head 0
// carries the extrinsic stream and head 1 the intrinsic stream.
class ValueNet {
 public:
  ValueNet(const EnvSpec& spec, const ValueOptions& opts, Rng rng)
      : spec_(spec),
        heads_(checked_heads(opts.heads)),
        net_(MlpNetwork::glorot({spec.observation_dim, opts.hidden, opts.heads},
                                {Activation::tanh, Activation::linear}, rng)),
        opt_(opts.learning_rate) {
    // Zero the head so V starts identically 0 (linear-baseline convention).
    // With no reward signal the advantages are then exactly zero and the
    // agent stays a random walk instead of chasing value-init noise.
    for (double& w : net_.layer(net_.layer_count() - 1).weight.values()) w = 0.0;
  }

  std::size_t heads() const { return heads_; }
  const MlpNetwork& net() const { return net_; }

  // (n, heads) predictions for a batch, or (heads) for one observation.
  Tensor values(const Tensor& states) const {
    return net_.forward(apply_net_scale(spec_, states));
  }

  // One MSE step toward targets (same shape as values()); returns the
  // pre-update mean loss over all entries.
  double update(const Tensor& states, const Tensor& targets) {
    Tensor x = apply_net_scale(spec_, states);
    Tensor out = net_.forward(x);
    out.require_same_shape(targets, "value update");
    Tensor diff = out - targets;
    double loss = diff.squared_norm() / double(diff.size());
    Tensor out_grad = diff * (2.0 / double(diff.size()));
    MlpGradients grads = net_.backward(x, out_grad);
    adam_step(net_, grads, opt_);
    return loss;
  }

  std::vector<double> params_flat() const { return net_.params_flat(); }
  void set_params_flat(std::span<const double> flat) { net_.set_params_flat(flat); }
  std::uint64_t param_digest() const { return net_.param_digest(); }

 private:
  static std::size_t checked_heads(std::size_t h) {
    if (h < 1 || h > 2) throw ConfigError("value net: heads must be 1 or 2");
    return h;
  }

  EnvSpec spec_;
  std::size_t heads_;
  MlpNetwork net_;
  AdamState opt_;
};

}  // namespace mimex
