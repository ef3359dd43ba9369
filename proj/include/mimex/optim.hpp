#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "mimex/errors.hpp"
#include "mimex/mlp.hpp"

namespace mimex {

// Adaptive-moment first-order optimizer with bias correction. Works on flat
// parameter vectors so networks and loose parameter blocks (e.g. a policy's
// log-std vector) share one update rule.
class AdamState {
 public:
  explicit AdamState(double learning_rate, double beta1 = 0.9, double beta2 = 0.999,
                     double epsilon = 1e-8)
      : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(epsilon) {}

  void step(std::span<double> params, std::span<const double> grads) {
    if (params.size() != grads.size()) {
      throw ShapeError("optimizer_step: " + std::to_string(grads.size()) + " gradients for " +
                       std::to_string(params.size()) + " parameters");
    }
    require_finite(grads, "optimizer_step: gradient");
    if (first_moment_.empty()) {
      first_moment_.assign(params.size(), 0.0);
      second_moment_.assign(params.size(), 0.0);
    } else if (first_moment_.size() != params.size()) {
      throw ShapeError("optimizer_step: parameter count changed mid-run");
    }

    ++step_count_;
    double bc1 = 1.0 - std::pow(beta1_, double(step_count_));
    double bc2 = 1.0 - std::pow(beta2_, double(step_count_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      double g = grads[i];
      first_moment_[i] = beta1_ * first_moment_[i] + (1.0 - beta1_) * g;
      second_moment_[i] = beta2_ * second_moment_[i] + (1.0 - beta2_) * g * g;
      double m_hat = first_moment_[i] / bc1;
      double v_hat = second_moment_[i] / bc2;
      params[i] -= lr_ * m_hat / (std::sqrt(v_hat) + eps_);
    }
  }

  std::int64_t step_count() const { return step_count_; }
  double learning_rate() const { return lr_; }
  void set_learning_rate(double lr) { lr_ = lr; }

 private:
  double lr_;
  double beta1_;
  double beta2_;
  double eps_;
  std::int64_t step_count_ = 0;
  std::vector<double> first_moment_;
  std::vector<double> second_moment_;
};

// One optimizer step on a network from per-layer gradients.
inline void adam_step(MlpNetwork& net, const MlpGradients& grads, AdamState& state) {
  if (grads.weight.size() != net.layer_count()) {
    throw ShapeError("optimizer_step: gradient layer count mismatch");
  }
  for (std::size_t i = 0; i < net.layer_count(); ++i) {
    net.layer(i).weight.require_same_shape(grads.weight[i], "optimizer_step");
    net.layer(i).bias.require_same_shape(grads.bias[i], "optimizer_step");
  }
  std::vector<double> params = net.params_flat();
  std::vector<double> flat = grads.flat();
  state.step(params, flat);
  net.set_params_flat(params);
}

}  // namespace mimex
