#pragma once

#include <array>
#include <cmath>

#include "mimex/env.hpp"

namespace mimex {

struct PlaneOptions {
  double half_width = 2.0;   // square is [-half_width, half_width) in x and y
  double goal_radius = 0.05; // reward disc around the goal point
  double goal_x = 1.0;
  double goal_y = 1.0;
  double action_bound = 0.01;
  std::size_t max_steps = 500;  // 0 = uncapped
};

// Flat wrap-around square; the agent drifts at per-axis bounded velocity and
// the only extrinsic reward sits in a small disc around (1,1).
class PlaneEnv final : public Environment {
 public:
  explicit PlaneEnv(std::uint64_t /*seed*/, PlaneOptions opts = {}) : opts_(opts) {
    spec_.name = "plane";
    spec_.observation_dim = 2;
    spec_.action_dim = 2;
    spec_.action_kind = ActionKind::continuous_box;
    spec_.action_bound_kind = BoundKind::per_axis;
    spec_.action_bound = opts.action_bound;
    spec_.net_scale = {1.0, 1.0};
    reset();
  }

  const EnvSpec& spec() const override { return spec_; }

  Tensor reset() override {
    x_ = 0.0;
    y_ = 0.0;
    steps_ = 0;
    return observation();
  }

  StepResult step(const Tensor& raw_action) override {
    Tensor a = clamp_action(spec_, raw_action);
    x_ = wrap(x_ + a[0]);
    y_ = wrap(y_ + a[1]);
    ++steps_;

    double dx = x_ - opts_.goal_x;
    double dy = y_ - opts_.goal_y;
    bool at_goal = dx * dx + dy * dy <= opts_.goal_radius * opts_.goal_radius;
    bool capped = opts_.max_steps > 0 && steps_ >= opts_.max_steps;
    return {observation(), at_goal ? 1.0 : 0.0, at_goal || capped};
  }

  std::array<double, 2> position2d() const override { return {x_, y_}; }

  void set_position(double x, double y) {
    x_ = wrap(x);
    y_ = wrap(y);
  }

  double wrap(double v) const {
    double period = 2.0 * opts_.half_width;
    return v - period * std::floor((v + opts_.half_width) / period);
  }

 private:
  Tensor observation() const { return Tensor::vector({x_, y_}); }

  PlaneOptions opts_;
  EnvSpec spec_;
  double x_ = 0.0;
  double y_ = 0.0;
  std::size_t steps_ = 0;
};

}  // namespace mimex
