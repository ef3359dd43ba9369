#pragma once

#include <array>
#include <cmath>

#include "mimex/env.hpp"

namespace mimex {

// Transversal crossings of the circle |p + t*d| = r for t in (0, 1]. A
// grazing tangent (zero discriminant) does not count; landing exactly on the
// circle (root at t = 1) does, and the matching root at t = 0 of the next
// step is excluded so no crossing is ever counted twice.
inline int circle_crossings(double px, double py, double dx, double dy, double r) {
  double a = dx * dx + dy * dy;
  if (a == 0.0) return 0;
  double b = 2.0 * (px * dx + py * dy);
  double c = px * px + py * py - r * r;
  double disc = b * b - 4.0 * a * c;
  if (disc <= 0.0) return 0;
  double sq = std::sqrt(disc);
  int count = 0;
  for (double t : {(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)}) {
    if (t > 0.0 && t <= 1.0) ++count;
  }
  return count;
}

struct WormholeOptions {
  double half_width = 2.0;  // wrap-around square for both planes
  double radius = 0.5;      // wormhole circle in (x, y)
  double upper_z = 1000.0;
  double action_bound = 0.01;  // norm bound
  std::size_t max_steps = 500;
};

// Two planes joined through a circle: a lower disc and an upper square, both
// sharing (x, y). Any move whose straight segment crosses the radius-0.5
// circle swaps planes (once per crossing), flipping the emitted z between 0
// and 1000. There is no extrinsic reward anywhere.
class WormholeEnv final : public Environment {
 public:
  explicit WormholeEnv(std::uint64_t /*seed*/, WormholeOptions opts = {}) : opts_(opts) {
    spec_.name = "wormhole";
    spec_.observation_dim = 3;
    spec_.action_dim = 2;
    spec_.action_kind = ActionKind::continuous_box;
    spec_.action_bound_kind = BoundKind::norm;
    spec_.action_bound = opts.action_bound;
    // z is {0, 1000} in emitted observations; networks see it as {0, 1}.
    spec_.net_scale = {1.0, 1.0, 1.0 / opts.upper_z};
    reset();
  }

  const EnvSpec& spec() const override { return spec_; }

  Tensor reset() override {
    x_ = 0.0;
    y_ = 0.0;
    upper_ = false;
    steps_ = 0;
    return observation();
  }

  StepResult step(const Tensor& raw_action) override {
    Tensor a = clamp_action(spec_, raw_action);
    int crossings = circle_crossings(x_, y_, a[0], a[1], opts_.radius);
    if (crossings % 2 == 1) upper_ = !upper_;
    x_ = wrap(x_ + a[0]);
    y_ = wrap(y_ + a[1]);
    ++steps_;
    bool capped = opts_.max_steps > 0 && steps_ >= opts_.max_steps;
    return {observation(), 0.0, capped};
  }

  std::array<double, 2> position2d() const override { return {x_, y_}; }

  bool on_upper_plane() const { return upper_; }

  void set_state(double x, double y, bool upper) {
    x_ = wrap(x);
    y_ = wrap(y);
    upper_ = upper;
  }

  double wrap(double v) const {
    double period = 2.0 * opts_.half_width;
    return v - period * std::floor((v + opts_.half_width) / period);
  }

 private:
  Tensor observation() const {
    return Tensor::vector({x_, y_, upper_ ? opts_.upper_z : 0.0});
  }

  WormholeOptions opts_;
  EnvSpec spec_;
  double x_ = 0.0;
  double y_ = 0.0;
  bool upper_ = false;
  std::size_t steps_ = 0;
};

}  // namespace mimex
