#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "mimex/errors.hpp"
#include "mimex/rng.hpp"
#include "mimex/tensor.hpp"

namespace mimex {

enum class ActionKind { continuous_box, discrete };
enum class BoundKind { per_axis, norm };

// Static description of an environment's interface: dimensions, how raw
// policy outputs map to admissible actions, and how observations should be
// scaled before entering any network (emitted observations are never scaled).
struct EnvSpec {
  std::string name;
  std::size_t observation_dim = 0;
  std::size_t action_dim = 0;
  ActionKind action_kind = ActionKind::continuous_box;
  BoundKind action_bound_kind = BoundKind::per_axis;
  double action_bound = 0.0;
  std::vector<double> net_scale;  // per-component input scaling, size observation_dim

  bool operator==(const EnvSpec&) const = default;
};

struct StepResult {
  Tensor observation;
  double reward = 0.0;
  bool done = false;
};

// Map a raw policy output to an admissible action. Continuous actions are
// clamped (per-axis) or rescaled (norm bound, direction preserved); discrete
// actions are rounded and clamped to the valid index range. Out-of-bound
// values are never an error: stochastic policies produce them routinely.
inline Tensor clamp_action(const EnvSpec& spec, const Tensor& raw) {
  if (spec.action_kind == ActionKind::discrete) {
    if (raw.size() != 1) {
      throw ShapeError("clamp_action: discrete action must be a single index, got " +
                       Tensor::shape_string(raw.shape()));
    }
    double idx = std::nearbyint(raw[0]);
    idx = std::max(0.0, std::min(idx, double(spec.action_dim - 1)));
    return Tensor::vector({idx});
  }
  if (raw.rank() != 1 || raw.size() != spec.action_dim) {
    throw ShapeError("clamp_action: expected " + std::to_string(spec.action_dim) +
                     " components, got " + Tensor::shape_string(raw.shape()));
  }
  Tensor out = raw;
  if (spec.action_bound_kind == BoundKind::per_axis) {
    for (double& v : out.values()) {
      v = std::max(-spec.action_bound, std::min(v, spec.action_bound));
    }
  } else {
    double n = std::sqrt(out.squared_norm());
    if (n > spec.action_bound && n > 0.0) {
      out *= spec.action_bound / n;
    }
  }
  return out;
}

// One-hot for discrete actions, identity for continuous; this is the form
// world models consume.
inline Tensor encode_action(const EnvSpec& spec, const Tensor& action) {
  if (spec.action_kind == ActionKind::continuous_box) return action;
  Tensor out({spec.action_dim});
  std::size_t idx = std::size_t(action[0]);
  if (idx >= spec.action_dim) {
    throw ShapeError("encode_action: index " + std::to_string(idx) + " out of range");
  }
  out[idx] = 1.0;
  return out;
}

// Width of the action part of a world-model input (one-hot for discrete).
inline std::size_t encoded_action_dim(const EnvSpec& spec) { return spec.action_dim; }

// A single-threaded, independently seeded environment instance. step() clamps
// the incoming action itself, so callers may pass raw policy samples.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual const EnvSpec& spec() const = 0;

  // Start a new episode deterministically; a freshly constructed instance
  // with the same seed replays the same episode stream.
  virtual Tensor reset() = 0;

  virtual StepResult step(const Tensor& raw_action) = 0;

  // Planar projection of the current state, used by visitation metrics.
  virtual std::array<double, 2> position2d() const = 0;
};

}  // namespace mimex
