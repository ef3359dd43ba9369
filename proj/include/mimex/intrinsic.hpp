#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "mimex/env.hpp"
#include "mimex/errors.hpp"
#include "mimex/mlp.hpp"
#include "mimex/optim.hpp"
#include "mimex/rng.hpp"
#include "mimex/tensor.hpp"
#include "mimex/transition.hpp"

namespace mimex {

enum class IntrinsicKind { none, count, surprisal, mime, pred_improve, rnd };
enum class FeatureMode { raw, frozen_features, trainable_model_frozen_target };

inline const char* intrinsic_kind_name(IntrinsicKind k) {
  switch (k) {
    case IntrinsicKind::none: return "none";
    case IntrinsicKind::count: return "count";
    case IntrinsicKind::surprisal: return "surprisal";
    case IntrinsicKind::mime: return "mime";
    case IntrinsicKind::pred_improve: return "pred-improve";
    case IntrinsicKind::rnd: return "rnd";
  }
  return "?";
}

inline const char* feature_mode_name(FeatureMode m) {
  switch (m) {
    case FeatureMode::raw: return "raw";
    case FeatureMode::frozen_features: return "frozen-features";
    case FeatureMode::trainable_model_frozen_target: return "trainable-model-frozen-target";
  }
  return "?";
}

// Visitation counts over a uniform grid: states are keyed by the integer
// cell tuple floor(s / bin_width).
class VisitCounter {
 public:
  explicit VisitCounter(double bin_width) : bin_width_(bin_width) {
    if (bin_width <= 0.0) throw ConfigError("visit counter: bin width must be positive");
  }

  std::uint64_t increment(std::span<const double> state) { return ++counts_[cell_of(state)]; }

  std::uint64_t count(std::span<const double> state) const {
    auto it = counts_.find(cell_of(state));
    return it == counts_.end() ? 0 : it->second;
  }

  std::size_t distinct_cells() const { return counts_.size(); }
  double bin_width() const { return bin_width_; }

 private:
  struct CellHash {
    std::size_t operator()(const std::vector<std::int64_t>& cell) const {
      std::uint64_t h = 0xcbf29ce484222325ULL;
      for (std::int64_t v : cell) {
        for (int i = 0; i < 8; ++i) {
          h ^= std::uint64_t(v >> (8 * i)) & 0xff;
          h *= 0x100000001b3ULL;
        }
      }
      return std::size_t(h);
    }
  };

  std::vector<std::int64_t> cell_of(std::span<const double> state) const {
    std::vector<std::int64_t> cell(state.size());
    for (std::size_t i = 0; i < state.size(); ++i) {
      cell[i] = std::int64_t(std::floor(state[i] / bin_width_));
    }
    return cell;
  }

  double bin_width_;
  std::unordered_map<std::vector<std::int64_t>, std::uint64_t, CellHash> counts_;
};

// Welford accumulator; used for the optional running normalization of
// intrinsic rewards.
class RunningStat {
 public:
  void add(double x) {
    ++n_;
    double delta = x - mean_;
    mean_ += delta / double(n_);
    m2_ += delta * (x - mean_);
  }

  std::uint64_t count() const { return n_; }
  double mean() const { return mean_; }
  double variance() const { return n_ > 1 ? m2_ / double(n_) : 0.0; }
  double stddev() const { return std::sqrt(variance()); }

 private:
  std::uint64_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

// Random network with weights frozen at initialization; the feature map for
// feature-space reward variants and the distillation target for rnd.
inline MlpNetwork make_frozen_features(Rng rng, std::size_t obs_dim, std::size_t feat_dim,
                                       std::size_t hidden = 32) {
  return MlpNetwork::glorot({obs_dim, hidden, feat_dim}, {Activation::tanh, Activation::linear},
                            rng);
}

struct IntrinsicOptions {
  IntrinsicKind kind = IntrinsicKind::none;
  FeatureMode feature_mode = FeatureMode::raw;
  std::size_t k = 1;             // pred-improve snapshot lag, in model updates
  double bin_width = 0.05;       // count discretization
  double model_lr = 1e-3;
  std::size_t feature_dim = 16;
  std::size_t model_hidden = 32;
};

// One intrinsic-reward generator. All network inputs are pre-scaled by the
// environment's net_scale; emitted rewards therefore live in scaled units.
//
// The reward quantities, with y = model input map and f = frozen features:
//   mime          ||M(y(s), a) - target(s)||^2        (never reads s_next)
//   surprisal     ||M(y(s), a) - target(s_next)||^2
//   pred-improve  0.5 * (||M_snap - target(s_next)||^2 - ||M_now - ...||^2)
//   rnd           ||pred(s_next) - f(s_next)||^2      (ignores the action)
//   count         1 / n(s)   incrementing n first, so a first visit pays 1
// target(s) is s itself in raw mode and f(s) in the feature modes.
class IntrinsicMethod {
 public:
  IntrinsicMethod(const EnvSpec& spec, const IntrinsicOptions& opts, const Rng& rng)
      : spec_(spec), opts_(opts) {
    if (spec.net_scale.size() != spec.observation_dim) {
      throw ConfigError("intrinsic: net_scale size must equal observation_dim");
    }
    Rng model_rng = rng.fork("model");
    switch (opts.kind) {
      case IntrinsicKind::none:
        break;
      case IntrinsicKind::count:
        counter_.emplace(opts.bin_width);
        break;
      case IntrinsicKind::rnd:
        target_ = make_frozen_features(rng.fork("target"), spec.observation_dim,
                                       opts.feature_dim, opts.model_hidden);
        model_ = MlpNetwork::glorot({spec.observation_dim, opts.model_hidden, opts.feature_dim},
                                    {Activation::relu, Activation::linear}, model_rng);
        break;
      case IntrinsicKind::surprisal:
      case IntrinsicKind::mime:
      case IntrinsicKind::pred_improve: {
        if (opts.feature_mode != FeatureMode::raw) {
          target_ = make_frozen_features(rng.fork("target"), spec.observation_dim,
                                         opts.feature_dim, opts.model_hidden);
        }
        std::size_t in_dim = model_input_dim();
        std::size_t out_dim = target_dim();
        std::vector<std::size_t> dims;
        std::vector<Activation> acts;
        if (opts.kind == IntrinsicKind::mime) {
          // Reconstruction through a bottleneck narrower than the target, so
          // the identity solution is unavailable at full rank.
          std::size_t bottleneck = std::max<std::size_t>(1, (out_dim + 1) / 2);
          dims = {in_dim, opts.model_hidden, bottleneck, out_dim};
          acts = {Activation::relu, Activation::linear, Activation::linear};
        } else {
          dims = {in_dim, opts.model_hidden, out_dim};
          acts = {Activation::relu, Activation::linear};
        }
        model_ = MlpNetwork::glorot(dims, acts, model_rng);
        if (opts.kind == IntrinsicKind::pred_improve) snapshot_ = model_;
        break;
      }
    }
    if (model_.has_value()) optimizer_.emplace(opts.model_lr);
  }

  const EnvSpec& spec() const { return spec_; }
  IntrinsicKind kind() const { return opts_.kind; }
  FeatureMode feature_mode() const { return opts_.feature_mode; }
  bool has_model() const { return model_.has_value(); }
  const MlpNetwork* world_model() const { return model_ ? &*model_ : nullptr; }
  const MlpNetwork* frozen_target() const { return target_ ? &*target_ : nullptr; }
  const MlpNetwork* snapshot() const { return snapshot_ ? &*snapshot_ : nullptr; }
  const VisitCounter* counter() const { return counter_ ? &*counter_ : nullptr; }
  std::uint64_t update_count() const { return updates_; }

  // Digest of every parameter that must stay frozen (0 when none exist).
  std::uint64_t frozen_digest() const { return target_ ? target_->param_digest() : 0; }

  // Checkpoint restore. Only the trainable parts may be replaced; the
  // incoming network must agree on input and output width.
  void set_world_model(const MlpNetwork& net) {
    if (!model_) throw ShapeError("intrinsic: method has no trainable model");
    check_replacement(*model_, net);
    model_ = net;
  }

  void set_snapshot(const MlpNetwork& net) {
    if (opts_.kind != IntrinsicKind::pred_improve) {
      throw ShapeError("intrinsic: only pred-improve keeps a snapshot");
    }
    check_replacement(*snapshot_, net);
    snapshot_ = net;
  }

  double reward(const Tensor& s, const Tensor& a, const Tensor& s_next) {
    switch (opts_.kind) {
      case IntrinsicKind::none:
        return 0.0;
      case IntrinsicKind::count: {
        check_obs(s, "state");
        std::uint64_t n = counter_->increment(s.values());
        return 1.0 / double(n);
      }
      case IntrinsicKind::mime: {
        Tensor out = model_->forward(model_input(s, a));
        return squared_distance(out.values(), target_of(s).values());
      }
      case IntrinsicKind::surprisal: {
        Tensor out = model_->forward(model_input(s, a));
        return squared_distance(out.values(), target_of(s_next).values());
      }
      case IntrinsicKind::pred_improve: {
        Tensor in = model_input(s, a);
        Tensor tgt = target_of(s_next);
        double now = squared_distance(model_->forward(in).values(), tgt.values());
        double snap = squared_distance(snapshot_->forward(in).values(), tgt.values());
        return 0.5 * (snap - now);
      }
      case IntrinsicKind::rnd: {
        check_obs(s_next, "next state");
        Tensor x = scaled(s_next);
        return squared_distance(model_->forward(x).values(), target_->forward(x).values());
      }
    }
    return 0.0;
  }

  // One full-batch optimization step on the method's own objective. Returns
  // the pre-update mean loss. pred-improve snapshots the parameters every k
  // updates before they move.
  double update(std::span<const Transition> batch) {
    if (!model_.has_value()) {
      throw ShapeError("update_world_model: method has no trainable model");
    }
    if (batch.empty()) throw ShapeError("update_world_model: empty batch");

    if (opts_.kind == IntrinsicKind::pred_improve && updates_ % opts_.k == 0) {
      snapshot_ = model_;
    }

    std::size_t n = batch.size();
    std::size_t in_dim = model_->input_dim();
    std::size_t out_dim = model_->output_dim();
    Tensor inputs({n, in_dim});
    Tensor targets({n, out_dim});
    for (std::size_t i = 0; i < n; ++i) {
      const Transition& t = batch[i];
      Tensor in = opts_.kind == IntrinsicKind::rnd ? scaled(t.s_next) : model_input(t.s, t.a);
      Tensor tgt = training_target(t);
      std::copy(in.values().begin(), in.values().end(), inputs.row(i).begin());
      std::copy(tgt.values().begin(), tgt.values().end(), targets.row(i).begin());
    }

    Tensor out = model_->forward(inputs);
    Tensor diff = out - targets;
    double mean_loss = diff.squared_norm() / double(n);
    Tensor out_grad = diff * (2.0 / double(n));
    MlpGradients grads = model_->backward(inputs, out_grad);
    adam_step(*model_, grads, *optimizer_);
    ++updates_;
    return mean_loss;
  }

 private:
  static void check_replacement(const MlpNetwork& current, const MlpNetwork& next) {
    if (next.input_dim() != current.input_dim() || next.output_dim() != current.output_dim()) {
      throw ShapeError("intrinsic: replacement network is " + std::to_string(next.input_dim()) +
                       "->" + std::to_string(next.output_dim()) + ", expected " +
                       std::to_string(current.input_dim()) + "->" +
                       std::to_string(current.output_dim()));
    }
  }

  void check_obs(const Tensor& t, const char* what) const {
    if (t.rank() != 1 || t.size() != spec_.observation_dim) {
      throw ShapeError(std::string("intrinsic: ") + what + " shape " +
                       Tensor::shape_string(t.shape()) + " != observation_dim " +
                       std::to_string(spec_.observation_dim));
    }
  }

  Tensor scaled(const Tensor& obs) const {
    check_obs(obs, "observation");
    Tensor out = obs;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= spec_.net_scale[i];
    return out;
  }

  std::size_t target_dim() const {
    return opts_.feature_mode == FeatureMode::raw ? spec_.observation_dim : opts_.feature_dim;
  }

  std::size_t model_input_dim() const {
    std::size_t state_part = opts_.feature_mode == FeatureMode::frozen_features
                                 ? opts_.feature_dim
                                 : spec_.observation_dim;
    return state_part + spec_.action_dim;
  }

  Tensor model_input(const Tensor& s, const Tensor& a) const {
    Tensor state_part = scaled(s);
    if (opts_.feature_mode == FeatureMode::frozen_features) {
      state_part = target_->forward(state_part);
    }
    return concat(state_part, encode_action(spec_, a));
  }

  Tensor target_of(const Tensor& s) const {
    Tensor x = scaled(s);
    return opts_.feature_mode == FeatureMode::raw ? x : target_->forward(x);
  }

  Tensor training_target(const Transition& t) const {
    switch (opts_.kind) {
      case IntrinsicKind::mime:
        return target_of(t.s);
      case IntrinsicKind::surprisal:
      case IntrinsicKind::pred_improve:
        return target_of(t.s_next);
      case IntrinsicKind::rnd:
        return target_->forward(scaled(t.s_next));
      default:
        throw ShapeError("update_world_model: method has no trainable model");
    }
  }

  EnvSpec spec_;
  IntrinsicOptions opts_;
  std::optional<MlpNetwork> model_;
  std::optional<MlpNetwork> target_;    // frozen; digest checked in tests
  std::optional<MlpNetwork> snapshot_;  // pred-improve lagged copy
  std::optional<VisitCounter> counter_;
  std::optional<AdamState> optimizer_;
  std::uint64_t updates_ = 0;
};

}  // namespace mimex
