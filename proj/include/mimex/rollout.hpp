#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "mimex/env.hpp"
#include "mimex/errors.hpp"
#include "mimex/intrinsic.hpp"
#include "mimex/policy.hpp"
#include "mimex/rng.hpp"
#include "mimex/transition.hpp"

namespace mimex {

// Reward mixing rule: extrinsic plus eta-weighted intrinsic.
inline double combine_rewards(double r_ext, double r_int, double eta) {
  if (eta < 0.0) throw ConfigError("combine_rewards: eta must be non-negative");
  return r_ext + eta * r_int;
}

// One environment worker: the environment itself, its current observation,
// and a private action-sampling stream that survives across collections.
struct EnvSlot {
  std::unique_ptr<Environment> env;
  Tensor obs;
  Rng act_rng;

  EnvSlot(std::unique_ptr<Environment> e, Rng rng) : env(std::move(e)), act_rng(rng) {
    obs = env->reset();
  }
};

// A contiguous batch of experience in env-major order: all of env 0's steps,
// then env 1's, each internally time-ordered. Parallel arrays share indexing
// with `transitions`.
struct RolloutBatch {
  std::vector<Transition> transitions;
  std::vector<Tensor> raw_actions;       // pre-clamp policy draws
  std::vector<double> old_log_probs;     // of the raw draws, at collection
  std::vector<std::size_t> env_index;
  std::vector<std::array<double, 2>> positions;  // position2d after each step
  std::vector<double> advantages;        // filled by compute_advantages
  std::vector<double> returns_ext;       // value targets, head 0
  std::vector<double> returns_int;       // value targets, head 1 (dual mode)

  std::size_t size() const { return transitions.size(); }

  Tensor states_matrix() const { return stack([](const Transition& t) { return &t.s; }); }
  Tensor next_states_matrix() const { return stack([](const Transition& t) { return &t.s_next; }); }

  Tensor raw_actions_matrix() const {
    std::size_t n = raw_actions.size();
    std::size_t w = raw_actions.front().size();
    Tensor out({n, w});
    for (std::size_t i = 0; i < n; ++i) {
      std::copy(raw_actions[i].values().begin(), raw_actions[i].values().end(),
                out.row(i).begin());
    }
    return out;
  }

 private:
  template <typename F>
  Tensor stack(F pick) const {
    std::size_t n = transitions.size();
    std::size_t w = pick(transitions.front())->size();
    Tensor out({n, w});
    for (std::size_t i = 0; i < n; ++i) {
      const Tensor* t = pick(transitions[i]);
      std::copy(t->values().begin(), t->values().end(), out.row(i).begin());
    }
    return out;
  }
};

// Run every environment for exactly `horizon` steps under the current policy
// and attach intrinsic rewards. Stepping is serial and env-major, which fixes
// the visitation order count-based rewards see; episodes ending mid-horizon
// reset and keep going.
inline RolloutBatch collect_rollouts(std::span<EnvSlot> slots, Policy& policy,
                                     IntrinsicMethod& method, std::size_t horizon) {
  if (slots.empty()) throw ConfigError("collect_rollouts: no environments");
  if (horizon == 0) throw ConfigError("collect_rollouts: zero horizon");

  RolloutBatch batch;
  batch.transitions.reserve(slots.size() * horizon);
  batch.raw_actions.reserve(slots.size() * horizon);
  batch.old_log_probs.reserve(slots.size() * horizon);
  batch.env_index.reserve(slots.size() * horizon);

  for (std::size_t e = 0; e < slots.size(); ++e) {
    EnvSlot& slot = slots[e];
    for (std::size_t t = 0; t < horizon; ++t) {
      double log_prob = 0.0;
      Tensor raw = policy.sample(slot.obs, slot.act_rng, log_prob);
      Tensor action = clamp_action(slot.env->spec(), raw);
      StepResult step = slot.env->step(action);
      batch.positions.push_back(slot.env->position2d());

      Transition tr;
      tr.s = slot.obs;
      tr.a = action;
      tr.s_next = step.observation;
      tr.r_ext = step.reward;
      tr.done = step.done;
      batch.transitions.push_back(std::move(tr));
      batch.raw_actions.push_back(std::move(raw));
      batch.old_log_probs.push_back(log_prob);
      batch.env_index.push_back(e);

      slot.obs = step.done ? slot.env->reset() : step.observation;
    }
  }

  // Intrinsic rewards in batch order, against the pre-update model.
  for (Transition& tr : batch.transitions) {
    tr.r_int = method.reward(tr.s, tr.a, tr.s_next);
    require_finite(std::span<const double>(&tr.r_int, 1), "intrinsic reward");
  }
  return batch;
}

struct AdvantageOptions {
  double gamma = 0.99;      // single-stream discount, or the extrinsic one
  double gamma_int = 0.99;  // intrinsic discount (dual mode)
  double lambda = 0.95;
  double eta = 0.5;
  bool dual = false;        // two value heads, one discount per reward stream
  bool normalize = true;    // batch-level advantage normalization
};

namespace detail {

// Lambda-weighted TD advantages for one reward stream over one env segment.
// `values`/`next_values` are V(s_t)/V(s_next_t) for the whole batch under the
// head selected by `head`.
inline void gae_segment(const RolloutBatch& batch, std::size_t begin, std::size_t end,
                        const Tensor& values, const Tensor& next_values, std::size_t head,
                        std::span<const double> rewards, double gamma, double lambda,
                        std::span<double> adv_out, std::span<double> ret_out) {
  double acc = 0.0;
  for (std::size_t i = end; i-- > begin;) {
    double v = values(i, head);
    double v_next = batch.transitions[i].done ? 0.0 : next_values(i, head);
    double delta = rewards[i] + gamma * v_next - v;
    acc = delta + gamma * lambda * (batch.transitions[i].done ? 0.0 : acc);
    adv_out[i] = acc;
    ret_out[i] = acc + v;
  }
}

}  // namespace detail

// Fill advantages and value-regression targets. Single mode mixes rewards via
// combine_rewards and uses one head; dual mode discounts the extrinsic and
// eta-scaled intrinsic streams separately (one head each) and sums their
// advantages. Normalization (when enabled, batches of 2+) recenters the final
// advantages to zero mean and unit variance.
inline void compute_advantages(RolloutBatch& batch, const ValueNet& value_net,
                               const AdvantageOptions& opts) {
  std::size_t n = batch.size();
  if (n == 0) throw ShapeError("compute_advantages: empty batch");
  if (opts.dual && value_net.heads() != 2) {
    throw ConfigError("compute_advantages: dual mode needs a two-head value net");
  }

  Tensor values = value_net.values(batch.states_matrix());
  Tensor next_values = value_net.values(batch.next_states_matrix());

  batch.advantages.assign(n, 0.0);
  batch.returns_ext.assign(n, 0.0);
  if (opts.dual) {
    batch.returns_int.assign(n, 0.0);
  } else {
    batch.returns_int.clear();
  }

  // env-major batches: segment boundaries are where env_index changes
  std::vector<std::pair<std::size_t, std::size_t>> segments;
  std::size_t begin = 0;
  for (std::size_t i = 1; i <= n; ++i) {
    if (i == n || batch.env_index[i] != batch.env_index[begin]) {
      segments.emplace_back(begin, i);
      begin = i;
    }
  }

  std::vector<double> rewards(n);
  if (opts.dual) {
    std::vector<double> adv_int(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) rewards[i] = batch.transitions[i].r_ext;
    for (auto [b, e] : segments) {
      detail::gae_segment(batch, b, e, values, next_values, 0, rewards, opts.gamma, opts.lambda,
                          batch.advantages, batch.returns_ext);
    }
    for (std::size_t i = 0; i < n; ++i) {
      rewards[i] = combine_rewards(0.0, batch.transitions[i].r_int, opts.eta);
    }
    for (auto [b, e] : segments) {
      detail::gae_segment(batch, b, e, values, next_values, 1, rewards, opts.gamma_int,
                          opts.lambda, adv_int, batch.returns_int);
    }
    for (std::size_t i = 0; i < n; ++i) batch.advantages[i] += adv_int[i];
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      rewards[i] =
          combine_rewards(batch.transitions[i].r_ext, batch.transitions[i].r_int, opts.eta);
    }
    for (auto [b, e] : segments) {
      detail::gae_segment(batch, b, e, values, next_values, 0, rewards, opts.gamma, opts.lambda,
                          batch.advantages, batch.returns_ext);
    }
  }

  if (opts.normalize && n > 1) {
    double mean = 0.0;
    for (double a : batch.advantages) mean += a;
    mean /= double(n);
    double var = 0.0;
    for (double a : batch.advantages) var += (a - mean) * (a - mean);
    var /= double(n);
    double inv = 1.0 / (std::sqrt(var) + 1e-8);
    for (double& a : batch.advantages) a = (a - mean) * inv;
  }
}

}  // namespace mimex
