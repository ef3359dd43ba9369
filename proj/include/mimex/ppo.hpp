#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "mimex/errors.hpp"
#include "mimex/policy.hpp"
#include "mimex/rng.hpp"
#include "mimex/rollout.hpp"

namespace mimex {

struct PpoOptions {
  double clip_eps = 0.2;
  std::size_t epochs = 4;
  std::size_t minibatches = 4;
  double ent_coef = 0.0;
};

struct PpoStats {
  // Mean likelihood ratio in the first minibatch, before any update this
  // call. Exactly 1 when advantages were computed against the same policy.
  double first_minibatch_mean_ratio = 0.0;
  double mean_value_loss = 0.0;   // pre-update MSE averaged over minibatch steps
  double clip_fraction = 0.0;     // samples whose ratio left the trust region
  std::size_t minibatch_updates = 0;
};

// Clipped-surrogate policy/value update over a finished rollout batch.
//
// Each minibatch re-evaluates log-probs of the stored raw draws, forms
// ratio = exp(new - old), and ascends sum A_i * ratio_i, except that samples
// whose ratio already moved past 1 +/- clip_eps in the favoured direction
// contribute zero gradient (the flat part of the clipped objective). Value
// heads regress to the stored returns.
inline PpoStats ppo_update(Policy& policy, ValueNet& value_net, const RolloutBatch& batch,
                           const PpoOptions& opts, Rng& shuffle_rng) {
  std::size_t n = batch.size();
  if (n == 0) throw ShapeError("ppo_update: empty batch");
  if (batch.advantages.size() != n || batch.returns_ext.size() != n) {
    throw ShapeError("ppo_update: run compute_advantages first");
  }
  if (opts.minibatches == 0 || opts.epochs == 0) {
    throw ConfigError("ppo_update: epochs and minibatches must be positive");
  }
  if (opts.clip_eps <= 0.0 || opts.clip_eps >= 1.0) {
    throw ConfigError("ppo_update: clip_eps must lie in (0, 1)");
  }
  bool dual = value_net.heads() == 2;
  if (dual && batch.returns_int.size() != n) {
    throw ShapeError("ppo_update: two-head value net needs intrinsic returns");
  }

  Tensor all_states = batch.states_matrix();
  Tensor all_actions = batch.raw_actions_matrix();
  std::size_t obs_dim = all_states.row_width();
  std::size_t act_dim = all_actions.row_width();

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  PpoStats stats;
  std::size_t clipped = 0;
  std::size_t seen = 0;
  double value_loss_sum = 0.0;

  for (std::size_t epoch = 0; epoch < opts.epochs; ++epoch) {
    for (std::size_t i = n; i > 1; --i) {  // Fisher-Yates
      std::size_t j = std::size_t(shuffle_rng.integer(i));
      std::swap(order[i - 1], order[j]);
    }

    for (std::size_t mb = 0; mb < opts.minibatches; ++mb) {
      std::size_t lo = mb * n / opts.minibatches;
      std::size_t hi = (mb + 1) * n / opts.minibatches;
      if (lo == hi) continue;  // more minibatches than samples
      std::size_t m = hi - lo;

      Tensor states({m, obs_dim});
      Tensor actions({m, act_dim});
      Tensor targets({m, value_net.heads()});
      std::vector<double> old_lp(m), adv(m);
      for (std::size_t i = 0; i < m; ++i) {
        std::size_t src = order[lo + i];
        std::copy(all_states.row(src).begin(), all_states.row(src).end(),
                  states.row(i).begin());
        std::copy(all_actions.row(src).begin(), all_actions.row(src).end(),
                  actions.row(i).begin());
        old_lp[i] = batch.old_log_probs[src];
        adv[i] = batch.advantages[src];
        targets(i, 0) = batch.returns_ext[src];
        if (dual) targets(i, 1) = batch.returns_int[src];
      }

      std::vector<double> lp_new = policy.log_prob_batch(states, actions);
      std::vector<double> coef(m);
      double ratio_sum = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        double ratio = std::exp(lp_new[i] - old_lp[i]);
        if (!std::isfinite(ratio)) throw NumericError("ppo_update: non-finite ratio");
        ratio_sum += ratio;
        bool outside = (adv[i] > 0.0 && ratio > 1.0 + opts.clip_eps) ||
                       (adv[i] < 0.0 && ratio < 1.0 - opts.clip_eps);
        if (outside) ++clipped;
        coef[i] = outside ? 0.0 : adv[i] * ratio;
      }
      seen += m;
      if (stats.minibatch_updates == 0) stats.first_minibatch_mean_ratio = ratio_sum / double(m);

      policy.ascend(states, actions, coef, opts.ent_coef);
      value_loss_sum += value_net.update(states, targets);
      ++stats.minibatch_updates;
    }
  }

  stats.mean_value_loss = value_loss_sum / double(stats.minibatch_updates);
  stats.clip_fraction = seen ? double(clipped) / double(seen) : 0.0;
  return stats;
}

}  // namespace mimex
