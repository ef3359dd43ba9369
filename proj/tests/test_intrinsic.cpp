#include "mimex/intrinsic.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "mimex/envs/plane.hpp"
#include "mimex/envs/wormhole.hpp"
#include "mimex/rng.hpp"

namespace mimex {
namespace {

EnvSpec plane_spec() { return PlaneEnv(0).spec(); }
EnvSpec wormhole_spec() { return WormholeEnv(0).spec(); }

EnvSpec line_spec() {
  EnvSpec s;
  s.name = "line";
  s.observation_dim = 1;
  s.action_dim = 1;
  s.action_kind = ActionKind::continuous_box;
  s.action_bound_kind = BoundKind::per_axis;
  s.action_bound = 0.01;
  s.net_scale = {1.0};
  return s;
}

// Single linear layer with zero weights: output is the bias for any input.
MlpNetwork constant_net(std::size_t in_dim, std::vector<double> out) {
  MlpNetwork net({in_dim, out.size()}, {Activation::linear});
  net.layer(0).bias = Tensor::vector(std::move(out));
  return net;
}

// Independent re-implementation of the forward map for oracle checks.
Tensor manual_forward(const MlpNetwork& net, Tensor x) {
  for (std::size_t li = 0; li < net.layer_count(); ++li) {
    const auto& l = net.layer(li);
    Tensor y({l.weight.dim(0)});
    for (std::size_t o = 0; o < l.weight.dim(0); ++o) {
      double acc = l.bias[o];
      for (std::size_t i = 0; i < l.weight.dim(1); ++i) acc += l.weight(o, i) * x[i];
      switch (l.act) {
        case Activation::relu: acc = acc > 0.0 ? acc : 0.0; break;
        case Activation::tanh: acc = std::tanh(acc); break;
        case Activation::linear: break;
      }
      y[o] = acc;
    }
    x = y;
  }
  return x;
}

Transition make_transition(Tensor s, Tensor a, Tensor s_next) {
  Transition t;
  t.s = std::move(s);
  t.a = std::move(a);
  t.s_next = std::move(s_next);
  return t;
}

TEST(VisitCounter, CountsAndBins) {
  VisitCounter c(0.05);
  std::vector<double> p1{0.01, 0.01};
  std::vector<double> p2{0.02, 0.03};  // same 0.05-cell as p1
  std::vector<double> p3{-0.01, 0.01}; // negative side: different cell
  EXPECT_EQ(c.count(p1), 0u);
  EXPECT_EQ(c.increment(p1), 1u);
  EXPECT_EQ(c.increment(p2), 2u);
  EXPECT_EQ(c.increment(p3), 1u);
  EXPECT_EQ(c.count(p1), 2u);
  EXPECT_EQ(c.distinct_cells(), 2u);
  EXPECT_THROW(VisitCounter(0.0), ConfigError);
}

TEST(CountReward, InverseVisitSequence) {
  IntrinsicOptions opts;
  opts.kind = IntrinsicKind::count;
  IntrinsicMethod m(plane_spec(), opts, Rng(1));
  Tensor s = Tensor::vector({0.3, 0.3});
  Tensor a = Tensor::vector({0.0, 0.0});
  EXPECT_DOUBLE_EQ(m.reward(s, a, s), 1.0);
  EXPECT_DOUBLE_EQ(m.reward(s, a, s), 0.5);
  EXPECT_DOUBLE_EQ(m.reward(s, a, s), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(m.reward(s, a, s), 0.25);
  Tensor elsewhere = Tensor::vector({-1.0, 0.7});
  EXPECT_DOUBLE_EQ(m.reward(elsewhere, a, elsewhere), 1.0);
}

TEST(Mime, ConstantModelHalfFixture) {
  IntrinsicOptions opts;
  opts.kind = IntrinsicKind::mime;
  IntrinsicMethod m(plane_spec(), opts, Rng(2));
  m.set_world_model(constant_net(4, {0.5, 0.5}));
  Tensor s = Tensor::vector({0.0, 0.0});
  Tensor a = Tensor::vector({0.0, 0.0});
  EXPECT_DOUBLE_EQ(m.reward(s, a, Tensor::vector({9.0, 9.0})), 0.5);
}

TEST(Mime, ZeroWhenModelReconstructsState) {
  IntrinsicOptions opts;
  opts.kind = IntrinsicKind::mime;
  IntrinsicMethod m(plane_spec(), opts, Rng(2));
  m.set_world_model(constant_net(4, {0.3, -0.2}));
  Tensor s = Tensor::vector({0.3, -0.2});
  for (double ax : {-0.01, 0.0, 0.01}) {
    EXPECT_DOUBLE_EQ(m.reward(s, Tensor::vector({ax, 0.005}), s), 0.0);
  }
}

TEST(Mime, RewardIgnoresNextState) {
  IntrinsicOptions opts;
  opts.kind = IntrinsicKind::mime;
  IntrinsicMethod m(plane_spec(), opts, Rng(3));
  Rng rng(31);
  for (int i = 0; i < 100; ++i) {
    Tensor s = Tensor::vector({rng.uniform(-2, 2), rng.uniform(-2, 2)});
    Tensor a = Tensor::vector({rng.uniform(-0.01, 0.01), rng.uniform(-0.01, 0.01)});
    double r1 = m.reward(s, a, Tensor::vector({rng.uniform(-2, 2), rng.uniform(-2, 2)}));
    double r2 = m.reward(s, a, Tensor::vector({rng.uniform(-2, 2), rng.uniform(-2, 2)}));
    ASSERT_EQ(r1, r2);
  }
}

TEST(Mime, ManualForwardOracle) {
  IntrinsicOptions opts;
  opts.kind = IntrinsicKind::mime;
  IntrinsicMethod m(plane_spec(), opts, Rng(4));
  Tensor s = Tensor::vector({0.7, -1.1});
  Tensor a = Tensor::vector({0.004, -0.009});
  Tensor out = manual_forward(*m.world_model(), concat(s, a));
  double expected = squared_distance(out.values(), s.values());
  EXPECT_DOUBLE_EQ(m.reward(s, a, s), expected);
}

TEST(Mime, BottleneckRule) {
  IntrinsicOptions opts;
  opts.kind = IntrinsicKind::mime;
  IntrinsicMethod raw(plane_spec(), opts, Rng(5));
  // plane target dim 2 -> bottleneck at most ceil(2/2) = 1
  EXPECT_LE(raw.world_model()->min_hidden_width(), 1u);
  EXPECT_EQ(raw.world_model()->input_dim(), 4u);
  EXPECT_EQ(raw.world_model()->output_dim(), 2u);

  opts.feature_mode = FeatureMode::frozen_features;
  IntrinsicMethod feat(plane_spec(), opts, Rng(5));
  // feature target dim 16 -> bottleneck at most 8
  EXPECT_LE(feat.world_model()->min_hidden_width(), 8u);
  EXPECT_EQ(feat.world_model()->input_dim(), 18u);
  EXPECT_EQ(feat.world_model()->output_dim(), 16u);

  IntrinsicOptions sopts;
  sopts.kind = IntrinsicKind::surprisal;
  IntrinsicMethod surp(plane_spec(), sopts, Rng(5));
  // surprisal has no bottleneck requirement; its hidden layer stays wide
  EXPECT_EQ(surp.world_model()->min_hidden_width(), 32u);
}

// The wormhole z-channel is 0/1000 in emitted observations but must enter
// networks scaled to 0/1, otherwise every upper-plane reward saturates.
TEST(Mime, NetScaleAppliedToWormholeObservations) {
  IntrinsicOptions opts;
  opts.kind = IntrinsicKind::mime;
  IntrinsicMethod m(wormhole_spec(), opts, Rng(6));
  m.set_world_model(constant_net(5, {0.0, 0.0, 0.0}));
  Tensor s = Tensor::vector({0.1, 0.0, 1000.0});
  Tensor a = Tensor::vector({0.0, 0.0});
  EXPECT_NEAR(m.reward(s, a, s), 0.1 * 0.1 + 1.0, 1e-12);
}

TEST(Surprisal, ZeroWhenModelPredictsNext) {
  IntrinsicOptions opts;
  opts.kind = IntrinsicKind::surprisal;
  IntrinsicMethod m(plane_spec(), opts, Rng(7));
  m.set_world_model(constant_net(4, {0.3, -0.2}));
  EXPECT_DOUBLE_EQ(
      m.reward(Tensor::vector({0.0, 0.0}), Tensor::vector({0.0, 0.0}),
               Tensor::vector({0.3, -0.2})),
      0.0);
}

TEST(Surprisal, SquaredNormFixture) {
  IntrinsicOptions opts;
  opts.kind = IntrinsicKind::surprisal;
  IntrinsicMethod m(plane_spec(), opts, Rng(7));
  m.set_world_model(constant_net(4, {0.0, 0.0}));
  EXPECT_DOUBLE_EQ(
      m.reward(Tensor::vector({0.5, 0.5}), Tensor::vector({0.0, 0.0}),
               Tensor::vector({1.0, 1.0})),
      2.0);
}

TEST(Surprisal, ManualForwardOracle) {
  IntrinsicOptions opts;
  opts.kind = IntrinsicKind::surprisal;
  IntrinsicMethod m(plane_spec(), opts, Rng(8));
  Tensor s = Tensor::vector({-0.4, 1.3});
  Tensor a = Tensor::vector({-0.002, 0.01});
  Tensor s_next = Tensor::vector({-0.402, 1.31});
  Tensor out = manual_forward(*m.world_model(), concat(s, a));
  EXPECT_DOUBLE_EQ(m.reward(s, a, s_next),
                   squared_distance(out.values(), s_next.values()));
}

TEST(Surprisal, LossShrinksUnderRepeatedTraining) {
  IntrinsicOptions opts;
  opts.kind = IntrinsicKind::surprisal;
  IntrinsicMethod m(plane_spec(), opts, Rng(9));

  PlaneEnv env(1, {.goal_radius = 0.0});
  Rng act_rng(42);
  std::vector<Transition> batch;
  Tensor s = env.reset();
  for (int i = 0; i < 200; ++i) {
    Tensor a = Tensor::vector({act_rng.uniform(-0.01, 0.01), act_rng.uniform(-0.01, 0.01)});
    StepResult r = env.step(a);
    batch.push_back(make_transition(s, a, r.observation));
    s = r.done ? env.reset() : r.observation;
  }

  double early = 0.0;
  double late = 0.0;
  for (int u = 0; u < 300; ++u) {
    double loss = m.update(batch);
    if (u < 100) early += loss;
    if (u >= 200) late += loss;
  }
  EXPECT_LT(late, early);
}

TEST(PredImprove, ZeroWhileSnapshotMatchesModel) {
  IntrinsicOptions opts;
  opts.kind = IntrinsicKind::pred_improve;
  IntrinsicMethod m(plane_spec(), opts, Rng(10));
  Tensor s = Tensor::vector({0.2, 0.4});
  Tensor a = Tensor::vector({0.01, -0.01});
  EXPECT_EQ(m.reward(s, a, Tensor::vector({0.21, 0.39})), 0.0);
}

TEST(PredImprove, HalfErrorDifferenceFixture) {
  IntrinsicOptions opts;
  opts.kind = IntrinsicKind::pred_improve;
  IntrinsicMethod m(line_spec(), opts, Rng(11));
  // snapshot error^2 = 4, current error^2 = 1 -> reward 0.5 * (4 - 1)
  m.set_world_model(constant_net(2, {1.0}));
  m.set_snapshot(constant_net(2, {2.0}));
  EXPECT_DOUBLE_EQ(
      m.reward(Tensor::vector({0.0}), Tensor::vector({0.0}), Tensor::vector({0.0})), 1.5);
}

TEST(PredImprove, PositiveAfterOneUpdate) {
  IntrinsicOptions opts;
  opts.kind = IntrinsicKind::pred_improve;
  IntrinsicMethod m(plane_spec(), opts, Rng(12));
  std::vector<Transition> batch{make_transition(Tensor::vector({0.5, -0.5}),
                                                Tensor::vector({0.01, 0.0}),
                                                Tensor::vector({0.51, -0.5}))};
  for (int i = 0; i < 5; ++i) m.update(batch);
  EXPECT_GT(m.reward(batch[0].s, batch[0].a, batch[0].s_next), 0.0);
}

TEST(PredImprove, SnapshotRollsEveryKUpdates) {
  IntrinsicOptions opts;
  opts.kind = IntrinsicKind::pred_improve;
  opts.k = 3;
  IntrinsicMethod m(plane_spec(), opts, Rng(13));
  std::vector<Transition> batch{make_transition(Tensor::vector({0.1, 0.1}),
                                                Tensor::vector({0.0, 0.01}),
                                                Tensor::vector({0.1, 0.11}))};
  std::uint64_t init_digest = m.world_model()->param_digest();
  m.update(batch);  // update 0: snapshot <- init params, model moves
  EXPECT_EQ(m.snapshot()->param_digest(), init_digest);
  std::uint64_t after1 = m.world_model()->param_digest();
  EXPECT_NE(after1, init_digest);
  m.update(batch);  // update 1: no roll
  m.update(batch);  // update 2: no roll
  EXPECT_EQ(m.snapshot()->param_digest(), init_digest);
  std::uint64_t before3 = m.world_model()->param_digest();
  m.update(batch);  // update 3: snapshot rolls to the pre-update parameters
  EXPECT_EQ(m.snapshot()->param_digest(), before3);
}

TEST(Rnd, IgnoresActionAndCurrentState) {
  IntrinsicOptions opts;
  opts.kind = IntrinsicKind::rnd;
  IntrinsicMethod m(plane_spec(), opts, Rng(14));
  Tensor s_next = Tensor::vector({0.8, -0.3});
  double r1 = m.reward(Tensor::vector({0.0, 0.0}), Tensor::vector({0.01, 0.0}), s_next);
  double r2 = m.reward(Tensor::vector({1.0, 1.0}), Tensor::vector({-0.01, 0.01}), s_next);
  EXPECT_EQ(r1, r2);
  EXPECT_GT(r1, 0.0);
}

TEST(Rnd, ZeroWhenPredictorEqualsTarget) {
  IntrinsicOptions opts;
  opts.kind = IntrinsicKind::rnd;
  IntrinsicMethod m(plane_spec(), opts, Rng(15));
  m.set_world_model(*m.frozen_target());
  EXPECT_EQ(m.reward(Tensor::vector({0, 0}), Tensor::vector({0, 0}),
                     Tensor::vector({1.234, -0.567})),
            0.0);
}

TEST(Rnd, ManualForwardOracle) {
  IntrinsicOptions opts;
  opts.kind = IntrinsicKind::rnd;
  IntrinsicMethod m(plane_spec(), opts, Rng(16));
  Tensor s_next = Tensor::vector({0.25, 0.75});
  Tensor pred = manual_forward(*m.world_model(), s_next);
  Tensor tgt = manual_forward(*m.frozen_target(), s_next);
  EXPECT_DOUBLE_EQ(m.reward(s_next, Tensor::vector({0, 0}), s_next),
                   squared_distance(pred.values(), tgt.values()));
}

TEST(UpdateWorldModel, OverfitsOneSample) {
  for (IntrinsicKind kind : {IntrinsicKind::mime, IntrinsicKind::surprisal,
                             IntrinsicKind::pred_improve, IntrinsicKind::rnd}) {
    IntrinsicOptions opts;
    opts.kind = kind;
    IntrinsicMethod m(plane_spec(), opts, Rng(17));
    std::vector<Transition> batch{make_transition(Tensor::vector({0.6, -0.9}),
                                                  Tensor::vector({0.01, -0.01}),
                                                  Tensor::vector({0.61, -0.91}))};
    for (int i = 0; i < 5000; ++i) m.update(batch);
    EXPECT_LT(std::abs(m.reward(batch[0].s, batch[0].a, batch[0].s_next)), 1e-3)
        << intrinsic_kind_name(kind);
  }
}

TEST(UpdateWorldModel, ReturnsPreUpdateMeanReward) {
  for (IntrinsicKind kind :
       {IntrinsicKind::mime, IntrinsicKind::surprisal, IntrinsicKind::rnd}) {
    IntrinsicOptions opts;
    opts.kind = kind;
    IntrinsicMethod m(plane_spec(), opts, Rng(18));
    Rng rng(77);
    std::vector<Transition> batch;
    double mean_reward = 0.0;
    for (int i = 0; i < 16; ++i) {
      batch.push_back(make_transition(
          Tensor::vector({rng.uniform(-2, 2), rng.uniform(-2, 2)}),
          Tensor::vector({rng.uniform(-0.01, 0.01), rng.uniform(-0.01, 0.01)}),
          Tensor::vector({rng.uniform(-2, 2), rng.uniform(-2, 2)})));
    }
    for (const Transition& t : batch) mean_reward += m.reward(t.s, t.a, t.s_next);
    mean_reward /= double(batch.size());
    EXPECT_NEAR(m.update(batch), mean_reward, 1e-12) << intrinsic_kind_name(kind);
  }
}

TEST(UpdateWorldModel, FrozenTargetNeverMoves) {
  for (FeatureMode mode : {FeatureMode::frozen_features,
                           FeatureMode::trainable_model_frozen_target}) {
    IntrinsicOptions opts;
    opts.kind = IntrinsicKind::mime;
    opts.feature_mode = mode;
    IntrinsicMethod m(plane_spec(), opts, Rng(19));
    std::uint64_t before = m.frozen_digest();
    ASSERT_NE(before, 0u);
    std::vector<Transition> batch{make_transition(Tensor::vector({0.4, 0.4}),
                                                  Tensor::vector({0.0, 0.01}),
                                                  Tensor::vector({0.4, 0.41}))};
    for (int i = 0; i < 50; ++i) m.update(batch);
    EXPECT_EQ(m.frozen_digest(), before);
  }

  IntrinsicOptions ropts;
  ropts.kind = IntrinsicKind::rnd;
  IntrinsicMethod r(plane_spec(), ropts, Rng(19));
  std::uint64_t before = r.frozen_digest();
  std::vector<Transition> batch{make_transition(Tensor::vector({0.4, 0.4}),
                                                Tensor::vector({0.0, 0.01}),
                                                Tensor::vector({0.4, 0.41}))};
  for (int i = 0; i < 50; ++i) r.update(batch);
  EXPECT_EQ(r.frozen_digest(), before);
}

TEST(UpdateWorldModel, Errors) {
  IntrinsicOptions opts;
  opts.kind = IntrinsicKind::surprisal;
  IntrinsicMethod m(plane_spec(), opts, Rng(20));
  EXPECT_THROW(m.update({}), ShapeError);

  IntrinsicOptions copts;
  copts.kind = IntrinsicKind::count;
  IntrinsicMethod c(plane_spec(), copts, Rng(20));
  std::vector<Transition> batch{make_transition(Tensor::vector({0, 0}),
                                                Tensor::vector({0, 0}),
                                                Tensor::vector({0, 0}))};
  EXPECT_THROW(c.update(batch), ShapeError);

  IntrinsicOptions nopts;
  IntrinsicMethod none(plane_spec(), nopts, Rng(20));
  EXPECT_THROW(none.update(batch), ShapeError);
  EXPECT_EQ(none.reward(batch[0].s, batch[0].a, batch[0].s_next), 0.0);
}

TEST(FeatureModes, FrozenFeaturesOracle) {
  IntrinsicOptions opts;
  opts.kind = IntrinsicKind::mime;
  opts.feature_mode = FeatureMode::frozen_features;
  IntrinsicMethod m(plane_spec(), opts, Rng(21));
  Tensor s = Tensor::vector({1.2, -0.8});
  Tensor a = Tensor::vector({0.003, 0.007});
  Tensor f = manual_forward(*m.frozen_target(), s);
  Tensor out = manual_forward(*m.world_model(), concat(f, a));
  EXPECT_DOUBLE_EQ(m.reward(s, a, s), squared_distance(out.values(), f.values()));
}

TEST(FeatureModes, TrainableModelFrozenTargetOracle) {
  IntrinsicOptions opts;
  opts.kind = IntrinsicKind::mime;
  opts.feature_mode = FeatureMode::trainable_model_frozen_target;
  IntrinsicMethod m(plane_spec(), opts, Rng(22));
  Tensor s = Tensor::vector({-0.5, 0.25});
  Tensor a = Tensor::vector({-0.01, 0.002});
  Tensor f = manual_forward(*m.frozen_target(), s);
  Tensor out = manual_forward(*m.world_model(), concat(s, a));
  EXPECT_EQ(m.world_model()->input_dim(), 4u);
  EXPECT_DOUBLE_EQ(m.reward(s, a, s), squared_distance(out.values(), f.values()));
}

TEST(FrozenFeatures, SeedBehaviour) {
  MlpNetwork a = make_frozen_features(Rng(5), 2, 16);
  MlpNetwork b = make_frozen_features(Rng(5), 2, 16);
  MlpNetwork c = make_frozen_features(Rng(6), 2, 16);
  EXPECT_EQ(a, b);
  EXPECT_NE(a.param_digest(), c.param_digest());
  EXPECT_EQ(a.output_dim(), 16u);
  Tensor x = Tensor::vector({0.5, -0.5});
  EXPECT_EQ(a.forward(x), a.forward(x));
}

TEST(Intrinsic, DeterministicAcrossInstances) {
  for (IntrinsicKind kind : {IntrinsicKind::mime, IntrinsicKind::surprisal,
                             IntrinsicKind::pred_improve, IntrinsicKind::rnd}) {
    IntrinsicOptions opts;
    opts.kind = kind;
    IntrinsicMethod m1(plane_spec(), opts, Rng(23));
    IntrinsicMethod m2(plane_spec(), opts, Rng(23));
    Rng rng(55);
    std::vector<Transition> batch;
    for (int i = 0; i < 32; ++i) {
      batch.push_back(make_transition(
          Tensor::vector({rng.uniform(-2, 2), rng.uniform(-2, 2)}),
          Tensor::vector({rng.uniform(-0.01, 0.01), rng.uniform(-0.01, 0.01)}),
          Tensor::vector({rng.uniform(-2, 2), rng.uniform(-2, 2)})));
    }
    for (int u = 0; u < 10; ++u) {
      ASSERT_EQ(m1.update(batch), m2.update(batch));
    }
    EXPECT_EQ(m1.world_model()->param_digest(), m2.world_model()->param_digest());
    for (const Transition& t : batch) {
      ASSERT_EQ(m1.reward(t.s, t.a, t.s_next), m2.reward(t.s, t.a, t.s_next));
    }
  }
}

TEST(RunningStat, WelfordMatchesClosedForm) {
  RunningStat st;
  for (double v : {20000.0, 22000.0, 24000.0}) st.add(v);
  EXPECT_DOUBLE_EQ(st.mean(), 22000.0);
  EXPECT_NEAR(st.stddev(), std::sqrt(8000000.0 / 3.0), 1e-9);
  EXPECT_EQ(st.count(), 3u);
}

}  // namespace
}  // namespace mimex
