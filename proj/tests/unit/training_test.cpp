#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "hhpnet/synthetic.hpp"
#include "hhpnet/training.hpp"

using namespace hhpnet;

namespace {

Dataset small_set(std::size_t n, std::uint64_t seed) { return synth::generate_dataset(n, {}, seed); }

ModelConfig tiny() {
  ModelConfig c;
  c.alpha = 0.2;
  return c;
}

}  // namespace

TEST(Adam, ZeroGradientLeavesParametersAlone) {
  ad::Parameter p("p", ad::Tensor::vector({1.0, -2.0, 3.0}));
  p.zero_grad();
  std::vector<ad::Parameter*> ps{&p};
  AdamState s;
  for (int i = 0; i < 5; ++i) adam_step(ps, s, {});
  EXPECT_EQ(p.value, ad::Tensor::vector({1.0, -2.0, 3.0}));
  EXPECT_EQ(s.step, 5);
}

TEST(Adam, FirstStepMovesByLearningRateAgainstTheGradient) {
  ad::Parameter p("p", ad::Tensor::vector({0.0, 0.0, 0.0}));
  p.grad = ad::Tensor::vector({2.0, -0.5, 1e-3});
  std::vector<ad::Parameter*> ps{&p};
  AdamState s;
  const AdamConfig cfg;
  adam_step(ps, s, cfg);
  for (std::size_t i = 0; i < 3; ++i) {
    const double g = p.grad[i];
    EXPECT_NEAR(p.value[i], -cfg.learning_rate * g / (std::abs(g) + cfg.epsilon), 1e-15);
  }
}

TEST(Adam, ConstantGradientStepsStayNearLearningRate) {
  // With bias correction m_hat = g and v_hat = g^2 for a constant gradient.
  ad::Parameter p("p", ad::Tensor::vector({5.0}));
  std::vector<ad::Parameter*> ps{&p};
  AdamState s;
  const AdamConfig cfg{0.01};
  for (int i = 1; i <= 50; ++i) {
    p.grad = ad::Tensor::vector({3.0});
    const double before = p.value[0];
    adam_step(ps, s, cfg);
    EXPECT_NEAR(before - p.value[0], 0.01, 1e-9) << i;
  }
}

TEST(Adam, MinimisesAQuadratic) {
  ad::Parameter p("p", ad::Tensor::vector({4.0, -3.0}));
  std::vector<ad::Parameter*> ps{&p};
  AdamState s;
  for (int i = 0; i < 3000; ++i) {
    ad::Graph g;
    p.zero_grad();
    g.backward(g.sum(g.square(g.add_scalar(g.param(p), -1.0))));
    adam_step(ps, s, {0.05});
  }
  EXPECT_NEAR(p.value[0], 1.0, 1e-3);
  EXPECT_NEAR(p.value[1], 1.0, 1e-3);
}

TEST(Adam, NonFiniteGradientThrows) {
  ad::Parameter p("weights", ad::Tensor::vector({0.0}));
  p.grad = ad::Tensor::vector({std::numeric_limits<double>::quiet_NaN()});
  std::vector<ad::Parameter*> ps{&p};
  AdamState s;
  try {
    adam_step(ps, s, {});
    FAIL();
  } catch (const TrainingError& e) {
    EXPECT_NE(std::string(e.what()).find("weights"), std::string::npos);
  }
}

TEST(Train, OverfitsASingleSample) {
  const Dataset one = small_set(1, 3);
  TrainConfig cfg;
  cfg.loss = LossKind::Mse;
  cfg.epochs = 600;
  cfg.adam.learning_rate = 3e-3;
  const TrainResult r = train(tiny(), one, one, cfg);
  EXPECT_LT(r.history.best().val_mae.overall, 0.5);
}

TEST(Train, DeterministicUnderSeed) {
  const Dataset tr = small_set(200, 1), va = small_set(50, 2);
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.seed = 17;
  const TrainResult a = train(tiny(), tr, va, cfg), b = train(tiny(), tr, va, cfg);
  ASSERT_EQ(a.history.epochs.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(a.history.epochs[i].val_loss, b.history.epochs[i].val_loss);
  for (std::size_t i = 0; i < a.params.tensors.size(); ++i) EXPECT_EQ(a.params.tensors[i].value, b.params.tensors[i].value);
  cfg.seed = 18;
  EXPECT_NE(train(tiny(), tr, va, cfg).history.epochs[0].val_loss, a.history.epochs[0].val_loss);
}

TEST(Train, HeadFollowsLoss) {
  const Dataset tr = small_set(40, 1);
  for (LossKind k : {LossKind::Unc, LossKind::Mse, LossKind::Comb}) {
    TrainConfig cfg;
    cfg.loss = k;
    cfg.epochs = 1;
    ModelConfig m = tiny();
    m.head = HeadKind::AnglesOnly;
    EXPECT_EQ(train(m, tr, tr, cfg).params.config.head, head_for(k));
  }
}

TEST(Train, SnapshotIsTheBestValidationEpoch) {
  const Dataset tr = small_set(300, 4), va = small_set(60, 5);
  TrainConfig cfg;
  cfg.loss = LossKind::Mse;
  cfg.epochs = 8;
  std::vector<double> seen;
  const TrainResult r = train(tiny(), tr, va, cfg, [&](const EpochRecord& e) { seen.push_back(e.val_loss); });
  ASSERT_EQ(seen.size(), 8u);
  const double best = *std::min_element(seen.begin(), seen.end());
  EXPECT_EQ(r.history.best().val_loss, best);
  EXPECT_NEAR(dataset_loss(r.params, va, LossKind::Mse), best, 1e-9 * best);
  for (std::size_t i = 0; i < seen.size(); ++i) EXPECT_EQ(r.history.epochs[i].epoch, static_cast<int>(i) + 1);
}

TEST(Train, LearnsTheSyntheticTaskWithMse) {
  const Dataset tr = small_set(2000, 6), va = small_set(300, 7);
  TrainConfig cfg;
  cfg.loss = LossKind::Mse;
  cfg.epochs = 40;
  const TrainResult r = train(ModelConfig{}, tr, va, cfg);
  EXPECT_LT(r.history.best().val_mae.overall, 6.0);
  EXPECT_LT(r.history.best().val_mae.overall, r.history.epochs.front().val_mae.overall);
}

TEST(Train, DivergenceRaisesTrainingError) {
  const Dataset tr = small_set(64, 8);
  TrainConfig cfg;
  cfg.loss = LossKind::Mse;
  cfg.epochs = 50;
  cfg.adam.learning_rate = 1e300;
  try {
    train(tiny(), tr, tr, cfg);
    FAIL() << "expected divergence";
  } catch (const TrainingError& e) {
    EXPECT_NE(std::string(e.what()).find("epoch"), std::string::npos);
  }
}

TEST(Train, RejectsBadInputs) {
  const Dataset tr = small_set(10, 9);
  Dataset unlabeled = tr;
  unlabeled[3].pose.reset();
  TrainConfig cfg;
  cfg.epochs = 1;
  EXPECT_THROW(train(tiny(), {}, tr, cfg), std::invalid_argument);
  EXPECT_THROW(train(tiny(), tr, {}, cfg), std::invalid_argument);
  EXPECT_THROW(train(tiny(), unlabeled, tr, cfg), std::invalid_argument);
  cfg.epochs = 0;
  EXPECT_THROW(train(tiny(), tr, tr, cfg), std::invalid_argument);
}
