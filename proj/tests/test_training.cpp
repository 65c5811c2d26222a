#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "attnfts/training.hpp"
#include "test_support.hpp"

namespace attnfts {
namespace {

ModelConfig small_config(Variant v, std::size_t size = 8, std::size_t lag = 6) {
  ModelConfig c;
  c.variant = v;
  c.size = size;
  c.lag = lag;
  c.seed = 3;
  return c;
}

TEST(Mse, ZeroWhenEqual) {
  const std::vector<double> y{0.1, -0.4, 0.7};
  EXPECT_EQ(mse(y, y), 0.0);
}

TEST(Mse, HandComputedValues) {
  EXPECT_DOUBLE_EQ(mse(std::vector<double>{1, 0}, std::vector<double>{0, 0}), 0.5);
  EXPECT_DOUBLE_EQ(mse(std::vector<double>{0.5}, std::vector<double>{-0.5}), 1.0);
}

TEST(Mse, RejectsMismatchedOrEmptyInput) {
  EXPECT_THROW(mse(std::vector<double>{1, 2}, std::vector<double>{1}), ArgumentError);
  EXPECT_THROW(mse(std::vector<double>{}, std::vector<double>{}), ArgumentError);
}

TEST(Adam, ZeroGradientLeavesParametersUnchanged) {
  Matrix theta{{0.3, -1.2}};
  const Matrix before = theta;
  const Matrix grad(1, 2);
  AdamState state;
  std::vector<Matrix*> p{&theta};
  std::vector<const Matrix*> g{&grad};
  adam_step(p, g, state);
  EXPECT_EQ(theta, before);
  EXPECT_EQ(state.t, 1u);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  Matrix theta{{0.0}};
  const Matrix grad{{1.0}};
  AdamState state;
  std::vector<Matrix*> p{&theta};
  std::vector<const Matrix*> g{&grad};
  adam_step(p, g, state);
  // m_hat = v_hat = 1, so the step is lr / (1 + eps).
  EXPECT_NEAR(theta[0], -0.001, 1e-11);
  const double after_one = theta[0];
  adam_step(p, g, state);
  EXPECT_LT(theta[0], after_one);
  EXPECT_EQ(state.t, 2u);
}

TEST(Adam, ShapeMismatchRejected) {
  Matrix theta(2, 2);
  const Matrix grad(2, 1);
  AdamState state;
  std::vector<Matrix*> p{&theta};
  std::vector<const Matrix*> g{&grad};
  EXPECT_THROW(adam_step(p, g, state), ShapeError);
}

TEST(Adam, BitwiseDeterministic) {
  SeededRng rng(4);
  const Matrix start = testing::random_matrix(3, 3, rng);
  const Matrix grad = testing::random_matrix(3, 3, rng);
  Matrix a = start, b = start;
  AdamState sa, sb;
  for (int i = 0; i < 5; ++i) {
    std::vector<Matrix*> pa{&a}, pb{&b};
    std::vector<const Matrix*> g{&grad};
    adam_step(pa, g, sa);
    adam_step(pb, g, sb);
  }
  EXPECT_EQ(a, b);
  EXPECT_EQ(sa.m, sb.m);
  EXPECT_EQ(sa.v, sb.v);
}

TEST(TrainEpoch, ZeroLearningRateReportsEvaluationLoss) {
  for (Variant v : {Variant::Plain, Variant::Attention}) {
    Model m = build(small_config(v));
    const Model before = m;
    SeededRng data_rng(5);
    const WindowSet data = testing::random_windows(50, 6, data_rng);
    TrainConfig cfg;
    cfg.learning_rate = 0.0;
    cfg.batch_size = 7;
    AdamState adam;
    adam.lr = 0.0;
    SeededRng rng(6);
    const double loss = train_epoch(m, data, adam, cfg, rng);
    EXPECT_EQ(m.params.tensors().size(), before.params.tensors().size());
    const auto after = std::as_const(m.params).tensors();
    const auto orig = before.params.tensors();
    for (std::size_t k = 0; k < after.size(); ++k) EXPECT_EQ(*after[k], *orig[k]);
    EXPECT_NEAR(loss, evaluate_loss(before, data), 1e-12);
  }
}

TEST(TrainEpoch, RerunWithSameSeedIsIdentical) {
  const auto run = [] {
    ModelConfig c = small_config(Variant::Attention);
    c.dropout = 0.2;
    Model m = build(c);
    SeededRng data_rng(8);
    const WindowSet data = testing::random_windows(40, 6, data_rng);
    TrainConfig cfg;
    AdamState adam;
    SeededRng rng(9);
    std::vector<double> losses;
    for (int e = 0; e < 3; ++e) losses.push_back(train_epoch(m, data, adam, cfg, rng));
    std::vector<Matrix> params;
    for (const Matrix* t : std::as_const(m.params).tensors()) params.push_back(*t);
    return std::make_pair(losses, params);
  };
  EXPECT_EQ(run(), run());
}

TEST(TrainEpoch, EmptyDataRejected) {
  Model m = build(small_config(Variant::Plain));
  AdamState adam;
  SeededRng rng(1);
  EXPECT_THROW(train_epoch(m, WindowSet{}, adam, TrainConfig{}, rng), ArgumentError);
}

TEST(TrainEpoch, MemorizesEightWindows) {
  for (Variant v : {Variant::Plain, Variant::Attention}) {
    ModelConfig c = small_config(v, 16);
    Model m = build(c);
    SeededRng data_rng(10);
    const WindowSet train = testing::random_windows(8, 6, data_rng);
    const WindowSet val = testing::random_windows(8, 6, data_rng);
    TrainConfig cfg;
    cfg.max_epochs = 200;
    cfg.batch_size = 1;
    cfg.learning_rate = 0.01;
    const LossHistory h = fit(m, train, val, cfg);
    double best = h.epochs.front().train_loss;
    for (const EpochLoss& e : h.epochs) best = std::min(best, e.train_loss);
    EXPECT_LT(best, 1e-3) << to_string(v);
    EXPECT_GE(h.epochs.back().val_loss, h.epochs.back().train_loss) << to_string(v);
  }
}

TEST(Fit, SingleEpochGivesOneEntry) {
  Model m = build(small_config(Variant::Plain));
  SeededRng rng(11);
  const WindowSet train = testing::random_windows(10, 6, rng);
  const WindowSet val = testing::random_windows(4, 6, rng);
  TrainConfig cfg;
  cfg.max_epochs = 1;
  const LossHistory h = fit(m, train, val, cfg);
  ASSERT_EQ(h.size(), 1u);
  EXPECT_EQ(h.epochs[0].epoch, 1u);
  EXPECT_GE(h.epochs[0].train_loss, 0.0);
  EXPECT_GE(h.epochs[0].val_loss, 0.0);
}

TEST(Fit, DefaultEpochCapsPerVariant) {
  SeededRng rng(12);
  const WindowSet train = testing::random_windows(4, 3, rng);
  const WindowSet val = testing::random_windows(2, 3, rng);
  Model plain = build(small_config(Variant::Plain, 2, 3));
  Model attn = build(small_config(Variant::Attention, 2, 3));
  const LossHistory hp = fit(plain, train, val, TrainConfig{});
  const LossHistory ha = fit(attn, train, val, TrainConfig{});
  EXPECT_EQ(hp.epoch_cap, 100u);
  EXPECT_EQ(hp.size(), 100u);
  EXPECT_EQ(ha.epoch_cap, 25u);
  EXPECT_EQ(ha.size(), 25u);
}

TEST(Fit, MovingAverageOfTrainLossIsNonIncreasing) {
  Model m = build(small_config(Variant::Plain, 16));
  SeededRng rng(13);
  const WindowSet train = testing::random_windows(8, 6, rng);
  const WindowSet val = testing::random_windows(8, 6, rng);
  TrainConfig cfg;
  cfg.max_epochs = 200;
  const LossHistory h = fit(m, train, val, cfg);
  const std::size_t w = 20;
  double prev = INFINITY;
  for (std::size_t start = 0; start + w <= h.size(); ++start) {
    double avg = 0.0;
    for (std::size_t i = start; i < start + w; ++i) avg += h.epochs[i].train_loss;
    avg /= static_cast<double>(w);
    EXPECT_LE(avg, prev) << "window starting at epoch " << start + 1;
    prev = avg;
  }
}

TEST(LossHistoryCsv, HeaderAndRows) {
  LossHistory h;
  h.epochs = {{1, 0.5, 0.25}, {2, 0.125, 0.1}};
  std::ostringstream out;
  write_csv(h, out);
  EXPECT_EQ(out.str(), "epoch,train_loss,val_loss\n1,0.5,0.25\n2,0.125,0.1\n");
}

TEST(ClipGlobalNorm, RescalesOnlyAboveThreshold) {
  ParameterSet g = zero_parameters(small_config(Variant::Plain, 2, 3));
  g.head_b[0] = 3.0;
  g.head_w[0] = 4.0;
  EXPECT_DOUBLE_EQ(clip_global_norm(g, 10.0), 5.0);
  EXPECT_EQ(g.head_b[0], 3.0);
  EXPECT_DOUBLE_EQ(clip_global_norm(g, 1.0), 5.0);
  EXPECT_NEAR(g.head_b[0], 0.6, 1e-15);
  EXPECT_NEAR(g.head_w[0], 0.8, 1e-15);
}

}  // namespace
}  // namespace attnfts
