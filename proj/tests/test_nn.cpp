#include <gtest/gtest.h>

#include <cmath>

#include "liodom/errors.hpp"
#include "liodom/nn/adam.hpp"
#include "liodom/nn/checkpoint.hpp"
#include "liodom/nn/encoder.hpp"
#include "liodom/nn/gradcheck.hpp"
#include "liodom/nn/heads.hpp"
#include "liodom/nn/lstm.hpp"

using namespace liodom;
using namespace liodom::nn;

namespace {

double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

TEST(GatedAttention, ZeroParametersGiveZero) {
  GatedAttention a(5, 4);
  zero_all([&] {
    ParamList p;
    a.collect("", p);
    return p;
  }());
  GatedAttention::Cache c;
  const Vector y = a.forward(Vector::Random(5), c);
  EXPECT_EQ(y, Vector::Zero(4));
}

TEST(GatedAttention, SaturatedGatesGiveTanhOne) {
  GatedAttention a(1, 1);
  ParamList p;
  a.collect("", p);
  zero_all(p);
  a.input_gate.bias[0] = 20.0;
  a.output_gate.bias[0] = 20.0;
  a.candidate.bias[0] = 20.0;  // tanh(20) = 1 to double precision
  GatedAttention::Cache c;
  const double y = a.forward(Vector::Constant(1, 0.3), c)[0];
  EXPECT_NEAR(y, std::tanh(1.0), 1e-8);
  EXPECT_NEAR(y, 0.7616, 1e-4);
  EXPECT_DOUBLE_EQ(y, sig(20) * std::tanh(sig(20) * std::tanh(20.0)));
}

TEST(FcActivation, ZeroAndNearIdentity) {
  FcActivation f(3, 3, 3);
  ParamList p;
  f.collect("", p);
  zero_all(p);
  FcActivation::Cache c;
  EXPECT_EQ(f.forward(Vector::Random(3), c), Vector::Zero(3));
  f.fc1.weight.matrix(3, 3).setIdentity();
  f.fc2.weight.matrix(3, 3).setIdentity();
  const Vector x = Vector::Constant(3, 1e-3);
  const Vector y = f.forward(x, c);
  EXPECT_LT((y - x).norm(), 1e-8);
}

TEST(Lstm, ZeroParametersGiveZeroHidden) {
  Lstm l(6, 4);
  ParamList p;
  l.collect("", p);
  zero_all(p);
  Lstm::Cache c;
  const auto out = l.forward(RowMatrix::Random(15, 6), c);
  EXPECT_EQ(out.hidden, RowMatrix::Zero(15, 4));
}

TEST(Lstm, ScalarCellByHand) {
  Lstm l(1, 1);
  // gate order i, f, g, o
  const double wi[4] = {0.5, -0.3, 0.8, 0.2}, wh[4] = {0.1, 0.4, -0.6, 0.7},
               b[4] = {0.0, 1.0, -0.1, 0.3};
  for (int k = 0; k < 4; ++k) {
    l.w_ih[k] = wi[k];
    l.w_hh[k] = wh[k];
    l.bias[k] = b[k];
  }
  const double x = 0.9, h0 = 0.2, c0 = -0.4;
  const double i = sig(wi[0] * x + wh[0] * h0 + b[0]);
  const double f = sig(wi[1] * x + wh[1] * h0 + b[1]);
  const double g = std::tanh(wi[2] * x + wh[2] * h0 + b[2]);
  const double o = sig(wi[3] * x + wh[3] * h0 + b[3]);
  const double c1 = f * c0 + i * g;
  const double h1 = o * std::tanh(c1);
  Lstm::Cache cache;
  const Vector hv = Vector::Constant(1, h0), cv = Vector::Constant(1, c0);
  const auto out = l.forward(RowMatrix::Constant(1, 1, x), cache, &hv, &cv);
  EXPECT_NEAR(out.final_hidden[0], h1, 1e-15);
  EXPECT_NEAR(out.final_cell[0], c1, 1e-15);
}

TEST(Encoder, ZeroInputAndShapes) {
  EncoderConfig cfg;
  cfg.feature_width = 32;
  ResNetEncoder enc(cfg);
  Rng rng(1);
  enc.init(rng);
  ResNetEncoder::Cache c;
  const Vector z = enc.forward(Tensor({6, 8, 16}), false, c);
  EXPECT_EQ(z.size(), 32);
  EXPECT_LT(z.norm(), 1e-15);
  for (const auto [h, w] : {std::pair{4, 4}, {8, 32}, {13, 7}}) {
    Tensor x({6, h, w});
    for (std::size_t k = 0; k < x.size(); ++k) x[k] = std::sin(0.1 * k);
    EXPECT_EQ(enc.forward(x, false, c).size(), 32);
  }
  EXPECT_THROW(enc.forward(Tensor({6, 3, 16}), false, c), ShapeError);
  EXPECT_THROW(enc.forward(Tensor({5, 8, 16}), false, c), ShapeError);
}

TEST(PoseHead, UntrainedHeadEmitsZero) {
  for (const auto type : {HeadType::Attention, HeadType::FcActivation}) {
    PoseHead head(type, 10, 16, 3);
    Rng rng(2);
    head.init(rng);
    PoseHead::Cache c;
    EXPECT_EQ(head.forward(Vector::Random(10), c), Vector::Zero(3));
  }
}

TEST(Adam, ScheduleAndDefaults) {
  const AdamConfig cfg;
  EXPECT_EQ(cfg.learning_rate, 1e-4);
  EXPECT_EQ(cfg.beta1, 0.9);
  EXPECT_EQ(cfg.beta2, 0.99);
  EXPECT_EQ(cfg.weight_decay, 1e-5);
  EXPECT_DOUBLE_EQ(scheduled_learning_rate(cfg, 0), 1e-4);
  EXPECT_DOUBLE_EQ(scheduled_learning_rate(cfg, 19), 1e-4);
  EXPECT_DOUBLE_EQ(scheduled_learning_rate(cfg, 20), 5e-5);
  EXPECT_DOUBLE_EQ(scheduled_learning_rate(cfg, 40), 2.5e-5);
}

TEST(Adam, ZeroGradientOnlyDecays) {
  Tensor w({3}, std::vector<double>{1.0, -2.0, 0.5}), g({3});
  Tensor buf({1}, 7.0), gbuf({1}, 100.0);
  Adam opt;
  opt.step({{"w", &w, true}, {"buf", &buf, false}}, {{"w", &g, true}, {"buf", &gbuf, false}});
  const double keep = 1.0 - 1e-4 * 1e-5;
  EXPECT_DOUBLE_EQ(w[0], 1.0 * keep);
  EXPECT_DOUBLE_EQ(w[1], -2.0 * keep);
  EXPECT_EQ(buf[0], 7.0);
}

TEST(Adam, FirstStepOracleAndDescent) {
  // after one step m_hat = g and v_hat = g^2
  AdamConfig cfg;
  cfg.weight_decay = 0.0;
  Tensor w({1}, 1.0), g({1});
  Adam opt(cfg);
  g[0] = 2.0 * w[0];  // f(w) = w^2
  opt.step({{"w", &w, true}}, {{"w", &g, true}});
  EXPECT_NEAR(w[0], 1.0 - 1e-4 * 2.0 / (2.0 + 1e-8), 1e-15);
  for (int i = 0; i < 10; ++i) {
    const double before = w[0];
    g[0] = 2.0 * w[0];
    opt.step({{"w", &w, true}}, {{"w", &g, true}});
    EXPECT_LT(w[0], before);
  }
  EXPECT_EQ(opt.steps(), 11);
}

TEST(Adam, CoupledDecayFoldsIntoGradient) {
  AdamConfig cfg;
  cfg.decoupled_weight_decay = false;
  cfg.weight_decay = 0.1;
  Tensor w({1}, 3.0), g({1});
  Adam opt(cfg);
  opt.step({{"w", &w, true}}, {{"w", &g, true}});
  // gradient 0.3, normalized step of one learning rate
  EXPECT_NEAR(w[0], 3.0 - 1e-4 * 0.3 / (0.3 + 1e-8), 1e-15);
}

class GradientSuite : public ::testing::TestWithParam<std::string> {};

TEST_P(GradientSuite, FiniteDifferencesAgree) {
  for (const auto& s : gradient_suites()) {
    if (s.name != GetParam()) continue;
    const auto r = run_suite(s, 3, 100);
    EXPECT_LT(r.max_relative_error, 1e-4);
    EXPECT_GT(r.coordinates, 0u);
    return;
  }
  FAIL() << "no suite " << GetParam();
}

INSTANTIATE_TEST_SUITE_P(Modules, GradientSuite,
                         ::testing::Values("fc", "lstm", "conv", "channel_norm", "residual_block",
                                           "encoder", "attention", "fc_activation", "pose_head",
                                           "pose_compose", "loss"),
                         [](const ::testing::TestParamInfo<std::string>& info) { return info.param; });

TEST(GradCheck, DetectsWrongGradient) {
  Tensor x({4}, std::vector<double>{0.1, -0.2, 0.3, 0.4}), dx({4});
  for (int k = 0; k < 4; ++k) dx[k] = 2.0 * x[k];
  Rng rng(1);
  auto f = [&] { return x.flat().squaredNorm(); };
  EXPECT_LT(compare_gradients(f, {{"x", &x, true}}, {{"x", &dx, true}}, rng, {}), 1e-8);
  dx[2] *= 1.01;
  EXPECT_GT(compare_gradients(f, {{"x", &x, true}}, {{"x", &dx, true}}, rng, {}), 1e-4);
}
