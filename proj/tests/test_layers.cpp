#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "stylespace/toy/model.hpp"
#include "stylespace/toy/optim.hpp"
#include "support.hpp"

using namespace stylespace;
using namespace stylespace::toy;

TEST(Grl, ForwardIsIdentity) {
  const Eigen::Vector3d v(1.0, -2.0, 0.5);
  EXPECT_EQ(grl_forward(v), v);
}

TEST(Grl, BackwardNegatesAndScales) {
  const Eigen::Vector2d g(1.0, 2.0);
  EXPECT_EQ(grl_backward(g, 1.0), Eigen::Vector2d(-1.0, -2.0));
  EXPECT_EQ(grl_backward(g, 0.5), Eigen::Vector2d(-0.5, -1.0));
  EXPECT_EQ(grl_backward(g, 0.0), Eigen::Vector2d(0.0, 0.0));
}

TEST(Forward, ZeroWeightsGiveTheDecoderBias) {
  ModelDims dims{2, 3, 4, 5, 2};
  auto p = ToyModelParams::zeros(dims);
  p.decoder.output.bias = Eigen::Vector3d(0.1, -0.2, 0.3);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::VectorXd t = Eigen::VectorXd::Random(2);
    const Eigen::VectorXd w = Eigen::VectorXd::Random(4);
    const Eigen::VectorXd s = Eigen::VectorXd::Random(4);
    EXPECT_EQ(forward(p, t, w, s), p.decoder.output.bias);
  }
}

TEST(Forward, RejectsWrongShapes) {
  auto p = ToyModelParams::zeros(ModelDims{2, 3, 4, 5, 2});
  const Eigen::VectorXd t2 = Eigen::VectorXd::Zero(2), t5 = Eigen::VectorXd::Zero(5);
  const Eigen::VectorXd v3 = Eigen::VectorXd::Zero(3), v4 = Eigen::VectorXd::Zero(4);
  EXPECT_ERROR_CODE(forward(p, t2, v3, v4), ErrorCode::DimMismatch);
  EXPECT_ERROR_CODE(forward(p, t5, v4, v4), ErrorCode::DimMismatch);
}

TEST(Forward, StyleJacobianMatchesFiniteDifferences) {
  // Analytic d x_hat / d w from mlp_backward against central differences.
  ModelDims dims{3, 4, 4, 6, 2};
  std::mt19937_64 rng(303);
  const auto p = init_params(dims, rng);
  const Eigen::VectorXd t = Eigen::Map<const Eigen::VectorXd>(testkit::random_values(rng, 3).data(), 3);
  const Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(testkit::random_values(rng, 4).data(), 4);
  const Eigen::VectorXd s = Eigen::Map<const Eigen::VectorXd>(testkit::random_values(rng, 4).data(), 4);

  for (int out = 0; out < dims.feature; ++out) {
    // Backprop a one-hot output gradient through decoder -> z.
    Eigen::MatrixXd z(1, 8);
    z.leftCols(4) = mlp_forward(p.text_encoder, Eigen::MatrixXd(t.transpose())) + Eigen::MatrixXd(w.transpose());
    z.rightCols(4) = s.transpose();
    MlpTape tape;
    mlp_forward(p.decoder, z, &tape);
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(1, dims.feature);
    g(0, out) = 1.0;
    Mlp scratch = p.decoder;
    const Eigen::MatrixXd gz = mlp_backward(p.decoder, tape, g, scratch);
    for (int k = 0; k < 4; ++k) {
      const double h = 1e-6;
      Eigen::VectorXd wp = w, wm = w;
      wp(k) += h;
      wm(k) -= h;
      const double fd = (forward(p, t, wp, s)(out) - forward(p, t, wm, s)(out)) / (2 * h);
      EXPECT_NEAR(gz(0, k), fd, 1e-4);
    }
  }
}

TEST(SoftmaxCrossEntropy, UniformLogitsGiveLogK) {
  const Eigen::MatrixXd logits = Eigen::MatrixXd::Zero(3, 4);
  const auto ce = softmax_cross_entropy(logits, {0, 1, 3});
  EXPECT_NEAR(ce.loss, std::log(4.0), 1e-15);
  EXPECT_NEAR(ce.grad_logits(0, 0), (0.25 - 1.0) / 3.0, 1e-15);
  EXPECT_NEAR(ce.grad_logits(0, 1), 0.25 / 3.0, 1e-15);
}

TEST(SoftmaxCrossEntropy, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(305);
  Eigen::MatrixXd logits(2, 3);
  for (Eigen::Index i = 0; i < logits.size(); ++i) logits.data()[i] = testkit::random_real(rng, -3, 3);
  const std::vector<int> y{2, 0};
  const auto ce = softmax_cross_entropy(logits, y);
  for (Eigen::Index i = 0; i < logits.size(); ++i) {
    Eigen::MatrixXd lp = logits, lm = logits;
    lp.data()[i] += 1e-6;
    lm.data()[i] -= 1e-6;
    const double fd = (softmax_cross_entropy(lp, y).loss - softmax_cross_entropy(lm, y).loss) / 2e-6;
    EXPECT_NEAR(ce.grad_logits.data()[i], fd, 1e-8);
  }
  EXPECT_ERROR_CODE(softmax_cross_entropy(logits, {0, 3}), ErrorCode::DimMismatch);
  EXPECT_ERROR_CODE(softmax_cross_entropy(logits, {0}), ErrorCode::DimMismatch);
}

TEST(SoftmaxCrossEntropy, StableForHugeLogits) {
  Eigen::MatrixXd logits(1, 2);
  logits << 1000.0, 0.0;
  EXPECT_NEAR(softmax_cross_entropy(logits, {0}).loss, 0.0, 1e-12);
  EXPECT_NEAR(softmax_cross_entropy(logits, {1}).loss, 1000.0, 1e-9);
}

TEST(Dropout, MaskScaleAndRate) {
  std::mt19937_64 rng(307);
  const auto m = dropout_mask(rng, 200, 50, 0.1);
  int zeros = 0;
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    const double v = m.data()[i];
    if (v == 0.0) ++zeros;
    else EXPECT_NEAR(v, 1.0 / 0.9, 1e-15);
  }
  // 10000 Bernoulli(0.1) draws: sd 30.
  EXPECT_NEAR(zeros, 1000, 150);
  EXPECT_EQ(dropout_mask(rng, 3, 3, 0.0).size(), 0);
}

TEST(NoamSchedule, PeaksAtWarmup) {
  EXPECT_NEAR(noam_lr(1e-3, 400, 400), 1e-3, 1e-12);
  EXPECT_NEAR(noam_lr(2.0, 50, 50), 2.0, 1e-12);
  // Linear rise then inverse-sqrt decay.
  EXPECT_NEAR(noam_lr(1e-3, 100, 400), 0.25e-3, 1e-12);
  EXPECT_NEAR(noam_lr(1e-3, 1600, 400), 0.5e-3, 1e-12);
  for (long s = 1; s < 2000; ++s) {
    if (s < 400) EXPECT_LT(noam_lr(1e-3, s, 400), noam_lr(1e-3, s + 1, 400));
    else EXPECT_GT(noam_lr(1e-3, s, 400), noam_lr(1e-3, s + 1, 400));
  }
}

TEST(Adam, FirstStepMovesEachWeightByTheLearningRate) {
  ModelDims dims{1, 1, 1, 1, 2};
  auto p = ToyModelParams::zeros(dims);
  auto g = ToyModelParams::zeros(dims);
  g.decoder.output.bias(0) = 3.0;
  g.style_encoder.hidden.weight(0, 0) = -0.01;
  Adam adam(dims);
  adam.step(p, g, 0.1);
  // Bias-corrected first step is lr * sign(g) up to eps.
  EXPECT_NEAR(p.decoder.output.bias(0), -0.1, 1e-9);
  EXPECT_NEAR(p.style_encoder.hidden.weight(0, 0), 0.1, 1e-6);
  EXPECT_EQ(p.adversary.output.bias(0), 0.0);
  EXPECT_EQ(adam.steps(), 1);
}

TEST(InitParams, BiasesZeroWeightsScaled) {
  std::mt19937_64 rng(309);
  const ModelDims dims{4, 32, 32, 64, 4};
  auto p = init_params(dims, rng);
  zip_tensors(
      [&](const std::string& name, auto& t) {
        if (t.cols() == 1) {
          EXPECT_EQ(t.norm(), 0.0) << name;
        } else {
          const double var = t.squaredNorm() / static_cast<double>(t.size());
          EXPECT_NEAR(var * static_cast<double>(t.cols()), 1.0, 0.5) << name;
        }
      },
      p);
}
