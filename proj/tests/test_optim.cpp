#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "mmf/optim.hpp"
#include "mmf/rng.hpp"

using namespace mmf;

TEST(Adam, ZeroGradientIsNoOpOnValues) {
  Parameter p("p", Tensor::vector({1.0, -2.0, 0.5}));
  Adam adam({&p});
  for (int i = 0; i < 5; ++i) adam.step();
  EXPECT_EQ(adam.step_count(), 5);
  EXPECT_EQ(p.value[0], 1.0);
  EXPECT_EQ(p.value[1], -2.0);
  EXPECT_EQ(p.value[2], 0.5);
}

TEST(Adam, SingleStepHandValue) {
  // t=1, g=1: m̂ = 1, v̂ = 1, so Δ = −α/(√1 + ε).
  Parameter p("p", Tensor::vector({0.0}));
  p.grad[0] = 1.0;
  Adam adam({&p}, AdamConfig{0.1, 0.9, 0.999, 1e-8});
  adam.step();
  EXPECT_NEAR(p.value[0], -0.1 / (1.0 + 1e-8), 1e-9);
}

TEST(Adam, TrajectoryMatchesScalarRecurrenceOracle) {
  // Independent reimplementation of the update recurrence on scalars.
  Parameter p("p", Tensor::vector({0.7}));
  const AdamConfig cfg{0.05, 0.9, 0.999, 1e-8};
  Adam adam({&p}, cfg);
  double x = 0.7, m = 0.0, v = 0.0;
  Rng rng(3);
  for (int t = 1; t <= 200; ++t) {
    const double g = rng.gaussian();
    p.grad[0] = g;
    adam.step();
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * g * g;
    const double mhat = m / (1.0 - std::pow(cfg.beta1, t));
    const double vhat = v / (1.0 - std::pow(cfg.beta2, t));
    x -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    ASSERT_NEAR(p.value[0], x, 1e-9) << "step " << t;
  }
}

TEST(Adam, ConstantGradientStepApproachesLearningRate) {
  Parameter p("p", Tensor::vector({0.0}));
  const double lr = 0.1;
  Adam adam({&p}, AdamConfig{lr, 0.9, 0.999, 1e-8});
  double prev = 0.0;
  double last_delta = 0.0;
  for (int t = 1; t <= 2000; ++t) {
    p.grad[0] = 1.0;
    adam.step();
    last_delta = p.value[0] - prev;
    prev = p.value[0];
  }
  EXPECT_NEAR(std::fabs(last_delta), lr, 1e-9);
  EXPECT_LT(last_delta, 0.0);  // moves against the gradient
}

TEST(Adam, SecondMomentStaysNonNegative) {
  Parameter p("p", Tensor::vector({0.0, 0.0}));
  Adam adam({&p});
  Rng rng(5);
  for (int t = 0; t < 100; ++t) {
    p.grad[0] = rng.gaussian();
    p.grad[1] = rng.gaussian();
    adam.step();
    EXPECT_GE(adam.second_moment(0)[0], 0.0);
    EXPECT_GE(adam.second_moment(0)[1], 0.0);
  }
}

TEST(Adam, NonFiniteGradientNamesParameter) {
  Parameter p("encoder.w1", Tensor::vector({0.0}));
  p.grad[0] = std::numeric_limits<double>::infinity();
  Adam adam({&p});
  try {
    adam.step();
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("encoder.w1"), std::string::npos);
  }
}
