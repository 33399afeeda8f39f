#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "grouprl/optimizer.hpp"

using namespace grouprl;

TEST(Schedule, ConstantAndRobbinsMonro) {
  LearningRateSchedule s;
  s.eta = 0.3;
  EXPECT_EQ(s.at(0), 0.3);
  EXPECT_EQ(s.at(999), 0.3);
  s.kind = ScheduleKind::robbins_monro;
  s.eta0 = 0.5;
  s.k0 = 10;
  EXPECT_DOUBLE_EQ(s.at(0), 0.05);
  EXPECT_DOUBLE_EQ(s.at(90), 0.005);
}

TEST(Schedule, RobbinsMonroSumsDivergeAndSquaresConverge) {
  LearningRateSchedule s;
  s.kind = ScheduleKind::robbins_monro;
  double sum = 0, sq = 0;
  for (int k = 0; k < 1000000; ++k) {
    sum += s.at(k);
    sq += s.at(k) * s.at(k);
  }
  // Partial sums: harmonic growth versus bounded tail 0.25 * sum 1/(k+10)^2.
  EXPECT_GT(sum, 5.0);
  EXPECT_LT(sq, 0.25 * (1.0 / 9.0) + 1e-12);
}

TEST(Schedule, Validation) {
  LearningRateSchedule s;
  s.eta = 0;
  EXPECT_THROW(s.validate(), ConfigError);
  s = {};
  s.kind = ScheduleKind::robbins_monro;
  s.k0 = 0;
  EXPECT_THROW(s.validate(), ConfigError);
}

TEST(Sgd, StepsAgainstGradient) {
  PolicyParams params(3, 0, 2);
  Gradient g(3);
  g.row(5)[0] = 1.0;
  g.row(5)[2] = -2.0;
  sgd_step(params, g, 0.5);
  EXPECT_EQ(std::vector<double>(params.row(5).begin(), params.row(5).end()),
            (std::vector<double>{-0.5, 0.0, 1.0}));
}

TEST(Sgd, RejectsNonFiniteGradient) {
  PolicyParams params(3, 0, 2);
  Gradient g(3);
  g.row(1)[1] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(sgd_step(params, g, 0.1), std::domain_error);
}

TEST(Adam, FirstTwoStepsMatchHandComputation) {
  PolicyParams params(2, 0, 2);
  AdamState state;
  Gradient g(2);
  g.row(9)[0] = 0.5;
  g.row(9)[1] = -0.25;
  adam_step(state, params, g, 0.1);
  // Step 1: m_hat = g, v_hat = g^2, update = eta * g / (|g| + eps).
  EXPECT_NEAR(params.row(9)[0], -0.1 * 0.5 / (0.5 + 1e-8), 1e-15);
  EXPECT_NEAR(params.row(9)[1], 0.1 * 0.25 / (0.25 + 1e-8), 1e-15);

  Gradient g2(2);
  g2.row(9)[0] = 1.0;
  const double before = params.row(9)[0];
  adam_step(state, params, g2, 0.1);
  const double m = 0.9 * 0.1 * 0.5 + 0.1 * 1.0;
  const double v = 0.999 * 0.001 * 0.25 + 0.001 * 1.0;
  const double m_hat = m / (1 - 0.81);
  const double v_hat = v / (1 - 0.998001);
  EXPECT_NEAR(params.row(9)[0], before - 0.1 * m_hat / (std::sqrt(v_hat) + 1e-8), 1e-12);
}
