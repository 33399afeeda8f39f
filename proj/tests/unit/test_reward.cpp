#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "grouprl/env.hpp"
#include "grouprl/reward.hpp"

using namespace grouprl;

namespace {

constexpr Token kThinkEnd = 14;
constexpr Token kEos = 15;

const Task& mod_sum_task() {
  static const Task task(TaskConfig{}, 16);
  return task;
}

}  // namespace

TEST(FormatReward, DetectsDelimiter) {
  const TokenSeq delim{kThinkEnd};
  EXPECT_EQ(format_reward(TokenSeq{3, kThinkEnd, 4}, delim), 1);
  EXPECT_EQ(format_reward(TokenSeq{3, 4}, delim), 0);
  EXPECT_EQ(format_reward(TokenSeq{}, delim), 0);
}

TEST(FormatReward, MultiTokenDelimiterMustBeContiguous) {
  const TokenSeq delim{1, 2};
  EXPECT_EQ(format_reward(TokenSeq{0, 1, 2, 3}, delim), 1);
  EXPECT_EQ(format_reward(TokenSeq{1, 0, 2}, delim), 0);
}

TEST(FormatReward, EmptyDelimiterIsRejected) {
  EXPECT_THROW(format_reward(TokenSeq{1}, TokenSeq{}), std::invalid_argument);
}

TEST(AccuracyReward, MatchMismatchAndExtractionFailure) {
  const AnswerExtractor extract = mod_sum_task().extractor();
  EXPECT_EQ(accuracy_reward(TokenSeq{kThinkEnd, 7, kEos}, 7, extract), 1);
  EXPECT_EQ(accuracy_reward(TokenSeq{kThinkEnd, 6, kEos}, 7, extract), 0);
  EXPECT_EQ(accuracy_reward(TokenSeq{kEos}, 7, extract), 0);
}

TEST(CosineReward, BoundaryIdentities) {
  CosineSchedule s;
  EXPECT_EQ(cosine_scaled_reward(true, 0, s), s.correct_max);
  EXPECT_EQ(cosine_scaled_reward(true, s.max_length, s), s.correct_min);
  EXPECT_EQ(cosine_scaled_reward(false, 0, s), s.wrong_min);
  EXPECT_EQ(cosine_scaled_reward(false, s.max_length, s), s.wrong_max);
}

TEST(CosineReward, WrongAtHalfLength) {
  CosineSchedule s;
  s.wrong_max = 0.0;
  s.wrong_min = -1.0;
  s.max_length = 16;
  // w = (1 + cos(pi/2)) / 2 = 1/2, so 0 - (0 - (-1)) / 2
  EXPECT_DOUBLE_EQ(cosine_scaled_reward(false, 8, s), -0.5);
}

TEST(CosineReward, MatchesClosedFormInInterior) {
  CosineSchedule s{0.9, 0.1, 0.2, -0.7, 10};
  for (int l = 0; l <= s.max_length; ++l) {
    const double c = 1.0 + std::cos(M_PI * l / s.max_length);
    EXPECT_NEAR(cosine_scaled_reward(true, l, s), s.correct_min + 0.5 * (s.correct_max - s.correct_min) * c,
                1e-15);
    EXPECT_NEAR(cosine_scaled_reward(false, l, s), s.wrong_max + 0.5 * (s.wrong_min - s.wrong_max) * c,
                1e-15);
  }
}

TEST(CosineReward, LengthOutsideScheduleIsRejected) {
  CosineSchedule s;
  EXPECT_THROW(cosine_scaled_reward(true, s.max_length + 1, s), std::domain_error);
  EXPECT_THROW(cosine_scaled_reward(false, -1, s), std::domain_error);
}

TEST(CosineReward, MonotoneAndBoundedOnRandomSchedules) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int trial = 0; trial < 200; ++trial) {
    CosineSchedule s;
    double a = u(rng), b = u(rng), c = u(rng), d = u(rng);
    s.correct_min = std::min(a, b);
    s.correct_max = std::max(a, b);
    s.wrong_min = std::min(c, d);
    s.wrong_max = std::max(c, d);
    s.max_length = 1 + static_cast<int>(rng() % 64);
    for (int l = 0; l <= s.max_length; ++l) {
      const double rc = cosine_scaled_reward(true, l, s);
      const double rw = cosine_scaled_reward(false, l, s);
      EXPECT_GE(rc, s.correct_min);
      EXPECT_LE(rc, s.correct_max);
      EXPECT_GE(rw, s.wrong_min);
      EXPECT_LE(rw, s.wrong_max);
      if (l > 0) {
        EXPECT_LE(rc, cosine_scaled_reward(true, l - 1, s));
        EXPECT_GE(rw, cosine_scaled_reward(false, l - 1, s));
      }
    }
  }
}

TEST(WeightedReward, Examples) {
  EXPECT_EQ(weighted_reward(std::vector<double>{1, 1}, std::vector<double>{1, 2}), 3.0);
  EXPECT_EQ(weighted_reward(std::vector<double>{0, 0}, std::vector<double>{5, -2}), 0.0);
  EXPECT_EQ(weighted_reward(std::vector<double>{1}, std::vector<double>{1}), 1.0);
}

TEST(WeightedReward, LengthMismatchIsConfigError) {
  EXPECT_THROW(weighted_reward(std::vector<double>{1, 2}, std::vector<double>{1}), ConfigError);
}

TEST(WeightedReward, Linearity) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> small(-4, 4);
  for (int trial = 0; trial < 100; ++trial) {
    // Small integers keep every product and sum exact.
    std::vector<double> w(4), s1(4), s2(4), mix(4);
    const double a = small(rng), b = small(rng);
    for (int k = 0; k < 4; ++k) {
      w[k] = small(rng);
      s1[k] = small(rng);
      s2[k] = small(rng);
      mix[k] = a * s1[k] + b * s2[k];
    }
    EXPECT_EQ(weighted_reward(mix, w), a * weighted_reward(s1, w) + b * weighted_reward(s2, w));
  }
}

TEST(ScoreResponse, PaperStyleRuleSetOnCorrectShortAnswer) {
  RewardRule format{RewardKind::format, 1.0, {}};
  RewardRule cosine{RewardKind::cosine_scaled_accuracy, 2.0, {}};
  const std::vector<RewardRule> rules{format, cosine};
  const TokenSeq response{kThinkEnd, 5, kEos};
  const RewardBreakdown out =
      score_response(rules, response, 5, mod_sum_task().extractor(), TokenSeq{kThinkEnd});
  ASSERT_EQ(out.per_rule.size(), 2u);
  EXPECT_EQ(out.per_rule[0].raw, 1.0);
  EXPECT_EQ(out.per_rule[1].raw, cosine_scaled_reward(true, 3, cosine.cosine));
  EXPECT_EQ(out.weighted, 1.0 * 1.0 + 2.0 * out.per_rule[1].raw);
}

TEST(ScoreResponse, BinaryRulesOnlyReturnZeroOrOne) {
  RewardRule format{RewardKind::format, 1.0, {}};
  RewardRule acc{RewardKind::accuracy, 1.0, {}};
  const std::vector<RewardRule> rules{format, acc};
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 500; ++trial) {
    TokenSeq r(rng() % 6);
    for (Token& t : r) t = static_cast<Token>(rng() % 16);
    const RewardBreakdown out =
        score_response(rules, r, static_cast<Token>(rng() % 8), mod_sum_task().extractor(), TokenSeq{kThinkEnd});
    for (const RuleScore& s : out.per_rule) EXPECT_TRUE(s.raw == 0.0 || s.raw == 1.0);
  }
}

TEST(RewardRange, CoversWeightedExtremes) {
  const auto [lo, hi] = weighted_reward_range(std::vector<RewardRule>{
      {RewardKind::format, 1.0, {}}, {RewardKind::cosine_scaled_accuracy, 2.0, {}}});
  EXPECT_DOUBLE_EQ(lo, 2.0 * -0.5);
  EXPECT_DOUBLE_EQ(hi, 1.0 + 2.0 * 1.0);
}

TEST(RewardRule, ValidationRejectsBadCosineOrdering) {
  RewardRule rule{RewardKind::cosine_scaled_accuracy, 1.0, {}};
  rule.cosine.correct_min = 2.0;
  EXPECT_THROW(rule.validate(), ConfigError);
  rule.cosine = CosineSchedule{};
  rule.cosine.max_length = 0;
  EXPECT_THROW(rule.validate(), ConfigError);
}
