#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "grouprl/types.hpp"

namespace grouprl {

enum class RewardKind { format, accuracy, cosine_scaled_accuracy };

std::string_view to_string(RewardKind kind);
RewardKind parse_reward_kind(std::string_view name);

// Length-annealed correctness reward. Correct answers decay from correct_max
// (l = 0) to correct_min (l = max_length); wrong answers rise from wrong_min
// to wrong_max over the same range.
struct CosineSchedule {
  double correct_max = 1.0;
  double correct_min = 0.5;
  double wrong_max = 0.0;
  double wrong_min = -0.5;
  int max_length = 16;

  void validate() const;
  bool operator==(const CosineSchedule&) const = default;
};

struct RewardRule {
  RewardKind kind = RewardKind::accuracy;
  double weight = 1.0;
  CosineSchedule cosine;

  void validate() const;
  double min_score() const;
  double max_score() const;
  bool operator==(const RewardRule&) const = default;
};

struct RuleScore {
  RewardKind kind;
  double raw;
};

struct RewardBreakdown {
  std::vector<RuleScore> per_rule;
  double weighted = 0.0;
};

using AnswerExtractor = std::function<std::optional<Token>(std::span<const Token>)>;

// 1 iff `delimiter` occurs contiguously in `response`.
int format_reward(std::span<const Token> response, std::span<const Token> delimiter);

// 1 iff the extractor yields a value equal to ground_truth. Extraction
// failure scores 0.
int accuracy_reward(std::span<const Token> response, Token ground_truth,
                    const AnswerExtractor& extractor);

// Throws std::domain_error when length lies outside [0, schedule.max_length].
double cosine_scaled_reward(bool correct, int length, const CosineSchedule& schedule);

// Sum of weights[k] * scores[k] in index order. Throws ConfigError on a
// length mismatch.
double weighted_reward(std::span<const double> scores, std::span<const double> weights);

// Applies every rule to one response. Correctness for the cosine rule comes
// from the same extractor as the accuracy rule.
RewardBreakdown score_response(std::span<const RewardRule> rules,
                               std::span<const Token> response, Token ground_truth,
                               const AnswerExtractor& extractor,
                               std::span<const Token> delimiter);

// Range [min, max] that the weighted reward can take under these rules.
std::pair<double, double> weighted_reward_range(std::span<const RewardRule> rules);

}  // namespace grouprl
