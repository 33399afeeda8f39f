#include "grouprl/reward.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace grouprl {

std::string_view to_string(RewardKind kind) {
  switch (kind) {
    case RewardKind::format:
      return "format";
    case RewardKind::accuracy:
      return "accuracy";
    case RewardKind::cosine_scaled_accuracy:
      return "cosine_scaled_accuracy";
  }
  return "unknown";
}

RewardKind parse_reward_kind(std::string_view name) {
  if (name == "format") return RewardKind::format;
  if (name == "accuracy") return RewardKind::accuracy;
  if (name == "cosine_scaled_accuracy" || name == "cosine") {
    return RewardKind::cosine_scaled_accuracy;
  }
  throw ConfigError("unknown reward rule '" + std::string(name) + "'");
}

void CosineSchedule::validate() const {
  if (!(correct_min <= correct_max)) {
    throw ConfigError("cosine reward requires correct_min <= correct_max");
  }
  if (!(wrong_min <= wrong_max)) {
    throw ConfigError("cosine reward requires wrong_min <= wrong_max");
  }
  if (max_length < 1) throw ConfigError("cosine reward requires max_length >= 1");
  for (double v : {correct_max, correct_min, wrong_max, wrong_min}) {
    if (!std::isfinite(v)) throw ConfigError("cosine reward parameters must be finite");
  }
}

void RewardRule::validate() const {
  if (!std::isfinite(weight)) throw ConfigError("reward weight must be finite");
  if (kind == RewardKind::cosine_scaled_accuracy) cosine.validate();
}

double RewardRule::min_score() const {
  if (kind == RewardKind::cosine_scaled_accuracy) {
    return std::min(cosine.correct_min, cosine.wrong_min);
  }
  return 0.0;
}

double RewardRule::max_score() const {
  if (kind == RewardKind::cosine_scaled_accuracy) {
    return std::max(cosine.correct_max, cosine.wrong_max);
  }
  return 1.0;
}

int format_reward(std::span<const Token> response, std::span<const Token> delimiter) {
  if (delimiter.empty()) throw std::invalid_argument("format_reward: empty delimiter");
  auto it = std::search(response.begin(), response.end(), delimiter.begin(), delimiter.end());
  return it != response.end() ? 1 : 0;
}

int accuracy_reward(std::span<const Token> response, Token ground_truth,
                    const AnswerExtractor& extractor) {
  const std::optional<Token> answer = extractor(response);
  return (answer && *answer == ground_truth) ? 1 : 0;
}

double cosine_scaled_reward(bool correct, int length, const CosineSchedule& schedule) {
  if (length < 0 || length > schedule.max_length) {
    throw std::domain_error("cosine_scaled_reward: length " + std::to_string(length) +
                            " outside [0, " + std::to_string(schedule.max_length) + "]");
  }
  // End points are returned directly so they hold exactly; in between,
  // w = (1 + cos(pi l / L)) / 2 falls from 1 to 0 and the clamp keeps
  // rounding from stepping outside [min, max].
  if (correct) {
    if (length == 0) return schedule.correct_max;
    if (length == schedule.max_length) return schedule.correct_min;
  } else {
    if (length == 0) return schedule.wrong_min;
    if (length == schedule.max_length) return schedule.wrong_max;
  }
  const double w =
      0.5 * (1.0 + std::cos(std::numbers::pi * static_cast<double>(length) / schedule.max_length));
  if (correct) {
    const double r = schedule.correct_min + (schedule.correct_max - schedule.correct_min) * w;
    return std::clamp(r, schedule.correct_min, schedule.correct_max);
  }
  const double r = schedule.wrong_max - (schedule.wrong_max - schedule.wrong_min) * w;
  return std::clamp(r, schedule.wrong_min, schedule.wrong_max);
}

double weighted_reward(std::span<const double> scores, std::span<const double> weights) {
  if (scores.size() != weights.size()) {
    throw ConfigError("weighted_reward: " + std::to_string(scores.size()) + " scores but " +
                          std::to_string(weights.size()) + " weights",
                      "reward.weights");
  }
  double total = 0.0;
  for (std::size_t k = 0; k < scores.size(); ++k) total += weights[k] * scores[k];
  return total;
}

RewardBreakdown score_response(std::span<const RewardRule> rules,
                               std::span<const Token> response, Token ground_truth,
                               const AnswerExtractor& extractor,
                               std::span<const Token> delimiter) {
  RewardBreakdown out;
  out.per_rule.reserve(rules.size());
  std::vector<double> scores;
  std::vector<double> weights;
  scores.reserve(rules.size());
  weights.reserve(rules.size());
  std::optional<bool> correct;
  for (const RewardRule& rule : rules) {
    double raw = 0.0;
    switch (rule.kind) {
      case RewardKind::format:
        raw = format_reward(response, delimiter);
        break;
      case RewardKind::accuracy:
        if (!correct) correct = accuracy_reward(response, ground_truth, extractor) == 1;
        raw = *correct ? 1.0 : 0.0;
        break;
      case RewardKind::cosine_scaled_accuracy: {
        if (!correct) correct = accuracy_reward(response, ground_truth, extractor) == 1;
        const int length =
            std::min(static_cast<int>(response.size()), rule.cosine.max_length);
        raw = cosine_scaled_reward(*correct, length, rule.cosine);
        break;
      }
    }
    out.per_rule.push_back({rule.kind, raw});
    scores.push_back(raw);
    weights.push_back(rule.weight);
  }
  out.weighted = weighted_reward(scores, weights);
  return out;
}

std::pair<double, double> weighted_reward_range(std::span<const RewardRule> rules) {
  double lo = 0.0;
  double hi = 0.0;
  for (const RewardRule& rule : rules) {
    const double a = rule.weight * rule.min_score();
    const double b = rule.weight * rule.max_score();
    lo += std::min(a, b);
    hi += std::max(a, b);
  }
  return {lo, hi};
}

}  // namespace grouprl
