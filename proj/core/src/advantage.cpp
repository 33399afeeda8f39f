#include "grouprl/advantage.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "grouprl/types.hpp"

namespace grouprl {

std::string_view to_string(Estimator estimator) {
  switch (estimator) {
    case Estimator::grpo:
      return "grpo";
    case Estimator::gpg:
      return "gpg";
    case Estimator::aapo:
      return "aapo";
  }
  return "unknown";
}

Estimator parse_estimator(std::string_view name) {
  if (name == "grpo") return Estimator::grpo;
  if (name == "gpg") return Estimator::gpg;
  if (name == "aapo") return Estimator::aapo;
  throw ConfigError("unknown estimator '" + std::string(name) + "'");
}

std::string_view to_string(NormKind norm) { return norm == NormKind::one ? "one" : "std"; }

NormKind parse_norm_kind(std::string_view name) {
  if (name == "one" || name == "1") return NormKind::one;
  if (name == "std") return NormKind::std;
  throw ConfigError("unknown f_norm '" + std::string(name) + "'");
}

void AdvantageConfig::validate() const {
  if (!(delta_low <= 0.0 && 0.0 <= delta_high)) {
    throw ConfigError("advantage requires delta_low <= 0 <= delta_high", "advantage.delta_low");
  }
  if (!(sigma_floor > 0.0)) {
    throw ConfigError("advantage.sigma_floor must be positive", "advantage.sigma_floor");
  }
  if (!(zero_tol >= 0.0)) {
    throw ConfigError("advantage.zero_tol must be non-negative", "advantage.zero_tol");
  }
}

double clip(double x, double lo, double hi) { return std::min(std::max(x, lo), hi); }

// Shifted by the first element: a group of identical values yields exactly
// that value, so uniform rewards give advantages of exactly zero rather than
// rounding residue of order 1e-17 / sigma_floor.
double population_mean(std::span<const double> xs) {
  const double shift = xs.empty() ? 0.0 : xs.front();
  double sum = 0.0;
  for (double x : xs) sum += x - shift;
  return shift + sum / static_cast<double>(xs.size());
}

double population_std(std::span<const double> xs) {
  const double mean = population_mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(xs.size()));
}

namespace {

void require_group(std::span<const double> rewards) {
  if (rewards.size() < 2) {
    throw std::invalid_argument("advantage: group size must be >= 2, got " +
                                std::to_string(rewards.size()));
  }
}

bool all_within(const std::vector<double>& values, double tol) {
  return std::all_of(values.begin(), values.end(),
                     [tol](double v) { return std::abs(v) <= tol; });
}

AdvantageVector centered(std::span<const double> rewards, double scale,
                         const AdvantageConfig& cfg) {
  const double mean = population_mean(rewards);
  AdvantageVector out;
  out.values.reserve(rewards.size());
  for (double r : rewards) out.values.push_back((r - mean) / scale);
  out.margin_raw.assign(rewards.size(), 0.0);
  out.clip_active.assign(rewards.size(), false);
  out.group_all_zero = all_within(out.values, cfg.zero_tol);
  return out;
}

}  // namespace

AdvantageVector grpo_advantage(std::span<const double> rewards, const AdvantageConfig& cfg) {
  require_group(rewards);
  return centered(rewards, std::max(population_std(rewards), cfg.sigma_floor), cfg);
}

AdvantageVector gpg_advantage(std::span<const double> rewards, const AdvantageConfig& cfg) {
  require_group(rewards);
  const double scale = cfg.f_norm == NormKind::one
                           ? 1.0
                           : std::max(population_std(rewards), cfg.sigma_floor);
  return centered(rewards, scale, cfg);
}

AdvantageVector aapo_advantage(std::span<const double> policy_rewards,
                               std::span<const double> reference_rewards,
                               const AdvantageConfig& cfg) {
  if (policy_rewards.size() != reference_rewards.size()) {
    throw std::invalid_argument("aapo_advantage: policy group has " +
                                std::to_string(policy_rewards.size()) +
                                " rewards, reference group has " +
                                std::to_string(reference_rewards.size()));
  }
  AdvantageVector out = grpo_advantage(policy_rewards, cfg);
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    const double margin = policy_rewards[i] - reference_rewards[i];
    out.margin_raw[i] = margin;
    if (cfg.clip_margin) {
      out.values[i] += clip(margin, cfg.delta_low, cfg.delta_high);
      out.clip_active[i] = margin < cfg.delta_low || margin > cfg.delta_high;
    } else {
      out.values[i] += margin;
    }
  }
  out.group_all_zero = all_within(out.values, cfg.zero_tol);
  return out;
}

AdvantageVector compute_advantage(std::span<const double> policy_rewards,
                                  std::span<const double> reference_rewards,
                                  const AdvantageConfig& cfg) {
  switch (cfg.estimator) {
    case Estimator::grpo:
      return grpo_advantage(policy_rewards, cfg);
    case Estimator::gpg:
      return gpg_advantage(policy_rewards, cfg);
    case Estimator::aapo:
      return aapo_advantage(policy_rewards, reference_rewards, cfg);
  }
  throw std::logic_error("compute_advantage: unhandled estimator");
}

ZeroAdvantageStats zero_advantage_stats(std::span<const AdvantageVector> batch,
                                        const AdvantageConfig& cfg) {
  if (batch.empty()) throw std::invalid_argument("zero_advantage_stats: empty batch");
  std::size_t responses = 0;
  std::size_t zero_responses = 0;
  std::size_t zero_groups = 0;
  for (const AdvantageVector& group : batch) {
    responses += group.values.size();
    for (double v : group.values) {
      if (std::abs(v) <= cfg.zero_tol) ++zero_responses;
    }
    if (group.group_all_zero) ++zero_groups;
  }
  ZeroAdvantageStats stats;
  stats.zero_response_fraction =
      responses == 0 ? 0.0 : static_cast<double>(zero_responses) / static_cast<double>(responses);
  stats.all_zero_group_fraction =
      static_cast<double>(zero_groups) / static_cast<double>(batch.size());
  return stats;
}

double advantage_bound(const AdvantageConfig& cfg, double r_min, double r_max) {
  if (r_min > r_max) throw std::invalid_argument("advantage_bound: r_min > r_max");
  const double range = r_max - r_min;
  const double scale =
      (cfg.estimator == Estimator::gpg && cfg.f_norm == NormKind::one) ? 1.0 : cfg.sigma_floor;
  double bound = range / scale;
  if (cfg.estimator == Estimator::aapo) {
    bound += cfg.clip_margin ? std::max(std::abs(cfg.delta_low), std::abs(cfg.delta_high))
                             : range;
  }
  return bound;
}

}  // namespace grouprl
