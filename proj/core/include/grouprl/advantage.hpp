#pragma once

#include <span>
#include <string_view>
#include <vector>

namespace grouprl {

enum class Estimator { grpo, gpg, aapo };
enum class NormKind { one, std };

std::string_view to_string(Estimator estimator);
Estimator parse_estimator(std::string_view name);
std::string_view to_string(NormKind norm);
NormKind parse_norm_kind(std::string_view name);

struct AdvantageConfig {
  Estimator estimator = Estimator::aapo;
  NormKind f_norm = NormKind::std;  // consulted by gpg only
  double delta_low = -0.2;
  double delta_high = 0.28;
  double sigma_floor = 1e-6;
  double zero_tol = 1e-8;
  // Ablation switch: false adds the raw margin instead of the clipped one.
  bool clip_margin = true;

  void validate() const;
  bool operator==(const AdvantageConfig&) const = default;
};

// One advantage per response; every token of response i shares values[i].
struct AdvantageVector {
  std::vector<double> values;
  std::vector<double> margin_raw;  // aapo only, zeros otherwise
  std::vector<bool> clip_active;   // aapo only
  bool group_all_zero = false;

  std::size_t size() const { return values.size(); }
};

// Clamp to [lo, hi]. Monotone non-decreasing and idempotent.
double clip(double x, double lo, double hi);

// Sequential left-to-right sums (shifted by the first element); population
// (divide-by-n) deviation.
double population_mean(std::span<const double> xs);
double population_std(std::span<const double> xs);

// (r_i - mean r) / max(std r, sigma_floor). Throws std::invalid_argument when
// fewer than two rewards are given.
AdvantageVector grpo_advantage(std::span<const double> rewards, const AdvantageConfig& cfg);

// (r_i - mean r) / F, with F = 1 or max(std r, sigma_floor) per cfg.f_norm.
AdvantageVector gpg_advantage(std::span<const double> rewards, const AdvantageConfig& cfg);

// Group-relative term of the policy rewards plus clip(r_pol_i - r_ref_i,
// delta_low, delta_high). Response i of each group is paired by index.
AdvantageVector aapo_advantage(std::span<const double> policy_rewards,
                               std::span<const double> reference_rewards,
                               const AdvantageConfig& cfg);

// Dispatches on cfg.estimator; reference_rewards is ignored unless aapo.
AdvantageVector compute_advantage(std::span<const double> policy_rewards,
                                  std::span<const double> reference_rewards,
                                  const AdvantageConfig& cfg);

struct ZeroAdvantageStats {
  double zero_response_fraction = 0.0;
  double all_zero_group_fraction = 0.0;
};

ZeroAdvantageStats zero_advantage_stats(std::span<const AdvantageVector> batch,
                                        const AdvantageConfig& cfg);

// Uniform bound on |advantage| for rewards in [r_min, r_max], with
// sigma_floor standing in for the smallest group deviation:
//   B = (r_max - r_min) / sigma_floor + max(|delta_low|, |delta_high|)   (aapo)
// gpg with f_norm = one divides by 1 instead; grpo/gpg carry no margin term.
// Without margin clipping the margin term becomes r_max - r_min.
double advantage_bound(const AdvantageConfig& cfg, double r_min, double r_max);

}  // namespace grouprl
