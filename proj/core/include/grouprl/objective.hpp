#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "grouprl/advantage.hpp"
#include "grouprl/policy.hpp"

namespace grouprl {

enum class Algorithm { grpo, gpg, aapo };
enum class Normalization { per_response_mean, global_token_mean };

std::string_view to_string(Algorithm algorithm);
Algorithm parse_algorithm(std::string_view name);
std::string_view to_string(Normalization norm);
Normalization parse_normalization(std::string_view name);

// grpo normalizes per response then over the group; gpg and aapo divide by
// the group's total token count.
Normalization default_normalization(Algorithm algorithm);

struct ObjectiveConfig {
  Algorithm algorithm = Algorithm::aapo;
  double epsilon = 0.2;  // ratio clip, grpo only
  double beta = 0.0;     // k3 KL coefficient, grpo only
  std::optional<Normalization> normalization;
  // Set when a sampled batch feeds more than one update; grpo then requires
  // the logprobs stored at sampling time.
  bool multi_epoch = false;

  Normalization resolved_normalization() const {
    return normalization.value_or(default_normalization(algorithm));
  }
  void validate() const;
  bool operator==(const ObjectiveConfig&) const = default;
};

// Batch losses are the mean over groups of each group's loss; gradients
// treat advantages as constants.
struct LossReport {
  double loss = 0.0;
  Gradient grad;
  // Contribution of each response to `loss`, flattened in group order.
  std::vector<double> per_response_contrib;
  double kl_value = 0.0;  // mean per-token k3, grpo with beta > 0
};

// Advantage-weighted negative log-likelihood (the cross-entropy objective
// shared by gpg and aapo):
//   L_G = (1 / sum_i |o_i|) sum_i sum_t -log pi(o_it) * A_i
LossReport weighted_nll_loss(std::span<const ResponseGroup> groups,
                             std::span<const AdvantageVector> advantages,
                             const PolicyParams& params,
                             Normalization norm = Normalization::global_token_mean);

LossReport aapo_loss(std::span<const ResponseGroup> groups,
                     std::span<const AdvantageVector> advantages, const PolicyParams& params);
LossReport gpg_loss(std::span<const ResponseGroup> groups,
                    std::span<const AdvantageVector> advantages, const PolicyParams& params);

// One token of the clipped surrogate: value = -min(r A, clip(r, 1-eps, 1+eps) A)
// and d value / d log pi, which is -r A on the unclipped branch and 0 when
// the clipped branch is selected.
struct SurrogateTerm {
  double value;
  double dlogp;
  bool clipped;
};
SurrogateTerm clipped_surrogate(double ratio, double advantage, double epsilon);

// k3 estimator rho - log rho - 1 with rho = pi_ref / pi_theta, from
// log rho = logp_ref - logp_theta. d k3 / d logp_theta = 1 - rho.
double k3(double log_rho);

// Per-token k3 along a response.
std::vector<double> kl_penalty(const PolicyParams& params, const PolicyParams& ref_params,
                               const TokenSeq& prompt, std::span<const Token> response);

// Clipped-surrogate objective with optional additive per-token k3 penalty.
// The likelihood ratio uses the group's stored sampling logprobs; groups
// without stored logprobs use ratio 1 (current logprobs as constants), which
// is rejected when cfg.multi_epoch is set. ref_params is required iff beta > 0.
LossReport grpo_loss(std::span<const ResponseGroup> groups,
                     std::span<const AdvantageVector> advantages, const PolicyParams& params,
                     const PolicyParams* ref_params, const ObjectiveConfig& cfg);

// Dispatches on cfg.algorithm.
LossReport compute_loss(std::span<const ResponseGroup> groups,
                        std::span<const AdvantageVector> advantages, const PolicyParams& params,
                        const PolicyParams* ref_params, const ObjectiveConfig& cfg);

// delta_high times the mean token negative log-likelihood, reduced the same
// way as aapo_loss. When every group has uniform rewards, aapo_loss cannot
// exceed this.
double clipped_margin_loss_bound(std::span<const ResponseGroup> groups,
                                 const PolicyParams& params, double delta_high);

}  // namespace grouprl
