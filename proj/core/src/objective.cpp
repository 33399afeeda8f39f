#include "grouprl/objective.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace grouprl {

std::string_view to_string(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::grpo:
      return "grpo";
    case Algorithm::gpg:
      return "gpg";
    case Algorithm::aapo:
      return "aapo";
  }
  return "unknown";
}

Algorithm parse_algorithm(std::string_view name) {
  if (name == "grpo") return Algorithm::grpo;
  if (name == "gpg") return Algorithm::gpg;
  if (name == "aapo") return Algorithm::aapo;
  throw ConfigError("unknown algorithm '" + std::string(name) + "'");
}

std::string_view to_string(Normalization norm) {
  return norm == Normalization::per_response_mean ? "per_response_mean" : "global_token_mean";
}

Normalization parse_normalization(std::string_view name) {
  if (name == "per_response_mean") return Normalization::per_response_mean;
  if (name == "global_token_mean") return Normalization::global_token_mean;
  throw ConfigError("unknown normalization '" + std::string(name) + "'");
}

Normalization default_normalization(Algorithm algorithm) {
  return algorithm == Algorithm::grpo ? Normalization::per_response_mean
                                      : Normalization::global_token_mean;
}

void ObjectiveConfig::validate() const {
  if (algorithm == Algorithm::grpo && !(epsilon > 0.0)) {
    throw ConfigError("objective.epsilon must be positive for grpo", "objective.epsilon");
  }
  if (!(beta >= 0.0)) throw ConfigError("objective.beta must be >= 0", "objective.beta");
}

namespace {

void check_batch(std::span<const ResponseGroup> groups,
                 std::span<const AdvantageVector> advantages) {
  if (groups.empty()) throw std::invalid_argument("loss: empty batch");
  if (groups.size() != advantages.size()) {
    throw std::invalid_argument("loss: " + std::to_string(groups.size()) + " groups but " +
                                std::to_string(advantages.size()) + " advantage vectors");
  }
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (groups[g].size() != advantages[g].size()) {
      throw std::invalid_argument("loss: group " + std::to_string(g) +
                                  " size does not match its advantages");
    }
  }
}

// Per-token weight w such that the batch loss is sum over tokens of w * term.
double token_weight(const ResponseGroup& group, std::size_t i, Normalization norm,
                    std::size_t num_groups) {
  const double groups = static_cast<double>(num_groups);
  if (norm == Normalization::global_token_mean) {
    return 1.0 / (static_cast<double>(group.total_tokens()) * groups);
  }
  return 1.0 / (static_cast<double>(group.length(i)) * static_cast<double>(group.size()) * groups);
}

}  // namespace

LossReport weighted_nll_loss(std::span<const ResponseGroup> groups,
                             std::span<const AdvantageVector> advantages,
                             const PolicyParams& params, Normalization norm) {
  check_batch(groups, advantages);
  LossReport report;
  report.grad = Gradient(params.vocab_size());
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const ResponseGroup& group = groups[g];
    for (std::size_t i = 0; i < group.size(); ++i) {
      const TokenSeq& response = group.responses[i];
      const double adv = advantages[g].values[i];
      const double w = token_weight(group, i, norm, groups.size());
      double contrib = 0.0;
      for (std::size_t t = 0; t < response.size(); ++t) {
        const ContextKey key =
            params.context_key(group.prompt_id, std::span(response).first(t));
        const std::vector<double> lp = log_softmax(params.row(key));
        const auto token = static_cast<std::size_t>(response.at(t));
        if (token >= lp.size()) throw std::out_of_range("loss: token outside vocabulary");
        contrib += -lp[token] * adv * w;
        if (adv != 0.0) {
          std::vector<double> p(lp.size());
          for (std::size_t b = 0; b < lp.size(); ++b) p[b] = std::exp(lp[b]);
          // d(-logp * A * w) = -A w (onehot - p)
          accumulate_logprob_grad(report.grad, key, p, response[t], -adv * w);
        }
      }
      report.per_response_contrib.push_back(contrib);
      report.loss += contrib;
    }
  }
  return report;
}

LossReport aapo_loss(std::span<const ResponseGroup> groups,
                     std::span<const AdvantageVector> advantages, const PolicyParams& params) {
  return weighted_nll_loss(groups, advantages, params, Normalization::global_token_mean);
}

LossReport gpg_loss(std::span<const ResponseGroup> groups,
                    std::span<const AdvantageVector> advantages, const PolicyParams& params) {
  return weighted_nll_loss(groups, advantages, params, Normalization::global_token_mean);
}

SurrogateTerm clipped_surrogate(double ratio, double advantage, double epsilon) {
  const double clipped_ratio = clip(ratio, 1.0 - epsilon, 1.0 + epsilon);
  const double unclipped = ratio * advantage;
  const double bounded = clipped_ratio * advantage;
  if (unclipped <= bounded) return {-unclipped, -unclipped, false};
  return {-bounded, 0.0, true};
}

double k3(double log_rho) { return std::exp(log_rho) - log_rho - 1.0; }

std::vector<double> kl_penalty(const PolicyParams& params, const PolicyParams& ref_params,
                               const TokenSeq& prompt, std::span<const Token> response) {
  const LogProb cur = logprob(params, prompt, response);
  const LogProb ref = logprob(ref_params, prompt, response);
  std::vector<double> out(response.size());
  for (std::size_t t = 0; t < response.size(); ++t) {
    out[t] = k3(ref.per_token[t] - cur.per_token[t]);
  }
  return out;
}

LossReport grpo_loss(std::span<const ResponseGroup> groups,
                     std::span<const AdvantageVector> advantages, const PolicyParams& params,
                     const PolicyParams* ref_params, const ObjectiveConfig& cfg) {
  check_batch(groups, advantages);
  if (cfg.beta > 0.0 && ref_params == nullptr) {
    throw std::invalid_argument("grpo_loss: beta > 0 requires reference parameters");
  }
  const Normalization norm = cfg.resolved_normalization();
  LossReport report;
  report.grad = Gradient(params.vocab_size());
  double kl_sum = 0.0;
  std::size_t kl_tokens = 0;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const ResponseGroup& group = groups[g];
    const bool has_old = group.logprobs.size() == group.size();
    if (!has_old && cfg.multi_epoch) {
      throw std::invalid_argument("grpo_loss: multi-epoch mode requires stored old logprobs");
    }
    for (std::size_t i = 0; i < group.size(); ++i) {
      const TokenSeq& response = group.responses[i];
      if (has_old && group.logprobs[i].size() != response.size()) {
        throw std::invalid_argument("grpo_loss: stored logprobs do not match response length");
      }
      const double adv = advantages[g].values[i];
      const double w = token_weight(group, i, norm, groups.size());
      double contrib = 0.0;
      for (std::size_t t = 0; t < response.size(); ++t) {
        const std::span<const Token> prefix = std::span(response).first(t);
        const ContextKey key = params.context_key(group.prompt_id, prefix);
        const std::vector<double> lp = log_softmax(params.row(key));
        const auto token = static_cast<std::size_t>(response[t]);
        if (token >= lp.size()) throw std::out_of_range("loss: token outside vocabulary");
        const double old_lp = has_old ? group.logprobs[i][t] : lp[token];
        const SurrogateTerm term = clipped_surrogate(std::exp(lp[token] - old_lp), adv, cfg.epsilon);
        double value = term.value;
        double dlogp = term.dlogp;
        if (cfg.beta > 0.0) {
          const ContextKey ref_key = ref_params->context_key(group.prompt_id, prefix);
          const double ref_lp = log_softmax(ref_params->row(ref_key))[token];
          const double log_rho = ref_lp - lp[token];
          const double kl = k3(log_rho);
          kl_sum += kl;
          ++kl_tokens;
          value += cfg.beta * kl;
          dlogp += cfg.beta * (1.0 - std::exp(log_rho));
        }
        contrib += value * w;
        if (dlogp != 0.0) {
          std::vector<double> p(lp.size());
          for (std::size_t b = 0; b < lp.size(); ++b) p[b] = std::exp(lp[b]);
          accumulate_logprob_grad(report.grad, key, p, response[t], dlogp * w);
        }
      }
      report.per_response_contrib.push_back(contrib);
      report.loss += contrib;
    }
  }
  report.kl_value = kl_tokens == 0 ? 0.0 : kl_sum / static_cast<double>(kl_tokens);
  return report;
}

LossReport compute_loss(std::span<const ResponseGroup> groups,
                        std::span<const AdvantageVector> advantages, const PolicyParams& params,
                        const PolicyParams* ref_params, const ObjectiveConfig& cfg) {
  switch (cfg.algorithm) {
    case Algorithm::grpo:
      return grpo_loss(groups, advantages, params, ref_params, cfg);
    case Algorithm::gpg:
    case Algorithm::aapo:
      return weighted_nll_loss(groups, advantages, params, cfg.resolved_normalization());
  }
  throw std::logic_error("compute_loss: unhandled algorithm");
}

double clipped_margin_loss_bound(std::span<const ResponseGroup> groups,
                                 const PolicyParams& params, double delta_high) {
  if (groups.empty()) throw std::invalid_argument("clipped_margin_loss_bound: empty batch");
  double mean_nll = 0.0;
  for (const ResponseGroup& group : groups) {
    double nll = 0.0;
    for (const TokenSeq& response : group.responses) {
      nll -= logprob(params, group.prompt, response).total;
    }
    mean_nll += nll / static_cast<double>(group.total_tokens());
  }
  mean_nll /= static_cast<double>(groups.size());
  return delta_high * mean_nll;
}

}  // namespace grouprl
