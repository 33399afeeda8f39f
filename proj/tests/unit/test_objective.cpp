#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "grouprl/advantage.hpp"
#include "grouprl/objective.hpp"
#include "oracles.hpp"

using namespace grouprl;

namespace {

struct Batch {
  PolicyParams params{6, 1, 5};
  std::vector<ResponseGroup> groups;
  std::vector<AdvantageVector> advs;
};

// Random logits on every row the sampled responses visit, then random
// advantages. Parameters are perturbed after sampling so stored logprobs
// differ from current ones.
Batch random_batch(std::uint64_t seed, int num_groups = 2, int group_size = 3) {
  Batch b;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  Rng sampler(seed);
  for (int g = 0; g < num_groups; ++g) {
    const TokenSeq prompt{static_cast<Token>(g), 1};
    ResponseGroup group = sample_group(b.params, prompt, group_size, sampler);
    for (const TokenSeq& r : group.responses) {
      for (std::size_t t = 0; t < r.size(); ++t) {
        b.params.mutable_row(b.params.context_key(group.prompt_id, std::span(r).first(t)));
      }
    }
    b.groups.push_back(std::move(group));
  }
  for (auto& [key, row] : b.params.rows()) {
    for (double& x : b.params.mutable_row(key)) x = n(rng);
  }
  for (ResponseGroup& group : b.groups) {
    for (std::size_t i = 0; i < group.size(); ++i) {
      group.logprobs[i] = logprob(b.params, group.prompt, group.responses[i]).per_token;
      for (double& v : group.logprobs[i]) v += 0.15 * n(rng);
    }
    AdvantageVector adv;
    for (std::size_t i = 0; i < group.size(); ++i) adv.values.push_back(n(rng));
    b.advs.push_back(adv);
  }
  return b;
}

double oracle_weighted_nll(const Batch& b, bool global) {
  long double total = 0;
  for (std::size_t g = 0; g < b.groups.size(); ++g) {
    const ResponseGroup& group = b.groups[g];
    long double group_loss = 0;
    for (std::size_t i = 0; i < group.size(); ++i) {
      const long double nll = -logprob(b.params, group.prompt, group.responses[i]).total;
      const long double a = b.advs[g].values[i];
      if (global) {
        group_loss += nll * a / static_cast<long double>(group.total_tokens());
      } else {
        group_loss += nll * a / group.responses[i].size() / group.size();
      }
    }
    total += group_loss;
  }
  return static_cast<double>(total / b.groups.size());
}

}  // namespace

TEST(ClippedSurrogate, Branches) {
  // Positive advantage, ratio above the band: clipped, no gradient.
  SurrogateTerm t = clipped_surrogate(1.5, 1.0, 0.2);
  EXPECT_DOUBLE_EQ(t.value, -1.2);
  EXPECT_EQ(t.dlogp, 0.0);
  EXPECT_TRUE(t.clipped);
  // Positive advantage, ratio below the band: unclipped branch is smaller.
  t = clipped_surrogate(0.5, 1.0, 0.2);
  EXPECT_DOUBLE_EQ(t.value, -0.5);
  EXPECT_DOUBLE_EQ(t.dlogp, -0.5);
  // Negative advantage, ratio above the band: unclipped is the pessimistic term.
  t = clipped_surrogate(1.5, -1.0, 0.2);
  EXPECT_DOUBLE_EQ(t.value, 1.5);
  EXPECT_DOUBLE_EQ(t.dlogp, 1.5);
  // Ratio 1 is never clipped.
  t = clipped_surrogate(1.0, 2.0, 0.2);
  EXPECT_DOUBLE_EQ(t.value, -2.0);
  EXPECT_FALSE(t.clipped);
}

TEST(K3, Examples) {
  EXPECT_EQ(k3(0.0), 0.0);
  EXPECT_NEAR(k3(std::log(2.0)), 2.0 - std::log(2.0) - 1.0, 1e-15);
  EXPECT_NEAR(k3(std::log(2.0)), 0.3069, 1e-4);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-5, 5);
  for (int i = 0; i < 1000; ++i) EXPECT_GE(k3(u(rng)), 0.0);
}

TEST(KlPenalty, ZeroAgainstItself) {
  const Batch b = random_batch(3);
  for (const ResponseGroup& g : b.groups) {
    for (const TokenSeq& r : g.responses) {
      for (double v : kl_penalty(b.params, b.params, g.prompt, r)) EXPECT_EQ(v, 0.0);
    }
  }
}

TEST(WeightedNll, MatchesStraightLineLoss) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Batch b = random_batch(seed);
    EXPECT_NEAR(aapo_loss(b.groups, b.advs, b.params).loss, oracle_weighted_nll(b, true), 1e-12);
    EXPECT_NEAR(weighted_nll_loss(b.groups, b.advs, b.params, Normalization::per_response_mean).loss,
                oracle_weighted_nll(b, false), 1e-12);
  }
}

TEST(WeightedNll, ZeroAdvantagesGiveZeroLossAndGradient) {
  Batch b = random_batch(4);
  for (AdvantageVector& a : b.advs) std::fill(a.values.begin(), a.values.end(), 0.0);
  const LossReport r = aapo_loss(b.groups, b.advs, b.params);
  EXPECT_EQ(r.loss, 0.0);
  EXPECT_EQ(r.grad.norm(), 0.0);
}

TEST(WeightedNll, PerResponseContributionsSumToLoss) {
  const Batch b = random_batch(5);
  const LossReport r = aapo_loss(b.groups, b.advs, b.params);
  double sum = 0;
  for (double c : r.per_response_contrib) sum += c;
  EXPECT_NEAR(sum, r.loss, 1e-14);
  EXPECT_EQ(r.per_response_contrib.size(), 6u);
}

TEST(WeightedNll, RejectsMismatchedBatch) {
  Batch b = random_batch(6);
  b.advs.pop_back();
  EXPECT_THROW(aapo_loss(b.groups, b.advs, b.params), std::invalid_argument);
  b = random_batch(6);
  b.advs[0].values.pop_back();
  EXPECT_THROW(aapo_loss(b.groups, b.advs, b.params), std::invalid_argument);
}

TEST(Gradients, MatchFiniteDifferencesForAllLosses) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Batch b = random_batch(seed);
    ObjectiveConfig grpo;
    grpo.algorithm = Algorithm::grpo;
    grpo.beta = 0.05;
    PolicyParams ref = b.params;
    for (auto& [key, row] : ref.rows()) ref.mutable_row(key)[0] += 0.3;

    const std::vector<std::function<LossReport(const PolicyParams&)>> losses{
        [&](const PolicyParams& p) { return aapo_loss(b.groups, b.advs, p); },
        [&](const PolicyParams& p) { return gpg_loss(b.groups, b.advs, p); },
        [&](const PolicyParams& p) { return grpo_loss(b.groups, b.advs, p, &ref, grpo); },
    };
    for (const auto& loss : losses) {
      const auto analytic = oracle::flatten(loss(b.params).grad, b.params);
      const auto numeric = oracle::central_differences(
          [&](const PolicyParams& p) { return loss(p).loss; }, b.params, 1e-5);
      // Ratio clipping makes the surrogate piecewise; a kink within h of the
      // evaluation point is vanishingly unlikely for these continuous draws.
      EXPECT_LT(oracle::max_relative_error(analytic, numeric), 1e-4) << "seed " << seed;
    }
  }
}

TEST(GrpoLoss, RatioOneReducesToPerResponseWeightedNllGradient) {
  Batch b = random_batch(8);
  for (ResponseGroup& g : b.groups) g.logprobs.clear();
  ObjectiveConfig cfg;
  cfg.algorithm = Algorithm::grpo;
  const LossReport grpo = grpo_loss(b.groups, b.advs, b.params, nullptr, cfg);
  const LossReport nll = weighted_nll_loss(b.groups, b.advs, b.params, Normalization::per_response_mean);
  const auto x = oracle::flatten(grpo.grad, b.params);
  const auto y = oracle::flatten(nll.grad, b.params);
  EXPECT_LT(oracle::max_relative_error(x, y, 1e-12), 1e-12);
}

TEST(GrpoLoss, RequiresStoredLogprobsInMultiEpochMode) {
  Batch b = random_batch(9);
  for (ResponseGroup& g : b.groups) g.logprobs.clear();
  ObjectiveConfig cfg;
  cfg.algorithm = Algorithm::grpo;
  cfg.multi_epoch = true;
  EXPECT_THROW(grpo_loss(b.groups, b.advs, b.params, nullptr, cfg), std::invalid_argument);
  cfg.multi_epoch = false;
  cfg.beta = 0.1;
  EXPECT_THROW(grpo_loss(b.groups, b.advs, b.params, nullptr, cfg), std::invalid_argument);
}

TEST(GrpoLoss, KlValueReportsMeanK3) {
  const Batch b = random_batch(10);
  PolicyParams ref = b.params;
  for (auto& [key, row] : ref.rows()) ref.mutable_row(key)[1] -= 0.5;
  ObjectiveConfig cfg;
  cfg.algorithm = Algorithm::grpo;
  cfg.beta = 0.1;
  double sum = 0;
  std::size_t n = 0;
  for (const ResponseGroup& g : b.groups) {
    for (const TokenSeq& r : g.responses) {
      for (double v : kl_penalty(b.params, ref, g.prompt, r)) {
        sum += v;
        ++n;
      }
    }
  }
  EXPECT_NEAR(grpo_loss(b.groups, b.advs, b.params, &ref, cfg).kl_value, sum / n, 1e-14);
}

TEST(MarginLossBound, HoldsForUniformRewardGroups) {
  const AdvantageConfig cfg;
  std::mt19937_64 rng(12);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Batch b = random_batch(seed, 3, 4);
    b.advs.clear();
    for (const ResponseGroup& g : b.groups) {
      const std::vector<double> pol(g.size(), 1.0);
      std::vector<double> ref(g.size());
      for (double& r : ref) r = static_cast<double>(rng() % 3) - 0.5;
      b.advs.push_back(aapo_advantage(pol, ref, cfg));
    }
    const double loss = aapo_loss(b.groups, b.advs, b.params).loss;
    EXPECT_LE(loss, clipped_margin_loss_bound(b.groups, b.params, cfg.delta_high) + 1e-15);
  }
}

TEST(ObjectiveConfig, DefaultsAndValidation) {
  EXPECT_EQ(default_normalization(Algorithm::grpo), Normalization::per_response_mean);
  EXPECT_EQ(default_normalization(Algorithm::aapo), Normalization::global_token_mean);
  ObjectiveConfig cfg;
  cfg.algorithm = Algorithm::grpo;
  cfg.epsilon = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg.epsilon = 0.2;
  cfg.beta = -1;
  EXPECT_THROW(cfg.validate(), ConfigError);
}
