#include "grouprl/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <tuple>

namespace grouprl {

std::vector<RewardRule> default_reward_rules() {
  RewardRule format;
  format.kind = RewardKind::format;
  format.weight = 1.0;
  RewardRule cosine;
  cosine.kind = RewardKind::cosine_scaled_accuracy;
  cosine.weight = 2.0;
  return {format, cosine};
}

namespace {

Estimator estimator_for(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::grpo:
      return Estimator::grpo;
    case Algorithm::gpg:
      return Estimator::gpg;
    case Algorithm::aapo:
      return Estimator::aapo;
  }
  return Estimator::aapo;
}

}  // namespace

AdvantageConfig TrainConfig::advantage_config() const {
  AdvantageConfig out = advantage;
  out.estimator = estimator_for(algorithm);
  return out;
}

ObjectiveConfig TrainConfig::objective_config() const {
  ObjectiveConfig out = objective;
  out.algorithm = algorithm;
  out.multi_epoch = updates_per_batch > 1;
  return out;
}

void TrainConfig::validate() const {
  if (group_size < 2) throw ConfigError("train.group_size must be >= 2", "train.group_size");
  if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1", "train.batch_size");
  if (steps < 0) throw ConfigError("train.steps must be >= 0", "train.steps");
  if (updates_per_batch < 1) {
    throw ConfigError("train.updates_per_batch must be >= 1", "train.updates_per_batch");
  }
  if (loss_variance_window < 1) {
    throw ConfigError("train.loss_variance_window must be >= 1", "train.loss_variance_window");
  }
  if (reference_update_every && *reference_update_every < 1) {
    throw ConfigError("train.reference_update_every must be >= 1 (or 0 for never)",
                      "train.reference_update_every");
  }
  if (rules.empty()) throw ConfigError("at least one reward rule is required", "reward.rules");
  for (const RewardRule& rule : rules) rule.validate();
  schedule.validate();
  advantage_config().validate();
  objective_config().validate();
  PolicyParams probe(vocab_size, context_order, max_len);
  Task(task, vocab_size);
}

std::string_view to_string(MonitorStatus status) {
  switch (status) {
    case MonitorStatus::pass:
      return "pass";
    case MonitorStatus::violation:
      return "violation";
    case MonitorStatus::not_applicable:
      return "not_applicable";
  }
  return "unknown";
}

bool StepMetrics::same_observables(const StepMetrics& other) const {
  StepMetrics a = *this;
  StepMetrics b = other;
  a.wall_ms = 0.0;
  b.wall_ms = 0.0;
  return std::tie(a.step, a.learning_rate, a.policy_reward_mean, a.policy_reward_max,
                  a.reference_reward_mean, a.margin_mean, a.clip_fraction,
                  a.zero_adv_response_fraction, a.zero_adv_group_fraction,
                  a.zero_aug_adv_response_fraction, a.zero_aug_adv_group_fraction,
                  a.max_abs_advantage, a.loss, a.loss_variance, a.kl_value, a.grad_norm,
                  a.update_norm, a.m_emp, a.advantage_bound, a.update_bound, a.loss_floor,
                  a.monitor, a.uniform_reward_groups, a.margin_bound_violations,
                  a.mean_response_length, a.policy_samples, a.reference_samples,
                  a.parameter_count) ==
         std::tie(b.step, b.learning_rate, b.policy_reward_mean, b.policy_reward_max,
                  b.reference_reward_mean, b.margin_mean, b.clip_fraction,
                  b.zero_adv_response_fraction, b.zero_adv_group_fraction,
                  b.zero_aug_adv_response_fraction, b.zero_aug_adv_group_fraction,
                  b.max_abs_advantage, b.loss, b.loss_variance, b.kl_value, b.grad_norm,
                  b.update_norm, b.m_emp, b.advantage_bound, b.update_bound, b.loss_floor,
                  b.monitor, b.uniform_reward_groups, b.margin_bound_violations,
                  b.mean_response_length, b.policy_samples, b.reference_samples,
                  b.parameter_count);
}

namespace {

bool monitor_applies(const TrainConfig& cfg) {
  if (cfg.optimizer != OptimizerKind::sgd) return false;
  if (cfg.algorithm == Algorithm::grpo) {
    return cfg.objective.beta == 0.0 && cfg.updates_per_batch == 1;
  }
  return true;
}

// Relative slack for comparing a computed norm against its bound; covers the
// rounding of theta - eta*g followed by the subtraction in the distance.
constexpr double kBoundSlack = 1e-12;

}  // namespace

MonitorResult theorem1_monitor(const StepMetrics& m, const TrainConfig& cfg) {
  if (!monitor_applies(cfg)) {
    return {MonitorStatus::not_applicable, "bound covers plain gradient steps only"};
  }
  std::ostringstream why;
  if (m.m_emp > std::numbers::sqrt2 + 1e-12) why << "M_emp " << m.m_emp << " > sqrt(2); ";
  if (m.max_abs_advantage > m.advantage_bound) {
    why << "|A| " << m.max_abs_advantage << " > B " << m.advantage_bound << "; ";
  }
  if (m.update_norm > m.update_bound * (1.0 + kBoundSlack)) {
    why << "update norm " << m.update_norm << " > eta*M*B " << m.update_bound << "; ";
  }
  if (m.loss < m.loss_floor) why << "loss " << m.loss << " < floor " << m.loss_floor << "; ";
  const std::string text = why.str();
  if (text.empty()) return {MonitorStatus::pass, {}};
  return {MonitorStatus::violation, "step " + std::to_string(m.step) + ": " + text};
}

RngStreams::RngStreams(std::uint64_t seed) {
  auto make = [seed](std::uint32_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      stream};
    return Rng(seq);
  };
  prompts = make(1);
  policy = make(2);
  reference = make(3);
}

std::string RngStreams::serialize() const {
  std::ostringstream out;
  out << prompts << ' ' << policy << ' ' << reference;
  return out.str();
}

void RngStreams::deserialize(const std::string& text) {
  std::istringstream in(text);
  in >> prompts >> policy >> reference;
  if (!in) throw std::runtime_error("RngStreams: malformed state");
}

double rolling_variance(std::span<const double> values, std::size_t window) {
  if (values.empty()) return 0.0;
  const std::size_t n = std::min(window, values.size());
  const std::span<const double> tail = values.last(n);
  double mean = 0.0;
  for (double v : tail) mean += v;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : tail) ss += (v - mean) * (v - mean);
  return ss / static_cast<double>(n);
}

namespace {

struct ScoredGroup {
  ResponseGroup group;
  std::vector<double> rewards;
};

ScoredGroup sample_and_score(const PolicyParams& params, const Prompt& prompt, int group_size,
                             Rng& rng, const Task& task, const std::vector<RewardRule>& rules,
                             const AnswerExtractor& extractor) {
  ScoredGroup out{sample_group(params, prompt.tokens, group_size, rng), {}};
  const TokenSeq delimiter{task.think_end()};
  out.rewards.reserve(out.group.size());
  for (const TokenSeq& response : out.group.responses) {
    out.rewards.push_back(
        score_response(rules, response, prompt.ground_truth, extractor, delimiter).weighted);
  }
  return out;
}

// Exact equality: the clipped-margin bound assumes a group term of exactly
// zero, which a tolerance would not guarantee.
bool uniform_rewards(std::span<const double> rewards) {
  const auto [lo, hi] = std::minmax_element(rewards.begin(), rewards.end());
  return *hi == *lo;
}

double max_abs(std::span<const AdvantageVector> advs) {
  double best = 0.0;
  for (const AdvantageVector& a : advs) {
    for (double v : a.values) best = std::max(best, std::abs(v));
  }
  return best;
}

}  // namespace

TrainResult train(const TrainConfig& cfg, const StepObserver& observer) {
  cfg.validate();
  const Task task(cfg.task, cfg.vocab_size);
  const AnswerExtractor extractor = task.extractor();
  const AdvantageConfig adv_cfg = cfg.advantage_config();
  AdvantageConfig group_term_cfg = adv_cfg;
  group_term_cfg.estimator = adv_cfg.estimator == Estimator::gpg ? Estimator::gpg : Estimator::grpo;
  const ObjectiveConfig obj_cfg = cfg.objective_config();
  const bool is_aapo = cfg.algorithm == Algorithm::aapo;

  const auto [r_min, r_max] = weighted_reward_range(cfg.rules);
  const double bound_b = advantage_bound(adv_cfg, r_min, r_max);
  const double log_vocab = std::log(static_cast<double>(cfg.vocab_size));
  const bool monitored = monitor_applies(cfg);

  TrainState state{0, PolicyParams(cfg.vocab_size, cfg.context_order, cfg.max_len),
                   ReferenceModel{PolicyParams(cfg.vocab_size, cfg.context_order, cfg.max_len),
                                  std::nullopt},
                   RngStreams(cfg.seed)};
  state.reference = snapshot_reference(state.params, cfg.reference_update_every);
  AdamState adam;
  adam.cfg = cfg.adam;

  TrainResult result{state.params, state.reference, {}};
  result.metrics.reserve(static_cast<std::size_t>(cfg.steps));
  std::vector<double> losses;
  losses.reserve(static_cast<std::size_t>(cfg.steps));

  for (int k = 0; k < cfg.steps; ++k) {
    const auto started = std::chrono::steady_clock::now();
    StepMetrics m;
    m.step = k;
    m.learning_rate = cfg.schedule.at(k);

    const PromptBatch batch = task.generate_batch(cfg.batch_size, state.rngs.prompts);
    std::vector<ResponseGroup> groups;
    std::vector<AdvantageVector> used;
    std::vector<AdvantageVector> group_terms;
    std::vector<std::vector<double>> policy_rewards;
    groups.reserve(batch.size());
    used.reserve(batch.size());
    group_terms.reserve(batch.size());

    double reward_sum = 0.0;
    double reward_max = -std::numeric_limits<double>::infinity();
    double ref_reward_sum = 0.0;
    double margin_sum = 0.0;
    std::size_t clipped = 0;
    std::size_t responses = 0;
    std::size_t tokens = 0;

    for (const Prompt& prompt : batch.prompts) {
      ScoredGroup pol = sample_and_score(state.params, prompt, cfg.group_size, state.rngs.policy,
                                         task, cfg.rules, extractor);
      m.policy_samples += static_cast<int>(pol.group.size());
      for (double r : pol.rewards) {
        reward_sum += r;
        reward_max = std::max(reward_max, r);
      }
      responses += pol.group.size();
      tokens += pol.group.total_tokens();

      group_terms.push_back(compute_advantage(pol.rewards, {}, group_term_cfg));
      if (is_aapo) {
        ScoredGroup ref = sample_and_score(state.reference.params, prompt, cfg.group_size,
                                           state.rngs.reference, task, cfg.rules, extractor);
        m.reference_samples += static_cast<int>(ref.group.size());
        const std::vector<double>& paired =
            cfg.force_reference_rewards_equal_policy ? pol.rewards : ref.rewards;
        for (double r : paired) ref_reward_sum += r;
        AdvantageVector adv = aapo_advantage(pol.rewards, paired, adv_cfg);
        for (std::size_t i = 0; i < adv.size(); ++i) {
          margin_sum += adv.margin_raw[i];
          if (adv.clip_active[i]) ++clipped;
        }
        used.push_back(std::move(adv));
      } else {
        used.push_back(group_terms.back());
      }
      policy_rewards.push_back(std::move(pol.rewards));
      groups.push_back(std::move(pol.group));
    }

    const double n_resp = static_cast<double>(responses);
    m.policy_reward_mean = reward_sum / n_resp;
    m.policy_reward_max = reward_max;
    m.mean_response_length = static_cast<double>(tokens) / n_resp;
    if (is_aapo) {
      m.reference_reward_mean = ref_reward_sum / n_resp;
      m.margin_mean = margin_sum / n_resp;
      m.clip_fraction = static_cast<double>(clipped) / n_resp;
    }
    const ZeroAdvantageStats plain = zero_advantage_stats(group_terms, adv_cfg);
    const ZeroAdvantageStats aug = zero_advantage_stats(used, adv_cfg);
    m.zero_adv_response_fraction = plain.zero_response_fraction;
    m.zero_adv_group_fraction = plain.all_zero_group_fraction;
    m.zero_aug_adv_response_fraction = aug.zero_response_fraction;
    m.zero_aug_adv_group_fraction = aug.all_zero_group_fraction;
    m.max_abs_advantage = max_abs(used);
    m.advantage_bound = bound_b;
    m.loss_floor = -bound_b * log_vocab;

    const PolicyParams before = state.params;
    for (int u = 0; u < cfg.updates_per_batch; ++u) {
      const double m_emp = per_token_grad_norm_bound(state.params);
      const LossReport report =
          compute_loss(groups, used, state.params, &state.reference.params, obj_cfg);
      if (u == 0) {
        m.loss = report.loss;
        m.kl_value = report.kl_value;
        m.grad_norm = report.grad.norm();
        m.m_emp = m_emp;
        if (is_aapo && adv_cfg.clip_margin) {
          // Per-group margin-loss bound in the uniform-reward regime.
          std::size_t offset = 0;
          for (std::size_t g = 0; g < groups.size(); ++g) {
            const std::size_t n = groups[g].size();
            if (uniform_rewards(policy_rewards[g])) {
              ++m.uniform_reward_groups;
              double group_loss = 0.0;
              for (std::size_t i = 0; i < n; ++i) {
                group_loss += report.per_response_contrib[offset + i];
              }
              group_loss *= static_cast<double>(groups.size());
              const double bound = clipped_margin_loss_bound(
                  std::span(groups).subspan(g, 1), state.params, adv_cfg.delta_high);
              if (group_loss > bound + 1e-12 * std::abs(bound)) ++m.margin_bound_violations;
            }
            offset += n;
          }
        }
      }
      const double eta = cfg.schedule.at(k);
      m.update_bound += eta * m_emp * bound_b;
      if (cfg.optimizer == OptimizerKind::sgd) {
        sgd_step(state.params, report.grad, eta);
      } else {
        adam_step(adam, state.params, report.grad, eta);
      }
    }
    m.update_norm = parameter_distance(before, state.params);
    m.parameter_count = state.params.parameter_count();

    losses.push_back(m.loss);
    m.loss_variance =
        rolling_variance(losses, static_cast<std::size_t>(cfg.loss_variance_window));

    if (monitored) {
      const MonitorResult check = theorem1_monitor(m, cfg);
      m.monitor = check.status;
      if (check.status == MonitorStatus::violation && cfg.enforce_monitors) {
        throw MonitorViolation("theorem-1 monitor: " + check.message, m);
      }
    }
    if (m.margin_bound_violations > 0 && cfg.enforce_monitors) {
      throw MonitorViolation("clipped-margin loss bound breached at step " + std::to_string(k),
                             m);
    }

    state.step = k + 1;
    maybe_update_reference(state.reference, state.params, state.step);
    m.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                          started)
                    .count();
    result.metrics.push_back(m);
    if (observer) observer(state, m);
  }
  result.params = std::move(state.params);
  result.reference = std::move(state.reference);
  return result;
}

double greedy_accuracy(const PolicyParams& params, const Task& task,
                       std::span<const Prompt> prompts) {
  if (prompts.empty()) return 0.0;
  std::size_t hits = 0;
  for (const Prompt& p : prompts) {
    const std::optional<Token> answer = task.extract_answer(greedy_decode(params, p.tokens));
    if (answer && *answer == p.ground_truth) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(prompts.size());
}

ConvergenceReport convergence_probe(std::span<const StepMetrics> metrics, double tau,
                                    std::size_t window) {
  if (metrics.size() < 100) {
    throw std::invalid_argument("convergence_probe: needs >= 100 steps, got " +
                                std::to_string(metrics.size()));
  }
  ConvergenceReport report;
  report.steps = metrics.size();
  report.tau = tau;
  report.running_min_sq_grad = std::numeric_limits<double>::infinity();
  for (const StepMetrics& m : metrics) {
    const double sq = m.grad_norm * m.grad_norm;
    if (sq < report.running_min_sq_grad) {
      report.running_min_sq_grad = sq;
      report.argmin_step = m.step;
    }
    if (sq < tau && !report.first_step_below_tau) report.first_step_below_tau = m.step;
  }
  report.below_tau = report.running_min_sq_grad < tau;
  report.trailing_window = std::min(window, metrics.size());
  double sum = 0.0;
  for (const StepMetrics& m : metrics.last(report.trailing_window)) {
    sum += m.grad_norm * m.grad_norm;
  }
  report.trailing_mean_sq_grad = sum / static_cast<double>(report.trailing_window);
  std::ostringstream text;
  text << "running min ||g||^2 = " << report.running_min_sq_grad << " at step "
       << report.argmin_step << (report.below_tau ? " (below" : " (not below") << " tau = " << tau
       << "); trailing " << report.trailing_window
       << "-step mean ||g||^2 = " << report.trailing_mean_sq_grad;
  report.summary = text.str();
  return report;
}

double CompareReport::mean_all_zero(Algorithm algorithm, int half) const {
  double sum = 0.0;
  std::size_t n = 0;
  for (const CompareRow& row : rows) {
    if (row.algorithm == algorithm && row.half == half) {
      sum += row.all_zero_group_fraction;
      ++n;
    }
  }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

namespace {

std::string format_double(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

}  // namespace

std::string CompareReport::to_csv() const {
  std::ostringstream out;
  out << "seed,algorithm,half,all_zero_group_fraction,zero_response_fraction,loss_variance,"
         "mean_reward\n";
  for (const CompareRow& row : rows) {
    out << row.seed << ',' << to_string(row.algorithm) << ','
        << (row.half == 0 ? "first" : "second") << ',' << format_double(row.all_zero_group_fraction)
        << ',' << format_double(row.zero_response_fraction) << ','
        << format_double(row.loss_variance) << ',' << format_double(row.mean_reward) << '\n';
  }
  return out.str();
}

CompareReport compare_dynamics(const TrainConfig& a, const TrainConfig& b,
                               std::span<const std::uint64_t> seeds) {
  TrainConfig a_as_b = a;
  a_as_b.algorithm = b.algorithm;
  a_as_b.seed = b.seed;
  if (!(a_as_b == b)) {
    throw ConfigError("compare_dynamics: configs must differ only in the algorithm");
  }
  CompareReport report;
  for (std::uint64_t seed : seeds) {
    for (const TrainConfig* base : {&a, &b}) {
      TrainConfig cfg = *base;
      cfg.seed = seed;
      const TrainResult run = train(cfg);
      const std::size_t n = run.metrics.size();
      const std::size_t mid = n / 2;
      for (int half = 0; half < 2; ++half) {
        const std::size_t lo = half == 0 ? 0 : mid;
        const std::size_t hi = half == 0 ? mid : n;
        CompareRow row;
        row.seed = seed;
        row.algorithm = cfg.algorithm;
        row.half = half;
        std::vector<double> losses;
        for (std::size_t s = lo; s < hi; ++s) {
          const StepMetrics& m = run.metrics[s];
          row.all_zero_group_fraction += m.zero_aug_adv_group_fraction;
          row.zero_response_fraction += m.zero_aug_adv_response_fraction;
          row.mean_reward += m.policy_reward_mean;
          losses.push_back(m.loss);
        }
        const double count = static_cast<double>(std::max<std::size_t>(hi - lo, 1));
        row.all_zero_group_fraction /= count;
        row.zero_response_fraction /= count;
        row.mean_reward /= count;
        row.loss_variance = rolling_variance(losses, losses.size());
        report.rows.push_back(row);
      }
    }
  }
  return report;
}

}  // namespace grouprl
