#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "grouprl/advantage.hpp"
#include "grouprl/env.hpp"
#include "grouprl/objective.hpp"
#include "grouprl/optimizer.hpp"
#include "grouprl/policy.hpp"
#include "grouprl/reward.hpp"

namespace grouprl {

// Default rule set: format (weight 1) plus cosine-scaled accuracy (weight 2).
std::vector<RewardRule> default_reward_rules();

struct TrainConfig {
  TaskConfig task;
  int vocab_size = 16;
  int context_order = 1;
  int max_len = 16;

  Algorithm algorithm = Algorithm::aapo;
  int group_size = 8;
  int batch_size = 16;
  int steps = 500;
  LearningRateSchedule schedule;
  OptimizerKind optimizer = OptimizerKind::sgd;
  AdamConfig adam;
  std::optional<int> reference_update_every;
  std::vector<RewardRule> rules = default_reward_rules();
  AdvantageConfig advantage;  // estimator is taken from `algorithm`
  ObjectiveConfig objective;  // algorithm is taken from `algorithm`
  int updates_per_batch = 1;
  int loss_variance_window = 100;
  std::uint64_t seed = 0;

  // Abort on a stability bound breach (update norm, loss floor, margin
  // loss bound).
  bool enforce_monitors = true;
  // Test hook: feed the policy rewards in place of the reference rewards so
  // every margin is exactly zero.
  bool force_reference_rewards_equal_policy = false;

  AdvantageConfig advantage_config() const;
  ObjectiveConfig objective_config() const;
  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

enum class MonitorStatus { pass, violation, not_applicable };
std::string_view to_string(MonitorStatus status);

// Field names match the JSON metrics schema one-to-one.
struct StepMetrics {
  int step = 0;
  double learning_rate = 0.0;
  double policy_reward_mean = 0.0;
  double policy_reward_max = 0.0;
  double reference_reward_mean = 0.0;
  double margin_mean = 0.0;
  double clip_fraction = 0.0;
  double zero_adv_response_fraction = 0.0;
  double zero_adv_group_fraction = 0.0;
  double zero_aug_adv_response_fraction = 0.0;
  double zero_aug_adv_group_fraction = 0.0;
  double max_abs_advantage = 0.0;
  double loss = 0.0;
  double loss_variance = 0.0;
  double kl_value = 0.0;
  double grad_norm = 0.0;
  double update_norm = 0.0;
  double m_emp = 0.0;
  double advantage_bound = 0.0;
  double update_bound = 0.0;
  double loss_floor = 0.0;
  MonitorStatus monitor = MonitorStatus::not_applicable;
  int uniform_reward_groups = 0;
  int margin_bound_violations = 0;
  double mean_response_length = 0.0;
  int policy_samples = 0;
  int reference_samples = 0;
  std::size_t parameter_count = 0;
  double wall_ms = 0.0;  // excluded from determinism comparisons

  // Equality over every field except wall_ms.
  bool same_observables(const StepMetrics& other) const;
};

struct MonitorResult {
  MonitorStatus status = MonitorStatus::not_applicable;
  std::string message;
};

// Checks ||theta_{k+1} - theta_k|| <= eta_k * M_emp * B, loss >= -B log|V|,
// M_emp <= sqrt(2) and max |A| <= B. Only plain gradient steps are covered;
// adam and grpo with a KL term or stale ratios report not_applicable.
MonitorResult theorem1_monitor(const StepMetrics& metrics, const TrainConfig& cfg);

class MonitorViolation : public std::runtime_error {
 public:
  MonitorViolation(const std::string& message, StepMetrics metrics)
      : std::runtime_error(message), metrics_(metrics) {}
  const StepMetrics& metrics() const noexcept { return metrics_; }

 private:
  StepMetrics metrics_;
};

struct RngStreams {
  Rng prompts;
  Rng policy;
  Rng reference;

  explicit RngStreams(std::uint64_t seed);
  std::string serialize() const;
  void deserialize(const std::string& text);
};

struct TrainState {
  int step = 0;  // steps completed
  PolicyParams params;
  ReferenceModel reference;
  RngStreams rngs;
};

using StepObserver = std::function<void(const TrainState&, const StepMetrics&)>;

struct TrainResult {
  PolicyParams params;
  ReferenceModel reference;
  std::vector<StepMetrics> metrics;
};

// Runs the group-sampling training loop for cfg.steps steps. Deterministic
// given cfg (including seed). Throws MonitorViolation on a bound breach when
// cfg.enforce_monitors is set.
TrainResult train(const TrainConfig& cfg, const StepObserver& observer = {});

// Fraction of prompts whose greedy decode extracts the ground truth.
double greedy_accuracy(const PolicyParams& params, const Task& task,
                       std::span<const Prompt> prompts);

struct ConvergenceReport {
  std::size_t steps = 0;
  double tau = 0.0;
  double running_min_sq_grad = 0.0;
  int argmin_step = 0;
  std::optional<int> first_step_below_tau;
  bool below_tau = false;
  double trailing_mean_sq_grad = 0.0;
  std::size_t trailing_window = 0;
  std::string summary;
};

// Report-only stationarity probe over squared gradient norms. Requires at
// least 100 recorded steps.
ConvergenceReport convergence_probe(std::span<const StepMetrics> metrics, double tau,
                                    std::size_t window = 100);

struct CompareRow {
  std::uint64_t seed = 0;
  Algorithm algorithm = Algorithm::aapo;
  int half = 0;  // 0: first half of the steps, 1: second half
  double all_zero_group_fraction = 0.0;
  double zero_response_fraction = 0.0;
  double loss_variance = 0.0;
  double mean_reward = 0.0;
};

struct CompareReport {
  std::vector<CompareRow> rows;

  // Mean over seeds of all_zero_group_fraction for one algorithm and half.
  double mean_all_zero(Algorithm algorithm, int half) const;
  std::string to_csv() const;
};

// Paired runs over shared seeds for two configs that differ only in the
// algorithm. Throws ConfigError otherwise.
CompareReport compare_dynamics(const TrainConfig& a, const TrainConfig& b,
                               std::span<const std::uint64_t> seeds);

// Population variance of the trailing `window` values (all values when fewer).
double rolling_variance(std::span<const double> values, std::size_t window);

}  // namespace grouprl
