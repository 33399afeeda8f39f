#pragma once

#include <map>
#include <string_view>
#include <vector>

#include "grouprl/policy.hpp"

namespace grouprl {

enum class ScheduleKind { constant, robbins_monro };
enum class OptimizerKind { sgd, adam };

std::string_view to_string(ScheduleKind kind);
ScheduleKind parse_schedule_kind(std::string_view name);
std::string_view to_string(OptimizerKind kind);
OptimizerKind parse_optimizer_kind(std::string_view name);

// constant: eta_k = eta.  robbins_monro: eta_k = eta0 / (k + k0), which has a
// divergent sum and a convergent sum of squares.
struct LearningRateSchedule {
  ScheduleKind kind = ScheduleKind::constant;
  double eta = 0.5;
  double eta0 = 0.5;
  double k0 = 10.0;

  double at(int step) const;
  void validate() const;
  bool operator==(const LearningRateSchedule&) const = default;
};

// theta <- theta - eta * grad. Throws std::domain_error on a non-finite
// gradient.
void sgd_step(PolicyParams& params, const Gradient& grad, double eta);

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  bool operator==(const AdamConfig&) const = default;
};

struct AdamState {
  AdamConfig cfg;
  long long step = 0;
  std::map<ContextKey, std::vector<double>> m;
  std::map<ContextKey, std::vector<double>> v;
};

// Bias-corrected Adam over every stored parameter row (rows absent from the
// gradient see a zero gradient). Throws std::domain_error on a non-finite
// gradient.
void adam_step(AdamState& state, PolicyParams& params, const Gradient& grad, double eta);

}  // namespace grouprl
