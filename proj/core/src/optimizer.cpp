#include "grouprl/optimizer.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace grouprl {

std::string_view to_string(ScheduleKind kind) {
  return kind == ScheduleKind::constant ? "constant" : "robbins_monro";
}

ScheduleKind parse_schedule_kind(std::string_view name) {
  if (name == "constant") return ScheduleKind::constant;
  if (name == "robbins_monro") return ScheduleKind::robbins_monro;
  throw ConfigError("unknown learning-rate schedule '" + std::string(name) + "'",
                    "train.lr_schedule");
}

std::string_view to_string(OptimizerKind kind) {
  return kind == OptimizerKind::sgd ? "sgd" : "adam";
}

OptimizerKind parse_optimizer_kind(std::string_view name) {
  if (name == "sgd") return OptimizerKind::sgd;
  if (name == "adam") return OptimizerKind::adam;
  throw ConfigError("unknown optimizer '" + std::string(name) + "'", "train.optimizer");
}

double LearningRateSchedule::at(int step) const {
  if (kind == ScheduleKind::constant) return eta;
  return eta0 / (static_cast<double>(step) + k0);
}

void LearningRateSchedule::validate() const {
  if (kind == ScheduleKind::constant && !(eta > 0.0)) {
    throw ConfigError("train.lr must be positive", "train.lr");
  }
  if (kind == ScheduleKind::robbins_monro) {
    if (!(eta0 > 0.0)) throw ConfigError("train.rm_eta0 must be positive", "train.rm_eta0");
    if (!(k0 > 0.0)) throw ConfigError("train.rm_k0 must be positive", "train.rm_k0");
  }
}

namespace {

void require_finite(const Gradient& grad) {
  if (!grad.all_finite()) throw std::domain_error("optimizer: non-finite gradient");
}

}  // namespace

void sgd_step(PolicyParams& params, const Gradient& grad, double eta) {
  require_finite(grad);
  for (const auto& [key, g] : grad.rows) {
    std::span<double> theta = params.mutable_row(key);
    for (std::size_t b = 0; b < g.size(); ++b) theta[b] -= eta * g[b];
  }
}

void adam_step(AdamState& state, PolicyParams& params, const Gradient& grad, double eta) {
  require_finite(grad);
  for (const auto& [key, g] : grad.rows) params.mutable_row(key);
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bias1 = 1.0 - std::pow(state.cfg.beta1, t);
  const double bias2 = 1.0 - std::pow(state.cfg.beta2, t);
  const std::size_t vocab = static_cast<std::size_t>(params.vocab_size());
  const std::vector<double> zeros(vocab, 0.0);
  for (const auto& [key, unused] : params.rows()) {
    auto git = grad.rows.find(key);
    const std::vector<double>& g = git == grad.rows.end() ? zeros : git->second;
    auto [mit, m_new] = state.m.try_emplace(key, vocab, 0.0);
    auto [vit, v_new] = state.v.try_emplace(key, vocab, 0.0);
    std::span<double> theta = params.mutable_row(key);
    for (std::size_t b = 0; b < vocab; ++b) {
      double& m = mit->second[b];
      double& v = vit->second[b];
      m = state.cfg.beta1 * m + (1.0 - state.cfg.beta1) * g[b];
      v = state.cfg.beta2 * v + (1.0 - state.cfg.beta2) * g[b] * g[b];
      const double m_hat = m / bias1;
      const double v_hat = v / bias2;
      theta[b] -= eta * m_hat / (std::sqrt(v_hat) + state.cfg.epsilon);
    }
  }
}

}  // namespace grouprl
