#include "grouprl/metrics_io.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "json.hpp"

namespace grouprl {

using nlohmann::json;

namespace {

MonitorStatus parse_monitor(const std::string& text) {
  if (text == "pass") return MonitorStatus::pass;
  if (text == "violation") return MonitorStatus::violation;
  if (text == "not_applicable") return MonitorStatus::not_applicable;
  throw std::runtime_error("metrics: unknown monitor status '" + text + "'");
}

// Applies `visit(name, field)` to every metric field in schema order.
template <typename Metrics, typename Visitor>
void for_each_field(Metrics& m, Visitor&& visit) {
  visit("step", m.step);
  visit("learning_rate", m.learning_rate);
  visit("policy_reward_mean", m.policy_reward_mean);
  visit("policy_reward_max", m.policy_reward_max);
  visit("reference_reward_mean", m.reference_reward_mean);
  visit("margin_mean", m.margin_mean);
  visit("clip_fraction", m.clip_fraction);
  visit("zero_adv_response_fraction", m.zero_adv_response_fraction);
  visit("zero_adv_group_fraction", m.zero_adv_group_fraction);
  visit("zero_aug_adv_response_fraction", m.zero_aug_adv_response_fraction);
  visit("zero_aug_adv_group_fraction", m.zero_aug_adv_group_fraction);
  visit("max_abs_advantage", m.max_abs_advantage);
  visit("loss", m.loss);
  visit("loss_variance", m.loss_variance);
  visit("kl_value", m.kl_value);
  visit("grad_norm", m.grad_norm);
  visit("update_norm", m.update_norm);
  visit("m_emp", m.m_emp);
  visit("advantage_bound", m.advantage_bound);
  visit("update_bound", m.update_bound);
  visit("loss_floor", m.loss_floor);
  visit("monitor", m.monitor);
  visit("uniform_reward_groups", m.uniform_reward_groups);
  visit("margin_bound_violations", m.margin_bound_violations);
  visit("mean_response_length", m.mean_response_length);
  visit("policy_samples", m.policy_samples);
  visit("reference_samples", m.reference_samples);
  visit("parameter_count", m.parameter_count);
  visit("wall_ms", m.wall_ms);
}

json to_json(const StepMetrics& m) {
  json j = json::object();
  for_each_field(m, [&j](const char* name, const auto& value) {
    if constexpr (std::is_same_v<std::decay_t<decltype(value)>, MonitorStatus>) {
      j[name] = std::string(to_string(value));
    } else {
      j[name] = value;
    }
  });
  return j;
}

}  // namespace

const std::vector<std::string>& metric_field_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    StepMetrics probe;
    for_each_field(probe, [&out](const char* name, const auto&) { out.emplace_back(name); });
    return out;
  }();
  return names;
}

std::string to_json_line(const StepMetrics& metrics) { return to_json(metrics).dump(); }

StepMetrics from_json_line(const std::string& line) {
  const json j = json::parse(line);
  StepMetrics m;
  for_each_field(m, [&j](const char* name, auto& value) {
    if (!j.contains(name)) throw std::runtime_error(std::string("metrics: missing field ") + name);
    using T = std::decay_t<decltype(value)>;
    if constexpr (std::is_same_v<T, MonitorStatus>) {
      value = parse_monitor(j.at(name).get<std::string>());
    } else {
      value = j.at(name).get<T>();
    }
  });
  return m;
}

void write_jsonl(std::ostream& out, const StepMetrics& metrics) {
  out << to_json_line(metrics) << '\n';
}

std::vector<StepMetrics> read_jsonl(std::istream& in) {
  std::vector<StepMetrics> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(from_json_line(line));
  }
  return out;
}

std::string format_shortest(double value) {
  char buffer[64];
  const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, result.ptr);
}

void export_csv(std::istream& jsonl, std::ostream& csv) {
  const auto& names = metric_field_names();
  for (std::size_t i = 0; i < names.size(); ++i) csv << (i ? "," : "") << names[i];
  csv << '\n';
  std::string line;
  while (std::getline(jsonl, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (i) csv << ',';
      const json& v = j.at(names[i]);
      if (v.is_number_float()) {
        csv << format_shortest(v.get<double>());
      } else if (v.is_number_unsigned()) {
        csv << v.get<std::uint64_t>();
      } else if (v.is_number_integer()) {
        csv << v.get<std::int64_t>();
      } else if (v.is_string()) {
        csv << v.get<std::string>();
      } else {
        csv << v.dump();
      }
    }
    csv << '\n';
  }
}

}  // namespace grouprl
