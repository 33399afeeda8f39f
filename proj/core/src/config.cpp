#include "grouprl/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "grouprl/metrics_io.hpp"

namespace grouprl {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  while (true) {
    const auto comma = s.find(',');
    const std::string_view item = trim(s.substr(0, comma));
    if (!item.empty()) out.emplace_back(item);
    if (comma == std::string_view::npos) break;
    s.remove_prefix(comma + 1);
  }
  return out;
}

double parse_double(std::string_view key, std::string_view text) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ConfigError("invalid number '" + std::string(text) + "' for key " + std::string(key),
                      std::string(key));
  }
  return v;
}

long long parse_int(std::string_view key, std::string_view text) {
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ConfigError("invalid integer '" + std::string(text) + "' for key " + std::string(key),
                      std::string(key));
  }
  return v;
}

bool parse_bool(std::string_view key, std::string_view text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw ConfigError("invalid boolean '" + std::string(text) + "' for key " + std::string(key),
                    std::string(key));
}

std::string num(double v) { return format_shortest(v); }

// Wraps a parser that may throw a ConfigError without a key so the key is
// always reported.
template <typename F>
auto keyed(std::string_view key, F&& parse) {
  try {
    return parse();
  } catch (const ConfigError& e) {
    if (!e.key().empty()) throw;
    throw ConfigError(std::string(e.what()) + " (key " + std::string(key) + ")", std::string(key));
  }
}

ConfigKey int_key(std::string key, std::string doc, int TrainConfig::*field) {
  return {key, std::move(doc),
          [field](const RunConfig& c) { return std::to_string(c.train.*field); },
          [field, key](RunConfig& c, std::string_view v) {
            c.train.*field = static_cast<int>(parse_int(key, v));
          }};
}

RewardRule* find_rule(TrainConfig& t, RewardKind kind) {
  auto it = std::find_if(t.rules.begin(), t.rules.end(),
                         [kind](const RewardRule& r) { return r.kind == kind; });
  return it == t.rules.end() ? nullptr : &*it;
}

const CosineSchedule& cosine_of(const TrainConfig& t) {
  static const CosineSchedule defaults;
  for (const RewardRule& r : t.rules) {
    if (r.kind == RewardKind::cosine_scaled_accuracy) return r.cosine;
  }
  return defaults;
}

// Cosine parameters live on every cosine rule; the setter updates all of
// them (normally one). Other rules keep the default schedule so configs
// compare equal after a round trip.
ConfigKey cosine_key(std::string key, std::string doc, double CosineSchedule::*field) {
  return {key, std::move(doc), [field](const RunConfig& c) { return num(cosine_of(c.train).*field); },
          [field, key](RunConfig& c, std::string_view v) {
            const double value = parse_double(key, v);
            for (RewardRule& r : c.train.rules) {
              if (r.kind == RewardKind::cosine_scaled_accuracy) r.cosine.*field = value;
            }
          }};
}

std::vector<ConfigKey> build_keys() {
  std::vector<ConfigKey> keys;
  keys.push_back({"run.seed", "RNG seed for prompts, policy and reference sampling",
                  [](const RunConfig& c) { return std::to_string(c.train.seed); },
                  [](RunConfig& c, std::string_view v) {
                    c.train.seed = static_cast<std::uint64_t>(parse_int("run.seed", v));
                  }});
  keys.push_back({"run.output_dir", "output directory (relative paths resolve under $GROUPRL_OUTPUT_ROOT)",
                  [](const RunConfig& c) { return c.output_dir; },
                  [](RunConfig& c, std::string_view v) { c.output_dir = std::string(v); }});
  keys.push_back({"run.metrics_format", "metrics stream format: jsonl",
                  [](const RunConfig& c) { return c.metrics_format; },
                  [](RunConfig& c, std::string_view v) {
                    if (v != "jsonl") {
                      throw ConfigError("run.metrics_format must be jsonl", "run.metrics_format");
                    }
                    c.metrics_format = std::string(v);
                  }});
  keys.push_back({"run.checkpoint_every", "write a checkpoint every N steps (0 = final only)",
                  [](const RunConfig& c) { return std::to_string(c.checkpoint_every); },
                  [](RunConfig& c, std::string_view v) {
                    c.checkpoint_every = static_cast<int>(parse_int("run.checkpoint_every", v));
                    if (c.checkpoint_every < 0) {
                      throw ConfigError("run.checkpoint_every must be >= 0", "run.checkpoint_every");
                    }
                  }});

  keys.push_back({"task.kind", "toy task: mod_sum | parity | copy",
                  [](const RunConfig& c) { return std::string(to_string(c.train.task.kind)); },
                  [](RunConfig& c, std::string_view v) { c.train.task.kind = parse_task_kind(v); }});
  keys.push_back({"task.modulus", "mod_sum modulus m (difficulty knob)",
                  [](const RunConfig& c) { return std::to_string(c.train.task.modulus); },
                  [](RunConfig& c, std::string_view v) {
                    c.train.task.modulus = static_cast<int>(parse_int("task.modulus", v));
                  }});
  keys.push_back({"task.prompt_length", "parity/copy prompt length (difficulty knob)",
                  [](const RunConfig& c) { return std::to_string(c.train.task.prompt_length); },
                  [](RunConfig& c, std::string_view v) {
                    c.train.task.prompt_length = static_cast<int>(parse_int("task.prompt_length", v));
                  }});
  keys.push_back({"task.answer_domain", "copy: number of distinct prompt/answer tokens",
                  [](const RunConfig& c) { return std::to_string(c.train.task.answer_domain); },
                  [](RunConfig& c, std::string_view v) {
                    c.train.task.answer_domain = static_cast<int>(parse_int("task.answer_domain", v));
                  }});

  keys.push_back(int_key("policy.vocab_size", "vocabulary size |V| (eos = |V|-1, THINK_END = |V|-2)",
                         &TrainConfig::vocab_size));
  keys.push_back(int_key("policy.context_order", "generated tokens of context k", &TrainConfig::context_order));
  keys.push_back(int_key("policy.max_len", "maximum response length", &TrainConfig::max_len));

  keys.push_back({"train.algorithm", "grpo | gpg | aapo",
                  [](const RunConfig& c) { return std::string(to_string(c.train.algorithm)); },
                  [](RunConfig& c, std::string_view v) {
                    c.train.algorithm = keyed("train.algorithm", [&] { return parse_algorithm(v); });
                  }});
  keys.push_back(int_key("train.group_size", "responses per prompt G", &TrainConfig::group_size));
  keys.push_back(int_key("train.batch_size", "prompts per step", &TrainConfig::batch_size));
  keys.push_back(int_key("train.steps", "total training steps", &TrainConfig::steps));
  keys.push_back({"train.lr_schedule", "constant | robbins_monro",
                  [](const RunConfig& c) { return std::string(to_string(c.train.schedule.kind)); },
                  [](RunConfig& c, std::string_view v) { c.train.schedule.kind = parse_schedule_kind(v); }});
  keys.push_back({"train.lr", "constant learning rate",
                  [](const RunConfig& c) { return num(c.train.schedule.eta); },
                  [](RunConfig& c, std::string_view v) { c.train.schedule.eta = parse_double("train.lr", v); }});
  keys.push_back({"train.rm_eta0", "Robbins-Monro eta0 in eta_k = eta0 / (k + k0)",
                  [](const RunConfig& c) { return num(c.train.schedule.eta0); },
                  [](RunConfig& c, std::string_view v) {
                    c.train.schedule.eta0 = parse_double("train.rm_eta0", v);
                  }});
  keys.push_back({"train.rm_k0", "Robbins-Monro k0",
                  [](const RunConfig& c) { return num(c.train.schedule.k0); },
                  [](RunConfig& c, std::string_view v) { c.train.schedule.k0 = parse_double("train.rm_k0", v); }});
  keys.push_back({"train.optimizer", "sgd | adam",
                  [](const RunConfig& c) { return std::string(to_string(c.train.optimizer)); },
                  [](RunConfig& c, std::string_view v) { c.train.optimizer = parse_optimizer_kind(v); }});
  keys.push_back({"train.adam_beta1", "Adam beta1",
                  [](const RunConfig& c) { return num(c.train.adam.beta1); },
                  [](RunConfig& c, std::string_view v) { c.train.adam.beta1 = parse_double("train.adam_beta1", v); }});
  keys.push_back({"train.adam_beta2", "Adam beta2",
                  [](const RunConfig& c) { return num(c.train.adam.beta2); },
                  [](RunConfig& c, std::string_view v) { c.train.adam.beta2 = parse_double("train.adam_beta2", v); }});
  keys.push_back({"train.adam_epsilon", "Adam epsilon",
                  [](const RunConfig& c) { return num(c.train.adam.epsilon); },
                  [](RunConfig& c, std::string_view v) {
                    c.train.adam.epsilon = parse_double("train.adam_epsilon", v);
                  }});
  keys.push_back({"train.reference_update_every", "copy policy into reference every N steps (0 = never)",
                  [](const RunConfig& c) { return std::to_string(c.train.reference_update_every.value_or(0)); },
                  [](RunConfig& c, std::string_view v) {
                    const long long n = parse_int("train.reference_update_every", v);
                    if (n < 0) {
                      throw ConfigError("train.reference_update_every must be >= 0",
                                        "train.reference_update_every");
                    }
                    c.train.reference_update_every =
                        n == 0 ? std::nullopt : std::optional<int>(static_cast<int>(n));
                  }});
  keys.push_back(int_key("train.updates_per_batch", "gradient updates per sampled batch",
                         &TrainConfig::updates_per_batch));
  keys.push_back(int_key("train.loss_variance_window", "rolling loss-variance window",
                         &TrainConfig::loss_variance_window));
  keys.push_back({"train.enforce_monitors", "abort when a stability bound is breached",
                  [](const RunConfig& c) { return std::string(c.train.enforce_monitors ? "true" : "false"); },
                  [](RunConfig& c, std::string_view v) {
                    c.train.enforce_monitors = parse_bool("train.enforce_monitors", v);
                  }});

  keys.push_back({"advantage.f_norm", "gpg normalizer: one | std",
                  [](const RunConfig& c) { return std::string(to_string(c.train.advantage.f_norm)); },
                  [](RunConfig& c, std::string_view v) {
                    c.train.advantage.f_norm = keyed("advantage.f_norm", [&] { return parse_norm_kind(v); });
                  }});
  keys.push_back({"advantage.delta_low", "lower margin clip",
                  [](const RunConfig& c) { return num(c.train.advantage.delta_low); },
                  [](RunConfig& c, std::string_view v) {
                    c.train.advantage.delta_low = parse_double("advantage.delta_low", v);
                  }});
  keys.push_back({"advantage.delta_high", "upper margin clip",
                  [](const RunConfig& c) { return num(c.train.advantage.delta_high); },
                  [](RunConfig& c, std::string_view v) {
                    c.train.advantage.delta_high = parse_double("advantage.delta_high", v);
                  }});
  keys.push_back({"advantage.sigma_floor", "lower bound on the group standard deviation",
                  [](const RunConfig& c) { return num(c.train.advantage.sigma_floor); },
                  [](RunConfig& c, std::string_view v) {
                    c.train.advantage.sigma_floor = parse_double("advantage.sigma_floor", v);
                  }});
  keys.push_back({"advantage.zero_tol", "|A| at or below this counts as zero",
                  [](const RunConfig& c) { return num(c.train.advantage.zero_tol); },
                  [](RunConfig& c, std::string_view v) {
                    c.train.advantage.zero_tol = parse_double("advantage.zero_tol", v);
                  }});
  keys.push_back({"advantage.clip_margin", "clip the advantage margin (false = ablation)",
                  [](const RunConfig& c) { return std::string(c.train.advantage.clip_margin ? "true" : "false"); },
                  [](RunConfig& c, std::string_view v) {
                    c.train.advantage.clip_margin = parse_bool("advantage.clip_margin", v);
                  }});

  keys.push_back({"objective.epsilon", "grpo ratio clip",
                  [](const RunConfig& c) { return num(c.train.objective.epsilon); },
                  [](RunConfig& c, std::string_view v) {
                    c.train.objective.epsilon = parse_double("objective.epsilon", v);
                  }});
  keys.push_back({"objective.beta", "grpo k3 KL coefficient (0 disables)",
                  [](const RunConfig& c) { return num(c.train.objective.beta); },
                  [](RunConfig& c, std::string_view v) { c.train.objective.beta = parse_double("objective.beta", v); }});
  keys.push_back({"objective.normalization", "auto | per_response_mean | global_token_mean",
                  [](const RunConfig& c) {
                    return c.train.objective.normalization
                               ? std::string(to_string(*c.train.objective.normalization))
                               : std::string("auto");
                  },
                  [](RunConfig& c, std::string_view v) {
                    if (v == "auto") {
                      c.train.objective.normalization.reset();
                    } else {
                      c.train.objective.normalization =
                          keyed("objective.normalization", [&] { return parse_normalization(v); });
                    }
                  }});

  keys.push_back({"reward.rules", "comma list of format | accuracy | cosine_scaled_accuracy",
                  [](const RunConfig& c) {
                    std::string out;
                    for (const RewardRule& r : c.train.rules) {
                      out += (out.empty() ? "" : ",") + std::string(to_string(r.kind));
                    }
                    return out;
                  },
                  [](RunConfig& c, std::string_view v) {
                    const CosineSchedule cosine = cosine_of(c.train);
                    std::vector<RewardRule> rules;
                    for (const std::string& name : split_list(v)) {
                      RewardRule rule;
                      rule.kind = keyed("reward.rules", [&] { return parse_reward_kind(name); });
                      if (rule.kind == RewardKind::cosine_scaled_accuracy) rule.cosine = cosine;
                      RewardRule* old = find_rule(c.train, rule.kind);
                      rule.weight = old ? old->weight : 1.0;
                      rules.push_back(rule);
                    }
                    if (rules.empty()) throw ConfigError("reward.rules must not be empty", "reward.rules");
                    c.train.rules = std::move(rules);
                  }});
  keys.push_back({"reward.weights", "comma list of weights, one per rule",
                  [](const RunConfig& c) {
                    std::string out;
                    for (const RewardRule& r : c.train.rules) out += (out.empty() ? "" : ",") + num(r.weight);
                    return out;
                  },
                  [](RunConfig& c, std::string_view v) {
                    const std::vector<std::string> items = split_list(v);
                    if (items.size() != c.train.rules.size()) {
                      throw ConfigError("reward.weights has " + std::to_string(items.size()) +
                                            " entries for " + std::to_string(c.train.rules.size()) +
                                            " rules",
                                        "reward.weights");
                    }
                    for (std::size_t i = 0; i < items.size(); ++i) {
                      c.train.rules[i].weight = parse_double("reward.weights", items[i]);
                    }
                  }});
  keys.push_back(cosine_key("reward.cosine.correct_max", "cosine reward for a correct answer at l = 0",
                            &CosineSchedule::correct_max));
  keys.push_back(cosine_key("reward.cosine.correct_min", "cosine reward for a correct answer at l = L",
                            &CosineSchedule::correct_min));
  keys.push_back(cosine_key("reward.cosine.wrong_max", "cosine reward for a wrong answer at l = L",
                            &CosineSchedule::wrong_max));
  keys.push_back(cosine_key("reward.cosine.wrong_min", "cosine reward for a wrong answer at l = 0",
                            &CosineSchedule::wrong_min));
  keys.push_back({"reward.cosine.max_length", "cosine schedule length L",
                  [](const RunConfig& c) { return std::to_string(cosine_of(c.train).max_length); },
                  [](RunConfig& c, std::string_view v) {
                    const int n = static_cast<int>(parse_int("reward.cosine.max_length", v));
                    for (RewardRule& r : c.train.rules) {
                      if (r.kind == RewardKind::cosine_scaled_accuracy) r.cosine.max_length = n;
                    }
                  }});
  return keys;
}

}  // namespace

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = build_keys();
  return keys;
}

void set_value(RunConfig& cfg, std::string_view key, std::string_view value) {
  const auto& keys = config_keys();
  auto it = std::find_if(keys.begin(), keys.end(), [key](const ConfigKey& k) { return k.key == key; });
  if (it == keys.end()) {
    throw ConfigError("unknown config key '" + std::string(key) + "'", std::string(key));
  }
  it->set(cfg, trim(value));
}

void apply_override(RunConfig& cfg, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    throw ConfigError("override '" + std::string(assignment) + "' is not key=value",
                      std::string(trim(assignment)));
  }
  set_value(cfg, trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

RunConfig parse_config(std::string_view text) {
  RunConfig cfg;
  std::vector<std::pair<std::string, std::string>> assignments;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value",
                        std::string(line));
    }
    assignments.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  // Rule list first so weights and cosine parameters attach to the final rules.
  std::stable_partition(assignments.begin(), assignments.end(),
                        [](const auto& kv) { return kv.first == "reward.rules"; });
  for (const auto& [key, value] : assignments) set_value(cfg, key, value);
  return cfg;
}

RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

std::string canonical_text(const RunConfig& cfg) {
  std::string out;
  for (const ConfigKey& k : config_keys()) out += k.key + " = " + k.get(cfg) + "\n";
  return out;
}

std::uint64_t config_hash(const RunConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canonical_text(cfg)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string describe_keys() {
  const RunConfig defaults;
  std::ostringstream out;
  out << "Config keys (key = default  # description):\n";
  for (const ConfigKey& k : config_keys()) {
    out << "  " << k.key << " = " << k.get(defaults) << "  # " << k.doc << '\n';
  }
  return out.str();
}

}  // namespace grouprl
