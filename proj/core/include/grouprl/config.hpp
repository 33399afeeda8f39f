#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "grouprl/trainer.hpp"

namespace grouprl {

struct RunConfig {
  TrainConfig train;
  std::string output_dir = "runs/default";
  std::string metrics_format = "jsonl";
  int checkpoint_every = 0;  // 0 disables periodic checkpoints
};

struct ConfigKey {
  std::string key;
  std::string doc;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, std::string_view)> set;
};

// Every accepted key in canonical order.
const std::vector<ConfigKey>& config_keys();

// Parses "key = value" lines; '#' starts a comment. Unknown keys and bad
// values throw ConfigError naming the key. Keys absent from the text keep
// their defaults.
RunConfig parse_config(std::string_view text);
RunConfig load_config_file(const std::string& path);

// Applies "key=value".
void apply_override(RunConfig& cfg, std::string_view assignment);
void set_value(RunConfig& cfg, std::string_view key, std::string_view value);

// One "key = value" line per key in canonical order; parse_config of this
// text reproduces cfg.
std::string canonical_text(const RunConfig& cfg);

// FNV-1a 64 of canonical_text.
std::uint64_t config_hash(const RunConfig& cfg);

// Key listing with defaults, for --help.
std::string describe_keys();

}  // namespace grouprl
