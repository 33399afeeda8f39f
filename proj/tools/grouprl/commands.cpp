#include "grouprl/commands.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "grouprl/checkpoint.hpp"
#include "grouprl/config.hpp"
#include "grouprl/grad_check.hpp"
#include "grouprl/metrics_io.hpp"
#include "grouprl/trainer.hpp"

namespace grouprl::cli {

namespace fs = std::filesystem;

namespace {

constexpr double kGradCheckTolerance = 1e-4;

std::vector<double> parse_list(const std::string& text, const std::string& flag) {
  std::vector<double> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("invalid number '" + item + "' in " + flag, flag);
    }
  }
  return out;
}

std::string join(const std::vector<double>& xs) {
  std::string out;
  for (double x : xs) out += (out.empty() ? "" : ",") + format_shortest(x);
  return out;
}

RunConfig load_run_config(const std::string& path, const std::vector<std::string>& overrides) {
  RunConfig cfg = path.empty() ? RunConfig{} : load_config_file(path);
  for (const std::string& o : overrides) apply_override(cfg, o);
  return cfg;
}

fs::path resolve_output(const std::string& dir) {
  fs::path p(dir);
  if (p.is_relative()) {
    if (const char* root = std::getenv(kOutputRootEnv); root != nullptr && *root != '\0') {
      p = fs::path(root) / p;
    }
  }
  return p;
}

void write_checkpoint(const fs::path& path, const TrainState& state, std::uint64_t hash) {
  std::ofstream out(path);
  save_checkpoint(out, Checkpoint{state.params, hash, state.step, state.rngs.serialize()});
}

int cmd_train(const std::string& config_path, const std::vector<std::string>& overrides,
              int steps_override, const std::string& out_override, std::ostream& out,
              std::ostream& err) {
  RunConfig cfg = load_run_config(config_path, overrides);
  if (steps_override >= 0) cfg.train.steps = steps_override;
  if (!out_override.empty()) cfg.output_dir = out_override;
  cfg.train.validate();

  const fs::path dir = resolve_output(cfg.output_dir);
  fs::create_directories(dir / "checkpoints");
  const std::uint64_t hash = config_hash(cfg);
  {
    std::ofstream config_out(dir / "config.txt");
    config_out << "# config_hash " << hash << '\n' << canonical_text(cfg);
  }

  std::ofstream metrics(dir / "metrics.jsonl", std::ios::trunc);
  auto observer = [&](const TrainState& state, const StepMetrics& m) {
    write_jsonl(metrics, m);
    if (cfg.checkpoint_every > 0 && state.step % cfg.checkpoint_every == 0) {
      write_checkpoint(dir / "checkpoints" / ("step_" + std::to_string(state.step) + ".ckpt"), state,
                       hash);
    }
    if (state.step == cfg.train.steps) write_checkpoint(dir / "checkpoints" / "final.ckpt", state, hash);
  };

  TrainResult result = [&] {
    try {
      return train(cfg.train, observer);
    } catch (const MonitorViolation& v) {
      metrics.flush();
      std::ofstream diag(dir / "monitor_violation.json");
      diag << to_json_line(v.metrics()) << '\n';
      throw;
    }
  }();
  metrics.close();

  if (cfg.train.steps == 0) {
    write_checkpoint(dir / "checkpoints" / "final.ckpt",
                     TrainState{0, result.params, result.reference, RngStreams(cfg.train.seed)}, hash);
  }

  const Task task(cfg.train.task, cfg.train.vocab_size);
  const std::vector<Prompt> prompts = task.enumerate_prompts();
  nlohmann::json summary;
  summary["config_hash"] = hash;
  summary["steps"] = cfg.train.steps;
  summary["algorithm"] = std::string(to_string(cfg.train.algorithm));
  summary["greedy_accuracy"] =
      prompts.empty() ? nlohmann::json(nullptr)
                      : nlohmann::json(greedy_accuracy(result.params, task, prompts));
  if (!result.metrics.empty()) {
    const StepMetrics& last = result.metrics.back();
    summary["final_policy_reward_mean"] = last.policy_reward_mean;
    summary["final_loss"] = last.loss;
    summary["final_zero_aug_adv_group_fraction"] = last.zero_aug_adv_group_fraction;
  }
  summary["parameter_count"] = result.params.parameter_count();
  std::ofstream(dir / "summary.json") << summary.dump(2) << '\n';

  out << "trained " << cfg.train.steps << " steps (" << to_string(cfg.train.algorithm)
      << "), metrics: " << (dir / "metrics.jsonl").string() << '\n';
  if (!prompts.empty()) {
    out << "greedy accuracy: " << summary["greedy_accuracy"].get<double>() << '\n';
  }
  (void)err;
  return kExitOk;
}

int cmd_grad_check(const std::string& config_path, const std::vector<std::string>& overrides,
                   std::ostream& out) {
  RunConfig cfg = load_run_config(config_path, overrides);
  const TrainConfig& t = cfg.train;
  t.validate();
  const Task task(t.task, t.vocab_size);
  Rng rng(t.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  PolicyParams sampling(t.vocab_size, t.context_order, t.max_len);
  const PromptBatch batch = task.generate_batch(std::min(t.batch_size, 2), rng);

  // Random logits on every context the sampled responses can visit, then a
  // small perturbation so grpo ratios differ from one.
  std::vector<ResponseGroup> groups;
  for (const Prompt& p : batch.prompts) {
    ResponseGroup g = sample_group(sampling, p.tokens, t.group_size, rng);
    for (const TokenSeq& r : g.responses) {
      for (std::size_t i = 0; i < r.size(); ++i) {
        std::span<double> row =
            sampling.mutable_row(sampling.context_key(g.prompt_id, std::span(r).first(i)));
        for (double& v : row) v = normal(rng);
      }
    }
    groups.push_back(std::move(g));
  }
  for (ResponseGroup& g : groups) {
    for (std::size_t i = 0; i < g.size(); ++i) {
      g.logprobs[i] = logprob(sampling, g.prompt, g.responses[i]).per_token;
    }
  }
  PolicyParams params = sampling;
  for (const auto& [key, logits] : sampling.rows()) {
    for (double& v : params.mutable_row(key)) v += 0.1 * normal(rng);
  }
  PolicyParams reference = sampling;

  const AdvantageConfig adv_cfg = t.advantage_config();
  std::vector<AdvantageVector> advantages;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    std::vector<double> pol;
    std::vector<double> ref;
    for (std::size_t i = 0; i < groups[g].size(); ++i) {
      pol.push_back(normal(rng));
      ref.push_back(normal(rng));
    }
    advantages.push_back(compute_advantage(pol, ref, adv_cfg));
  }

  const ObjectiveConfig obj = t.objective_config();
  auto loss = [&](const PolicyParams& p) {
    return compute_loss(groups, advantages, p, &reference, obj).loss;
  };
  const LossReport report = compute_loss(groups, advantages, params, &reference, obj);
  const GradCheckResult check = check_gradient(loss, report.grad, params);
  out << "grad-check algorithm=" << to_string(t.algorithm)
      << " parameters=" << check.parameters_checked
      << " max_relative_error=" << check.max_relative_error
      << " max_abs_error=" << check.max_abs_error << '\n';
  if (check.max_relative_error > kGradCheckTolerance) {
    out << "FAIL: relative error above " << kGradCheckTolerance << '\n';
    return kExitVerification;
  }
  out << "PASS\n";
  return kExitOk;
}

int cmd_advantage(const std::string& estimator, const std::string& policy,
                  const std::string& reference, const std::string& f_norm, double delta_low,
                  double delta_high, double sigma_floor, double zero_tol, bool no_clip,
                  std::ostream& out) {
  AdvantageConfig cfg;
  cfg.estimator = parse_estimator(estimator);
  cfg.f_norm = parse_norm_kind(f_norm);
  cfg.delta_low = delta_low;
  cfg.delta_high = delta_high;
  cfg.sigma_floor = sigma_floor;
  cfg.zero_tol = zero_tol;
  cfg.clip_margin = !no_clip;
  cfg.validate();
  const std::vector<double> pol = parse_list(policy, "--policy");
  std::vector<double> ref;
  if (cfg.estimator == Estimator::aapo) {
    if (reference.empty()) throw ConfigError("--reference is required for aapo", "--reference");
    ref = parse_list(reference, "--reference");
  }
  const AdvantageVector adv = compute_advantage(pol, ref, cfg);
  out << "estimator: " << to_string(cfg.estimator) << '\n';
  out << "advantage: " << join(adv.values) << '\n';
  if (cfg.estimator == Estimator::aapo) {
    out << "margin: " << join(adv.margin_raw) << '\n';
    std::string flags;
    for (bool b : adv.clip_active) flags += (flags.empty() ? "" : ",") + std::string(b ? "true" : "false");
    out << "clip_active: " << flags << '\n';
  }
  out << "group_all_zero: " << (adv.group_all_zero ? "true" : "false") << '\n';
  return kExitOk;
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  if (text.find(',') == std::string::npos) {
    const unsigned long long n = std::stoull(text);
    for (std::uint64_t s = 0; s < n; ++s) seeds.push_back(s);
    return seeds;
  }
  for (double v : parse_list(text, "--seeds")) seeds.push_back(static_cast<std::uint64_t>(v));
  return seeds;
}

int cmd_compare(const std::string& path_a, const std::string& path_b,
                const std::vector<std::string>& overrides, const std::string& seeds_text,
                const std::string& csv_path, std::ostream& out) {
  const RunConfig a = load_run_config(path_a, overrides);
  const RunConfig b = load_run_config(path_b, overrides);
  const std::vector<std::uint64_t> seeds = parse_seeds(seeds_text);
  const CompareReport report = compare_dynamics(a.train, b.train, seeds);
  if (csv_path.empty()) {
    out << report.to_csv();
    return kExitOk;
  }
  const fs::path path = resolve_output(csv_path);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream(path) << report.to_csv();
  for (Algorithm algo : {a.train.algorithm, b.train.algorithm}) {
    out << to_string(algo) << ": mean all-zero-group fraction first half "
        << report.mean_all_zero(algo, 0) << ", second half " << report.mean_all_zero(algo, 1)
        << '\n';
    if (a.train.algorithm == b.train.algorithm) break;
  }
  out << "report: " << path.string() << '\n';
  return kExitOk;
}

int cmd_export(const std::string& metrics_path, const std::string& format,
               const std::string& out_path, std::ostream& out, std::ostream& err) {
  if (format != "csv") {
    err << "export: unsupported format '" << format << "'\n";
    return kExitUsage;
  }
  std::ifstream in(metrics_path);
  if (!in) {
    err << "export: cannot read '" << metrics_path << "'\n";
    return kExitUsage;
  }
  if (out_path.empty()) {
    export_csv(in, out);
  } else {
    std::ofstream csv(out_path);
    export_csv(in, csv);
  }
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"grouprl: group-relative policy optimization on toy verifiable tasks", "grouprl"};
  app.require_subcommand(1);
  app.footer("\n" + describe_keys());

  std::string config_path;
  std::vector<std::string> overrides;
  int steps = -1;
  std::string out_dir;
  auto* train_cmd = app.add_subcommand("train", "run the training loop and write metrics");
  train_cmd->add_option("config", config_path, "config file (key = value lines)");
  train_cmd->add_option("--set", overrides, "override a config key: --set key=value");
  train_cmd->add_option("--steps", steps, "override train.steps");
  train_cmd->add_option("--out", out_dir, "override run.output_dir");
  train_cmd->footer("\n" + describe_keys());

  auto* grad_cmd = app.add_subcommand("grad-check", "finite-difference check of the configured loss");
  grad_cmd->add_option("config", config_path, "config file");
  grad_cmd->add_option("--set", overrides, "override a config key: --set key=value");

  std::string estimator = "grpo";
  std::string policy;
  std::string reference;
  std::string f_norm = "std";
  AdvantageConfig adv_defaults;
  double delta_low = adv_defaults.delta_low;
  double delta_high = adv_defaults.delta_high;
  double sigma_floor = adv_defaults.sigma_floor;
  double zero_tol = adv_defaults.zero_tol;
  bool no_clip = false;
  auto* adv_cmd = app.add_subcommand("advantage", "compute one group's advantages");
  adv_cmd->add_option("--estimator", estimator, "grpo | gpg | aapo")->capture_default_str();
  adv_cmd->add_option("--policy", policy, "comma-separated policy rewards")->required();
  adv_cmd->add_option("--reference", reference, "comma-separated reference rewards (aapo)");
  adv_cmd->add_option("--f-norm", f_norm, "gpg normalizer: one | std")->capture_default_str();
  adv_cmd->add_option("--delta-low", delta_low, "lower margin clip")->capture_default_str();
  adv_cmd->add_option("--delta-high", delta_high, "upper margin clip")->capture_default_str();
  adv_cmd->add_option("--sigma-floor", sigma_floor, "std floor")->capture_default_str();
  adv_cmd->add_option("--zero-tol", zero_tol, "zero tolerance")->capture_default_str();
  adv_cmd->add_flag("--no-clip", no_clip, "add the raw margin (ablation)");

  std::string config_a;
  std::string config_b;
  std::string seeds = "5";
  std::string csv_out;
  auto* cmp_cmd = app.add_subcommand("compare", "paired runs of two configs over shared seeds");
  cmp_cmd->add_option("config_a", config_a, "first config")->required();
  cmp_cmd->add_option("config_b", config_b, "second config")->required();
  cmp_cmd->add_option("--seeds", seeds, "seed count N (0..N-1) or comma list")->capture_default_str();
  cmp_cmd->add_option("--set", overrides, "override applied to both configs");
  cmp_cmd->add_option("--out", csv_out, "CSV report path (default: stdout)");

  std::string metrics_path;
  std::string format = "csv";
  std::string export_out;
  auto* exp_cmd = app.add_subcommand("export", "flatten a metrics stream");
  exp_cmd->add_option("metrics", metrics_path, "metrics.jsonl path")->required();
  exp_cmd->add_option("--format", format, "output format: csv")->capture_default_str();
  exp_cmd->add_option("--out", export_out, "output path (default: stdout)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*train_cmd) return cmd_train(config_path, overrides, steps, out_dir, out, err);
    if (*grad_cmd) return cmd_grad_check(config_path, overrides, out);
    if (*adv_cmd) {
      return cmd_advantage(estimator, policy, reference, f_norm, delta_low, delta_high,
                           sigma_floor, zero_tol, no_clip, out);
    }
    if (*cmp_cmd) return cmd_compare(config_a, config_b, overrides, seeds, csv_out, out);
    if (*exp_cmd) return cmd_export(metrics_path, format, export_out, out, err);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what();
    if (!e.key().empty()) err << " [key: " << e.key() << "]";
    err << '\n';
    return kExitUsage;
  } catch (const MonitorViolation& e) {
    err << "monitor breach: " << e.what() << '\n';
    return kExitMonitor;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace grouprl::cli
