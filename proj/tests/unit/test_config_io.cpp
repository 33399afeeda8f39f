#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "grouprl/checkpoint.hpp"
#include "grouprl/config.hpp"
#include "grouprl/grad_check.hpp"
#include "grouprl/metrics_io.hpp"

using namespace grouprl;

TEST(Config, ParsesKeysAndComments) {
  const RunConfig cfg = parse_config(
      "# comment\n"
      "train.algorithm = grpo   # trailing comment\n"
      "train.group_size=6\n"
      "\n"
      "reward.rules = accuracy\n"
      "reward.weights = 2.5\n"
      "train.reference_update_every = 0\n");
  EXPECT_EQ(cfg.train.algorithm, Algorithm::grpo);
  EXPECT_EQ(cfg.train.group_size, 6);
  ASSERT_EQ(cfg.train.rules.size(), 1u);
  EXPECT_EQ(cfg.train.rules[0].kind, RewardKind::accuracy);
  EXPECT_EQ(cfg.train.rules[0].weight, 2.5);
  EXPECT_FALSE(cfg.train.reference_update_every.has_value());
}

TEST(Config, WeightsBeforeRulesStillApply) {
  const RunConfig cfg = parse_config("reward.weights = 3,4\nreward.rules = format,accuracy\n");
  EXPECT_EQ(cfg.train.rules[0].weight, 3.0);
  EXPECT_EQ(cfg.train.rules[1].weight, 4.0);
}

TEST(Config, ErrorsNameTheKey) {
  auto key_of = [](const std::string& text) {
    try {
      parse_config(text);
    } catch (const ConfigError& e) {
      return e.key();
    }
    return std::string("<none>");
  };
  EXPECT_EQ(key_of("train.nonsense = 1\n"), "train.nonsense");
  EXPECT_EQ(key_of("train.group_size = six\n"), "train.group_size");
  EXPECT_EQ(key_of("train.algorithm = ppo\n"), "train.algorithm");
  EXPECT_EQ(key_of("reward.rules = format\nreward.weights = 1,2\n"), "reward.weights");
  EXPECT_EQ(key_of("just some words\n"), "just some words");
}

TEST(Config, CanonicalTextRoundTrips) {
  RunConfig cfg;
  cfg.train.algorithm = Algorithm::gpg;
  cfg.train.advantage.f_norm = NormKind::one;
  cfg.train.schedule.kind = ScheduleKind::robbins_monro;
  cfg.train.schedule.eta0 = 0.3;
  cfg.train.reference_update_every = 25;
  cfg.train.objective.normalization = Normalization::per_response_mean;
  cfg.train.rules[1].cosine.correct_min = 0.1;
  cfg.checkpoint_every = 10;
  cfg.train.seed = 123456789012345ULL;
  const RunConfig back = parse_config(canonical_text(cfg));
  EXPECT_EQ(back.train, cfg.train);
  EXPECT_EQ(back.output_dir, cfg.output_dir);
  EXPECT_EQ(back.checkpoint_every, cfg.checkpoint_every);
  EXPECT_EQ(config_hash(back), config_hash(cfg));
  cfg.train.seed += 1;
  EXPECT_NE(config_hash(back), config_hash(cfg));
}

TEST(Config, OverrideAndDescribe) {
  RunConfig cfg;
  apply_override(cfg, "advantage.delta_high=0.5");
  EXPECT_EQ(cfg.train.advantage.delta_high, 0.5);
  EXPECT_THROW(apply_override(cfg, "no_equals_sign"), ConfigError);
  const std::string help = describe_keys();
  for (const ConfigKey& k : config_keys()) EXPECT_NE(help.find(k.key), std::string::npos) << k.key;
}

TEST(FormatShortest, RoundTrips) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 1000; ++i) {
    const double x = u(rng) * std::pow(10.0, static_cast<int>(rng() % 40) - 20);
    EXPECT_EQ(std::stod(format_shortest(x)), x);
  }
  EXPECT_EQ(format_shortest(0.5), "0.5");
  EXPECT_EQ(format_shortest(3.0), "3");
}

TEST(MetricsIo, JsonRoundTripIsExact) {
  StepMetrics m;
  m.step = 17;
  m.learning_rate = 0.1 / 3.0;
  m.loss = -1.0 / 7.0;
  m.monitor = MonitorStatus::violation;
  m.parameter_count = 96;
  m.wall_ms = 1.25;
  const StepMetrics back = from_json_line(to_json_line(m));
  EXPECT_TRUE(back.same_observables(m));
  EXPECT_EQ(back.wall_ms, m.wall_ms);
}

TEST(MetricsIo, CsvExportHasHeaderAndOneRowPerStep) {
  std::stringstream jsonl;
  for (int k = 0; k < 3; ++k) {
    StepMetrics m;
    m.step = k;
    m.loss = 0.1 * k;
    write_jsonl(jsonl, m);
  }
  std::stringstream csv;
  export_csv(jsonl, csv);
  std::string header;
  std::getline(csv, header);
  std::string expected;
  for (const std::string& f : metric_field_names()) expected += (expected.empty() ? "" : ",") + f;
  EXPECT_EQ(header, expected);
  int rows = 0;
  for (std::string line; std::getline(csv, line);) ++rows;
  EXPECT_EQ(rows, 3);
}

TEST(MetricsIo, ReadJsonlRoundTrip) {
  std::stringstream s;
  StepMetrics a, b;
  a.step = 0;
  b.step = 1;
  b.grad_norm = 1e-300;
  write_jsonl(s, a);
  write_jsonl(s, b);
  const auto back = read_jsonl(s);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_TRUE(back[1].same_observables(b));
}

TEST(Checkpoint, SaveLoadIsExact) {
  PolicyParams params(5, 2, 7);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 3.0);
  for (ContextKey key : {1ULL, 99ULL, 0xffffffffffffffffULL}) {
    for (double& x : params.mutable_row(key)) x = n(rng);
  }
  const RngStreams streams(42);
  std::stringstream buf;
  save_checkpoint(buf, Checkpoint{params, 1234, 50, streams.serialize()});
  const Checkpoint back = load_checkpoint(buf);
  EXPECT_EQ(back.params, params);
  EXPECT_EQ(back.config_hash, 1234u);
  EXPECT_EQ(back.step, 50);
  RngStreams restored(0);
  restored.deserialize(back.rng_state);
  RngStreams fresh(42);
  EXPECT_EQ(restored.policy(), fresh.policy());
}

TEST(Checkpoint, RejectsGarbage) {
  std::stringstream buf("not a checkpoint\n");
  EXPECT_THROW(load_checkpoint(buf), std::runtime_error);
}

TEST(GradCheck, RelativeErrorDefinition) {
  EXPECT_EQ(relative_error(0.0, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(relative_error(1.0, 0.5), 0.5);
  EXPECT_DOUBLE_EQ(relative_error(1e-10, 0.0), 1e-4);
}

TEST(GradCheck, DetectsWrongGradient) {
  PolicyParams params(3, 0, 2);
  for (double& x : params.mutable_row(5)) x = 0.3;
  auto loss = [](const PolicyParams& p) {
    double s = 0;
    for (double x : p.row(5)) s += x * x;
    return s;
  };
  Gradient good(3);
  for (double& g : good.row(5)) g = 0.6;
  EXPECT_LT(check_gradient(loss, good, params).max_relative_error, 1e-8);
  Gradient bad = good;
  bad.row(5)[1] = 0.0;
  EXPECT_GT(check_gradient(loss, bad, params).max_relative_error, 0.5);
}
