#include <benchmark/benchmark.h>

#include <random>

#include "grouprl/advantage.hpp"
#include "grouprl/objective.hpp"
#include "grouprl/policy.hpp"
#include "grouprl/trainer.hpp"

using namespace grouprl;

namespace {

std::vector<double> random_rewards(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 3.0);
  std::vector<double> r(n);
  for (double& x : r) x = u(rng);
  return r;
}

void BM_AapoAdvantage(benchmark::State& state) {
  const auto g = static_cast<std::size_t>(state.range(0));
  const auto pol = random_rewards(g, 1);
  const auto ref = random_rewards(g, 2);
  const AdvantageConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(aapo_advantage(pol, ref, cfg));
}
BENCHMARK(BM_AapoAdvantage)->Arg(2)->Arg(8)->Arg(64);

void BM_SampleGroup(benchmark::State& state) {
  const PolicyParams params(16, 1, 16);
  Rng rng(3);
  const TokenSeq prompt{1, 2};
  for (auto _ : state) {
    benchmark::DoNotOptimize(sample_group(params, prompt, static_cast<int>(state.range(0)), rng));
  }
}
BENCHMARK(BM_SampleGroup)->Arg(8)->Arg(32);

void BM_AapoLossAndGrad(benchmark::State& state) {
  const PolicyParams params(16, 1, 16);
  Rng rng(4);
  std::vector<ResponseGroup> groups;
  std::vector<AdvantageVector> advs;
  const AdvantageConfig cfg;
  for (Token a = 0; a < 16; ++a) {
    groups.push_back(sample_group(params, TokenSeq{a, 1}, 8, rng));
    advs.push_back(aapo_advantage(random_rewards(8, a), random_rewards(8, a + 100), cfg));
  }
  for (auto _ : state) benchmark::DoNotOptimize(aapo_loss(groups, advs, params));
}
BENCHMARK(BM_AapoLossAndGrad);

void BM_TrainStep(benchmark::State& state) {
  TrainConfig cfg;
  cfg.algorithm = state.range(0) == 0 ? Algorithm::grpo : Algorithm::aapo;
  cfg.steps = 10;
  for (auto _ : state) benchmark::DoNotOptimize(train(cfg));
  state.SetItemsProcessed(state.iterations() * cfg.steps);
}
BENCHMARK(BM_TrainStep)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
