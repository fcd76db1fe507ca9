// Serial reference vs OpenMP kernels. The first argument of every benchmark
// selects the path: 0 = serial, 1 = parallel.

#include <benchmark/benchmark.h>

#include <cstdio>

#include "subrl/envs.hpp"
#include "subrl/estimator.hpp"
#include "subrl/oracle.hpp"
#include "subrl/parallel.hpp"
#include "subrl/rollout.hpp"

using namespace subrl;

namespace {

Execution exec_of(const benchmark::State& state) { return state.range(0) ? Execution::parallel : Execution::serial; }

struct Coverage30 {
  Smdp grid = build_grid({30, 30, 40, 0.1, std::nullopt});
  RewardPtr reward = WeightedCoverage::on_grid(
      30, 30, mixture_density(30, 30, random_bumps(30, 30, 3, 3.0, 1)).values, 2);
  MlpPolicy policy{ObservationSpec{ObservationKind::one_hot_state_time, 900, 40, 1}, 64, 64, 5};
  Coverage30() { policy.initialize(1); }
};

const Coverage30& coverage30() {
  static const Coverage30 env;
  return env;
}

void BM_RolloutBatch(benchmark::State& state) {
  const auto& env = coverage30();
  const auto batch_size = static_cast<std::size_t>(state.range(1));
  std::uint64_t epoch = 0;
  for (auto _ : state) {
    auto batch = rollout_batch(env.grid, *env.reward, env.policy, batch_size, 7, epoch++, exec_of(state));
    benchmark::DoNotOptimize(batch.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch_size));
}

void BM_PolicyGradient(benchmark::State& state) {
  const auto& env = coverage30();
  const auto batch = rollout_batch(env.grid, *env.reward, env.policy, static_cast<std::size_t>(state.range(1)), 7, 0);
  EmaBaseline baseline(40);
  for (auto _ : state) {
    auto g = policy_gradient(batch, env.policy, EstimatorKind::subpo, nullptr, baseline, 0.005, exec_of(state));
    benchmark::DoNotOptimize(g.gradient.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(1));
}

void BM_ExactJ(benchmark::State& state) {
  static const Smdp grid = build_grid({4, 4, 4, 0.1, std::make_pair(0, 0)});
  static const auto reward = WeightedCoverage::on_grid(4, 4, std::vector<double>(16, 1.0), 1);
  static const TabularSoftmaxPolicy policy(16, 5, 4);
  for (auto _ : state) benchmark::DoNotOptimize(exact_J(grid, *reward, policy, exec_of(state)).value);
}

}  // namespace

BENCHMARK(BM_RolloutBatch)->ArgsProduct({{0, 1}, {64, 500}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PolicyGradient)->ArgsProduct({{0, 1}, {64, 500}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ExactJ)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

int main(int argc, char** argv) {
  std::printf("OpenMP threads available: %d\n", max_threads());
  benchmark::Initialize(&argc, argv);
  if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
  benchmark::RunSpecifiedBenchmarks();
  benchmark::Shutdown();
  return 0;
}
