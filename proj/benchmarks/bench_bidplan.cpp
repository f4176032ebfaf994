#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "bidplan/convexify.hpp"
#include "bidplan/planner.hpp"
#include "bidplan/simulator.hpp"

using namespace bidplan;

namespace {

SupplyCurve ramp(double rate) { return SupplyCurve::time_homogeneous({0.0, 1.0, 2.0}, {0.0, 1.0, 1.0}, rate, 1.0); }

void BM_ConvexMajorant(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> grid(n), v(n);
  for (std::size_t i = 0; i < n; ++i) {
    grid[i] = static_cast<double>(i);
    v[i] = 0.01 * grid[i] * grid[i] + 5.0 * u(rng);
  }
  for (auto _ : state) benchmark::DoNotOptimize(convex_majorant(grid, v));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_ConvexMajorant)->RangeMultiplier(2)->Range(16, 512)->Complexity();

void BM_SolvePlan(benchmark::State& state) {
  const int K = static_cast<int>(state.range(0));
  const std::vector<SupplyCurve> curves{ramp(1.0), ramp(2.0), ramp(1.5)};
  const std::vector<Contract> c{{0, {0}, 2, 6}, {1, {0, 1}, 4, 9}, {2, {1, 2}, 3, 12}, {3, {0, 2}, 2, 12}};
  const auto grid = build_grid(c, K);
  const auto tables = tabulate_for_grid(curves, Mechanism::SecondPrice, grid, {65, 32});
  for (auto _ : state) benchmark::DoNotOptimize(solve_plan(c, tables, grid));
}
BENCHMARK(BM_SolvePlan)->Arg(12)->Arg(24)->Arg(48)->Unit(benchmark::kMillisecond);

void BM_RunSim(benchmark::State& state) {
  std::vector<std::array<HourBucket, 24>> buckets(2);
  for (auto& type : buckets)
    for (auto& h : type) h = {{0.02, 0.05, 0.1}, {0.1, 0.3, 0.5, 0.7, 0.9}};
  const MarketSampler sampler(std::move(buckets));
  TableCache cache({ramp(20.0), ramp(20.0)}, Mechanism::SecondPrice, {65, 16});
  SimSetup setup{&sampler, &cache, {{0, {0}, 100, 12}, {1, {0, 1}, 150, 24}}, {}, {}};
  setup.controller.update_hours = static_cast<double>(state.range(0));
  std::uint64_t r = 0;
  for (auto _ : state) benchmark::DoNotOptimize(run_replication(setup, replication_seeds(3, static_cast<int>(r++))));
}
BENCHMARK(BM_RunSim)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
