// Serial reference kernels against their OpenMP counterparts.

#include <benchmark/benchmark.h>

#include <cmath>
#include <map>

#include "jil/cost.hpp"
#include "jil/segment.hpp"
#include "jil/sim.hpp"

using namespace jil;

namespace {

const Dataset& data(std::size_t n) {
  static std::map<std::size_t, Dataset> cache;
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, gen_scenario({Scenario::S1, n, 4, 1}).first).first;
  return it->second;
}

const std::vector<double> kLambdas{0.0, 1e-3, 1e-2};

void BM_CostTableSerial(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const CellStats cells(data(n), make_grid(n, 5.0));
  for (auto _ : state) benchmark::DoNotOptimize(fill_cost_table_serial(cells, kLambdas));
}

void BM_CostTableParallel(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const CellStats cells(data(n), make_grid(n, 5.0));
  for (auto _ : state) benchmark::DoNotOptimize(fill_cost_table_parallel(cells, kLambdas));
}

void BM_Pelt(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const int m = make_grid(n, 5.0);
  const auto table = fill_cost_table_parallel(CellStats(data(n), m), kLambdas);
  const CostFn cost = [&](const Interval& iv) { return table.at(iv.lo, iv.hi, 0); };
  for (auto _ : state) benchmark::DoNotOptimize(pelt(cost, m, 4.0 * std::log(n) / n));
}

void BM_DpNoPrune(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const int m = make_grid(n, 5.0);
  const auto table = fill_cost_table_parallel(CellStats(data(n), m), kLambdas);
  const CostFn cost = [&](const Interval& iv) { return table.at(iv.lo, iv.hi, 0); };
  for (auto _ : state) benchmark::DoNotOptimize(dp_no_prune(cost, m, 4.0 * std::log(n) / n));
}

}  // namespace

BENCHMARK(BM_CostTableSerial)->Arg(400)->Arg(800)->Arg(1600)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CostTableParallel)->Arg(400)->Arg(800)->Arg(1600)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Pelt)->Arg(800)->Arg(1600)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_DpNoPrune)->Arg(800)->Arg(1600)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
