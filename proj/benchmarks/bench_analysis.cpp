#include <benchmark/benchmark.h>

#include <utility>
#include <vector>

#include "perfcost/analysis.hpp"
#include "perfcost/random.hpp"

namespace {

void BM_Smape(benchmark::State& state) {
  perfcost::Rng rng(1);
  std::vector<double> p(static_cast<std::size_t>(state.range(0))), a(p.size());
  for (auto& v : p) v = rng.uniform(0.1, 10.0);
  for (auto& v : a) v = rng.uniform(0.1, 10.0);
  for (auto _ : state) benchmark::DoNotOptimize(perfcost::smape(p, a));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Smape)->Arg(27)->Arg(4096);

void BM_ParetoFrontier(benchmark::State& state) {
  perfcost::Rng rng(2);
  std::vector<std::pair<double, double>> pts(static_cast<std::size_t>(state.range(0)));
  for (auto& pt : pts) pt = {rng.uniform(), rng.uniform()};
  for (auto _ : state) benchmark::DoNotOptimize(perfcost::pareto_frontier(pts));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_ParetoFrontier)->RangeMultiplier(4)->Range(16, 16384)->Complexity();

}  // namespace
