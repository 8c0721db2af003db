#include <benchmark/benchmark.h>

#include "perfcost/learners.hpp"
#include "perfcost/random.hpp"

namespace {

using perfcost::HyperParams;
using perfcost::Matrix;

Matrix features(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  perfcost::Rng rng(seed);
  Matrix x(rows, cols);
  for (auto& v : x.data) v = rng.uniform();
  return x;
}

void BM_FitRegressor(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  const auto outputs = static_cast<std::size_t>(state.range(1));
  const auto x = features(rows, 150, 1);
  Matrix y(rows, outputs);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t o = 0; o < outputs; ++o) y.at(r, o) = 1.0 + x.at(r, o) * x.at(r, o + 1) * 8.0;
  }
  HyperParams p;
  p.n_trees = 40;
  p.max_depth = 3;
  p.learning_rate = 0.3;
  p.max_bins = 16;
  for (auto _ : state) benchmark::DoNotOptimize(perfcost::fit_boosted_regressor(x, y, p, 7));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(outputs));
}
BENCHMARK(BM_FitRegressor)->Args({144, 1})->Args({144, 26})->Unit(benchmark::kMillisecond);

void BM_FitForest(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  const auto x = features(rows, 150, 2);
  std::vector<perfcost::Scalability> labels;
  for (std::size_t r = 0; r < rows; ++r) {
    labels.push_back(x.at(r, 3) + x.at(r, 9) > 1.2 ? perfcost::Scalability::ScalesPoorly
                                                   : perfcost::Scalability::ScalesWell);
  }
  const auto p = HyperParams::classifier_defaults();
  for (auto _ : state) benchmark::DoNotOptimize(perfcost::fit_forest_classifier(x, labels, p, 3));
}
BENCHMARK(BM_FitForest)->Arg(160)->Unit(benchmark::kMillisecond);

void BM_PredictRegressor(benchmark::State& state) {
  const auto x = features(144, 150, 4);
  Matrix y(144, 26, 2.0);
  for (std::size_t r = 0; r < 144; ++r) y.at(r, 0) = x.at(r, 0);
  const auto model = perfcost::fit_boosted_regressor(x, y, HyperParams::regressor_defaults(), 5);
  std::size_t r = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(perfcost::predict_regressor(model, x.row(r)));
    r = (r + 1) % x.rows;
  }
}
BENCHMARK(BM_PredictRegressor);

}  // namespace
