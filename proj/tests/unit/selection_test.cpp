#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "helpers.hpp"
#include "perfcost/selection.hpp"
#include "perfcost/synthoracle.hpp"
#include "perfcost/training.hpp"

using namespace perfcost;
using namespace perfcost::testing;

namespace {

std::vector<ConfigId> cands(int n) {
  std::vector<ConfigId> out;
  for (int i = 1; i <= n; ++i) out.push_back({"s", i});
  return out;
}

SelectionOptions quick_options() {
  SelectionOptions o;
  o.cv_folds = 5;
  o.params = cheap(20);
  o.seed = 3;
  return o;
}

// One system with one informative metric (the app's parallel fraction) and
// nine noise metrics on every configuration.
Dataset informative_dataset() {
  std::vector<std::string> catalog;
  for (int m = 0; m < 10; ++m) catalog.push_back("m" + std::to_string(m));
  const auto sys = make_system("s", {1, 8, 16}, catalog);
  std::mt19937_64 gen(12);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<RunRecord> runs;
  for (int a = 0; a < 40; ++a) {
    const std::string app = "app" + std::to_string(100 + a);
    const double p = 0.5 + 0.5 * u(gen);
    for (int v : {1, 8, 16}) {
      const double wall = 100.0 * ((1.0 - p) + p / v);
      std::vector<double> metrics{p};
      for (int m = 1; m < 10; ++m) metrics.push_back(u(gen));
      runs.push_back(partial_run(app, "s", v, metrics));
      runs.push_back(complete_run(app, "s", v, wall, metrics));
    }
  }
  return Dataset::create({sys}, runs);
}

}  // namespace

TEST(Greedy, ThresholdStopsAfterThirdConfiguration) {
  const std::map<std::size_t, double> by_size{{1, 30.0}, {2, 25.0}, {3, 23.0}, {4, 22.6}};
  const auto result = greedy_select(cands(6), 4, 1.0, [&](const std::vector<ConfigId>& set) {
    // Candidate s:k is best at step k; the others are slightly worse.
    const double extra = set.back().vcpus == static_cast<int>(set.size()) ? 0.0 : 0.5;
    return by_size.at(set.size()) + extra;
  });
  EXPECT_EQ(result.selected, (std::vector<ConfigId>{{"s", 1}, {"s", 2}, {"s", 3}}));
  EXPECT_EQ(result.trace.stop_reason, StopReason::ThresholdReached);
  ASSERT_EQ(result.trace.steps.size(), 4u);
  EXPECT_FALSE(result.trace.steps[3].retained);
  EXPECT_NEAR(*result.trace.steps[3].improvement, 0.4, 1e-12);
  EXPECT_FALSE(result.trace.steps[0].improvement.has_value());
}

TEST(Greedy, MaxKAndExhaustion) {
  auto eval = [](const std::vector<ConfigId>& set) { return 100.0 - 10.0 * static_cast<double>(set.size()); };
  const auto a = greedy_select(cands(5), 2, 1.0, eval);
  EXPECT_EQ(a.selected.size(), 2u);
  EXPECT_EQ(a.trace.stop_reason, StopReason::MaxK);
  const auto b = greedy_select(cands(3), 5, 1.0, eval);
  EXPECT_EQ(b.selected.size(), 3u);
  EXPECT_EQ(b.trace.stop_reason, StopReason::Exhausted);
}

TEST(Greedy, TiesGoToEarlierCandidate) {
  const auto r = greedy_select(cands(4), 1, 1.0, [](const std::vector<ConfigId>&) { return 7.0; });
  EXPECT_EQ(r.selected, (std::vector<ConfigId>{{"s", 1}}));
}

TEST(Greedy, ChosenCandidateIsStepMinimum) {
  std::mt19937_64 gen(5);
  std::map<std::vector<ConfigId>, double> memo;
  const auto r = greedy_select(cands(7), 4, -1e9, [&](const std::vector<ConfigId>& set) {
    auto key = set;
    std::sort(key.begin(), key.end());
    auto it = memo.find(key);
    if (it == memo.end()) it = memo.emplace(key, std::uniform_real_distribution<double>(0, 50)(gen)).first;
    return it->second;
  });
  for (const auto& step : r.trace.steps) {
    double min = INFINITY;
    for (const auto& [c, e] : step.candidate_errors) min = std::min(min, e);
    EXPECT_EQ(step.error_after, min);
  }
  for (std::size_t i = 1; i < r.trace.steps.size(); ++i) {
    EXPECT_DOUBLE_EQ(*r.trace.steps[i].improvement, r.trace.steps[i - 1].error_after - r.trace.steps[i].error_after);
  }
}

TEST(FingerprintSelection, MaxKOneMatchesExhaustiveSearch) {
  const auto& ds = small_corpus().dataset;
  const auto candidates = ds.all_configs();
  const auto matrix = derive_performance_matrix(ds, candidates[2]);
  const auto targets = well_targets(ds, Scope::global(), false);
  auto o = quick_options();
  o.max_k = 1;
  const auto r = greedy_select_fingerprint_configs(ds, matrix, candidates, targets, o);
  const auto well = scales_well_apps(matrix, ds);
  ConfigId best;
  double best_error = INFINITY;
  for (const auto& c : candidates) {
    const double e = regression_cv_error(ds, matrix, well, full_layout(ds, {c}), false, targets, o.params, o.cv_folds, o.seed);
    if (e < best_error) {
      best_error = e;
      best = c;
    }
  }
  EXPECT_EQ(r.selected, std::vector<ConfigId>{best});
}

TEST(FingerprintSelection, Deterministic) {
  const auto& ds = small_corpus().dataset;
  const auto candidates = ds.all_configs();
  const auto matrix = derive_performance_matrix(ds, candidates[0]);
  const auto targets = well_targets(ds, Scope::global(), false);
  auto o = quick_options();
  o.max_k = 2;
  const auto a = greedy_select_fingerprint_configs(ds, matrix, candidates, targets, o);
  const auto b = greedy_select_fingerprint_configs(ds, matrix, candidates, targets, o);
  EXPECT_EQ(a.selected, b.selected);
  ASSERT_EQ(a.trace.steps.size(), b.trace.steps.size());
  for (std::size_t i = 0; i < a.trace.steps.size(); ++i) EXPECT_EQ(a.trace.steps[i].candidate_errors, b.trace.steps[i].candidate_errors);
}

TEST(FingerprintSelection, SpansSeveralSystems) {
  const auto corpus = generate_corpus(3, 40, 3);
  const auto& ds = corpus.dataset;
  const auto candidates = ds.all_configs();
  const auto matrix = derive_performance_matrix(ds, ConfigId{"sys1", 32});
  SelectionOptions o;
  o.max_k = 3;
  o.stop_threshold = -INFINITY;
  o.seed = 3;
  const auto r = greedy_select_fingerprint_configs(ds, matrix, candidates, well_targets(ds, Scope::global(), false), o);
  std::set<std::string> systems;
  for (const auto& c : r.selected) systems.insert(c.system_id);
  EXPECT_EQ(r.selected.size(), 3u);
  EXPECT_GE(systems.size(), 2u);
}

TEST(BaselineSelection, SingleCandidate) {
  const auto& ds = small_corpus().dataset;
  const auto c = ds.all_configs()[4];
  EXPECT_EQ(select_baseline_config(ds, {c}, {c}, well_targets(ds, Scope::global(), false), quick_options()).baseline, c);
}

TEST(BaselineSelection, IdenticalErrorsPreferLowerConfiguration) {
  // Two copies of one system: baselines on either copy see identical matrices.
  const auto corpus = generate_corpus(1, 20, 23);
  auto systems = corpus.dataset.systems();
  auto twin = systems[0];
  twin.system_id = "sys0";
  for (auto& c : twin.configurations) c.system_id = "sys0";
  std::vector<RunRecord> runs = corpus.dataset.runs();
  for (const auto& r : corpus.dataset.runs()) {
    auto copy = r;
    copy.system_id = "sys0";
    runs.push_back(copy);
  }
  systems.push_back(twin);
  const auto ds = Dataset::create(systems, runs);
  const auto targets = well_targets(ds, Scope::single_system("sys1"), false);
  const auto choice = select_baseline_config(ds, {{"sys1", 8}, {"sys0", 8}}, {{"sys1", 1}}, targets, quick_options());
  ASSERT_EQ(choice.candidate_errors.size(), 2u);
  EXPECT_EQ(choice.candidate_errors[0].second, choice.candidate_errors[1].second);
  EXPECT_EQ(choice.baseline, (ConfigId{"sys0", 8}));
}

TEST(BaselineSelection, ChosenErrorIsMinimal) {
  const auto& ds = small_corpus().dataset;
  const auto candidates = ds.all_configs();
  const std::vector<ConfigId> fp{candidates[1]};
  const auto targets = well_targets(ds, Scope::global(), false);
  const auto o = quick_options();
  const auto choice = select_baseline_config(ds, candidates, fp, targets, o);
  for (const auto& c : candidates) {
    const auto m = derive_performance_matrix(ds, c);
    const double e = regression_cv_error(ds, m, scales_well_apps(m, ds), full_layout(ds, fp), false, targets, o.params,
                                         o.cv_folds, o.seed);
    const auto chosen = derive_performance_matrix(ds, choice.baseline);
    const double best = regression_cv_error(ds, chosen, scales_well_apps(chosen, ds), full_layout(ds, fp), false, targets,
                                            o.params, o.cv_folds, o.seed);
    EXPECT_LE(best, e) << to_string(c);
  }
}

TEST(FeatureSelection, InformativeMetricRetained) {
  const auto ds = informative_dataset();
  const ConfigId fp{"s", 1};
  const auto matrix = derive_performance_matrix(ds, fp);
  auto o = quick_options();
  o.params = cheap(30);
  const auto fs = select_features(ds, matrix, {fp}, well_targets(ds, Scope::global(), false), false, o);
  const auto& kept = fs.mask.at(fp);
  EXPECT_NE(std::find(kept.begin(), kept.end(), "m0"), kept.end());
  EXPECT_EQ(fs.fraction_errors.size(), std::size(kFeatureFractions));
  double full_error = NAN, chosen_error = NAN;
  for (const auto& [f, e] : fs.fraction_errors) {
    if (f == 1.0) full_error = e;
    if (f == fs.fraction) chosen_error = e;
  }
  EXPECT_LE(chosen_error, full_error);
}

TEST(FeatureSelection, SingleMetricKeepsFullMask) {
  const auto sys = make_system("s", {1, 8}, {"only"});
  std::vector<RunRecord> runs;
  for (int a = 0; a < 12; ++a) {
    const std::string app = "a" + std::to_string(10 + a);
    const double p = 0.5 + 0.04 * a;
    for (int v : {1, 8}) {
      runs.push_back(partial_run(app, "s", v, {p}));
      runs.push_back(complete_run(app, "s", v, 10.0 * ((1 - p) + p / v), {p}));
    }
  }
  const auto ds = Dataset::create({sys}, runs);
  const auto matrix = derive_performance_matrix(ds, {"s", 1});
  auto o = quick_options();
  o.cv_folds = 3;
  const auto fs = select_features(ds, matrix, {{"s", 1}}, well_targets(ds, Scope::global(), false), false, o);
  EXPECT_EQ(fs.fraction, 1.0);
  EXPECT_EQ(fs.mask, full_mask(ds, {{"s", 1}}));
}

TEST(FeatureSelection, MaskWithinCatalog) {
  const auto& ds = small_corpus().dataset;
  const auto configs = ds.all_configs();
  const std::vector<ConfigId> fp{configs[0], configs[configs.size() - 1]};
  const auto matrix = derive_performance_matrix(ds, configs[0]);
  const auto fs = select_features(ds, matrix, fp, well_targets(ds, Scope::global(), false), false, quick_options());
  for (const auto& [c, metrics] : fs.mask) {
    EXPECT_FALSE(metrics.empty());
    const auto& catalog = ds.system(c.system_id).metric_catalog;
    for (const auto& m : metrics) EXPECT_NE(std::find(catalog.begin(), catalog.end(), m), catalog.end());
  }
  FeatureMask bad{{configs[0], {"no_such_metric"}}};
  EXPECT_THROW(mask_layout(ds, {configs[0]}, bad), SchemaError);
}
