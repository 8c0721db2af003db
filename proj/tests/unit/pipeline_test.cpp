#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <set>

#include "helpers.hpp"
#include "perfcost/bundle_io.hpp"
#include "perfcost/formats.hpp"
#include "perfcost/pipeline.hpp"
#include "perfcost/synthoracle.hpp"

using namespace perfcost;
using namespace perfcost::testing;
namespace fs = std::filesystem;

namespace {

TrainOptions quick(const Scope& scope = Scope::global()) {
  TrainOptions o;
  o.scope = scope;
  o.seed = 4;
  o.selection.max_k = 2;
  o.selection.cv_folds = 4;
  o.selection.params = cheap(15);
  o.classifier_params = cheap(25);
  o.regressor_params = cheap(40);
  return o;
}

// Choices fixed up front, so only the models are trained.
TrainOptions fixed_quick(const Scope& scope = Scope::global()) {
  auto o = quick(scope);
  o.select_features = false;
  o.baseline = ConfigId{"sys1", 16};
  o.fingerprint_configs = std::vector<ConfigId>{{"sys1", 16}, {"sys2", 8}};
  return o;
}

fs::path temp_dir(const std::string& name) {
  auto p = fs::temp_directory_path() / ("perfcost_test_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST(Scope, ParseAndPrint) {
  EXPECT_EQ(Scope::parse("global"), Scope::global());
  EXPECT_EQ(Scope::parse("system:sys2"), Scope::single_system("sys2"));
  EXPECT_EQ(Scope::parse("local:sys1:8"), Scope::local({"sys1", 8}));
  EXPECT_EQ(Scope::parse("local:sys1:8").to_string(), "local:sys1:8");
  EXPECT_THROW(Scope::parse("galaxy"), ArgumentError);
  EXPECT_THROW(Scope::parse("system:"), ArgumentError);
}

TEST(Targets, LabelSetArithmetic) {
  const auto corpus = generate_corpus(3, 80, 5);
  const auto& ds = corpus.dataset;
  const auto n = ds.all_configs().size();
  EXPECT_GE(n, 26u);
  EXPECT_LE(n, 27u);
  EXPECT_EQ(well_targets(ds, Scope::global(), false).size(), n);
  EXPECT_EQ(well_targets(ds, Scope::global(), true).size(), 4 * n);
  EXPECT_EQ(poor_targets(ds, Scope::global(), false).size(), 3u);
  EXPECT_EQ(poor_targets(ds, Scope::single_system("sys2"), false).size(), 1u);
}

TEST(Targets, LocalNeighbours) {
  const auto& sys = small_corpus().dataset.system("sys1");
  const auto n = sys.configurations.size();
  EXPECT_EQ(neighbours(sys, sys.configurations[0].vcpus).size(), 1u);
  EXPECT_EQ(neighbours(sys, sys.configurations[n - 1].vcpus).size(), 1u);
  for (std::size_t i = 1; i + 1 < n; ++i) EXPECT_EQ(neighbours(sys, sys.configurations[i].vcpus).size(), 2u);
}

TEST(FoldPlan, PartitionAndBalance) {
  std::vector<std::string> apps;
  for (int i = 0; i < 23; ++i) apps.push_back("app" + std::to_string(i));
  const auto plan = FoldPlan::make(apps, 5, 9);
  std::multiset<std::string> seen;
  std::size_t lo = 100, hi = 0;
  for (const auto& f : plan.folds) {
    seen.insert(f.begin(), f.end());
    lo = std::min(lo, f.size());
    hi = std::max(hi, f.size());
  }
  EXPECT_EQ(seen, std::multiset<std::string>(apps.begin(), apps.end()));
  EXPECT_LE(hi - lo, 1u);
  auto reversed = apps;
  std::reverse(reversed.begin(), reversed.end());
  EXPECT_EQ(FoldPlan::make(reversed, 5, 9).folds, plan.folds);
  EXPECT_NE(FoldPlan::make(apps, 5, 10).folds, plan.folds);
}

TEST(Subsample, FullFractionIsIdentity) {
  const auto& ds = small_corpus().dataset;
  EXPECT_EQ(subsample_coverage(ds, 1.0, 3).runs(), ds.runs());
}

TEST(Subsample, CeilingCountPlusForced) {
  const auto corpus = generate_corpus(3, 6, 5);
  const auto& ds = corpus.dataset;
  const auto n = ds.all_configs().size();
  const std::vector<ConfigId> keep{{"sys1", 1}, {"sys2", 8}};
  const auto sub = subsample_coverage(ds, 0.25, 7, keep);
  const auto k = static_cast<std::size_t>(std::ceil(0.25 * static_cast<double>(n)));
  for (const auto& app : ds.apps()) {
    std::set<ConfigId> configs;
    for (const auto& r : sub.runs()) {
      if (r.app_id == app) configs.insert(r.config());
    }
    for (const auto& c : keep) EXPECT_TRUE(configs.contains(c));
    EXPECT_GE(configs.size(), k);
    EXPECT_LE(configs.size(), k + keep.size());
  }
  EXPECT_THROW(subsample_coverage(ds, 0.0, 1), ArgumentError);
}

TEST(TrainBundle, SingleSystemScopeStaysOnSystem) {
  const auto b = train_bundle(small_corpus().dataset, quick(Scope::single_system("sys2")));
  EXPECT_FALSE(b.fingerprint_configs.empty());
  for (const auto& c : b.fingerprint_configs) EXPECT_EQ(c.system_id, "sys2");
  EXPECT_EQ(b.baseline.system_id, "sys2");
  for (const auto& t : b.well_targets()) EXPECT_EQ(t.config.system_id, "sys2");
}

TEST(TrainBundle, GlobalStructure) {
  const auto& ds = small_corpus().dataset;
  auto o = quick();
  o.interference_aware = true;
  const auto b = train_bundle(ds, o);
  EXPECT_TRUE(b.classifier.has_value());
  EXPECT_EQ(b.well_targets().size(), 4 * ds.all_configs().size());
  EXPECT_EQ(b.poor_targets().size(), 4 * ds.systems().size());
  EXPECT_LE(b.fingerprint_configs.size(), 2u);
  EXPECT_EQ(b.selection.selected, b.fingerprint_configs);
  EXPECT_EQ(b.layout().size(), b.regressor_well.feature_count);
}

TEST(TrainBundle, RetrainingIsByteIdentical) {
  const auto& ds = small_corpus().dataset;
  const auto a = temp_dir("retrain_a"), b = temp_dir("retrain_b");
  const auto ca = write_bundle(a, train_bundle(ds, quick()));
  const auto cb = write_bundle(b, train_bundle(ds, quick()));
  EXPECT_EQ(ca, cb);
  for (const auto& e : fs::directory_iterator(a)) {
    EXPECT_EQ(read_text_file(e.path()), read_text_file(b / e.path().filename())) << e.path();
  }
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(TrainBundle, NoClassifierVariant) {
  auto o = fixed_quick();
  o.use_classifier = false;
  const auto b = train_bundle(small_corpus().dataset, o);
  EXPECT_FALSE(b.classifier.has_value());
  EXPECT_TRUE(b.poor_targets().empty());
}

TEST(CrossValidate, LeaveOneOutTestsEveryAppOnce) {
  const auto corpus = generate_corpus(1, 12, 31);
  const auto& ds = corpus.dataset;
  auto o = quick(Scope::single_system("sys1"));
  o.select_features = false;
  o.baseline = ConfigId{"sys1", 8};
  o.fingerprint_configs = std::vector<ConfigId>{{"sys1", 8}};
  const auto plan = FoldPlan::make(ds.apps(), static_cast<int>(ds.apps().size()), 1);
  const auto r = cross_validate(ds, o, plan);
  std::multiset<std::string> tested;
  for (const auto& p : r.predictions) tested.insert(p.app_id);
  EXPECT_EQ(tested, std::multiset<std::string>(ds.apps().begin(), ds.apps().end()));
}

TEST(CrossValidate, RepeatableAndFoldIsolated) {
  const auto& ds = small_corpus().dataset;
  const auto o = fixed_quick();
  const auto plan = FoldPlan::make(ds.apps(), 4, 2);
  const auto a = cross_validate(ds, o, plan);
  const auto b = cross_validate(ds, o, plan);
  EXPECT_EQ(a.summary.mean_smape, b.summary.mean_smape);
  EXPECT_EQ(a.summary.per_app, b.summary.per_app);

  // Poisoning one held-out app's Partial metrics may change only its own
  // predictions among the apps of its fold.
  const auto& fold = plan.folds[0];
  const std::string victim = fold[0];
  std::vector<RunRecord> runs = ds.runs();
  for (auto& r : runs) {
    if (r.app_id == victim && r.run_kind == RunKind::Partial) {
      for (auto& m : r.metrics) m *= 7.0;
    }
  }
  const auto c = cross_validate(Dataset::create(ds.systems(), runs), o, plan);
  for (const auto& app : fold) {
    if (app == victim) continue;
    EXPECT_EQ(a.summary.per_app.at(app), c.summary.per_app.at(app)) << app;
  }
}

TEST(CrossValidate, RoutingRespectsLabels) {
  const auto& ds = small_corpus().dataset;
  const auto o = fixed_quick();
  const auto r = cross_validate(ds, o, FoldPlan::make(ds.apps(), 4, 2));
  for (const auto& p : r.predictions) {
    if (p.label == Scalability::ScalesPoorly) {
      EXPECT_EQ(p.targets.size(), ds.systems().size());
      for (const auto& t : p.targets) EXPECT_EQ(t.config.vcpus, ds.system(t.config.system_id).min_config().vcpus);
    } else {
      EXPECT_EQ(p.targets.size(), ds.all_configs().size());
    }
    for (double s : p.speedups) EXPECT_GT(s, 0.0);
  }
}

TEST(CrossValidate, InterferenceNoneTargetsMatchBaseModel) {
  const auto& ds = small_corpus().dataset;
  auto plain = fixed_quick();
  auto aware = plain;
  aware.interference_aware = true;
  const auto a = train_bundle(ds, plain);
  const auto b = train_bundle(ds, aware);
  std::vector<TargetKey> none_targets;
  for (const auto& t : b.well_targets()) {
    if (t.interference == Interference::None) none_targets.push_back(t);
  }
  EXPECT_EQ(none_targets, a.well_targets());
  const auto matrix = derive_performance_matrix(ds, a.baseline);
  const auto rows_a = training_rows(ds, matrix, {ds.apps()[0]}, a.layout(), false, a.well_targets());
  const auto rows_b = training_rows(ds, matrix, {ds.apps()[0]}, b.layout(), false, none_targets);
  EXPECT_EQ(rows_a.targets.data, rows_b.targets.data);
}

TEST(Local, BundleShapes) {
  const auto& ds = small_corpus().dataset;
  auto o = quick();
  o.select_features = false;
  const auto bundles = train_local_predictors(ds, o);
  EXPECT_EQ(bundles.size(), ds.all_configs().size());
  for (const auto& [config, b] : bundles) {
    const auto& sys = ds.system(config.system_id);
    EXPECT_EQ(b.regressor_well.output_labels.size(), neighbours(sys, config.vcpus).size());
    EXPECT_FALSE(b.classifier.has_value());
    EXPECT_EQ(b.baseline, config);
    EXPECT_EQ(b.fingerprint_configs, std::vector<ConfigId>{config});
  }
}

TEST(Local, NeighbourTargetIsWallTimeRatio) {
  const auto sys = make_system("s", {1, 8}, {"m"});
  std::vector<RunRecord> runs;
  for (int a = 0; a < 4; ++a) {
    const std::string app = "a" + std::to_string(a);
    runs.push_back(partial_run(app, "s", 1, {1.0 + a}));
    runs.push_back(complete_run(app, "s", 1, 100.0, {1.0 + a}));
    runs.push_back(complete_run(app, "s", 8, 50.0, {1.0 + a}));
  }
  const auto ds = Dataset::create({sys}, runs);
  const auto matrix = derive_performance_matrix(ds, {"s", 1});
  EXPECT_DOUBLE_EQ(matrix.speedup("a0", ConfigId{"s", 8}), 2.0);
  auto o = quick();
  o.select_features = false;
  const auto b = train_local_bundle(ds, {"s", 1}, o);
  const std::vector<double> x{2.5};
  EXPECT_DOUBLE_EQ(predict_regressor(b.regressor_well, x)[0], 2.0);
}
