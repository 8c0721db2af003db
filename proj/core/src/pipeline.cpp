#include "perfcost/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "perfcost/parallel.hpp"
#include "perfcost/random.hpp"

namespace perfcost {

namespace {

std::vector<TargetKey> parse_labels(const BoostedRegressor& model) {
  std::vector<TargetKey> out;
  for (const auto& label : model.output_labels) out.push_back(parse_target_key(label));
  return out;
}

std::vector<std::string> target_labels(const std::vector<TargetKey>& targets) {
  std::vector<std::string> out;
  for (const auto& t : targets) out.push_back(to_string(t));
  return out;
}

std::vector<SystemSpec> scope_systems(const Dataset& dataset, const Scope& scope, const ConfigId& baseline) {
  std::set<std::string> ids{baseline.system_id};
  for (const auto& c : scope_configs(dataset, scope)) ids.insert(c.system_id);
  if (scope.kind == ScopeKind::Local) ids.insert(scope.config.system_id);
  std::vector<SystemSpec> out;
  for (const auto& id : ids) out.push_back(dataset.system(id));
  return out;
}

// Regressor over `targets` trained on `apps`. Targets no training app covers
// are dropped; fewer than two apps give a per-target mean predictor.
BoostedRegressor fit_class_regressor(const Dataset& dataset, const PerformanceMatrix& matrix,
                                     const std::vector<std::string>& apps, const FeatureLayout& layout,
                                     bool include_relative_times, std::vector<TargetKey> targets,
                                     const HyperParams& params, std::uint64_t seed, const char* name,
                                     std::vector<std::string>& warnings) {
  std::vector<TargetKey> kept;
  for (const auto& t : targets) {
    const bool any = std::any_of(apps.begin(), apps.end(), [&](const std::string& app) {
      return matrix.covered(app, t);
    });
    if (any || apps.empty()) {
      kept.push_back(t);
    } else {
      warnings.push_back(std::string(name) + ": target " + to_string(t) +
                         " has no ground truth among training apps; dropped");
    }
  }
  targets = std::move(kept);

  const auto rows = training_rows(dataset, matrix, apps, layout, include_relative_times, targets);
  if (apps.size() < 2 || rows.features.rows == 0) {
    warnings.push_back(std::string(name) + ": " + std::to_string(apps.size()) +
                       " training app(s); using per-target mean predictor");
    std::vector<double> means(targets.size(), 1.0);
    for (std::size_t t = 0; t < targets.size(); ++t) {
      double sum = 0.0;
      int n = 0;
      for (const auto& app : apps) {
        const double v = matrix.speedup_or_nan(app, targets[t]);
        if (!std::isnan(v)) {
          sum += v;
          ++n;
        }
      }
      if (n > 0) means[t] = sum / n;
    }
    return constant_regressor(std::move(means), target_labels(targets), rows.features.cols);
  }
  return fit_boosted_regressor(rows.features, rows.targets, params, seed, &rows.observed,
                               target_labels(targets));
}

SelectionOptions selection_for(const TrainOptions& options) {
  auto s = options.selection;
  s.seed = derive_seed(options.seed, "selection");
  return s;
}

}  // namespace

FeatureLayout TrainedBundle::layout() const {
  FeatureLayout out;
  for (const auto& c : fingerprint_configs) {
    const auto it = feature_mask.find(c);
    if (it == feature_mask.end()) continue;
    for (const auto& metric : it->second) out.push_back({c, metric});
  }
  return out;
}

std::vector<TargetKey> TrainedBundle::well_targets() const { return parse_labels(regressor_well); }
std::vector<TargetKey> TrainedBundle::poor_targets() const { return parse_labels(regressor_poor); }

TrainedBundle train_bundle(const Dataset& dataset, const TrainOptions& options) {
  if (options.scope.kind == ScopeKind::Local) return train_local_bundle(dataset, options.scope.config, options);
  options.classifier_params.validate();
  options.regressor_params.validate();
  options.selection.params.validate();

  TrainedBundle bundle;
  bundle.scope = options.scope;
  bundle.interference_aware = options.interference_aware;
  bundle.include_relative_times = options.include_relative_times;
  bundle.seed = options.seed;
  const auto sel = selection_for(options);

  const auto candidates = scope_candidates(dataset, options.scope);
  if (candidates.empty()) throw ConfigurationError("scope " + options.scope.to_string() + " has no configurations");
  // Selection scores the no-interference targets; interference-aware bundles
  // reuse its choices.
  const auto selection_targets = perfcost::well_targets(dataset, options.scope, false);

  if (options.baseline) {
    if (!dataset.has_config(*options.baseline)) {
      throw ConfigurationError("baseline " + to_string(*options.baseline) + " is not declared");
    }
    bundle.baseline = *options.baseline;
  } else {
    const std::vector<ConfigId> provisional =
        options.fingerprint_configs ? *options.fingerprint_configs : std::vector<ConfigId>{candidates.front()};
    auto choice = select_baseline_config(dataset, candidates, provisional, selection_targets, sel);
    bundle.baseline = choice.baseline;
    bundle.baseline_errors = std::move(choice.candidate_errors);
  }

  const auto matrix = derive_performance_matrix(dataset, bundle.baseline);
  const auto labels = scalability_labels(matrix, dataset, &bundle.warnings);
  std::vector<std::string> all_apps, well, poor;
  for (const auto& [app, label] : labels) {
    all_apps.push_back(app);
    (label == Scalability::ScalesWell ? well : poor).push_back(app);
  }
  if (all_apps.size() < 2) throw ValidationError("training needs at least 2 labeled apps");

  if (options.fingerprint_configs) {
    if (options.fingerprint_configs->empty()) throw ConfigurationError("empty fingerprint configuration list");
    for (const auto& c : *options.fingerprint_configs) {
      if (!dataset.has_config(c)) throw ConfigurationError("fingerprint configuration " + to_string(c) + " is not declared");
    }
    bundle.fingerprint_configs = *options.fingerprint_configs;
  } else {
    bundle.selection = greedy_select_fingerprint_configs(dataset, matrix, candidates, selection_targets, sel);
    bundle.fingerprint_configs = bundle.selection.selected;
    for (const auto& w : bundle.selection.trace.warnings) bundle.warnings.push_back(w);
  }

  if (options.feature_mask) {
    bundle.feature_mask = *options.feature_mask;
  } else if (options.select_features) {
    auto fs = select_features(dataset, matrix, bundle.fingerprint_configs, selection_targets,
                              options.include_relative_times, sel);
    bundle.feature_mask = std::move(fs.mask);
    bundle.feature_fraction_errors = std::move(fs.fraction_errors);
  } else {
    bundle.feature_mask = full_mask(dataset, bundle.fingerprint_configs);
  }
  const auto layout = mask_layout(dataset, bundle.fingerprint_configs, bundle.feature_mask);
  bundle.feature_mask.clear();
  for (const auto& c : bundle.fingerprint_configs) bundle.feature_mask[c];
  for (const auto& slot : layout) bundle.feature_mask[slot.config].push_back(slot.metric);
  bundle.systems = scope_systems(dataset, options.scope, bundle.baseline);

  const auto well_set = perfcost::well_targets(dataset, options.scope, options.interference_aware);
  if (options.use_classifier) {
    const auto rows = training_rows(dataset, matrix, all_apps, layout, options.include_relative_times, {});
    std::vector<Scalability> y;
    for (const auto& app : rows.row_app) y.push_back(labels.at(app));
    if (rows.features.rows < 2) throw ValidationError("classifier needs at least 2 training rows");
    bundle.classifier = fit_forest_classifier(rows.features, y, options.classifier_params,
                                              derive_seed(options.seed, "classifier"));
    bundle.regressor_well = fit_class_regressor(dataset, matrix, well, layout, options.include_relative_times,
                                                well_set, options.regressor_params,
                                                derive_seed(options.seed, "regressor_well"), "regressor_well",
                                                bundle.warnings);
    bundle.regressor_poor = fit_class_regressor(
        dataset, matrix, poor, layout, options.include_relative_times,
        perfcost::poor_targets(dataset, options.scope, options.interference_aware), options.regressor_params,
        derive_seed(options.seed, "regressor_poor"), "regressor_poor", bundle.warnings);
  } else {
    bundle.regressor_well = fit_class_regressor(dataset, matrix, all_apps, layout, options.include_relative_times,
                                                well_set, options.regressor_params,
                                                derive_seed(options.seed, "regressor_well"), "regressor_well",
                                                bundle.warnings);
    bundle.regressor_poor = constant_regressor({}, {}, bundle.regressor_well.feature_count);
  }
  return bundle;
}

TrainedBundle train_local_bundle(const Dataset& dataset, const ConfigId& config, const TrainOptions& options) {
  options.regressor_params.validate();
  if (!dataset.has_config(config)) throw ConfigurationError("configuration " + to_string(config) + " is not declared");
  TrainedBundle bundle;
  bundle.scope = Scope::local(config);
  bundle.interference_aware = options.interference_aware;
  bundle.include_relative_times = false;
  bundle.seed = options.seed;
  bundle.baseline = config;
  bundle.fingerprint_configs = {config};

  const auto matrix = derive_performance_matrix(dataset, config);
  for (const auto& app : matrix.unusable_apps()) {
    bundle.warnings.push_back("app '" + app + "' has no Complete run on " + to_string(config) +
                              "; unusable for this local predictor");
  }
  const auto& apps = matrix.apps();
  const auto targets = perfcost::well_targets(dataset, bundle.scope, options.interference_aware);
  auto local_targets = perfcost::well_targets(dataset, bundle.scope, false);

  if (options.feature_mask && options.feature_mask->contains(config)) {
    bundle.feature_mask[config] = options.feature_mask->at(config);
  } else if (options.select_features && apps.size() >= 2) {
    auto sel = selection_for(options);
    auto fs = select_features(dataset, matrix, {config}, local_targets, false, sel);
    bundle.feature_mask = std::move(fs.mask);
    bundle.feature_fraction_errors = std::move(fs.fraction_errors);
  } else {
    bundle.feature_mask = full_mask(dataset, {config});
  }
  const auto layout = mask_layout(dataset, bundle.fingerprint_configs, bundle.feature_mask);
  bundle.systems = scope_systems(dataset, bundle.scope, config);
  bundle.regressor_well = fit_class_regressor(dataset, matrix, apps, layout, false, targets,
                                              options.regressor_params,
                                              derive_seed(options.seed, "local:" + to_string(config)),
                                              "regressor_local", bundle.warnings);
  bundle.regressor_poor = constant_regressor({}, {}, bundle.regressor_well.feature_count);
  return bundle;
}

std::map<ConfigId, TrainedBundle> train_local_predictors(const Dataset& dataset, const TrainOptions& options) {
  const auto configs = dataset.all_configs();
  std::vector<TrainedBundle> bundles(configs.size());
  parallel_for(configs.size(), [&](std::size_t i) { bundles[i] = train_local_bundle(dataset, configs[i], options); });
  std::map<ConfigId, TrainedBundle> out;
  for (std::size_t i = 0; i < configs.size(); ++i) out.emplace(configs[i], std::move(bundles[i]));
  return out;
}

Dataset subsample_coverage(const Dataset& dataset, double fraction, std::uint64_t seed,
                           const std::vector<ConfigId>& always_keep) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ArgumentError("coverage fraction must be in (0, 1]");
  if (fraction == 1.0) return dataset;
  const auto configs = dataset.all_configs();
  const auto k = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(configs.size()) - 1e-9));
  std::map<std::string, std::set<ConfigId>, std::less<>> kept;
  for (const auto& app : dataset.apps()) {
    Rng rng(derive_seed(seed, app));
    auto pool = configs;
    for (std::size_t i = 0; i < k && i < pool.size(); ++i) {
      const auto j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
      std::swap(pool[i], pool[j]);
    }
    std::set<ConfigId> keep(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(std::min(k, pool.size())));
    keep.insert(always_keep.begin(), always_keep.end());
    kept.emplace(app, std::move(keep));
  }
  return dataset.filter_runs([&](const RunRecord& run) {
    const auto it = kept.find(run.app_id);
    return it != kept.end() && it->second.contains(run.config());
  });
}

RoutedPrediction route_and_predict(const TrainedBundle& bundle, const Dataset& dataset, const std::string& app_id) {
  const auto fp = assemble_fingerprint(dataset, app_id, bundle.layout(), bundle.include_relative_times,
                                       bundle.baseline, RunSource::Partial);
  const auto row = fp.feature_row();
  RoutedPrediction out;
  out.app_id = app_id;
  if (bundle.classifier) out.label = predict_classifier(*bundle.classifier, row);
  const bool poor = out.label == Scalability::ScalesPoorly && !bundle.regressor_poor.chains.empty();
  const auto& model = poor ? bundle.regressor_poor : bundle.regressor_well;
  out.targets = parse_labels(model);
  out.speedups = predict_regressor(model, row);
  for (auto& s : out.speedups) {
    if (!(s > kSpeedupFloor) || !std::isfinite(s)) s = kSpeedupFloor;
  }
  return out;
}

namespace {

std::vector<std::string> complement(const std::vector<std::string>& all, const std::vector<std::string>& fold) {
  std::vector<std::string> out;
  for (const auto& a : all) {
    if (std::find(fold.begin(), fold.end(), a) == fold.end()) out.push_back(a);
  }
  return out;
}

struct FoldOutcome {
  std::vector<SmapeTerm> terms;
  std::vector<std::string> warnings;
  std::vector<RoutedPrediction> predictions;
};

}  // namespace

CvResult cross_validate(const Dataset& dataset, const TrainOptions& options, const FoldPlan& plan,
                        const CvOptions& cv) {
  CvResult result;
  const auto& apps = dataset.apps();
  std::vector<FoldOutcome> outcomes(plan.folds.size());

  parallel_for(plan.folds.size(), [&](std::size_t f) {
    auto& out = outcomes[f];
    const auto& test = plan.folds[f];
    if (test.empty()) {
      out.warnings.push_back("fold " + std::to_string(f) + " has no test apps; skipped");
      return;
    }
    const auto train_apps = complement(apps, test);
    auto train = dataset.restrict_apps(std::set<std::string>(train_apps.begin(), train_apps.end()));
    auto fold_options = options;
    fold_options.seed = derive_seed(options.seed, f);

    if (cv.coverage < 1.0) {
      // Fingerprint and baseline configurations are chosen before the
      // ground truth is thinned; they are never dropped.
      if (!fold_options.baseline || !fold_options.fingerprint_configs) {
        auto probe = fold_options;
        probe.select_features = false;
        const auto chosen = train_bundle(train, probe);
        fold_options.baseline = chosen.baseline;
        fold_options.fingerprint_configs = chosen.fingerprint_configs;
      }
      auto keep = *fold_options.fingerprint_configs;
      keep.push_back(*fold_options.baseline);
      train = subsample_coverage(train, cv.coverage, derive_seed(cv.coverage_seed, f), keep);
    }

    const auto bundle = train_bundle(train, fold_options);
    for (const auto& w : bundle.warnings) out.warnings.push_back("fold " + std::to_string(f) + ": " + w);
    const auto truth = derive_performance_matrix(dataset, bundle.baseline);
    for (const auto& app : test) {
      if (!dataset.has_app(app)) continue;
      RoutedPrediction p;
      try {
        p = route_and_predict(bundle, dataset, app);
      } catch (const FingerprintError& e) {
        out.warnings.push_back(std::string("fold ") + std::to_string(f) + ": " + e.what() + "; not scored");
        continue;
      }
      auto terms = score_app(app, p.speedups, p.targets, truth);
      out.terms.insert(out.terms.end(), terms.begin(), terms.end());
      out.predictions.push_back(std::move(p));
    }
  });

  std::vector<SmapeTerm> terms;
  for (auto& o : outcomes) {
    terms.insert(terms.end(), o.terms.begin(), o.terms.end());
    for (auto& w : o.warnings) result.warnings.push_back(std::move(w));
    for (auto& p : o.predictions) {
      result.predicted_labels[p.app_id] = p.label;
      result.predictions.push_back(std::move(p));
    }
  }
  if (terms.empty()) throw ValidationError("cross-validation scored no predictions");
  result.summary = summarize(std::move(terms));

  const auto first_baseline = options.baseline ? *options.baseline : dataset.all_configs().front();
  for (const auto& [app, label] : scalability_labels(derive_performance_matrix(dataset, first_baseline), dataset)) {
    result.true_labels[app] = label;
  }
  return result;
}

std::map<ConfigId, ErrorSummary> cross_validate_local(const Dataset& dataset, const TrainOptions& options,
                                                      const FoldPlan& plan) {
  const auto configs = dataset.all_configs();
  const auto& apps = dataset.apps();
  // [fold][config] terms
  std::vector<std::vector<std::vector<SmapeTerm>>> terms(plan.folds.size(),
                                                         std::vector<std::vector<SmapeTerm>>(configs.size()));
  std::vector<PerformanceMatrix> truth;
  for (const auto& c : configs) truth.push_back(derive_performance_matrix(dataset, c));

  const std::size_t units = plan.folds.size() * configs.size();
  parallel_for(units, [&](std::size_t u) {
    const std::size_t f = u / configs.size();
    const std::size_t c = u % configs.size();
    const auto& test = plan.folds[f];
    if (test.empty()) return;
    const auto train_apps = complement(apps, test);
    const auto train = dataset.restrict_apps(std::set<std::string>(train_apps.begin(), train_apps.end()));
    auto fold_options = options;
    fold_options.seed = derive_seed(options.seed, f);
    const auto bundle = train_local_bundle(train, configs[c], fold_options);
    for (const auto& app : test) {
      if (dataset.partial_run(app, configs[c]) == nullptr) continue;
      const auto p = route_and_predict(bundle, dataset, app);
      auto t = score_app(app, p.speedups, p.targets, truth[c]);
      terms[f][c].insert(terms[f][c].end(), t.begin(), t.end());
    }
  });

  std::map<ConfigId, ErrorSummary> out;
  for (std::size_t c = 0; c < configs.size(); ++c) {
    std::vector<SmapeTerm> all;
    for (std::size_t f = 0; f < plan.folds.size(); ++f) all.insert(all.end(), terms[f][c].begin(), terms[f][c].end());
    if (!all.empty()) out.emplace(configs[c], summarize(std::move(all)));
  }
  return out;
}

ClassifierCv cross_validate_classifier(const Dataset& dataset, const ConfigId& baseline,
                                       const FeatureLayout& layout, bool include_relative_times,
                                       const HyperParams& params, const FoldPlan& plan, std::uint64_t seed) {
  const auto matrix = derive_performance_matrix(dataset, baseline);
  const auto labels = scalability_labels(matrix, dataset);
  std::vector<std::string> labeled;
  for (const auto& [app, _] : labels) labeled.push_back(app);

  ClassifierCv out;
  out.true_labels = labels;
  std::vector<std::vector<std::pair<std::string, Scalability>>> predicted(plan.folds.size());
  parallel_for(plan.folds.size(), [&](std::size_t f) {
    const auto& test = plan.folds[f];
    if (test.empty()) return;
    const auto train = complement(labeled, test);
    const auto rows = training_rows(dataset, matrix, train, layout, include_relative_times, {});
    std::vector<Scalability> y;
    for (const auto& app : rows.row_app) y.push_back(labels.at(app));
    const auto model = fit_forest_classifier(rows.features, y, params, derive_seed(seed, f));
    for (const auto& app : test) {
      if (!labels.contains(app)) continue;
      const auto row = fingerprint_row(dataset, app, layout, include_relative_times, baseline, RunSource::Partial);
      if (!row) continue;
      predicted[f].emplace_back(app, predict_classifier(model, *row));
    }
  });
  std::size_t correct = 0, total = 0;
  for (const auto& fold : predicted) {
    for (const auto& [app, label] : fold) {
      out.predicted_labels[app] = label;
      correct += label == labels.at(app) ? 1 : 0;
      ++total;
    }
  }
  out.accuracy = total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
  return out;
}

}  // namespace perfcost
