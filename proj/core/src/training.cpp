#include "perfcost/training.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "perfcost/random.hpp"

namespace perfcost {

std::string Scope::to_string() const {
  switch (kind) {
    case ScopeKind::Global: return "global";
    case ScopeKind::SingleSystem: return "system:" + system_id;
    case ScopeKind::Local: return "local:" + perfcost::to_string(config);
  }
  return "global";
}

Scope Scope::parse(std::string_view text) {
  if (text == "global") return global();
  if (text.starts_with("system:") && text.size() > 7) {
    return single_system(std::string(text.substr(7)));
  }
  if (text.starts_with("local:")) return local(parse_config_id(text.substr(6)));
  throw ArgumentError("unknown scope '" + std::string(text) +
                      "' (expected global, system:ID, or local:SYSTEM:VCPUS)");
}

std::vector<ConfigId> neighbours(const SystemSpec& system, int vcpus) {
  std::vector<ConfigId> out;
  const auto& configs = system.configurations;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    if (configs[i].vcpus != vcpus) continue;
    if (i > 0) out.push_back(configs[i - 1].id());
    if (i + 1 < configs.size()) out.push_back(configs[i + 1].id());
  }
  return out;
}

std::vector<ConfigId> scope_configs(const Dataset& dataset, const Scope& scope) {
  switch (scope.kind) {
    case ScopeKind::Global: return dataset.all_configs();
    case ScopeKind::SingleSystem: {
      std::vector<ConfigId> out;
      for (const auto& c : dataset.system(scope.system_id).configurations) out.push_back(c.id());
      return out;
    }
    case ScopeKind::Local: {
      if (!dataset.has_config(scope.config)) {
        throw ArgumentError("local scope configuration " + to_string(scope.config) + " is not declared");
      }
      auto out = neighbours(dataset.system(scope.config.system_id), scope.config.vcpus);
      std::sort(out.begin(), out.end());
      return out;
    }
  }
  return {};
}

std::vector<ConfigId> scope_candidates(const Dataset& dataset, const Scope& scope) {
  if (scope.kind == ScopeKind::Local) return {scope.config};
  return scope_configs(dataset, scope);
}

std::vector<TargetKey> well_targets(const Dataset& dataset, const Scope& scope, bool interference_aware) {
  std::vector<TargetKey> out;
  for (const auto& c : scope_configs(dataset, scope)) {
    if (interference_aware) {
      for (auto kind : kAllInterference) out.push_back({c, kind});
    } else {
      out.push_back({c, Interference::None});
    }
  }
  return out;
}

std::vector<TargetKey> poor_targets(const Dataset& dataset, const Scope& scope, bool interference_aware) {
  std::vector<TargetKey> out;
  std::set<std::string> systems;
  for (const auto& c : scope_configs(dataset, scope)) systems.insert(c.system_id);
  for (const auto& s : systems) {
    const auto c = dataset.system(s).min_config().id();
    if (interference_aware) {
      for (auto kind : kAllInterference) out.push_back({c, kind});
    } else {
      out.push_back({c, Interference::None});
    }
  }
  return out;
}

std::map<std::string, Scalability> scalability_labels(const PerformanceMatrix& matrix,
                                                      const Dataset& dataset,
                                                      std::vector<std::string>* warnings) {
  std::map<std::string, Scalability> out;
  for (const auto& app : matrix.apps()) {
    try {
      out[app] = label_scalability(matrix, dataset, app);
    } catch (const LabelingError&) {
      if (auto label = label_scalability_sparse(matrix, dataset, app)) {
        out[app] = *label;
      } else if (warnings != nullptr) {
        warnings->push_back("app '" + app + "' cannot be labeled (too few covered configurations); excluded");
      }
    }
  }
  if (warnings != nullptr) {
    for (const auto& app : matrix.unusable_apps()) {
      warnings->push_back("app '" + app + "' has no Complete baseline run (" +
                          to_string(matrix.baseline()) + "); unusable for training");
    }
  }
  return out;
}

FoldPlan FoldPlan::make(std::vector<std::string> apps, int k, std::uint64_t seed) {
  if (k < 1) throw ArgumentError("fold count must be >= 1");
  std::sort(apps.begin(), apps.end());
  apps.erase(std::unique(apps.begin(), apps.end()), apps.end());
  std::stable_sort(apps.begin(), apps.end(), [&](const std::string& a, const std::string& b) {
    return derive_seed(seed, a) < derive_seed(seed, b);
  });
  FoldPlan plan;
  plan.k = k;
  plan.seed = seed;
  plan.folds.resize(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < apps.size(); ++i) {
    plan.folds[i % static_cast<std::size_t>(k)].push_back(apps[i]);
  }
  for (auto& f : plan.folds) std::sort(f.begin(), f.end());
  return plan;
}

namespace {

// Layout resolved to (configuration position, metric index) pairs.
struct ResolvedLayout {
  std::vector<ConfigId> configs;
  std::vector<std::pair<std::size_t, std::size_t>> slots;
};

ResolvedLayout resolve(const Dataset& dataset, const FeatureLayout& layout) {
  ResolvedLayout out;
  out.configs = layout_configs(layout);
  for (const auto& slot : layout) {
    const auto at = static_cast<std::size_t>(
        std::find(out.configs.begin(), out.configs.end(), slot.config) - out.configs.begin());
    const int m = dataset.system(slot.config.system_id).metric_index(slot.metric);
    if (m < 0) {
      throw SchemaError("layout metric '" + slot.metric + "' is not in the catalog of system '" +
                        slot.config.system_id + "'");
    }
    out.slots.emplace_back(at, static_cast<std::size_t>(m));
  }
  return out;
}

std::optional<std::vector<double>> resolved_row(const Dataset& dataset, const std::string& app_id,
                                                const ResolvedLayout& layout,
                                                bool include_relative_times, const ConfigId& baseline,
                                                RunSource source) {
  std::vector<const RunRecord*> runs;
  for (const auto& config : layout.configs) {
    const RunRecord* run = nullptr;
    if (source != RunSource::Complete) run = dataset.partial_run(app_id, config);
    if (run == nullptr && source != RunSource::Partial) run = dataset.complete_run(app_id, config);
    if (run == nullptr) return std::nullopt;
    runs.push_back(run);
  }
  std::vector<double> row;
  row.reserve(layout.slots.size() + layout.configs.size());
  for (const auto& [c, m] : layout.slots) row.push_back(runs[c]->metrics[m]);
  if (include_relative_times) {
    const auto reference = relative_time_reference(layout.configs, baseline);
    const auto* ref = dataset.complete_run(app_id, reference);
    if (ref == nullptr) return std::nullopt;
    for (const auto& config : layout.configs) {
      if (config == reference) continue;
      const auto* run = dataset.complete_run(app_id, config);
      if (run == nullptr) return std::nullopt;
      row.push_back(*run->wall_time_seconds / *ref->wall_time_seconds);
    }
  }
  return row;
}

}  // namespace

std::optional<std::vector<double>> fingerprint_row(const Dataset& dataset, const std::string& app_id,
                                                   const FeatureLayout& layout,
                                                   bool include_relative_times,
                                                   const ConfigId& baseline, RunSource source) {
  return resolved_row(dataset, app_id, resolve(dataset, layout), include_relative_times, baseline, source);
}

RowSet training_rows(const Dataset& dataset, const PerformanceMatrix& matrix,
                     const std::vector<std::string>& apps, const FeatureLayout& layout,
                     bool include_relative_times, const std::vector<TargetKey>& targets) {
  const auto resolved = resolve(dataset, layout);
  RowSet out;
  out.features.cols = resolved.slots.size() +
                      (include_relative_times ? resolved.configs.size() - 1 : 0);
  out.targets.cols = targets.size();
  for (const auto& app : apps) {
    for (auto source : {RunSource::Partial, RunSource::Complete}) {
      auto row = resolved_row(dataset, app, resolved, include_relative_times, matrix.baseline(), source);
      if (!row) continue;
      out.features.append_row(*row);
      std::vector<double> y(targets.size(), 0.0);
      for (std::size_t t = 0; t < targets.size(); ++t) {
        const double v = matrix.speedup_or_nan(app, targets[t]);
        const bool seen = !std::isnan(v);
        out.observed.push_back(seen ? 1 : 0);
        y[t] = seen ? v : 0.0;
      }
      out.targets.append_row(y);
      out.row_app.push_back(app);
    }
  }
  return out;
}

std::vector<SmapeTerm> score_app(const std::string& app_id, const std::vector<double>& predictions,
                                 const std::vector<TargetKey>& targets, const PerformanceMatrix& truth) {
  std::vector<SmapeTerm> terms;
  for (std::size_t t = 0; t < targets.size(); ++t) {
    const double actual = truth.speedup_or_nan(app_id, targets[t]);
    if (std::isnan(actual)) continue;
    double p = predictions[t];
    if (!(p > kSpeedupFloor) || !std::isfinite(p)) p = kSpeedupFloor;
    terms.push_back({app_id, targets[t], smape_term(p, actual)});
  }
  return terms;
}

double regression_cv_error(const Dataset& dataset, const PerformanceMatrix& matrix,
                           const std::vector<std::string>& apps, const FeatureLayout& layout,
                           bool include_relative_times, const std::vector<TargetKey>& targets,
                           const HyperParams& params, int folds, std::uint64_t seed) {
  if (apps.size() < 2) throw SelectionError("cross-validation needs at least 2 apps");
  const auto resolved = resolve(dataset, layout);
  const int k = std::min<int>(folds, static_cast<int>(apps.size()));
  const auto plan = FoldPlan::make(apps, k, seed);

  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t f = 0; f < plan.folds.size(); ++f) {
    const auto& test = plan.folds[f];
    if (test.empty()) continue;
    std::vector<std::string> train;
    for (const auto& app : apps) {
      if (!std::binary_search(test.begin(), test.end(), app)) train.push_back(app);
    }
    const auto rows = training_rows(dataset, matrix, train, layout, include_relative_times, targets);
    if (rows.features.rows == 0) continue;
    const auto model = fit_boosted_regressor(rows.features, rows.targets, params,
                                             derive_seed(seed, f), &rows.observed);
    for (const auto& app : test) {
      auto row = resolved_row(dataset, app, resolved, include_relative_times, matrix.baseline(),
                              RunSource::Partial);
      if (!row) continue;
      for (const auto& term : score_app(app, predict_regressor(model, *row), targets, matrix)) {
        total += term.smape;
        ++count;
      }
    }
  }
  if (count == 0) throw SelectionError("cross-validation produced no scored predictions");
  return total / static_cast<double>(count);
}

}  // namespace perfcost
