#include "perfcost/selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "perfcost/parallel.hpp"
#include "perfcost/random.hpp"
#include "perfcost/training.hpp"

namespace perfcost {

std::string_view to_string(StopReason reason) {
  switch (reason) {
    case StopReason::ThresholdReached: return "threshold_reached";
    case StopReason::MaxK: return "max_k";
    case StopReason::Exhausted: return "exhausted";
  }
  return "exhausted";
}

GreedyResult greedy_select(const std::vector<ConfigId>& candidates, int max_k, double stop_threshold,
                           const SetEvaluator& evaluate) {
  if (candidates.empty()) throw SelectionError("no candidate configurations");
  if (max_k < 1) throw ArgumentError("max_k must be >= 1");

  GreedyResult result;
  std::vector<ConfigId> remaining = candidates;
  std::optional<double> best;
  while (true) {
    if (static_cast<int>(result.selected.size()) >= max_k) {
      result.trace.stop_reason = StopReason::MaxK;
      break;
    }
    if (remaining.empty()) {
      result.trace.stop_reason = StopReason::Exhausted;
      break;
    }
    std::vector<double> errors(remaining.size());
    parallel_for(remaining.size(), [&](std::size_t i) {
      auto set = result.selected;
      set.push_back(remaining[i]);
      errors[i] = evaluate(set);
    });

    std::size_t pick = 0;
    for (std::size_t i = 1; i < errors.size(); ++i) {
      if (errors[i] < errors[pick]) pick = i;
    }
    SelectionStep step;
    for (std::size_t i = 0; i < remaining.size(); ++i) step.candidate_errors.emplace_back(remaining[i], errors[i]);
    step.chosen = remaining[pick];
    step.error_after = errors[pick];
    if (best) step.improvement = *best - errors[pick];
    step.retained = !step.improvement || *step.improvement >= stop_threshold;
    result.trace.steps.push_back(step);
    if (!step.retained) {
      result.trace.stop_reason = StopReason::ThresholdReached;
      break;
    }
    result.selected.push_back(step.chosen);
    best = errors[pick];
    remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(pick));
  }
  return result;
}

std::vector<std::string> scales_well_apps(const PerformanceMatrix& matrix, const Dataset& dataset) {
  std::vector<std::string> out;
  for (const auto& [app, label] : scalability_labels(matrix, dataset)) {
    if (label == Scalability::ScalesWell) out.push_back(app);
  }
  return out;
}

namespace {

bool any_partial(const Dataset& dataset, const std::vector<std::string>& apps, const ConfigId& config) {
  return std::any_of(apps.begin(), apps.end(),
                     [&](const std::string& app) { return dataset.partial_run(app, config) != nullptr; });
}

}  // namespace

GreedyResult greedy_select_fingerprint_configs(const Dataset& dataset, const PerformanceMatrix& matrix,
                                               std::vector<ConfigId> candidates,
                                               const std::vector<TargetKey>& targets,
                                               const SelectionOptions& options) {
  const auto well = scales_well_apps(matrix, dataset);
  if (well.empty()) throw SelectionError("selection needs at least one ScalesWell app");
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  std::vector<std::string> warnings;
  std::vector<ConfigId> usable;
  for (const auto& c : candidates) {
    if (any_partial(dataset, well, c)) {
      usable.push_back(c);
    } else {
      warnings.push_back("candidate " + to_string(c) + " has no Partial runs for ScalesWell apps; excluded");
    }
  }
  if (usable.empty()) throw SelectionError("no candidate configuration has coverage");

  auto result = greedy_select(usable, options.max_k, options.stop_threshold,
                              [&](const std::vector<ConfigId>& set) {
                                return regression_cv_error(dataset, matrix, well, full_layout(dataset, set),
                                                           false, targets, options.params,
                                                           options.cv_folds, options.seed);
                              });
  result.trace.warnings = std::move(warnings);
  return result;
}

BaselineChoice select_baseline_config(const Dataset& dataset, std::vector<ConfigId> candidates,
                                      const std::vector<ConfigId>& fingerprint_configs,
                                      const std::vector<TargetKey>& targets,
                                      const SelectionOptions& options) {
  if (candidates.empty()) throw SelectionError("no baseline candidates");
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
  BaselineChoice choice;
  if (candidates.size() == 1) {
    choice.baseline = candidates.front();
    return choice;
  }
  const auto layout = full_layout(dataset, fingerprint_configs);
  std::vector<double> errors(candidates.size(), std::numeric_limits<double>::infinity());
  parallel_for(candidates.size(), [&](std::size_t i) {
    const auto matrix = derive_performance_matrix(dataset, candidates[i]);
    const auto well = scales_well_apps(matrix, dataset);
    if (well.size() < 2) return;
    errors[i] = regression_cv_error(dataset, matrix, well, layout, false, targets, options.params,
                                    options.cv_folds, options.seed);
  });
  std::size_t pick = 0;
  for (std::size_t i = 1; i < errors.size(); ++i) {
    if (errors[i] < errors[pick]) pick = i;
  }
  if (!std::isfinite(errors[pick])) throw SelectionError("no baseline candidate yields enough ScalesWell apps");
  choice.baseline = candidates[pick];
  for (std::size_t i = 0; i < candidates.size(); ++i) choice.candidate_errors.emplace_back(candidates[i], errors[i]);
  return choice;
}

FeatureMask full_mask(const Dataset& dataset, const std::vector<ConfigId>& configs) {
  FeatureMask mask;
  for (const auto& c : configs) mask[c] = dataset.system(c.system_id).metric_catalog;
  return mask;
}

FeatureLayout mask_layout(const Dataset& dataset, const std::vector<ConfigId>& configs,
                          const FeatureMask& mask) {
  FeatureLayout layout;
  for (const auto& c : configs) {
    const auto it = mask.find(c);
    if (it == mask.end()) throw SchemaError("feature mask has no entry for " + to_string(c));
    const auto& catalog = dataset.system(c.system_id).metric_catalog;
    for (const auto& metric : catalog) {
      if (std::find(it->second.begin(), it->second.end(), metric) != it->second.end()) {
        layout.push_back({c, metric});
      }
    }
    for (const auto& metric : it->second) {
      if (std::find(catalog.begin(), catalog.end(), metric) == catalog.end()) {
        throw SchemaError("feature mask metric '" + metric + "' is not in the catalog of system '" +
                          c.system_id + "'");
      }
    }
  }
  return layout;
}

FeatureSelection select_features(const Dataset& dataset, const PerformanceMatrix& matrix,
                                 const std::vector<ConfigId>& fingerprint_configs,
                                 const std::vector<TargetKey>& targets, bool include_relative_times,
                                 const SelectionOptions& options) {
  const auto well = scales_well_apps(matrix, dataset);
  if (well.size() < 2) throw SelectionError("feature selection needs at least 2 ScalesWell apps");
  const auto layout = full_layout(dataset, fingerprint_configs);

  const auto rows = training_rows(dataset, matrix, well, layout, include_relative_times, targets);
  const auto model = fit_boosted_regressor(rows.features, rows.targets, options.params,
                                           derive_seed(options.seed, "feature-ranking"), &rows.observed);
  const auto importance = feature_importances(model);

  // Rank metric slots only; relative-time columns are never masked.
  std::vector<std::size_t> order(layout.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return importance[a] > importance[b]; });

  auto mask_for = [&](double fraction) {
    const auto keep = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(layout.size()) - 1e-9));
    std::vector<bool> chosen(layout.size(), false);
    for (std::size_t i = 0; i < keep && i < order.size(); ++i) chosen[order[i]] = true;
    for (const auto& c : fingerprint_configs) {
      bool any = false;
      for (std::size_t i = 0; i < layout.size(); ++i) any = any || (chosen[i] && layout[i].config == c);
      if (any) continue;
      for (std::size_t i : order) {
        if (layout[i].config == c) {
          chosen[i] = true;
          break;
        }
      }
    }
    FeatureMask mask;
    for (const auto& c : fingerprint_configs) mask[c];
    for (std::size_t i = 0; i < layout.size(); ++i) {
      if (chosen[i]) mask[layout[i].config].push_back(layout[i].metric);
    }
    return mask;
  };

  std::vector<FeatureMask> masks;
  for (double f : kFeatureFractions) masks.push_back(mask_for(f));
  std::vector<double> errors(masks.size());
  parallel_for(masks.size(), [&](std::size_t i) {
    errors[i] = regression_cv_error(dataset, matrix, well, mask_layout(dataset, fingerprint_configs, masks[i]),
                                    include_relative_times, targets, options.params, options.cv_folds,
                                    options.seed);
  });

  FeatureSelection out;
  std::size_t pick = 0;
  for (std::size_t i = 0; i < masks.size(); ++i) {
    out.fraction_errors.emplace_back(kFeatureFractions[i], errors[i]);
    if (errors[i] < errors[pick]) pick = i;
  }
  out.mask = std::move(masks[pick]);
  out.fraction = kFeatureFractions[pick];
  return out;
}

}  // namespace perfcost
