#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "perfcost/dataset.hpp"
#include "perfcost/fingerprint.hpp"
#include "perfcost/learners.hpp"
#include "perfcost/performance.hpp"

namespace perfcost {

enum class StopReason : std::uint8_t { ThresholdReached, MaxK, Exhausted };

std::string_view to_string(StopReason reason);

struct SelectionStep {
  std::vector<std::pair<ConfigId, double>> candidate_errors;  // candidate order
  ConfigId chosen;
  double error_after = 0.0;
  std::optional<double> improvement;  // absent on the first step
  bool retained = true;
};

struct SelectionTrace {
  std::vector<SelectionStep> steps;
  StopReason stop_reason = StopReason::Exhausted;
  std::vector<std::string> warnings;
};

struct GreedyResult {
  std::vector<ConfigId> selected;
  SelectionTrace trace;
};

// Cross-validated error of a fingerprint configuration set.
using SetEvaluator = std::function<double(const std::vector<ConfigId>&)>;

// Forward greedy search. Each step evaluates every remaining candidate added
// to the fixed set and keeps the argmin (ties: earlier candidate). Stops once
// the set holds max_k configurations, the candidates run out, or a step
// improves the error by less than stop_threshold; that last candidate is
// recorded in the trace but not retained. Candidates within a step are
// evaluated concurrently.
GreedyResult greedy_select(const std::vector<ConfigId>& candidates, int max_k, double stop_threshold,
                           const SetEvaluator& evaluate);

// Settings shared by the selection routines. The hyperparameters are a
// cheaper variant of the regressor defaults: selection fits hundreds of
// cross-validated models.
struct SelectionOptions {
  int max_k = 4;
  double stop_threshold = 1.0;
  int cv_folds = 10;
  std::uint64_t seed = 0;
  HyperParams params = selection_defaults();

  static HyperParams selection_defaults() {
    HyperParams p;
    p.n_trees = 40;
    p.max_depth = 3;
    p.learning_rate = 0.3;
    p.max_bins = 16;
    p.log_targets = true;
    return p;
  }
};

// ScalesWell apps of the matrix, the population selection optimizes for.
std::vector<std::string> scales_well_apps(const PerformanceMatrix& matrix, const Dataset& dataset);

// Greedy fingerprint-configuration selection scored by the cross-validated
// SMAPE of a regressor over `targets`, trained on the ScalesWell apps with
// every metric of the chosen configurations. Candidates no ScalesWell app has
// a Partial run on are dropped with a warning.
GreedyResult greedy_select_fingerprint_configs(const Dataset& dataset, const PerformanceMatrix& matrix,
                                               std::vector<ConfigId> candidates,
                                               const std::vector<TargetKey>& targets,
                                               const SelectionOptions& options);

struct BaselineChoice {
  ConfigId baseline;
  std::vector<std::pair<ConfigId, double>> candidate_errors;
};

// Baseline minimizing cross-validated SMAPE when used as the speedup
// denominator, with the fingerprint configurations held fixed. Ties go to the
// lowest (system_id, vcpus).
BaselineChoice select_baseline_config(const Dataset& dataset, std::vector<ConfigId> candidates,
                                      const std::vector<ConfigId>& fingerprint_configs,
                                      const std::vector<TargetKey>& targets,
                                      const SelectionOptions& options);

// Selected metric names per fingerprint configuration, in catalog order.
using FeatureMask = std::map<ConfigId, std::vector<std::string>>;

FeatureMask full_mask(const Dataset& dataset, const std::vector<ConfigId>& configs);
// Layout of the masked metrics: configurations in the given order, metrics in
// catalog order.
FeatureLayout mask_layout(const Dataset& dataset, const std::vector<ConfigId>& configs,
                          const FeatureMask& mask);

inline constexpr double kFeatureFractions[] = {1.0, 0.75, 0.5, 0.375, 0.25, 0.125};

struct FeatureSelection {
  FeatureMask mask;
  double fraction = 1.0;
  std::vector<std::pair<double, double>> fraction_errors;  // (fraction, CV SMAPE)
};

// Importance-ranked sweep over kFeatureFractions of the (configuration,
// metric) features, keeping the fraction with the lowest CV SMAPE (ties: the
// larger fraction). Every configuration keeps at least its top metric.
FeatureSelection select_features(const Dataset& dataset, const PerformanceMatrix& matrix,
                                 const std::vector<ConfigId>& fingerprint_configs,
                                 const std::vector<TargetKey>& targets, bool include_relative_times,
                                 const SelectionOptions& options);

}  // namespace perfcost
