#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "perfcost/analysis.hpp"
#include "perfcost/dataset.hpp"
#include "perfcost/learners.hpp"
#include "perfcost/selection.hpp"
#include "perfcost/training.hpp"

namespace perfcost {

inline constexpr int kBundleFormatVersion = 1;

struct TrainOptions {
  Scope scope;
  bool interference_aware = false;
  bool include_relative_times = false;
  // false trains one regressor over every app (classification ablation).
  bool use_classifier = true;
  bool select_features = true;
  SelectionOptions selection;
  HyperParams classifier_params = HyperParams::classifier_defaults();
  HyperParams regressor_params = HyperParams::regressor_defaults();
  std::uint64_t seed = 0;

  // Fixed choices; when set the corresponding selection stage is skipped.
  std::optional<ConfigId> baseline;
  std::optional<std::vector<ConfigId>> fingerprint_configs;
  std::optional<FeatureMask> feature_mask;
};

struct TrainedBundle {
  Scope scope;
  std::optional<ForestClassifier> classifier;  // absent for Local scope or without classification
  BoostedRegressor regressor_well;
  BoostedRegressor regressor_poor;  // no outputs for Local scope or without classification
  std::vector<ConfigId> fingerprint_configs;
  FeatureMask feature_mask;
  ConfigId baseline;
  bool interference_aware = false;
  bool include_relative_times = false;
  int format_version = kBundleFormatVersion;
  std::uint64_t seed = 0;
  // Declared systems the bundle predicts over (plus the baseline's system),
  // kept for catalogs and prices at prediction time.
  std::vector<SystemSpec> systems;

  GreedyResult selection;
  std::vector<std::pair<ConfigId, double>> baseline_errors;
  std::vector<std::pair<double, double>> feature_fraction_errors;
  std::vector<std::string> warnings;

  FeatureLayout layout() const;
  std::vector<TargetKey> well_targets() const;
  std::vector<TargetKey> poor_targets() const;
};

// Performance-matrix derivation, labeling, baseline selection (with a
// provisional single-configuration fingerprint), greedy fingerprint
// selection, feature selection, then classifier and per-class regressors.
TrainedBundle train_bundle(const Dataset& dataset, const TrainOptions& options);

// Local-scope bundle for one configuration: the configuration is both the
// only fingerprint configuration and the baseline, targets are its neighbours.
TrainedBundle train_local_bundle(const Dataset& dataset, const ConfigId& config, const TrainOptions& options);
std::map<ConfigId, TrainedBundle> train_local_predictors(const Dataset& dataset, const TrainOptions& options);

// Keeps, per app, a random ceil(fraction·|configurations|) subset of
// configurations plus every configuration in always_keep; runs on the other
// configurations are removed.
Dataset subsample_coverage(const Dataset& dataset, double fraction, std::uint64_t seed,
                           const std::vector<ConfigId>& always_keep = {});

struct CvOptions {
  double coverage = 1.0;  // applied to training folds only
  std::uint64_t coverage_seed = 0;
};

struct RoutedPrediction {
  std::string app_id;
  Scalability label = Scalability::ScalesWell;
  std::vector<TargetKey> targets;
  std::vector<double> speedups;  // floored at kSpeedupFloor
};

struct CvResult {
  ErrorSummary summary;
  std::vector<std::string> warnings;
  std::map<std::string, Scalability> true_labels;
  std::map<std::string, Scalability> predicted_labels;
  std::vector<RoutedPrediction> predictions;
};

// Classify (when the bundle has a classifier) and predict from an app's
// Partial runs in `dataset`. Throws FingerprintError when runs are missing.
RoutedPrediction route_and_predict(const TrainedBundle& bundle, const Dataset& dataset,
                                   const std::string& app_id);

// Trains on all but one fold and scores the held-out apps' routed
// predictions against the full dataset's ground truth, for every fold.
CvResult cross_validate(const Dataset& dataset, const TrainOptions& options, const FoldPlan& plan,
                        const CvOptions& cv = {});

// Cross-validated local predictors; summary per profiled configuration.
std::map<ConfigId, ErrorSummary> cross_validate_local(const Dataset& dataset, const TrainOptions& options,
                                                      const FoldPlan& plan);

// Ten-fold cross-validated accuracy of the scalability classifier on the
// given layout.
struct ClassifierCv {
  double accuracy = 0.0;
  std::map<std::string, Scalability> true_labels;
  std::map<std::string, Scalability> predicted_labels;
};
ClassifierCv cross_validate_classifier(const Dataset& dataset, const ConfigId& baseline,
                                       const FeatureLayout& layout, bool include_relative_times,
                                       const HyperParams& params, const FoldPlan& plan, std::uint64_t seed);

}  // namespace perfcost
