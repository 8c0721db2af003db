#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "perfcost/analysis.hpp"
#include "perfcost/dataset.hpp"
#include "perfcost/fingerprint.hpp"
#include "perfcost/learners.hpp"
#include "perfcost/performance.hpp"

namespace perfcost {

enum class ScopeKind : std::uint8_t { Global, SingleSystem, Local };

// Prediction footprint: every system, one system, or the neighbours of one
// configuration.
struct Scope {
  ScopeKind kind = ScopeKind::Global;
  std::string system_id;  // SingleSystem
  ConfigId config;        // Local

  static Scope global() { return {}; }
  static Scope single_system(std::string id) { return {ScopeKind::SingleSystem, std::move(id), {}}; }
  static Scope local(ConfigId c) { return {ScopeKind::Local, {}, std::move(c)}; }

  // "global", "system:ID", "local:SYSTEM:VCPUS"
  std::string to_string() const;
  static Scope parse(std::string_view text);
  bool operator==(const Scope&) const = default;
};

// Configurations whose performance the scope predicts (Local: the profiled
// configuration's neighbours), ordered by (system_id, vcpus).
std::vector<ConfigId> scope_configs(const Dataset& dataset, const Scope& scope);
// Configurations eligible as fingerprint configurations for the scope.
std::vector<ConfigId> scope_candidates(const Dataset& dataset, const Scope& scope);
// One step down and one step up in the system's vCPU order.
std::vector<ConfigId> neighbours(const SystemSpec& system, int vcpus);

// Targets of the ScalesWell regressor: every in-scope configuration, times
// the four interference kinds when interference-aware.
std::vector<TargetKey> well_targets(const Dataset& dataset, const Scope& scope, bool interference_aware);
// Targets of the ScalesPoorly regressor: each in-scope system's fewest-vCPU
// configuration.
std::vector<TargetKey> poor_targets(const Dataset& dataset, const Scope& scope, bool interference_aware);

// Scalability label per usable app. Apps whose extremes are uncovered fall
// back to label_scalability_sparse; apps that still cannot be labeled are
// reported through `warnings` and omitted.
std::map<std::string, Scalability> scalability_labels(const PerformanceMatrix& matrix,
                                                      const Dataset& dataset,
                                                      std::vector<std::string>* warnings = nullptr);

// Disjoint folds of apps. Apps are ordered by a hash of (app_id, seed) and dealt
// round-robin, so folds do not depend on input order and sizes differ by <= 1.
struct FoldPlan {
  std::vector<std::vector<std::string>> folds;
  int k = 10;
  std::uint64_t seed = 0;

  static FoldPlan make(std::vector<std::string> apps, int k, std::uint64_t seed);
};

// Feature rows of one app for a layout, or nullopt when a required run is missing.
std::optional<std::vector<double>> fingerprint_row(const Dataset& dataset, const std::string& app_id,
                                                   const FeatureLayout& layout,
                                                   bool include_relative_times,
                                                   const ConfigId& baseline, RunSource source);

// Training rows: each app contributes its Partial-run and its Complete-run
// fingerprint with identical targets. Uncovered targets are unobserved.
struct RowSet {
  Matrix features;
  Matrix targets;
  std::vector<std::uint8_t> observed;
  std::vector<std::string> row_app;
};

RowSet training_rows(const Dataset& dataset, const PerformanceMatrix& matrix,
                     const std::vector<std::string>& apps, const FeatureLayout& layout,
                     bool include_relative_times, const std::vector<TargetKey>& targets);

// Predicted speedups are floored here before use in reports or errors.
inline constexpr double kSpeedupFloor = 1e-6;

// SMAPE terms of a regressor's predictions for one app's Partial-run fingerprint
// against the matrix's covered cells.
std::vector<SmapeTerm> score_app(const std::string& app_id, const std::vector<double>& predictions,
                                 const std::vector<TargetKey>& targets, const PerformanceMatrix& truth);

// Mean cross-validated SMAPE of a regressor trained on `apps` (training rows
// as above) and tested on Partial-run fingerprints. Used by selection.
double regression_cv_error(const Dataset& dataset, const PerformanceMatrix& matrix,
                           const std::vector<std::string>& apps, const FeatureLayout& layout,
                           bool include_relative_times, const std::vector<TargetKey>& targets,
                           const HyperParams& params, int folds, std::uint64_t seed);

}  // namespace perfcost
