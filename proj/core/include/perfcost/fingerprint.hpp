#pragma once

#include <optional>
#include <string>
#include <vector>

#include "perfcost/dataset.hpp"
#include "perfcost/types.hpp"

namespace perfcost {

// One fingerprint feature: a metric observed on a configuration.
struct FeatureSlot {
  ConfigId config;
  std::string metric;

  auto operator<=>(const FeatureSlot&) const = default;
  bool operator==(const FeatureSlot&) const = default;
};

using FeatureLayout = std::vector<FeatureSlot>;

// Which run supplies the metric values for each fingerprint configuration.
enum class RunSource {
  Partial,          // Partial runs only (submitted applications)
  Complete,         // Complete runs only (training rows from full runs)
  PreferPartial,    // Partial if present, else Complete
};

struct Fingerprint {
  std::vector<double> values;
  FeatureLayout layout;
  bool includes_relative_times = false;
  // One entry per fingerprint configuration other than the reference one.
  std::optional<std::vector<double>> relative_times;

  // values followed by relative_times, the learners' input row.
  std::vector<double> feature_row() const;
  bool operator==(const Fingerprint&) const = default;
};

// Distinct configurations of a layout in first-appearance order.
std::vector<ConfigId> layout_configs(const FeatureLayout& layout);

// Layout covering every metric of each configuration, catalog order.
FeatureLayout full_layout(const Dataset& dataset, const std::vector<ConfigId>& configs);

// Reference configuration for relative times: the baseline when it is one of
// the fingerprint configurations, otherwise the first fingerprint configuration.
ConfigId relative_time_reference(const std::vector<ConfigId>& fingerprint_configs,
                                 const ConfigId& baseline);

// Projects an app's runs (interference None) onto the layout. With
// include_relative_times, relative_times[i] = wall(config i) / wall(reference)
// over the non-reference fingerprint configurations, from Complete runs.
// Throws FingerprintError listing configurations without a usable run.
Fingerprint assemble_fingerprint(const Dataset& dataset, const std::string& app_id,
                                 const FeatureLayout& layout, bool include_relative_times,
                                 const ConfigId& baseline,
                                 RunSource source = RunSource::PreferPartial);

// Same projection from an explicit set of runs for one app (inference path).
Fingerprint assemble_fingerprint(const std::vector<SystemSpec>& systems,
                                 const std::vector<RunRecord>& runs, const FeatureLayout& layout,
                                 bool include_relative_times, const ConfigId& baseline,
                                 RunSource source = RunSource::PreferPartial);

}  // namespace perfcost
