#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "perfcost/analysis.hpp"
#include "perfcost/pipeline.hpp"

namespace perfcost {

// Absolute projection from one measured wall time (the anchor).
struct AbsoluteAnchor {
  ConfigId config;
  double wall_time_seconds = 0.0;

  bool operator==(const AbsoluteAnchor&) const = default;
};

struct AbsolutePoint {
  double time_seconds = 0.0;
  double cost = 0.0;  // time in hours × price_per_hour

  bool operator==(const AbsolutePoint&) const = default;
};

struct TradeoffReport {
  std::string app_id;
  std::string scope;
  std::optional<Scalability> label;  // absent for Local scope
  ConfigId baseline;
  std::vector<TradeoffPoint> points;
  // Speedup per interference kind (indexed by Interference) for each
  // predicted configuration.
  std::optional<std::map<ConfigId, std::array<double, 4>>> interference_envelope;
  std::optional<AbsoluteAnchor> anchor;
  std::vector<AbsolutePoint> absolute;  // aligned with points when anchored
  std::vector<std::string> warnings;
  std::string bundle_checksum;

  bool operator==(const TradeoffReport&) const = default;
};

// Classifies the app's fingerprint (when the bundle has a classifier), routes
// it to the matching regressor, and turns the predicted speedups into
// trade-off points. Non-positive predictions are floored at kSpeedupFloor
// with a warning. Interference-aware bundles add an envelope; the points
// carry the no-interference predictions. Local bundles delegate to
// predict_local.
TradeoffReport predict(const TrainedBundle& bundle, const std::vector<RunRecord>& runs,
                       const std::string& bundle_checksum = {});

// Local bundle: the profiled configuration (speedup 1) plus its neighbours.
// Throws RoutingError when the run is not on the bundle's configuration
// under no interference.
TradeoffReport predict_local(const TrainedBundle& bundle, const RunRecord& run,
                             const std::string& bundle_checksum = {});

// Same as predict, requiring an interference-aware bundle.
TradeoffReport predict_interference(const TrainedBundle& bundle, const std::vector<RunRecord>& runs,
                                    const std::string& bundle_checksum = {});

// Rescales relative times to seconds and cost units through one measured
// wall time on a configuration among the report's points.
void apply_anchor(TradeoffReport& report, const std::vector<SystemSpec>& systems, const AbsoluteAnchor& anchor);

}  // namespace perfcost
