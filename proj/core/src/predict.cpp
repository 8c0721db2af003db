#include "perfcost/predict.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace perfcost {

namespace {

const std::string& single_app(const std::vector<RunRecord>& runs) {
  if (runs.empty()) throw FingerprintError("no runs supplied");
  for (const auto& r : runs) {
    if (r.app_id != runs.front().app_id) {
      throw ArgumentError("runs belong to more than one app ('" + runs.front().app_id + "', '" + r.app_id + "')");
    }
  }
  return runs.front().app_id;
}

double floored(double value, const TargetKey& target, std::vector<std::string>& warnings) {
  if (value > kSpeedupFloor && std::isfinite(value)) return value;
  warnings.push_back("predicted speedup " + std::to_string(value) + " for " + to_string(target) +
                     " clamped to " + std::to_string(kSpeedupFloor));
  return kSpeedupFloor;
}

// Points from the no-interference outputs; envelope from all outputs when
// the bundle is interference-aware.
void fill(TradeoffReport& report, const TrainedBundle& bundle, const std::vector<TargetKey>& targets,
          const std::vector<double>& raw, bool include_self) {
  std::vector<std::pair<TargetKey, double>> speedups;
  if (include_self) speedups.emplace_back(TargetKey{bundle.baseline, Interference::None}, 1.0);
  std::map<ConfigId, std::array<double, 4>> envelope;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const double s = floored(raw[i], targets[i], report.warnings);
    if (targets[i].interference == Interference::None) speedups.emplace_back(targets[i], s);
    auto [it, fresh] = envelope.try_emplace(targets[i].config);
    if (fresh) it->second.fill(std::numeric_limits<double>::quiet_NaN());
    it->second[static_cast<std::size_t>(targets[i].interference)] = s;
  }
  if (speedups.empty()) throw ConfigurationError("bundle regressor has no outputs");
  report.points = derive_tradeoff(speedups, bundle.systems, bundle.baseline);
  if (bundle.interference_aware) {
    report.interference_envelope = std::move(envelope);
  }
}

}  // namespace

TradeoffReport predict(const TrainedBundle& bundle, const std::vector<RunRecord>& runs,
                       const std::string& bundle_checksum) {
  const auto& app = single_app(runs);
  if (bundle.scope.kind == ScopeKind::Local) {
    const RunRecord* chosen = nullptr;
    for (const auto& r : runs) {
      if (r.config() != bundle.scope.config || r.interference != Interference::None) continue;
      if (chosen == nullptr || (chosen->run_kind == RunKind::Complete && r.run_kind == RunKind::Partial)) chosen = &r;
    }
    if (chosen == nullptr) {
      throw RoutingError("no run of app '" + app + "' on " + to_string(bundle.scope.config) +
                         " under no interference for local predictor");
    }
    return predict_local(bundle, *chosen, bundle_checksum);
  }

  const auto fp = assemble_fingerprint(bundle.systems, runs, bundle.layout(), bundle.include_relative_times,
                                       bundle.baseline, RunSource::PreferPartial);
  const auto row = fp.feature_row();
  TradeoffReport report;
  report.app_id = app;
  report.scope = bundle.scope.to_string();
  report.baseline = bundle.baseline;
  report.bundle_checksum = bundle_checksum;
  Scalability label = Scalability::ScalesWell;
  if (bundle.classifier) label = predict_classifier(*bundle.classifier, row);
  report.label = label;
  const bool poor = label == Scalability::ScalesPoorly && !bundle.regressor_poor.chains.empty();
  const auto& model = poor ? bundle.regressor_poor : bundle.regressor_well;
  fill(report, bundle, poor ? bundle.poor_targets() : bundle.well_targets(), predict_regressor(model, row), false);
  return report;
}

TradeoffReport predict_local(const TrainedBundle& bundle, const RunRecord& run, const std::string& bundle_checksum) {
  if (bundle.scope.kind != ScopeKind::Local) throw RoutingError("bundle is not a local predictor");
  if (run.config() != bundle.scope.config || run.interference != Interference::None) {
    throw RoutingError("local predictor for " + to_string(bundle.scope.config) + " received a run on " +
                       to_string(run.config()) + " under " + std::string(to_string(run.interference)));
  }
  const auto fp = assemble_fingerprint(bundle.systems, {run}, bundle.layout(), false, bundle.baseline,
                                       RunSource::PreferPartial);
  TradeoffReport report;
  report.app_id = run.app_id;
  report.scope = bundle.scope.to_string();
  report.baseline = bundle.baseline;
  report.bundle_checksum = bundle_checksum;
  fill(report, bundle, bundle.well_targets(), predict_regressor(bundle.regressor_well, fp.values),
       true);
  return report;
}

TradeoffReport predict_interference(const TrainedBundle& bundle, const std::vector<RunRecord>& runs,
                                    const std::string& bundle_checksum) {
  if (!bundle.interference_aware) throw ConfigurationError("bundle was not trained interference-aware");
  return predict(bundle, runs, bundle_checksum);
}

void apply_anchor(TradeoffReport& report, const std::vector<SystemSpec>& systems, const AbsoluteAnchor& anchor) {
  if (!(anchor.wall_time_seconds > 0.0) || !std::isfinite(anchor.wall_time_seconds)) {
    throw ArgumentError("anchor wall time must be positive and finite");
  }
  const auto it = std::find_if(report.points.begin(), report.points.end(),
                               [&](const TradeoffPoint& p) { return p.config() == anchor.config; });
  if (it == report.points.end()) {
    throw ArgumentError("anchor configuration " + to_string(anchor.config) + " is not among the predicted points");
  }
  const double scale = anchor.wall_time_seconds / it->relative_time;
  report.absolute.clear();
  for (const auto& p : report.points) {
    const SystemSpec* system = nullptr;
    for (const auto& s : systems) {
      if (s.system_id == p.system_id) system = &s;
    }
    const auto* config = system == nullptr ? nullptr : system->find(p.vcpus);
    if (config == nullptr) throw ConfigurationError("no price for " + to_string(p.config()));
    const double seconds = p.relative_time * scale;
    report.absolute.push_back({seconds, seconds / 3600.0 * config->price_per_hour});
  }
  report.anchor = anchor;
}

}  // namespace perfcost
