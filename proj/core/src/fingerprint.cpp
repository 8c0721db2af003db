#include "perfcost/fingerprint.hpp"

#include <algorithm>

namespace perfcost {

std::vector<double> Fingerprint::feature_row() const {
  std::vector<double> row = values;
  if (relative_times) row.insert(row.end(), relative_times->begin(), relative_times->end());
  return row;
}

std::vector<ConfigId> layout_configs(const FeatureLayout& layout) {
  std::vector<ConfigId> out;
  for (const auto& slot : layout) {
    if (std::find(out.begin(), out.end(), slot.config) == out.end()) out.push_back(slot.config);
  }
  return out;
}

FeatureLayout full_layout(const Dataset& dataset, const std::vector<ConfigId>& configs) {
  FeatureLayout layout;
  for (const auto& config : configs) {
    for (const auto& metric : dataset.system(config.system_id).metric_catalog) {
      layout.push_back({config, metric});
    }
  }
  return layout;
}

ConfigId relative_time_reference(const std::vector<ConfigId>& fingerprint_configs,
                                 const ConfigId& baseline) {
  if (fingerprint_configs.empty()) throw FingerprintError("fingerprint has no configurations");
  if (std::find(fingerprint_configs.begin(), fingerprint_configs.end(), baseline) !=
      fingerprint_configs.end()) {
    return baseline;
  }
  return fingerprint_configs.front();
}

namespace {

const RunRecord* pick_run(const Dataset& dataset, const std::string& app_id,
                          const ConfigId& config, RunSource source) {
  switch (source) {
    case RunSource::Partial: return dataset.partial_run(app_id, config);
    case RunSource::Complete: return dataset.complete_run(app_id, config);
    case RunSource::PreferPartial: {
      const auto* run = dataset.partial_run(app_id, config);
      return run != nullptr ? run : dataset.complete_run(app_id, config);
    }
  }
  return nullptr;
}

std::string join(const std::vector<ConfigId>& configs) {
  std::string out;
  for (const auto& c : configs) out += (out.empty() ? "" : ", ") + to_string(c);
  return out;
}

}  // namespace

Fingerprint assemble_fingerprint(const Dataset& dataset, const std::string& app_id,
                                 const FeatureLayout& layout, bool include_relative_times,
                                 const ConfigId& baseline, RunSource source) {
  const auto configs = layout_configs(layout);
  std::vector<const RunRecord*> runs;
  std::vector<ConfigId> missing;
  for (const auto& config : configs) {
    const auto* run = pick_run(dataset, app_id, config, source);
    if (run == nullptr) missing.push_back(config);
    runs.push_back(run);
  }
  if (!missing.empty()) {
    throw FingerprintError("app '" + app_id + "' has no usable run on fingerprint configuration(s) " +
                           join(missing));
  }

  Fingerprint fp;
  fp.layout = layout;
  fp.values.reserve(layout.size());
  for (const auto& slot : layout) {
    const auto at = std::find(configs.begin(), configs.end(), slot.config) - configs.begin();
    const auto& system = dataset.system(slot.config.system_id);
    const int m = system.metric_index(slot.metric);
    if (m < 0) {
      throw SchemaError("layout metric '" + slot.metric + "' is not in the catalog of system '" +
                        system.system_id + "'");
    }
    fp.values.push_back(runs[at]->metrics[static_cast<std::size_t>(m)]);
  }

  fp.includes_relative_times = include_relative_times;
  if (include_relative_times) {
    std::vector<ConfigId> no_complete;
    std::vector<double> walls;
    for (const auto& config : configs) {
      const auto* run = dataset.complete_run(app_id, config);
      if (run == nullptr) {
        no_complete.push_back(config);
        walls.push_back(0.0);
      } else {
        walls.push_back(*run->wall_time_seconds);
      }
    }
    if (!no_complete.empty()) {
      throw FingerprintError("app '" + app_id +
                             "' needs Complete runs for relative times on " + join(no_complete));
    }
    const auto reference = relative_time_reference(configs, baseline);
    const auto ref_at = std::find(configs.begin(), configs.end(), reference) - configs.begin();
    std::vector<double> rel;
    for (std::size_t i = 0; i < configs.size(); ++i) {
      if (static_cast<std::ptrdiff_t>(i) == ref_at) continue;
      rel.push_back(walls[i] / walls[static_cast<std::size_t>(ref_at)]);
    }
    fp.relative_times = std::move(rel);
  }
  return fp;
}

Fingerprint assemble_fingerprint(const std::vector<SystemSpec>& systems,
                                 const std::vector<RunRecord>& runs, const FeatureLayout& layout,
                                 bool include_relative_times, const ConfigId& baseline,
                                 RunSource source) {
  std::string app_id;
  for (const auto& run : runs) {
    if (app_id.empty()) app_id = run.app_id;
    if (run.app_id != app_id) {
      throw ArgumentError("runs for more than one app supplied ('" + app_id + "', '" + run.app_id +
                          "')");
    }
  }
  if (runs.empty()) throw FingerprintError("no runs supplied");
  // Runs on systems the layout does not know about cannot contribute.
  std::vector<RunRecord> known;
  for (const auto& run : runs) {
    if (std::any_of(systems.begin(), systems.end(), [&](const SystemSpec& s) { return s.system_id == run.system_id; })) {
      known.push_back(run);
    }
  }
  const auto dataset = Dataset::create(systems, std::move(known));
  return assemble_fingerprint(dataset, app_id, layout, include_relative_times, baseline, source);
}

}  // namespace perfcost
