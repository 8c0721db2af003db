#include "perfcost/dataset.hpp"

#include <algorithm>
#include <cmath>

namespace perfcost {

namespace {

std::string describe(const RunRecord& run, std::size_t index) {
  return "run #" + std::to_string(index) + " (app '" + run.app_id + "', " +
         to_string(run.config()) + ", " + std::string(to_string(run.interference)) + ", " +
         std::string(to_string(run.run_kind)) + ")";
}

void validate_run(const RunRecord& run, std::size_t index, const SystemSpec* system) {
  const auto where = describe(run, index);
  if (run.app_id.empty()) throw ValidationError(where + ": empty app_id");
  if (system == nullptr) {
    throw ValidationError(where + ": references undeclared system '" + run.system_id + "'");
  }
  if (system->find(run.vcpus) == nullptr) {
    throw ValidationError(where + ": system '" + run.system_id + "' has no " +
                          std::to_string(run.vcpus) + "-vCPU configuration");
  }
  if (!(run.span_seconds > 0.0) || !std::isfinite(run.span_seconds)) {
    throw ValidationError(where + ": span_seconds must be positive and finite");
  }
  if (run.run_kind == RunKind::Complete) {
    if (!run.wall_time_seconds) throw ValidationError(where + ": Complete run without wall_time_seconds");
    if (!(*run.wall_time_seconds > 0.0) || !std::isfinite(*run.wall_time_seconds)) {
      throw ValidationError(where + ": wall_time_seconds must be positive and finite");
    }
  } else if (run.wall_time_seconds) {
    throw ValidationError(where + ": Partial run carries wall_time_seconds");
  }
  if (run.metrics.size() != system->metric_catalog.size()) {
    throw SchemaError(where + ": carries " + std::to_string(run.metrics.size()) +
                      " metrics, system catalog has " +
                      std::to_string(system->metric_catalog.size()));
  }
  for (std::size_t m = 0; m < run.metrics.size(); ++m) {
    const double v = run.metrics[m];
    if (!std::isfinite(v) || v < 0.0) {
      throw ValidationError(where + ": metric '" + system->metric_catalog[m] +
                            "' must be finite and >= 0");
    }
  }
}

}  // namespace

Dataset Dataset::create(std::vector<SystemSpec> systems, std::vector<RunRecord> runs) {
  auto storage = std::make_shared<Storage>();
  std::set<std::string> seen_systems;
  for (const auto& system : systems) {
    validate(system);
    if (!seen_systems.insert(system.system_id).second) {
      throw ValidationError("duplicate system '" + system.system_id + "'");
    }
  }
  storage->systems = std::move(systems);
  std::sort(storage->systems.begin(), storage->systems.end(),
            [](const SystemSpec& a, const SystemSpec& b) { return a.system_id < b.system_id; });

  auto find = [&](std::string_view id) -> const SystemSpec* {
    for (const auto& s : storage->systems) {
      if (s.system_id == id) return &s;
    }
    return nullptr;
  };

  std::set<std::string> apps;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto& run = runs[i];
    validate_run(run, i, find(run.system_id));
    apps.insert(run.app_id);
    RunKey key{run.app_id, run.config(), run.interference};
    if (run.run_kind == RunKind::Complete) {
      if (!storage->complete.emplace(key, i).second) {
        throw ValidationError(describe(run, i) +
                              ": duplicate Complete run for this (app, configuration, interference)");
      }
    } else {
      auto [it, inserted] = storage->partial.emplace(key, i);
      if (!inserted) {
        const auto& held = runs[it->second];
        const bool longer = run.span_seconds > held.span_seconds;
        const bool tie_smaller =
            run.span_seconds == held.span_seconds && record_identity_less(run, held);
        if (longer || tie_smaller) it->second = i;
      }
    }
  }
  storage->runs = std::move(runs);
  storage->apps.assign(apps.begin(), apps.end());

  Dataset out;
  out.data_ = std::move(storage);
  return out;
}

bool Dataset::has_app(std::string_view app_id) const {
  return std::binary_search(data_->apps.begin(), data_->apps.end(), app_id);
}

const SystemSpec* Dataset::find_system(std::string_view system_id) const {
  for (const auto& s : data_->systems) {
    if (s.system_id == system_id) return &s;
  }
  return nullptr;
}

const SystemSpec& Dataset::system(std::string_view system_id) const {
  const auto* s = find_system(system_id);
  if (s == nullptr) throw ArgumentError("unknown system '" + std::string(system_id) + "'");
  return *s;
}

const ConfigurationSpec& Dataset::config(const ConfigId& id) const {
  const auto* c = system(id.system_id).find(id.vcpus);
  if (c == nullptr) throw ArgumentError("unknown configuration " + to_string(id));
  return *c;
}

bool Dataset::has_config(const ConfigId& id) const {
  const auto* s = find_system(id.system_id);
  return s != nullptr && s->find(id.vcpus) != nullptr;
}

std::vector<ConfigId> Dataset::all_configs() const {
  std::vector<ConfigId> out;
  for (const auto& s : data_->systems) {
    for (const auto& c : s.configurations) out.push_back(c.id());
  }
  std::sort(out.begin(), out.end());
  return out;
}

const RunRecord* Dataset::complete_run(std::string_view app_id, const ConfigId& config,
                                       Interference kind) const {
  auto it = data_->complete.find(RunKey{std::string(app_id), config, kind});
  return it == data_->complete.end() ? nullptr : &data_->runs[it->second];
}

const RunRecord* Dataset::partial_run(std::string_view app_id, const ConfigId& config,
                                      Interference kind) const {
  auto it = data_->partial.find(RunKey{std::string(app_id), config, kind});
  return it == data_->partial.end() ? nullptr : &data_->runs[it->second];
}

Dataset Dataset::restrict_apps(const std::set<std::string>& keep) const {
  return filter_runs([&](const RunRecord& r) { return keep.count(r.app_id) > 0; });
}

Dataset Dataset::filter_runs(const std::function<bool(const RunRecord&)>& keep) const {
  std::vector<RunRecord> runs;
  for (const auto& r : data_->runs) {
    if (keep(r)) runs.push_back(r);
  }
  return create(data_->systems, std::move(runs));
}

Dataset Dataset::with_runs(const std::vector<RunRecord>& extra) const {
  std::vector<RunRecord> runs = data_->runs;
  runs.insert(runs.end(), extra.begin(), extra.end());
  return create(data_->systems, std::move(runs));
}

}  // namespace perfcost
