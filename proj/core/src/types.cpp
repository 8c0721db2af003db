#include "perfcost/types.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>
#include <tuple>

namespace perfcost {

std::string_view to_string(Interference kind) {
  switch (kind) {
    case Interference::None: return "none";
    case Interference::Compute: return "compute";
    case Interference::Cache: return "cache";
    case Interference::Memory: return "memory";
  }
  return "none";
}

std::string_view to_string(RunKind kind) {
  return kind == RunKind::Partial ? "partial" : "complete";
}

std::string_view to_string(Scalability label) {
  return label == Scalability::ScalesWell ? "scales_well" : "scales_poorly";
}

Interference parse_interference(std::string_view text) {
  for (auto kind : kAllInterference) {
    if (to_string(kind) == text) return kind;
  }
  throw SchemaError("unknown interference kind '" + std::string(text) + "'");
}

RunKind parse_run_kind(std::string_view text) {
  if (text == "partial") return RunKind::Partial;
  if (text == "complete") return RunKind::Complete;
  throw SchemaError("unknown run kind '" + std::string(text) + "'");
}

Scalability parse_scalability(std::string_view text) {
  if (text == "scales_well") return Scalability::ScalesWell;
  if (text == "scales_poorly") return Scalability::ScalesPoorly;
  throw SchemaError("unknown scalability label '" + std::string(text) + "'");
}

std::string to_string(const ConfigId& id) {
  return id.system_id + ":" + std::to_string(id.vcpus);
}

ConfigId parse_config_id(std::string_view text) {
  auto colon = text.rfind(':');
  if (colon == std::string_view::npos || colon == 0) {
    throw ArgumentError("configuration '" + std::string(text) + "' is not of the form SYSTEM:VCPUS");
  }
  int vcpus = 0;
  auto digits = text.substr(colon + 1);
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), vcpus);
  if (ec != std::errc() || ptr != digits.data() + digits.size() || vcpus < 1) {
    throw ArgumentError("configuration '" + std::string(text) + "' has an invalid vCPU count");
  }
  return {std::string(text.substr(0, colon)), vcpus};
}

const ConfigurationSpec* SystemSpec::find(int vcpus) const {
  auto it = std::find_if(configurations.begin(), configurations.end(),
                         [&](const ConfigurationSpec& c) { return c.vcpus == vcpus; });
  return it == configurations.end() ? nullptr : &*it;
}

int SystemSpec::metric_index(std::string_view name) const {
  auto it = std::find(metric_catalog.begin(), metric_catalog.end(), name);
  return it == metric_catalog.end() ? -1 : static_cast<int>(it - metric_catalog.begin());
}

void validate(const SystemSpec& system) {
  const std::string where = "system '" + system.system_id + "'";
  if (system.system_id.empty()) throw ValidationError("system with empty system_id");
  if (system.configurations.size() < 2) {
    throw ValidationError(where + ": at least 2 configurations required");
  }
  int previous = 0;
  for (const auto& config : system.configurations) {
    const std::string cw = where + " configuration " + std::to_string(config.vcpus);
    if (config.system_id != system.system_id) throw ValidationError(cw + ": system_id mismatch");
    if (config.vcpus < 1) throw ValidationError(cw + ": vcpus must be >= 1");
    if (config.vcpus <= previous) {
      throw ValidationError(cw + ": configurations must have unique, ascending vcpus");
    }
    if (!(config.memory_gb > 0.0) || !std::isfinite(config.memory_gb)) {
      throw ValidationError(cw + ": memory_gb must be > 0");
    }
    if (!(config.price_per_hour >= 0.0) || !std::isfinite(config.price_per_hour)) {
      throw ValidationError(cw + ": price_per_hour must be >= 0");
    }
    previous = config.vcpus;
  }
  std::set<std::string_view> names;
  for (const auto& name : system.metric_catalog) {
    if (name.empty()) throw ValidationError(where + ": empty metric name");
    if (!names.insert(name).second) {
      throw ValidationError(where + ": duplicate metric '" + name + "'");
    }
  }
}

bool record_identity_less(const RunRecord& a, const RunRecord& b) {
  auto key = [](const RunRecord& r) {
    return std::tie(r.app_id, r.system_id, r.vcpus, r.interference, r.run_kind, r.span_seconds,
                    r.wall_time_seconds, r.metrics);
  };
  return key(a) < key(b);
}

std::string to_string(const TargetKey& key) {
  return to_string(key.config) + ":" + std::string(to_string(key.interference));
}

TargetKey parse_target_key(std::string_view text) {
  auto colon = text.rfind(':');
  if (colon == std::string_view::npos) {
    throw SchemaError("target '" + std::string(text) + "' is not of the form SYSTEM:VCPUS:KIND");
  }
  return {parse_config_id(text.substr(0, colon)), parse_interference(text.substr(colon + 1))};
}

}  // namespace perfcost
