#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace perfcost {

// Error hierarchy. Every failure the toolkit reports is one of these; the CLI
// maps ValidationError and its subclasses to exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class SchemaError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

class FingerprintError : public Error {
 public:
  using Error::Error;
};

class LabelingError : public Error {
 public:
  using Error::Error;
};

class SelectionError : public Error {
 public:
  using Error::Error;
};

class ConfigurationError : public Error {
 public:
  using Error::Error;
};

class RoutingError : public Error {
 public:
  using Error::Error;
};

enum class Interference : std::uint8_t { None = 0, Compute = 1, Cache = 2, Memory = 3 };

inline constexpr std::array<Interference, 4> kAllInterference = {
    Interference::None, Interference::Compute, Interference::Cache, Interference::Memory};

enum class RunKind : std::uint8_t { Partial, Complete };

enum class Scalability : std::uint8_t { ScalesWell, ScalesPoorly };

std::string_view to_string(Interference kind);
std::string_view to_string(RunKind kind);
std::string_view to_string(Scalability label);
Interference parse_interference(std::string_view text);
RunKind parse_run_kind(std::string_view text);
Scalability parse_scalability(std::string_view text);

// Identity of one resource configuration: a system and its vCPU count.
struct ConfigId {
  std::string system_id;
  int vcpus = 0;

  auto operator<=>(const ConfigId&) const = default;
  bool operator==(const ConfigId&) const = default;
};

std::string to_string(const ConfigId& id);
// Parses "SYSTEM:VCPUS".
ConfigId parse_config_id(std::string_view text);

struct ConfigurationSpec {
  std::string system_id;
  int vcpus = 0;
  double memory_gb = 0.0;
  double price_per_hour = 0.0;

  ConfigId id() const { return {system_id, vcpus}; }
  bool operator==(const ConfigurationSpec&) const = default;
};

struct SystemSpec {
  std::string system_id;
  std::vector<ConfigurationSpec> configurations;  // ascending vcpus
  std::vector<std::string> metric_catalog;

  const ConfigurationSpec& min_config() const { return configurations.front(); }
  const ConfigurationSpec& max_config() const { return configurations.back(); }
  const ConfigurationSpec* find(int vcpus) const;
  // Index of the metric in the catalog, or -1.
  int metric_index(std::string_view name) const;
  bool operator==(const SystemSpec&) const = default;
};

// Throws ValidationError if the system breaks an invariant.
void validate(const SystemSpec& system);

// One profiled execution. Metric values are stored aligned with the owning
// system's metric_catalog; ingestion converts from and to name-keyed maps.
struct RunRecord {
  std::string app_id;
  std::string system_id;
  int vcpus = 0;
  Interference interference = Interference::None;
  RunKind run_kind = RunKind::Partial;
  double span_seconds = 0.0;
  std::optional<double> wall_time_seconds;
  std::vector<double> metrics;

  ConfigId config() const { return {system_id, vcpus}; }
  bool operator==(const RunRecord&) const = default;
};

// Strict total order on record contents; used to break ties between
// otherwise-equivalent Partial runs independent of input order.
bool record_identity_less(const RunRecord& a, const RunRecord& b);

// A prediction target: configuration under one interference condition.
struct TargetKey {
  ConfigId config;
  Interference interference = Interference::None;

  auto operator<=>(const TargetKey&) const = default;
  bool operator==(const TargetKey&) const = default;
};

std::string to_string(const TargetKey& key);
TargetKey parse_target_key(std::string_view text);

}  // namespace perfcost
