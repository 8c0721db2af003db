#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "perfcost/dataset.hpp"
#include "perfcost/predict.hpp"

namespace perfcost {

// Systems file: {"systems": [{"system_id", "configurations": [{"vcpus",
// "memory_gb", "price_per_hour"}], "metric_catalog": [...]}]}.
std::string systems_to_json(const std::vector<SystemSpec>& systems);
// Throws ValidationError naming `source` and the offending field.
std::vector<SystemSpec> systems_from_json(const std::string& text, const std::string& source);

// Runs file: one JSON object per line with app_id, system_id, vcpus,
// interference, run_kind, span_seconds, wall_time_seconds (Complete runs
// only), and metrics keyed by name in catalog order.
std::string run_to_json_line(const RunRecord& run, const SystemSpec& system);
std::string runs_to_jsonl(const std::vector<RunRecord>& runs, const std::vector<SystemSpec>& systems);

struct IngestionReport {
  std::string systems_path;
  std::string runs_path;
  std::vector<std::string> errors;    // "file:line: field: message"
  std::vector<std::string> warnings;
  std::size_t system_count = 0;
  std::size_t configuration_count = 0;
  std::size_t run_count = 0;
  std::size_t app_count = 0;
};

// Parses runs, appending one error per bad line. Valid lines are returned.
// With skip_unknown_systems, lines on undeclared systems are ignored rather
// than reported.
std::vector<RunRecord> parse_runs_jsonl(const std::string& text, const std::string& source,
                                        const std::vector<SystemSpec>& systems,
                                        std::vector<std::string>& errors,
                                        bool skip_unknown_systems = false);

struct Ingested {
  IngestionReport report;
  std::optional<Dataset> dataset;  // set only when report.errors is empty
};

Ingested ingest(const std::filesystem::path& systems_path, const std::filesystem::path& runs_path);
std::string ingestion_report_to_json(const IngestionReport& report);

// Writes systems.json and runs.jsonl into `dir`.
void write_dataset(const std::filesystem::path& dir, const Dataset& dataset);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& content);
// Creates `dir`; an existing non-empty directory is an error unless `force`,
// in which case it is emptied first.
void prepare_output_dir(const std::filesystem::path& dir, bool force);

std::string report_to_json(const TradeoffReport& report);
TradeoffReport report_from_json(const std::string& text, const std::string& source);
// One row per point.
std::string report_to_csv(const TradeoffReport& report, bool pareto_only = false);
// Aligned text table; Pareto-optimal rows are marked with '*'.
std::string report_to_table(const TradeoffReport& report, bool pareto_only = false);

struct EvaluationReport {
  std::string scope;
  int folds = 10;
  std::uint64_t seed = 0;
  double coverage = 1.0;
  bool interference_aware = false;
  bool include_relative_times = false;
  ErrorSummary summary;
  std::vector<std::string> warnings;
  std::optional<double> classifier_accuracy;
};

// SMAPE values are rendered with one decimal.
std::string evaluation_to_json(const EvaluationReport& report);

}  // namespace perfcost
