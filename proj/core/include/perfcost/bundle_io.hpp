#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "perfcost/pipeline.hpp"

namespace perfcost {

// Bundle directory: manifest.json, classifier.json (when present),
// regressor_well.json, regressor_poor.json, features.json,
// selection_trace.json, and checksums.txt holding the FNV-1a digest of every
// other file. The bundle checksum is the digest of checksums.txt.
std::string write_bundle(const std::filesystem::path& dir, const TrainedBundle& bundle, bool force = false);

// Audit document of the bundle's selection stages (selection_trace.json).
std::string selection_trace_to_json(const TrainedBundle& bundle);

struct LoadedBundle {
  TrainedBundle bundle;
  std::string checksum;
};

// Verifies every file against checksums.txt; throws ValidationError on a
// mismatch or malformed file.
LoadedBundle read_bundle(const std::filesystem::path& dir);

// Directory of local bundles, one subdirectory per configuration, listed in
// index.json.
void write_local_bundles(const std::filesystem::path& dir, const std::map<ConfigId, TrainedBundle>& bundles,
                         bool force = false);
bool is_local_index(const std::filesystem::path& dir);
std::map<ConfigId, std::filesystem::path> read_local_index(const std::filesystem::path& dir);

}  // namespace perfcost
