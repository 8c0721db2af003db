#include "perfcost/bundle_io.hpp"

#include <sstream>

#include "json_support.hpp"
#include "perfcost/formats.hpp"
#include "perfcost/random.hpp"

namespace perfcost {

using detail::json;
using detail::ojson;
namespace fs = std::filesystem;

namespace {

constexpr const char* kChecksumFile = "checksums.txt";

std::string digest(const std::string& content) { return detail::hex64(fnv1a(content)); }

ojson pairs_json(const std::vector<std::pair<ConfigId, double>>& pairs) {
  ojson out = ojson::array();
  for (const auto& [c, e] : pairs) out.push_back(ojson{{"config", to_string(c)}, {"smape", e}});
  return out;
}

std::vector<std::pair<ConfigId, double>> pairs_from(const json& j) {
  std::vector<std::pair<ConfigId, double>> out;
  for (const auto& e : j) out.emplace_back(parse_config_id(e.at("config").get<std::string>()), e.at("smape").get<double>());
  return out;
}

}  // namespace

std::string selection_trace_to_json(const TrainedBundle& b) {
  ojson steps = ojson::array();
  for (const auto& s : b.selection.trace.steps) {
    steps.push_back(ojson{{"candidate_errors", pairs_json(s.candidate_errors)},
                          {"chosen", to_string(s.chosen)},
                          {"error_after", s.error_after},
                          {"improvement", s.improvement ? ojson(*s.improvement) : ojson(nullptr)},
                          {"retained", s.retained}});
  }
  ojson fractions = ojson::array();
  for (const auto& [f, e] : b.feature_fraction_errors) fractions.push_back(ojson{{"fraction", f}, {"smape", e}});
  ojson j{{"format", "perfcost-selection-trace"},
          {"version", 1},
          {"selected", ojson::array()},
          {"steps", std::move(steps)},
          {"stop_reason", to_string(b.selection.trace.stop_reason)},
          {"warnings", b.selection.trace.warnings},
          {"baseline_errors", pairs_json(b.baseline_errors)},
          {"feature_fraction_errors", std::move(fractions)}};
  for (const auto& c : b.selection.selected) j["selected"].push_back(to_string(c));
  return j.dump(2) + "\n";
}

namespace {

void trace_from(const json& j, TrainedBundle& b) {
  for (const auto& c : j.at("selected")) b.selection.selected.push_back(parse_config_id(c.get<std::string>()));
  for (const auto& s : j.at("steps")) {
    SelectionStep step;
    step.candidate_errors = pairs_from(s.at("candidate_errors"));
    step.chosen = parse_config_id(s.at("chosen").get<std::string>());
    step.error_after = s.at("error_after").get<double>();
    if (!s.at("improvement").is_null()) step.improvement = s.at("improvement").get<double>();
    step.retained = s.at("retained").get<bool>();
    b.selection.trace.steps.push_back(std::move(step));
  }
  const auto reason = j.at("stop_reason").get<std::string>();
  for (auto r : {StopReason::ThresholdReached, StopReason::MaxK, StopReason::Exhausted}) {
    if (to_string(r) == reason) b.selection.trace.stop_reason = r;
  }
  b.selection.trace.warnings = j.at("warnings").get<std::vector<std::string>>();
  b.baseline_errors = pairs_from(j.at("baseline_errors"));
  for (const auto& f : j.at("feature_fraction_errors")) {
    b.feature_fraction_errors.emplace_back(f.at("fraction").get<double>(), f.at("smape").get<double>());
  }
}

std::string features_json(const TrainedBundle& b) {
  ojson configs = ojson::array();
  ojson mask = ojson::array();
  for (const auto& c : b.fingerprint_configs) {
    configs.push_back(to_string(c));
    const auto it = b.feature_mask.find(c);
    mask.push_back(ojson{{"config", to_string(c)},
                         {"metrics", it == b.feature_mask.end() ? std::vector<std::string>{} : it->second}});
  }
  ojson j{{"format", "perfcost-features"},
          {"version", 1},
          {"fingerprint_configs", std::move(configs)},
          {"include_relative_times", b.include_relative_times},
          {"mask", std::move(mask)}};
  return j.dump(2) + "\n";
}

}  // namespace

std::string write_bundle(const fs::path& dir, const TrainedBundle& bundle, bool force) {
  prepare_output_dir(dir, force);
  std::map<std::string, std::string> files;
  if (bundle.classifier) files["classifier.json"] = to_json(*bundle.classifier);
  files["regressor_well.json"] = to_json(bundle.regressor_well);
  files["regressor_poor.json"] = to_json(bundle.regressor_poor);
  files["features.json"] = features_json(bundle);
  files["selection_trace.json"] = selection_trace_to_json(bundle);

  ojson checksums = ojson::object();
  for (const auto& [name, content] : files) checksums[name] = digest(content);
  ojson manifest{{"format", "perfcost-bundle"},
                 {"version", bundle.format_version},
                 {"scope", bundle.scope.to_string()},
                 {"seed", std::to_string(bundle.seed)},
                 {"baseline", to_string(bundle.baseline)},
                 {"interference_aware", bundle.interference_aware},
                 {"include_relative_times", bundle.include_relative_times},
                 {"has_classifier", bundle.classifier.has_value()},
                 {"model_format_version", 1},
                 {"systems", detail::systems_json(bundle.systems).at("systems")},
                 {"files", std::move(checksums)},
                 {"warnings", bundle.warnings}};
  files["manifest.json"] = manifest.dump(2) + "\n";

  std::string sums;
  for (const auto& [name, content] : files) {
    write_text_file(dir / name, content);
    sums += digest(content) + "  " + name + "\n";
  }
  write_text_file(dir / kChecksumFile, sums);
  return digest(sums);
}

LoadedBundle read_bundle(const fs::path& dir) {
  const auto where = dir.string();
  if (!fs::is_directory(dir)) throw ValidationError(where + ": not a bundle directory");
  const auto sums = read_text_file(dir / kChecksumFile);
  std::map<std::string, std::string> contents;
  std::istringstream in(sums);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto sep = line.find("  ");
    if (sep == std::string::npos) throw ValidationError(where + "/" + kChecksumFile + ": malformed line '" + line + "'");
    const auto expected = line.substr(0, sep);
    const auto name = line.substr(sep + 2);
    if (name.find('/') != std::string::npos || name.find("..") != std::string::npos) {
      throw ValidationError(where + "/" + kChecksumFile + ": invalid file name '" + name + "'");
    }
    auto content = read_text_file(dir / name);
    if (digest(content) != expected) throw ValidationError(where + "/" + name + ": checksum mismatch");
    contents[name] = std::move(content);
  }
  auto file = [&](const std::string& name) -> const std::string& {
    const auto it = contents.find(name);
    if (it == contents.end()) throw ValidationError(where + ": " + name + " missing from " + kChecksumFile);
    return it->second;
  };

  LoadedBundle out;
  out.checksum = digest(sums);
  auto& b = out.bundle;
  const auto manifest = detail::parse_json(file("manifest.json"), where + "/manifest.json");
  try {
    if (manifest.value("format", "") != "perfcost-bundle") throw ValidationError(where + "/manifest.json: format: not a bundle");
    b.format_version = manifest.at("version").get<int>();
    if (b.format_version != kBundleFormatVersion) {
      throw ValidationError(where + "/manifest.json: version: unsupported bundle version " + std::to_string(b.format_version));
    }
    b.scope = Scope::parse(manifest.at("scope").get<std::string>());
    b.seed = std::stoull(manifest.at("seed").get<std::string>());
    b.baseline = parse_config_id(manifest.at("baseline").get<std::string>());
    b.interference_aware = manifest.at("interference_aware").get<bool>();
    b.include_relative_times = manifest.at("include_relative_times").get<bool>();
    b.systems = detail::systems_from(manifest.at("systems"), where + "/manifest.json");
    b.warnings = manifest.at("warnings").get<std::vector<std::string>>();
    if (manifest.at("has_classifier").get<bool>()) b.classifier = forest_from_json(file("classifier.json"));
    b.regressor_well = regressor_from_json(file("regressor_well.json"));
    b.regressor_poor = regressor_from_json(file("regressor_poor.json"));

    const auto features = detail::parse_json(file("features.json"), where + "/features.json");
    for (const auto& c : features.at("fingerprint_configs")) b.fingerprint_configs.push_back(parse_config_id(c.get<std::string>()));
    for (const auto& m : features.at("mask")) {
      b.feature_mask[parse_config_id(m.at("config").get<std::string>())] = m.at("metrics").get<std::vector<std::string>>();
    }
    trace_from(detail::parse_json(file("selection_trace.json"), where + "/selection_trace.json"), b);
  } catch (const json::exception& e) {
    throw ValidationError(where + ": malformed bundle: " + e.what());
  } catch (const ArgumentError& e) {
    throw ValidationError(where + ": malformed bundle: " + e.what());
  } catch (const std::logic_error& e) {
    throw ValidationError(where + ": malformed bundle: " + e.what());
  }
  const auto width = b.layout().size() +
                     (b.include_relative_times && !b.fingerprint_configs.empty() ? b.fingerprint_configs.size() - 1 : 0);
  if (b.regressor_well.feature_count != width || (b.classifier && b.classifier->feature_count != width)) {
    throw ValidationError(where + ": model feature count does not match features.json layout");
  }
  return out;
}

void write_local_bundles(const fs::path& dir, const std::map<ConfigId, TrainedBundle>& bundles, bool force) {
  prepare_output_dir(dir, force);
  ojson list = ojson::array();
  for (const auto& [config, bundle] : bundles) {
    const auto sub = config.system_id + "_" + std::to_string(config.vcpus);
    const auto checksum = write_bundle(dir / sub, bundle, false);
    list.push_back(ojson{{"config", to_string(config)}, {"directory", sub}, {"checksum", checksum}});
  }
  write_text_file(dir / "index.json",
                  ojson{{"format", "perfcost-local-index"}, {"version", 1}, {"bundles", std::move(list)}}.dump(2) + "\n");
}

bool is_local_index(const fs::path& dir) { return fs::exists(dir / "index.json"); }

std::map<ConfigId, fs::path> read_local_index(const fs::path& dir) {
  const auto j = detail::parse_json(read_text_file(dir / "index.json"), (dir / "index.json").string());
  std::map<ConfigId, fs::path> out;
  try {
    if (j.value("format", "") != "perfcost-local-index") throw ValidationError((dir / "index.json").string() + ": format: not a local index");
    for (const auto& e : j.at("bundles")) {
      out[parse_config_id(e.at("config").get<std::string>())] = dir / e.at("directory").get<std::string>();
    }
  } catch (const json::exception& e) {
    throw ValidationError((dir / "index.json").string() + ": " + e.what());
  }
  return out;
}

}  // namespace perfcost
