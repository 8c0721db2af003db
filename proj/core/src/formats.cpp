#include "perfcost/formats.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include "json_support.hpp"
#include "perfcost/numfmt.hpp"

namespace perfcost {

namespace detail {

ojson systems_json(const std::vector<SystemSpec>& systems) {
  ojson list = ojson::array();
  for (const auto& s : systems) {
    ojson configs = ojson::array();
    for (const auto& c : s.configurations) {
      configs.push_back(ojson{{"vcpus", c.vcpus}, {"memory_gb", c.memory_gb}, {"price_per_hour", c.price_per_hour}});
    }
    list.push_back(ojson{{"system_id", s.system_id}, {"configurations", configs}, {"metric_catalog", s.metric_catalog}});
  }
  return ojson{{"systems", list}};
}

namespace {

[[noreturn]] void fail(const std::string& source, const std::string& field, const std::string& message) {
  throw ValidationError(source + ": " + field + ": " + message);
}

double number_at(const json& j, const char* key, const std::string& source, const std::string& path) {
  if (!j.contains(key)) fail(source, path + "." + key, "missing");
  const auto& v = j.at(key);
  if (!v.is_number()) fail(source, path + "." + key, "must be a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) fail(source, path + "." + key, "must be finite");
  return d;
}

}  // namespace

std::vector<SystemSpec> systems_from(const json& document, const std::string& source) {
  const json* list = &document;
  if (document.is_object()) {
    if (!document.contains("systems")) fail(source, "systems", "missing");
    list = &document.at("systems");
  }
  if (!list->is_array()) fail(source, "systems", "must be an array");
  std::vector<SystemSpec> out;
  std::set<std::string> seen;
  for (std::size_t i = 0; i < list->size(); ++i) {
    const auto& s = list->at(i);
    const std::string path = "systems[" + std::to_string(i) + "]";
    if (!s.is_object()) fail(source, path, "must be an object");
    SystemSpec spec;
    if (!s.contains("system_id") || !s.at("system_id").is_string() || s.at("system_id").get<std::string>().empty()) {
      fail(source, path + ".system_id", "must be a non-empty string");
    }
    spec.system_id = s.at("system_id").get<std::string>();
    if (!seen.insert(spec.system_id).second) fail(source, path + ".system_id", "duplicate system '" + spec.system_id + "'");
    if (!s.contains("configurations") || !s.at("configurations").is_array()) {
      fail(source, path + ".configurations", "must be an array");
    }
    const auto& configs = s.at("configurations");
    for (std::size_t k = 0; k < configs.size(); ++k) {
      const auto& c = configs.at(k);
      const std::string cpath = path + ".configurations[" + std::to_string(k) + "]";
      if (!c.is_object()) fail(source, cpath, "must be an object");
      if (!c.contains("vcpus") || !c.at("vcpus").is_number_integer()) fail(source, cpath + ".vcpus", "must be an integer");
      ConfigurationSpec cs;
      cs.system_id = spec.system_id;
      cs.vcpus = c.at("vcpus").get<int>();
      if (cs.vcpus < 1) fail(source, cpath + ".vcpus", "must be >= 1");
      cs.memory_gb = number_at(c, "memory_gb", source, cpath);
      if (!(cs.memory_gb > 0.0)) fail(source, cpath + ".memory_gb", "must be > 0");
      cs.price_per_hour = number_at(c, "price_per_hour", source, cpath);
      if (cs.price_per_hour < 0.0) fail(source, cpath + ".price_per_hour", "must be >= 0");
      if (!spec.configurations.empty() && cs.vcpus <= spec.configurations.back().vcpus) {
        fail(source, cpath + ".vcpus", "configurations must be listed with unique, ascending vcpus");
      }
      spec.configurations.push_back(cs);
    }
    if (spec.configurations.size() < 2) fail(source, path + ".configurations", "at least 2 configurations required");
    if (!s.contains("metric_catalog") || !s.at("metric_catalog").is_array()) {
      fail(source, path + ".metric_catalog", "must be an array of names");
    }
    std::set<std::string> names;
    for (const auto& m : s.at("metric_catalog")) {
      if (!m.is_string() || m.get<std::string>().empty()) fail(source, path + ".metric_catalog", "names must be non-empty strings");
      if (!names.insert(m.get<std::string>()).second) {
        fail(source, path + ".metric_catalog", "duplicate metric '" + m.get<std::string>() + "'");
      }
      spec.metric_catalog.push_back(m.get<std::string>());
    }
    if (spec.metric_catalog.empty()) fail(source, path + ".metric_catalog", "must not be empty");
    out.push_back(std::move(spec));
  }
  return out;
}

json parse_json(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(source + ": malformed JSON: " + e.what());
  }
}

std::string hex64(std::uint64_t value) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[value & 0xF];
    value >>= 4;
  }
  return out;
}

}  // namespace detail

using detail::json;
using detail::ojson;

std::string systems_to_json(const std::vector<SystemSpec>& systems) {
  return detail::systems_json(systems).dump(2) + "\n";
}

std::vector<SystemSpec> systems_from_json(const std::string& text, const std::string& source) {
  return detail::systems_from(detail::parse_json(text, source), source);
}

std::string run_to_json_line(const RunRecord& run, const SystemSpec& system) {
  ojson metrics = ojson::object();
  for (std::size_t m = 0; m < system.metric_catalog.size() && m < run.metrics.size(); ++m) {
    metrics[system.metric_catalog[m]] = run.metrics[m];
  }
  ojson j{{"app_id", run.app_id},
          {"system_id", run.system_id},
          {"vcpus", run.vcpus},
          {"interference", to_string(run.interference)},
          {"run_kind", to_string(run.run_kind)},
          {"span_seconds", run.span_seconds}};
  if (run.wall_time_seconds) j["wall_time_seconds"] = *run.wall_time_seconds;
  j["metrics"] = std::move(metrics);
  return j.dump();
}

std::string runs_to_jsonl(const std::vector<RunRecord>& runs, const std::vector<SystemSpec>& systems) {
  std::map<std::string, const SystemSpec*> by_id;
  for (const auto& s : systems) by_id[s.system_id] = &s;
  std::string out;
  for (const auto& r : runs) {
    const auto it = by_id.find(r.system_id);
    if (it == by_id.end()) throw ValidationError("run references undeclared system '" + r.system_id + "'");
    out += run_to_json_line(r, *it->second);
    out += '\n';
  }
  return out;
}

std::vector<RunRecord> parse_runs_jsonl(const std::string& text, const std::string& source,
                                        const std::vector<SystemSpec>& systems,
                                        std::vector<std::string>& errors, bool skip_unknown_systems) {
  std::map<std::string, const SystemSpec*, std::less<>> by_id;
  for (const auto& s : systems) by_id[s.system_id] = &s;
  std::map<std::tuple<std::string, ConfigId, Interference>, std::size_t> complete_lines;

  std::vector<RunRecord> out;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const std::string where = source + ":" + std::to_string(line_no);
    auto error = [&](const std::string& field, const std::string& message) {
      errors.push_back(where + ": " + field + ": " + message);
    };
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      error("(record)", std::string("malformed JSON: ") + e.what());
      continue;
    }
    if (!j.is_object()) {
      error("(record)", "must be a JSON object");
      continue;
    }
    auto str = [&](const char* key) -> std::optional<std::string> {
      if (!j.contains(key) || !j.at(key).is_string() || j.at(key).get<std::string>().empty()) {
        error(key, "must be a non-empty string");
        return std::nullopt;
      }
      return j.at(key).get<std::string>();
    };
    RunRecord run;
    const auto app = str("app_id");
    const auto sys = str("system_id");
    const auto kind = str("interference");
    const auto rkind = str("run_kind");
    if (!app || !sys || !kind || !rkind) continue;
    run.app_id = *app;
    run.system_id = *sys;
    try {
      run.interference = parse_interference(*kind);
    } catch (const Error& e) {
      error("interference", e.what());
      continue;
    }
    try {
      run.run_kind = parse_run_kind(*rkind);
    } catch (const Error& e) {
      error("run_kind", e.what());
      continue;
    }
    const auto sit = by_id.find(run.system_id);
    if (sit == by_id.end()) {
      if (skip_unknown_systems) continue;
      error("system_id", "undeclared system '" + run.system_id + "'");
      continue;
    }
    const auto& system = *sit->second;
    if (!j.contains("vcpus") || !j.at("vcpus").is_number_integer()) {
      error("vcpus", "must be an integer");
      continue;
    }
    run.vcpus = j.at("vcpus").get<int>();
    if (system.find(run.vcpus) == nullptr) {
      error("vcpus", "system '" + run.system_id + "' has no " + std::to_string(run.vcpus) + "-vCPU configuration");
      continue;
    }
    if (!j.contains("span_seconds") || !j.at("span_seconds").is_number() ||
        !(j.at("span_seconds").get<double>() > 0.0) || !std::isfinite(j.at("span_seconds").get<double>())) {
      error("span_seconds", "must be a positive finite number");
      continue;
    }
    run.span_seconds = j.at("span_seconds").get<double>();
    const bool has_wall = j.contains("wall_time_seconds") && !j.at("wall_time_seconds").is_null();
    if (run.run_kind == RunKind::Complete) {
      if (!has_wall) {
        error("wall_time_seconds", "required for complete runs");
        continue;
      }
      const auto& w = j.at("wall_time_seconds");
      if (!w.is_number() || !(w.get<double>() > 0.0) || !std::isfinite(w.get<double>())) {
        error("wall_time_seconds", "must be a positive finite number");
        continue;
      }
      run.wall_time_seconds = w.get<double>();
    } else if (has_wall) {
      error("wall_time_seconds", "not allowed on partial runs");
      continue;
    }
    if (!j.contains("metrics") || !j.at("metrics").is_object()) {
      error("metrics", "must be an object");
      continue;
    }
    const auto& metrics = j.at("metrics");
    bool ok = true;
    run.metrics.assign(system.metric_catalog.size(), 0.0);
    for (std::size_t m = 0; m < system.metric_catalog.size(); ++m) {
      const auto& name = system.metric_catalog[m];
      if (!metrics.contains(name)) {
        error("metrics." + name, "missing (required by the catalog of system '" + system.system_id + "')");
        ok = false;
        continue;
      }
      const auto& v = metrics.at(name);
      if (!v.is_number() || !std::isfinite(v.get<double>()) || v.get<double>() < 0.0) {
        error("metrics." + name, "must be a finite number >= 0");
        ok = false;
        continue;
      }
      run.metrics[m] = v.get<double>();
    }
    for (const auto& [name, _] : metrics.items()) {
      if (system.metric_index(name) < 0) {
        error("metrics." + name, "not in the catalog of system '" + system.system_id + "'");
        ok = false;
      }
    }
    if (!ok) continue;
    if (run.run_kind == RunKind::Complete) {
      const auto key = std::make_tuple(run.app_id, run.config(), run.interference);
      const auto [it, fresh] = complete_lines.emplace(key, line_no);
      if (!fresh) {
        error("run_kind", "duplicate complete run for (" + run.app_id + ", " + to_string(run.config()) + ", " +
                              std::string(to_string(run.interference)) + "), first on line " +
                              std::to_string(it->second));
        continue;
      }
    }
    out.push_back(std::move(run));
  }
  return out;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError(path.string() + ": cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(path.string() + ": cannot write file");
  out << content;
  if (!out) throw Error(path.string() + ": write failed");
}

void prepare_output_dir(const std::filesystem::path& dir, bool force) {
  namespace fs = std::filesystem;
  if (fs::exists(dir)) {
    if (!fs::is_directory(dir)) throw ArgumentError(dir.string() + " exists and is not a directory");
    if (!fs::is_empty(dir)) {
      if (!force) throw ArgumentError(dir.string() + " is not empty (use --force to overwrite)");
      for (const auto& entry : fs::directory_iterator(dir)) fs::remove_all(entry.path());
    }
  } else {
    fs::create_directories(dir);
  }
}

Ingested ingest(const std::filesystem::path& systems_path, const std::filesystem::path& runs_path) {
  Ingested out;
  auto& report = out.report;
  report.systems_path = systems_path.string();
  report.runs_path = runs_path.string();
  std::vector<SystemSpec> systems;
  try {
    systems = systems_from_json(read_text_file(systems_path), report.systems_path);
  } catch (const ValidationError& e) {
    report.errors.push_back(e.what());
    return out;
  }
  report.system_count = systems.size();
  for (const auto& s : systems) report.configuration_count += s.configurations.size();

  std::string text;
  try {
    text = read_text_file(runs_path);
  } catch (const ValidationError& e) {
    report.errors.push_back(e.what());
    return out;
  }
  auto runs = parse_runs_jsonl(text, report.runs_path, systems, report.errors);
  report.run_count = runs.size();
  if (!report.errors.empty()) return out;
  try {
    out.dataset = Dataset::create(std::move(systems), std::move(runs));
  } catch (const Error& e) {
    report.errors.push_back(report.runs_path + ": " + e.what());
    return out;
  }
  report.app_count = out.dataset->apps().size();
  if (report.app_count == 0) report.warnings.push_back(report.runs_path + ": no runs");
  return out;
}

std::string ingestion_report_to_json(const IngestionReport& report) {
  ojson j{{"systems_path", report.systems_path},
          {"runs_path", report.runs_path},
          {"errors", report.errors},
          {"warnings", report.warnings},
          {"counts",
           ojson{{"systems", report.system_count},
                 {"configurations", report.configuration_count},
                 {"runs", report.run_count},
                 {"apps", report.app_count}}}};
  return j.dump(2) + "\n";
}

void write_dataset(const std::filesystem::path& dir, const Dataset& dataset) {
  write_text_file(dir / "systems.json", systems_to_json(dataset.systems()));
  write_text_file(dir / "runs.jsonl", runs_to_jsonl(dataset.runs(), dataset.systems()));
}

namespace {

ojson nullable(double v) { return std::isfinite(v) ? ojson(v) : ojson(nullptr); }

double number_or_nan(const json& v) { return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>(); }

}  // namespace

std::string report_to_json(const TradeoffReport& report) {
  ojson points = ojson::array();
  for (std::size_t i = 0; i < report.points.size(); ++i) {
    const auto& p = report.points[i];
    ojson o{{"system_id", p.system_id},
            {"vcpus", p.vcpus},
            {"interference", to_string(p.interference)},
            {"speedup", p.speedup},
            {"relative_time", p.relative_time},
            {"relative_cost", p.relative_cost},
            {"pareto_optimal", p.pareto_optimal}};
    if (i < report.absolute.size()) {
      o["absolute_time_seconds"] = report.absolute[i].time_seconds;
      o["absolute_cost"] = report.absolute[i].cost;
    }
    points.push_back(std::move(o));
  }
  ojson j{{"format", "perfcost-report"},
          {"version", 1},
          {"app_id", report.app_id},
          {"scope", report.scope},
          {"label", report.label ? ojson(std::string(to_string(*report.label))) : ojson(nullptr)},
          {"baseline", to_string(report.baseline)},
          {"bundle_checksum", report.bundle_checksum},
          {"points", std::move(points)}};
  if (report.interference_envelope) {
    ojson env = ojson::array();
    for (const auto& [config, speeds] : *report.interference_envelope) {
      ojson e{{"config", to_string(config)}};
      for (auto kind : kAllInterference) e[std::string(to_string(kind))] = nullable(speeds[static_cast<std::size_t>(kind)]);
      env.push_back(std::move(e));
    }
    j["interference_envelope"] = std::move(env);
  }
  if (report.anchor) {
    j["anchor"] = ojson{{"config", to_string(report.anchor->config)},
                        {"wall_time_seconds", report.anchor->wall_time_seconds}};
  }
  j["warnings"] = report.warnings;
  return j.dump(2) + "\n";
}

TradeoffReport report_from_json(const std::string& text, const std::string& source) {
  const auto j = detail::parse_json(text, source);
  try {
    if (j.value("format", "") != "perfcost-report") throw ValidationError(source + ": format: expected 'perfcost-report'");
    if (j.value("version", 0) != 1) throw ValidationError(source + ": version: unsupported");
    TradeoffReport r;
    r.app_id = j.at("app_id").get<std::string>();
    r.scope = j.at("scope").get<std::string>();
    if (!j.at("label").is_null()) r.label = parse_scalability(j.at("label").get<std::string>());
    r.baseline = parse_config_id(j.at("baseline").get<std::string>());
    r.bundle_checksum = j.at("bundle_checksum").get<std::string>();
    for (const auto& p : j.at("points")) {
      TradeoffPoint t;
      t.system_id = p.at("system_id").get<std::string>();
      t.vcpus = p.at("vcpus").get<int>();
      t.interference = parse_interference(p.at("interference").get<std::string>());
      t.speedup = p.at("speedup").get<double>();
      t.relative_time = p.at("relative_time").get<double>();
      t.relative_cost = p.at("relative_cost").get<double>();
      t.pareto_optimal = p.at("pareto_optimal").get<bool>();
      r.points.push_back(t);
      if (p.contains("absolute_time_seconds")) {
        r.absolute.push_back({p.at("absolute_time_seconds").get<double>(), p.at("absolute_cost").get<double>()});
      }
    }
    if (j.contains("interference_envelope")) {
      std::map<ConfigId, std::array<double, 4>> env;
      for (const auto& e : j.at("interference_envelope")) {
        std::array<double, 4> speeds{};
        for (auto kind : kAllInterference) {
          speeds[static_cast<std::size_t>(kind)] = number_or_nan(e.at(std::string(to_string(kind))));
        }
        env[parse_config_id(e.at("config").get<std::string>())] = speeds;
      }
      r.interference_envelope = std::move(env);
    }
    if (j.contains("anchor")) {
      r.anchor = AbsoluteAnchor{parse_config_id(j.at("anchor").at("config").get<std::string>()),
                                j.at("anchor").at("wall_time_seconds").get<double>()};
    }
    r.warnings = j.at("warnings").get<std::vector<std::string>>();
    return r;
  } catch (const json::exception& e) {
    throw ValidationError(source + ": " + e.what());
  } catch (const ArgumentError& e) {
    throw ValidationError(source + ": " + e.what());
  }
}

std::string report_to_csv(const TradeoffReport& report, bool pareto_only) {
  const bool anchored = report.absolute.size() == report.points.size() && !report.absolute.empty();
  std::string out = "app_id,system_id,vcpus,interference,speedup,relative_time,relative_cost,pareto_optimal";
  if (anchored) out += ",absolute_time_seconds,absolute_cost";
  out += '\n';
  for (std::size_t i = 0; i < report.points.size(); ++i) {
    const auto& p = report.points[i];
    if (pareto_only && !p.pareto_optimal) continue;
    out += report.app_id + "," + p.system_id + "," + std::to_string(p.vcpus) + "," +
           std::string(to_string(p.interference)) + "," + format_exact(p.speedup) + "," +
           format_exact(p.relative_time) + "," + format_exact(p.relative_cost) + "," +
           (p.pareto_optimal ? "true" : "false");
    if (anchored) out += "," + format_exact(report.absolute[i].time_seconds) + "," + format_exact(report.absolute[i].cost);
    out += '\n';
  }
  return out;
}

std::string report_to_table(const TradeoffReport& report, bool pareto_only) {
  const bool anchored = report.absolute.size() == report.points.size() && !report.absolute.empty();
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> header{"", "configuration", "speedup", "rel_time", "rel_cost"};
  if (anchored) {
    header.push_back("time_s");
    header.push_back("cost");
  }
  rows.push_back(header);
  for (std::size_t i = 0; i < report.points.size(); ++i) {
    const auto& p = report.points[i];
    if (pareto_only && !p.pareto_optimal) continue;
    std::vector<std::string> row{p.pareto_optimal ? "*" : "", to_string(p.config()), format_fixed(p.speedup, 3),
                                 format_fixed(p.relative_time, 3), format_fixed(p.relative_cost, 3)};
    if (anchored) {
      row.push_back(format_fixed(report.absolute[i].time_seconds, 1));
      row.push_back(format_fixed(report.absolute[i].cost, 4));
    }
    rows.push_back(std::move(row));
  }
  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::string out = "app " + report.app_id + "  scope " + report.scope;
  if (report.label) out += "  label " + std::string(to_string(*report.label));
  out += "  baseline " + to_string(report.baseline) + "\n";
  for (const auto& row : rows) {
    std::string line;
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c > 0) line += "  ";
      // Text columns left-aligned, numbers right-aligned.
      const bool left = c <= 1;
      const std::string pad(width[c] - row[c].size(), ' ');
      line += left ? row[c] + pad : pad + row[c];
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out += line + "\n";
  }
  if (report.interference_envelope) {
    out += "interference envelope (speedup none/compute/cache/memory)\n";
    for (const auto& [config, s] : *report.interference_envelope) {
      out += "  " + to_string(config);
      for (double v : s) out += "  " + (std::isfinite(v) ? format_fixed(v, 3) : std::string("-"));
      out += "\n";
    }
  }
  for (const auto& w : report.warnings) out += "warning: " + w + "\n";
  return out;
}

std::string evaluation_to_json(const EvaluationReport& report) {
  auto r1 = [](double v) { return std::isfinite(v) ? ojson(round_to(v, 1)) : ojson(nullptr); };
  ojson per_app = ojson::object();
  for (const auto& [app, v] : report.summary.per_app) per_app[app] = r1(v);
  ojson per_target = ojson::object();
  for (const auto& [t, v] : report.summary.per_target) per_target[to_string(t)] = r1(v);
  ojson j{{"scope", report.scope},
          {"folds", report.folds},
          {"seed", std::to_string(report.seed)},
          {"coverage", report.coverage},
          {"interference_aware", report.interference_aware},
          {"include_relative_times", report.include_relative_times},
          {"mean_smape", r1(report.summary.mean_smape)},
          {"median_smape", r1(report.summary.median_smape)}};
  if (report.interference_aware) {
    ojson kinds = ojson::object();
    for (auto kind : kAllInterference) kinds[std::string(to_string(kind))] = r1(report.summary.mean_for(kind));
    j["mean_smape_by_interference"] = std::move(kinds);
  }
  if (report.classifier_accuracy) j["classifier_accuracy"] = round_to(*report.classifier_accuracy, 3);
  j["per_app"] = std::move(per_app);
  j["per_target"] = std::move(per_target);
  j["warnings"] = report.warnings;
  return j.dump(2) + "\n";
}

}  // namespace perfcost
