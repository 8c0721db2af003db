#include "commands.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <filesystem>
#include <set>
#include <thread>

#include "perfcost/bundle_io.hpp"
#include "perfcost/formats.hpp"
#include "perfcost/numfmt.hpp"
#include "perfcost/parallel.hpp"
#include "perfcost/pipeline.hpp"
#include "perfcost/predict.hpp"
#include "perfcost/random.hpp"
#include "perfcost/synthoracle.hpp"

namespace perfcost::cli {

namespace fs = std::filesystem;

namespace {

struct UsageError : Error {
  using Error::Error;
};

struct DataFlags {
  std::string runs;
  std::string systems;
};

struct ModelFlags {
  std::string scope = "global";
  bool interference = false;
  bool relative_times = false;
  bool no_classifier = false;
  bool no_feature_selection = false;
  int max_k = SelectionOptions{}.max_k;
  double stop_threshold = SelectionOptions{}.stop_threshold;
  std::uint64_t seed = 0;
  int classifier_trees = HyperParams::classifier_defaults().n_trees;
  int regressor_stages = HyperParams::regressor_defaults().n_trees;
  int max_depth = HyperParams{}.max_depth;
  double learning_rate = HyperParams{}.learning_rate;
  int min_samples_leaf = HyperParams{}.min_samples_leaf;
  double subsample = HyperParams{}.subsample_fraction;
  double colsample = HyperParams{}.colsample_fraction;
};

void add_data_flags(CLI::App* cmd, DataFlags& d) {
  cmd->add_option("--runs", d.runs, "Runs file (JSON lines)")->required();
  cmd->add_option("--systems", d.systems, "Systems file (JSON)")->required();
}

void add_model_flags(CLI::App* cmd, ModelFlags& m) {
  cmd->add_option("--scope", m.scope, "global | system:ID | local | local:SYSTEM:VCPUS")->capture_default_str();
  cmd->add_flag("--interference", m.interference, "Predict under all four interference kinds");
  cmd->add_flag("--include-relative-times", m.relative_times,
                "Add relative execution times across fingerprint configurations (needs complete runs)");
  cmd->add_flag("--no-classifier", m.no_classifier, "Train a single regressor over all apps");
  cmd->add_flag("--no-feature-selection", m.no_feature_selection, "Keep every metric");
  cmd->add_option("--max-k", m.max_k, "Maximum fingerprint configurations")->capture_default_str();
  cmd->add_option("--stop-threshold", m.stop_threshold, "Minimum SMAPE improvement per added configuration")
      ->capture_default_str();
  cmd->add_option("--seed", m.seed, "Random seed")->capture_default_str();
  cmd->add_option("--classifier-trees", m.classifier_trees)->capture_default_str();
  cmd->add_option("--regressor-stages", m.regressor_stages)->capture_default_str();
  cmd->add_option("--max-depth", m.max_depth)->capture_default_str();
  cmd->add_option("--learning-rate", m.learning_rate)->capture_default_str();
  cmd->add_option("--min-samples-leaf", m.min_samples_leaf)->capture_default_str();
  cmd->add_option("--subsample", m.subsample)->capture_default_str();
  cmd->add_option("--colsample", m.colsample)->capture_default_str();
}

// "local" (every configuration) has no Scope value of its own.
bool is_all_local(const ModelFlags& m) { return m.scope == "local"; }

TrainOptions train_options(const ModelFlags& m) {
  TrainOptions o;
  if (!is_all_local(m)) o.scope = Scope::parse(m.scope);
  o.interference_aware = m.interference;
  o.include_relative_times = m.relative_times;
  o.use_classifier = !m.no_classifier;
  o.select_features = !m.no_feature_selection;
  o.selection.max_k = m.max_k;
  o.selection.stop_threshold = m.stop_threshold;
  o.seed = m.seed;
  o.classifier_params.n_trees = m.classifier_trees;
  o.classifier_params.max_depth = m.max_depth;
  o.classifier_params.min_samples_leaf = m.min_samples_leaf;
  o.classifier_params.colsample_fraction = m.colsample;
  o.regressor_params.n_trees = m.regressor_stages;
  o.regressor_params.max_depth = m.max_depth;
  o.regressor_params.learning_rate = m.learning_rate;
  o.regressor_params.min_samples_leaf = m.min_samples_leaf;
  o.regressor_params.subsample_fraction = m.subsample;
  o.regressor_params.colsample_fraction = m.colsample;
  o.classifier_params.validate();
  o.regressor_params.validate();
  if (m.max_k < 1) throw ArgumentError("--max-k must be >= 1");
  return o;
}

Dataset load(const DataFlags& d, std::ostream& err) {
  auto ingested = ingest(d.systems, d.runs);
  for (const auto& w : ingested.report.warnings) err << "warning: " << w << "\n";
  if (!ingested.dataset) {
    const std::size_t shown = std::min<std::size_t>(ingested.report.errors.size(), 50);
    for (std::size_t i = 0; i < shown; ++i) err << "error: " << ingested.report.errors[i] << "\n";
    if (ingested.report.errors.size() > shown) {
      err << "error: ... " << (ingested.report.errors.size() - shown) << " more\n";
    }
    throw ValidationError("input validation failed");
  }
  return *ingested.dataset;
}

void print_warnings(const std::vector<std::string>& warnings, std::ostream& err) {
  for (const auto& w : warnings) err << "warning: " << w << "\n";
}

std::string join(const std::vector<ConfigId>& configs) {
  std::string out;
  for (const auto& c : configs) out += (out.empty() ? "" : " ") + to_string(c);
  return out;
}

void emit(const std::string& content, const std::string& path, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << content;
  } else {
    write_text_file(path, content);
  }
}

// Commands ------------------------------------------------------------------

struct SimulateFlags {
  int systems = 3;
  int apps = 80;
  std::uint64_t seed = 1;
  double poor_fraction = 0.13;
  std::string out;
  bool force = false;
};

int cmd_simulate(const SimulateFlags& f, std::ostream& out) {
  if (f.systems < 1) throw ArgumentError("--systems must be >= 1");
  if (f.apps < 2) throw ArgumentError("--apps must be >= 2");
  if (!(f.poor_fraction >= 0.0 && f.poor_fraction <= 1.0)) throw ArgumentError("--poor-fraction must be in [0, 1]");
  const auto corpus = generate_corpus(f.systems, f.apps, f.seed, f.poor_fraction);
  prepare_output_dir(f.out, f.force);
  write_dataset(f.out, corpus.dataset);
  write_text_file(fs::path(f.out) / "oracle.json", oracle_to_json(corpus));
  out << "wrote " << corpus.dataset.runs().size() << " runs for " << corpus.dataset.apps().size() << " apps on "
      << corpus.dataset.systems().size() << " systems to " << f.out << "\n";
  return kOk;
}

struct TrainFlags {
  DataFlags data;
  ModelFlags model;
  std::string out;
  bool force = false;
};

int cmd_train(const TrainFlags& f, std::ostream& out, std::ostream& err) {
  auto options = train_options(f.model);
  const auto dataset = load(f.data, err);
  if (is_all_local(f.model)) {
    const auto bundles = train_local_predictors(dataset, options);
    for (const auto& [config, b] : bundles) {
      for (const auto& w : b.warnings) err << "warning: " << to_string(config) << ": " << w << "\n";
    }
    write_local_bundles(f.out, bundles, f.force);
    out << "wrote " << bundles.size() << " local bundles to " << f.out << "\n";
    return kOk;
  }
  const auto bundle = train_bundle(dataset, options);
  print_warnings(bundle.warnings, err);
  const auto checksum = write_bundle(f.out, bundle, f.force);
  out << "scope " << bundle.scope.to_string() << "\n"
      << "baseline " << to_string(bundle.baseline) << "\n"
      << "fingerprint " << join(bundle.fingerprint_configs) << "\n"
      << "features " << bundle.layout().size() << "\n"
      << "checksum " << checksum << "\n";
  return kOk;
}

struct EvaluateFlags {
  DataFlags data;
  ModelFlags model;
  int folds = 10;
  double coverage = 1.0;
  bool reselect = false;
  std::string report;
};

int cmd_evaluate(const EvaluateFlags& f, std::ostream& out, std::ostream& err) {
  auto options = train_options(f.model);
  if (f.folds < 2) throw ArgumentError("--folds must be >= 2");
  if (!(f.coverage > 0.0 && f.coverage <= 1.0)) throw ArgumentError("--coverage must be in (0, 1]");
  const auto dataset = load(f.data, err);
  const auto plan = FoldPlan::make(dataset.apps(), std::min<int>(f.folds, static_cast<int>(dataset.apps().size())),
                                   f.model.seed);

  EvaluationReport report;
  report.scope = f.model.scope;
  report.folds = f.folds;
  report.seed = f.model.seed;
  report.coverage = f.coverage;
  report.interference_aware = options.interference_aware;
  report.include_relative_times = options.include_relative_times;

  if (is_all_local(f.model) || options.scope.kind == ScopeKind::Local) {
    if (f.coverage < 1.0) throw ArgumentError("--coverage is not supported for local scope");
    const auto per_config = cross_validate_local(dataset, options, plan);
    std::vector<SmapeTerm> terms;
    for (const auto& [config, summary] : per_config) {
      if (options.scope.kind == ScopeKind::Local && config != options.scope.config) continue;
      terms.insert(terms.end(), summary.terms.begin(), summary.terms.end());
    }
    if (terms.empty()) throw ValidationError("no local predictions could be scored");
    report.summary = summarize(std::move(terms));
  } else {
    if (!f.reselect) {
      // Configuration and baseline selection once on the full dataset;
      // feature selection and model fitting are repeated inside each fold.
      auto probe = options;
      probe.select_features = false;
      const auto chosen = train_bundle(dataset, probe);
      options.baseline = chosen.baseline;
      options.fingerprint_configs = chosen.fingerprint_configs;
      err << "fingerprint " << join(chosen.fingerprint_configs) << " baseline " << to_string(chosen.baseline) << "\n";
    }
    CvOptions cv;
    cv.coverage = f.coverage;
    cv.coverage_seed = derive_seed(f.model.seed, "coverage");
    const auto result = cross_validate(dataset, options, plan, cv);
    report.summary = result.summary;
    report.warnings = result.warnings;
    if (options.use_classifier) {
      std::size_t correct = 0, total = 0;
      for (const auto& [app, label] : result.predicted_labels) {
        const auto it = result.true_labels.find(app);
        if (it == result.true_labels.end()) continue;
        correct += it->second == label ? 1 : 0;
        ++total;
      }
      if (total > 0) report.classifier_accuracy = static_cast<double>(correct) / static_cast<double>(total);
    }
  }
  const auto text = evaluation_to_json(report);
  emit(text, f.report, out);
  err << "mean SMAPE " << format_fixed(report.summary.mean_smape, 1) << "  median SMAPE "
      << format_fixed(report.summary.median_smape, 1) << "\n";
  return kOk;
}

struct PredictFlags {
  std::string bundle;
  std::string runs;
  std::string systems;
  std::string app;
  std::string config;
  std::string anchor;
  std::string out;
  std::string format = "json";
};

AbsoluteAnchor parse_anchor(const std::string& text) {
  const auto pos = text.rfind(':');
  if (pos == std::string::npos) throw ArgumentError("--anchor must be SYSTEM:VCPUS:SECONDS");
  AbsoluteAnchor a;
  a.config = parse_config_id(text.substr(0, pos));
  try {
    a.wall_time_seconds = parse_exact(text.substr(pos + 1));
  } catch (const Error&) {
    throw ArgumentError("--anchor seconds '" + text.substr(pos + 1) + "' is not a number");
  }
  return a;
}

int cmd_predict(const PredictFlags& f, std::ostream& out, std::ostream& err) {
  if (f.format != "json" && f.format != "csv") throw ArgumentError("--format must be json or csv");
  fs::path dir = f.bundle;
  if (is_local_index(dir)) {
    if (f.config.empty()) throw ArgumentError("--config SYSTEM:VCPUS is required with a local bundle index");
    const auto index = read_local_index(dir);
    const auto it = index.find(parse_config_id(f.config));
    if (it == index.end()) throw ArgumentError("no local bundle for " + f.config);
    dir = it->second;
  }
  const auto loaded = read_bundle(dir);
  const auto& bundle = loaded.bundle;

  std::vector<std::string> errors;
  std::vector<RunRecord> runs;
  const auto text = read_text_file(f.runs);
  if (!f.systems.empty()) {
    const auto systems = systems_from_json(read_text_file(f.systems), f.systems);
    runs = parse_runs_jsonl(text, f.runs, systems, errors);
  } else {
    runs = parse_runs_jsonl(text, f.runs, bundle.systems, errors, true);
  }
  if (!errors.empty()) {
    for (const auto& e : errors) err << "error: " << e << "\n";
    throw ValidationError("input validation failed");
  }
  std::set<std::string> apps;
  for (const auto& r : runs) apps.insert(r.app_id);
  std::string app = f.app;
  if (app.empty()) {
    if (apps.size() != 1) throw ArgumentError("runs hold " + std::to_string(apps.size()) + " apps; choose one with --app");
    app = *apps.begin();
  } else if (!apps.contains(app)) {
    throw ValidationError(f.runs + ": no runs for app '" + app + "'");
  }
  std::vector<RunRecord> mine;
  for (auto& r : runs) {
    if (r.app_id == app) mine.push_back(std::move(r));
  }
  auto report = predict(bundle, mine, loaded.checksum);
  if (!f.anchor.empty()) apply_anchor(report, bundle.systems, parse_anchor(f.anchor));
  print_warnings(report.warnings, err);
  emit(f.format == "json" ? report_to_json(report) : report_to_csv(report), f.out, out);
  return kOk;
}

struct ReportFlags {
  std::string prediction;
  std::string format = "table";
  bool pareto_only = false;
};

int cmd_report(const ReportFlags& f, std::ostream& out) {
  if (f.format != "table" && f.format != "csv") throw ArgumentError("--format must be table or csv");
  const auto report = report_from_json(read_text_file(f.prediction), f.prediction);
  out << (f.format == "table" ? report_to_table(report, f.pareto_only) : report_to_csv(report, f.pareto_only));
  return kOk;
}

struct SelectFlags {
  DataFlags data;
  ModelFlags model;
  std::string baseline;
  std::string trace;
};

int cmd_select(const SelectFlags& f, std::ostream& out, std::ostream& err) {
  auto options = train_options(f.model);
  if (is_all_local(f.model) || options.scope.kind == ScopeKind::Local) {
    throw ArgumentError("fingerprint selection applies to global and system scopes");
  }
  if (!f.baseline.empty()) options.baseline = parse_config_id(f.baseline);
  options.select_features = false;
  const auto dataset = load(f.data, err);
  // Only the selection stages matter here; the models are minimal.
  options.classifier_params.n_trees = 1;
  options.regressor_params.n_trees = 1;
  const auto bundle = train_bundle(dataset, options);
  print_warnings(bundle.selection.trace.warnings, err);
  for (std::size_t i = 0; i < bundle.selection.trace.steps.size(); ++i) {
    const auto& s = bundle.selection.trace.steps[i];
    out << "step " << (i + 1) << "  " << to_string(s.chosen) << "  smape " << format_fixed(s.error_after, 2);
    if (s.improvement) out << "  improvement " << format_fixed(*s.improvement, 2);
    out << (s.retained ? "" : "  (not retained)") << "\n";
  }
  out << "stop " << to_string(bundle.selection.trace.stop_reason) << "\n"
      << "baseline " << to_string(bundle.baseline) << "\n"
      << "selected " << join(bundle.fingerprint_configs) << "\n";
  if (!f.trace.empty()) write_text_file(f.trace, selection_trace_to_json(bundle));
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Performance-cost trade-off prediction from short profiling fingerprints", "perfcost"};
  app.require_subcommand(1);
  std::size_t threads = 1;
  app.add_option("--threads", threads, "Worker threads (0 = all hardware threads)")->capture_default_str();

  SimulateFlags sim;
  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic corpus with ground truth");
  simulate->add_option("--systems", sim.systems)->capture_default_str();
  simulate->add_option("--apps", sim.apps)->capture_default_str();
  simulate->add_option("--seed", sim.seed)->capture_default_str();
  simulate->add_option("--poor-fraction", sim.poor_fraction)->capture_default_str();
  simulate->add_option("--out", sim.out, "Output directory")->required();
  simulate->add_flag("--force", sim.force, "Overwrite a non-empty output directory");

  TrainFlags tr;
  auto* train = app.add_subcommand("train", "Train a predictor bundle");
  add_data_flags(train, tr.data);
  add_model_flags(train, tr.model);
  train->add_option("--out", tr.out, "Bundle directory")->required();
  train->add_flag("--force", tr.force, "Overwrite a non-empty bundle directory");

  EvaluateFlags ev;
  auto* evaluate = app.add_subcommand("evaluate", "Cross-validate a predictor configuration");
  add_data_flags(evaluate, ev.data);
  add_model_flags(evaluate, ev.model);
  evaluate->add_option("--folds", ev.folds)->capture_default_str();
  evaluate->add_option("--coverage", ev.coverage, "Fraction of configurations with ground truth per training app")
      ->capture_default_str();
  evaluate->add_flag("--reselect-per-fold", ev.reselect, "Repeat baseline and configuration selection in every fold");
  evaluate->add_option("--report", ev.report, "Report path (default stdout)");

  PredictFlags pr;
  auto* pred = app.add_subcommand("predict", "Predict the trade-off space of one app");
  pred->add_option("--bundle", pr.bundle, "Bundle directory or local bundle index")->required();
  pred->add_option("--runs", pr.runs, "Runs file with the app's fingerprint runs")->required();
  pred->add_option("--systems", pr.systems, "Systems file (default: systems embedded in the bundle)");
  pred->add_option("--app", pr.app, "App id (default: the only app in the runs)");
  pred->add_option("--config", pr.config, "Profiled configuration SYSTEM:VCPUS (local bundle index)");
  pred->add_option("--anchor", pr.anchor, "Measured wall time SYSTEM:VCPUS:SECONDS for absolute projection");
  pred->add_option("--out", pr.out, "Output path (default stdout)");
  pred->add_option("--format", pr.format, "json | csv")->capture_default_str();

  ReportFlags rp;
  auto* report = app.add_subcommand("report", "Render a prediction");
  report->add_option("--prediction", rp.prediction, "Prediction JSON")->required();
  report->add_option("--format", rp.format, "table | csv")->capture_default_str();
  report->add_flag("--pareto-only", rp.pareto_only, "Only Pareto-optimal configurations");

  SelectFlags se;
  auto* select = app.add_subcommand("select-fingerprints", "Run baseline and fingerprint-configuration selection");
  add_data_flags(select, se.data);
  add_model_flags(select, se.model);
  select->add_option("--baseline", se.baseline, "Fixed baseline SYSTEM:VCPUS");
  select->add_option("--trace", se.trace, "Write the selection trace JSON here");

  std::vector<std::string> reversed(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kUsageError;
  }
  set_max_threads(threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : threads);

  try {
    if (*simulate) return cmd_simulate(sim, out);
    if (*train) return cmd_train(tr, out, err);
    if (*evaluate) return cmd_evaluate(ev, out, err);
    if (*pred) return cmd_predict(pr, out, err);
    if (*report) return cmd_report(rp, out);
    if (*select) return cmd_select(se, out, err);
  } catch (const ArgumentError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsageError;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kValidationFailure;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kValidationFailure;
  }
  return kUsageError;
}

}  // namespace perfcost::cli
