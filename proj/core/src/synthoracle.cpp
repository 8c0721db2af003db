#include "perfcost/synthoracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <json.hpp>

#include "perfcost/numfmt.hpp"
#include "perfcost/random.hpp"

namespace perfcost {

namespace {

constexpr const char* kMetricStems[] = {
    "branch_instructions", "branch_misses", "cache_references", "cache_misses",
    "l1d_loads",           "l1d_load_misses", "l2_requests",    "l2_misses",
    "llc_loads",           "llc_load_misses", "dtlb_loads",     "dtlb_misses",
    "itlb_misses",         "uops_dispatched", "uops_retired",   "fp_scalar_ops",
    "fp_packed_ops",       "frontend_stalls", "backend_stalls", "bus_cycles",
    "cpu_migrations",      "minor_faults",    "ic_fetch_stalls", "mem_loads"};

double unit(double z) { return 0.5 * (z + 1.0); }

std::string system_name(int index, int count) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), count >= 10 ? "sys%02d" : "sys%d", index + 1);
  return buffer;
}

// Ideal parallel speedup from 1 vCPU to v, ignoring memory and affinity.
double ideal_speedup(const AppArchetype& app, double v) {
  const double w = app.parallel_work;
  const double s = app.serial_fraction * w;
  const double o = app.per_vcpu_overhead;
  return (s + w + o) / (s + w / v + o * v);
}

}  // namespace

double memory_penalty(const AppArchetype& app, double memory_gb) {
  return 1.0 + app.memory_pressure * std::max(0.0, 1.0 - memory_gb / app.required_gb);
}

double true_time(const AppArchetype& app, const ConfigurationSpec& config, Interference kind) {
  const double v = config.vcpus;
  auto it = app.system_affinity.find(config.system_id);
  const double affinity = it == app.system_affinity.end() ? 1.0 : it->second;
  const double work = app.serial_fraction * app.parallel_work + app.parallel_work / v +
                      app.per_vcpu_overhead * v;
  const double transition = config.vcpus == 1 ? app.single_vcpu_factor : 1.0;
  return affinity * work * memory_penalty(app, config.memory_gb) *
         app.interference_sensitivity[static_cast<std::size_t>(kind)] * transition;
}

Oracle::Oracle(std::uint64_t seed, int n_systems, double poor_fraction)
    : seed_(seed), poor_fraction_(poor_fraction) {
  if (n_systems < 1) throw ArgumentError("oracle needs at least one system");
  if (!(poor_fraction >= 0.0 && poor_fraction <= 1.0)) {
    throw ArgumentError("poor_fraction must be in [0, 1]");
  }
  for (int s = 0; s < n_systems; ++s) {
    Rng rng(derive_seed(seed, "system/" + std::to_string(s)));
    SystemSpec spec;
    spec.system_id = system_name(s, n_systems);
    const int n_configs = s % 3 == 1 ? 8 : 9;
    const double gb_per_vcpu = 2.0 + static_cast<double>(rng.below(3));
    const double vcpu_rate = rng.uniform(0.03, 0.06);
    const double gb_rate = rng.uniform(0.003, 0.006);
    const double fixed_fee = rng.uniform(0.0, 0.02);
    for (int c = 0; c < n_configs; ++c) {
      ConfigurationSpec config;
      config.system_id = spec.system_id;
      config.vcpus = c == 0 ? 1 : 8 * c;
      config.memory_gb = gb_per_vcpu * config.vcpus;
      config.price_per_hour = fixed_fee + vcpu_rate * config.vcpus + gb_rate * config.memory_gb;
      spec.configurations.push_back(config);
    }

    const int n_metrics = 40 + static_cast<int>(rng.below(21));
    EmissionModel model;
    for (int m = 0; m < n_metrics; ++m) {
      EmissionModel::Kind kind = EmissionModel::Kind::Latent;
      std::string name;
      if (m == 0) {
        kind = EmissionModel::Kind::ScalingSignal;
        name = "task_clock_cpus_utilized";
      } else if (m == 1) {
        kind = EmissionModel::Kind::ContextSwitches;
        name = "context_switches";
      } else if (m == 2) {
        kind = EmissionModel::Kind::PageFaults;
        name = "page_faults";
      } else {
        kind = rng.uniform() < 0.25 ? EmissionModel::Kind::Noise : EmissionModel::Kind::Latent;
        const auto stems = std::size(kMetricStems);
        name = std::string(kMetricStems[static_cast<std::size_t>(m - 3) % stems]) + "_" +
               std::to_string((m - 3) / static_cast<int>(stems));
      }
      spec.metric_catalog.push_back(name);
      model.kind.push_back(kind);
      model.log_base.push_back(rng.uniform(std::log(1e3), std::log(1e9)));
      std::vector<double> load(kLatentDims);
      for (auto& l : load) l = kind == EmissionModel::Kind::Latent ? 0.6 * rng.normal() : 0.0;
      model.loadings.push_back(std::move(load));
      model.vcpu_exponent.push_back(rng.uniform(-0.3, 1.0));
      model.penalty_exponent.push_back(kind == EmissionModel::Kind::Latent ? rng.uniform(-1.0, 1.0) : 0.0);
      std::array<double, 4> shift{0.0, 0.0, 0.0, 0.0};
      for (std::size_t k = 1; k < 4; ++k) shift[k] = 0.15 * rng.normal();
      model.interference_shift.push_back(shift);
    }

    std::vector<double> affinity(kLatentDims);
    for (auto& a : affinity) a = rng.normal() / std::sqrt(static_cast<double>(kLatentDims));
    affinity_loadings_.push_back(std::move(affinity));
    system_speed_.push_back(std::exp(0.2 * rng.normal()));
    systems_.push_back(std::move(spec));
    emission_.push_back(std::move(model));
  }
}

const SystemSpec& Oracle::system(const std::string& id) const {
  for (const auto& s : systems_) {
    if (s.system_id == id) return s;
  }
  throw ArgumentError("oracle has no system '" + id + "'");
}

const EmissionModel& Oracle::emission(const std::string& system_id) const {
  for (std::size_t s = 0; s < systems_.size(); ++s) {
    if (systems_[s].system_id == system_id) return emission_[s];
  }
  throw ArgumentError("oracle has no system '" + system_id + "'");
}

const std::string& Oracle::scaling_signal_metric(const std::string& system_id) const {
  return system(system_id).metric_catalog.front();
}

const ConfigurationSpec& Oracle::config(const ConfigId& id) const {
  const auto* c = system(id.system_id).find(id.vcpus);
  if (c == nullptr) throw ArgumentError("oracle has no configuration " + to_string(id));
  return *c;
}

AppArchetype Oracle::make_app(const std::string& app_id, std::uint64_t app_seed,
                              Scalability intended) const {
  Rng rng(derive_seed(app_seed, "archetype/" + app_id));
  Rng transition_rng(derive_seed(app_seed, "transition/" + app_id));
  for (int attempt = 0; attempt < 10000; ++attempt) {
    AppArchetype app;
    app.app_id = app_id;
    app.intended = intended;
    app.latent_profile.resize(kLatentDims);
    for (auto& z : app.latent_profile) z = rng.uniform(-1.0, 1.0);
    auto& z = app.latent_profile;
    z[1] = intended == Scalability::ScalesWell ? rng.uniform(-1.0, 0.15) : rng.uniform(0.55, 1.0);

    app.parallel_work = std::exp(rng.uniform(std::log(4000.0), std::log(40000.0)));
    app.serial_fraction = 0.08 * unit(z[0]);
    app.per_vcpu_overhead = app.parallel_work * std::pow(10.0, -5.0 + 4.4 * unit(z[1]));
    app.memory_pressure = unit(z[2]);
    app.required_gb = std::pow(2.0, 1.0 + 2.5 * unit(z[3]));
    for (std::size_t s = 0; s < systems_.size(); ++s) {
      double dot = 0.0;
      for (std::size_t i = 0; i < kLatentDims; ++i) dot += affinity_loadings_[s][i] * z[i];
      app.system_affinity[systems_[s].system_id] = system_speed_[s] * std::exp(0.3 * dot);
    }
    app.interference_sensitivity = {1.0, 1.1 + 0.3 * unit(z[4]), 1.05 + 0.4 * unit(z[5]),
                                    1.1 + 0.5 * app.memory_pressure};
    app.single_vcpu_factor = std::clamp(std::exp(0.12 * transition_rng.normal()), 0.75, 1.35);

    bool consistent = true;
    for (const auto& system : systems_) {
      const double r = true_time(app, system.max_config(), Interference::None) /
                       true_time(app, system.min_config(), Interference::None);
      const bool ok = intended == Scalability::ScalesPoorly ? r > 1.05 : r < 0.95;
      if (!ok) consistent = false;
    }
    if (consistent) return app;
  }
  throw Error("oracle could not draw a consistent archetype for '" + app_id + "'");
}

AppArchetype Oracle::make_app(const std::string& app_id, std::uint64_t app_seed) const {
  Rng rng(derive_seed(app_seed, "class/" + app_id));
  const auto label = rng.uniform() < poor_fraction_ ? Scalability::ScalesPoorly : Scalability::ScalesWell;
  return make_app(app_id, app_seed, label);
}

std::vector<double> Oracle::noise_free_metrics(const AppArchetype& app, const ConfigurationSpec& config,
                                               Interference kind) const {
  const auto& model = emission(config.system_id);
  const double v = config.vcpus;
  const double penalty = memory_penalty(app, config.memory_gb);
  const auto k = static_cast<std::size_t>(kind);
  const double sensitivity = app.interference_sensitivity[k];
  const std::uint64_t app_key = fnv1a(app.app_id);
  std::vector<double> out(model.kind.size());
  for (std::size_t m = 0; m < out.size(); ++m) {
    double value = 0.0;
    switch (model.kind[m]) {
      case EmissionModel::Kind::ScalingSignal:
        value = ideal_speedup(app, v) / std::sqrt(sensitivity);
        break;
      case EmissionModel::Kind::ContextSwitches:
        value = 1e3 * (1.0 + 1e3 * app.per_vcpu_overhead / app.parallel_work * v) *
                std::exp(model.interference_shift[m][k]);
        break;
      case EmissionModel::Kind::PageFaults:
        value = 1e2 * (1.0 + 50.0 * (penalty - 1.0) + 5.0 * app.memory_pressure) *
                std::exp(model.interference_shift[m][k]);
        break;
      case EmissionModel::Kind::Latent: {
        double log_value = model.log_base[m] + model.vcpu_exponent[m] * std::log(v) +
                           model.penalty_exponent[m] * std::log(penalty) +
                           model.interference_shift[m][k];
        for (std::size_t i = 0; i < kLatentDims; ++i) {
          log_value += model.loadings[m][i] * app.latent_profile[i];
        }
        value = std::exp(log_value);
        break;
      }
      case EmissionModel::Kind::Noise: {
        // A per-app constant unrelated to performance.
        Rng rng(derive_seed(app_key, m));
        value = std::exp(model.log_base[m] + 0.5 * rng.normal() +
                         model.vcpu_exponent[m] * std::log(v));
        break;
      }
    }
    out[m] = value;
  }
  return out;
}

std::vector<double> Oracle::emit_metrics(const AppArchetype& app, const ConfigurationSpec& config,
                                         Interference kind, double span_seconds,
                                         std::uint64_t seed) const {
  auto values = noise_free_metrics(app, config, kind);
  if (!std::isfinite(span_seconds)) return values;
  const double sigma = kNoiseAtReference * std::sqrt(kReferenceSpan / span_seconds);
  Rng rng(seed);
  for (auto& v : values) v *= std::exp(sigma * rng.normal() - 0.5 * sigma * sigma);
  return values;
}

std::vector<RunRecord> Oracle::runs_for(const AppArchetype& app, bool with_complete,
                                        bool with_interference) const {
  std::vector<RunRecord> runs;
  for (const auto& system : systems_) {
    for (const auto& config : system.configurations) {
      const double wall = true_time(app, config, Interference::None);
      RunRecord partial;
      partial.app_id = app.app_id;
      partial.system_id = config.system_id;
      partial.vcpus = config.vcpus;
      partial.interference = Interference::None;
      partial.run_kind = RunKind::Partial;
      partial.span_seconds = std::min(kReferenceSpan, wall);
      partial.metrics = emit_metrics(app, config, Interference::None, partial.span_seconds,
                                     derive_seed(seed_, "partial/" + app.app_id + "/" + to_string(config.id())));
      runs.push_back(std::move(partial));
      if (!with_complete) continue;
      for (auto kind : kAllInterference) {
        if (kind != Interference::None && !with_interference) continue;
        RunRecord complete;
        complete.app_id = app.app_id;
        complete.system_id = config.system_id;
        complete.vcpus = config.vcpus;
        complete.interference = kind;
        complete.run_kind = RunKind::Complete;
        complete.wall_time_seconds = true_time(app, config, kind);
        complete.span_seconds = *complete.wall_time_seconds;
        complete.metrics = emit_metrics(
            app, config, kind, complete.span_seconds,
            derive_seed(seed_, "complete/" + app.app_id + "/" + to_string(config.id()) + "/" +
                                   std::string(to_string(kind))));
        runs.push_back(std::move(complete));
      }
    }
  }
  return runs;
}

double Oracle::true_speedup(const AppArchetype& app, const TargetKey& target,
                            const ConfigId& baseline) const {
  return true_time(app, config(baseline), Interference::None) /
         true_time(app, config(target.config), target.interference);
}

const AppArchetype& Corpus::app(const std::string& app_id) const {
  for (const auto& a : apps) {
    if (a.app_id == app_id) return a;
  }
  throw ArgumentError("corpus has no app '" + app_id + "'");
}

Corpus generate_corpus(int n_systems, int n_apps, std::uint64_t seed, double poor_fraction) {
  if (n_apps < 2) throw ArgumentError("generate_corpus needs at least 2 apps");
  Oracle oracle(seed, n_systems, poor_fraction);

  const auto n_poor = static_cast<std::size_t>(std::lround(poor_fraction * n_apps));
  std::vector<Scalability> classes(static_cast<std::size_t>(n_apps), Scalability::ScalesWell);
  std::fill(classes.begin(), classes.begin() + static_cast<std::ptrdiff_t>(n_poor),
            Scalability::ScalesPoorly);
  Rng rng(derive_seed(seed, "classes"));
  for (std::size_t i = classes.size(); i > 1; --i) {
    std::swap(classes[i - 1], classes[static_cast<std::size_t>(rng.below(i))]);
  }

  std::vector<AppArchetype> apps;
  std::vector<RunRecord> runs;
  const int width = n_apps >= 1000 ? 4 : 3;
  for (int a = 0; a < n_apps; ++a) {
    char id[32];
    std::snprintf(id, sizeof(id), "app%0*d", width, a);
    auto app = oracle.make_app(id, seed, classes[static_cast<std::size_t>(a)]);
    auto app_runs = oracle.runs_for(app);
    runs.insert(runs.end(), std::make_move_iterator(app_runs.begin()),
                std::make_move_iterator(app_runs.end()));
    apps.push_back(std::move(app));
  }
  auto dataset = Dataset::create(oracle.systems(), std::move(runs));
  return Corpus{std::move(oracle), std::move(apps), std::move(dataset)};
}

std::string oracle_to_json(const Corpus& corpus) {
  using nlohmann::json;
  json apps = json::array();
  for (const auto& app : corpus.apps) {
    json affinity = json::object();
    for (const auto& [s, v] : app.system_affinity) affinity[s] = v;
    json times = json::array();
    for (const auto& system : corpus.oracle.systems()) {
      for (const auto& config : system.configurations) {
        for (auto kind : kAllInterference) {
          times.push_back(json{{"system_id", config.system_id},
                               {"vcpus", config.vcpus},
                               {"interference", to_string(kind)},
                               {"seconds", true_time(app, config, kind)}});
        }
      }
    }
    apps.push_back(json{{"app_id", app.app_id},
                        {"intended", to_string(app.intended)},
                        {"serial_fraction", app.serial_fraction},
                        {"parallel_work", app.parallel_work},
                        {"per_vcpu_overhead", app.per_vcpu_overhead},
                        {"memory_pressure", app.memory_pressure},
                        {"required_gb", app.required_gb},
                        {"system_affinity", affinity},
                        {"interference_sensitivity", app.interference_sensitivity},
                        {"single_vcpu_factor", app.single_vcpu_factor},
                        {"latent_profile", app.latent_profile},
                        {"true_times", std::move(times)}});
  }
  json doc{{"format", "perfcost-oracle"},
           {"version", 1},
           {"seed", std::to_string(corpus.oracle.seed())},
           {"poor_fraction", corpus.oracle.poor_fraction()},
           {"apps", std::move(apps)}};
  return doc.dump(1) + "\n";
}

}  // namespace perfcost
