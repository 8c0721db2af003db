#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "perfcost/dataset.hpp"
#include "perfcost/types.hpp"

namespace perfcost {

// Closed-form application model used as ground truth.
//
//   time = affinity[system] · (serial_fraction·parallel_work + parallel_work/v
//          + per_vcpu_overhead·v) · mem_penalty · sensitivity[kind] · f1(v)
//
// with mem_penalty = 1 + memory_pressure·max(0, 1 − memory_gb/required_gb) and
// f1(v) = single_vcpu_factor when v = 1, else 1. The 1-vCPU factor is drawn
// independently of latent_profile, so no metric reveals it.
struct AppArchetype {
  std::string app_id;
  double serial_fraction = 0.0;
  double parallel_work = 1.0;       // seconds at 1 vCPU
  double per_vcpu_overhead = 0.0;   // seconds per vCPU
  double memory_pressure = 0.0;     // [0, 1]
  double required_gb = 1.0;
  std::map<std::string, double> system_affinity;
  std::array<double, 4> interference_sensitivity{1.0, 1.0, 1.0, 1.0};  // indexed by Interference
  double single_vcpu_factor = 1.0;
  std::vector<double> latent_profile;
  Scalability intended = Scalability::ScalesWell;
};

double memory_penalty(const AppArchetype& app, double memory_gb);
double true_time(const AppArchetype& app, const ConfigurationSpec& config, Interference kind);

// Metric emission model for one system: per-metric log-linear response to
// the latent profile, vCPU count, memory penalty, and interference, plus a few
// designated metrics with explicit physical meaning.
struct EmissionModel {
  enum class Kind : std::uint8_t { ScalingSignal, ContextSwitches, PageFaults, Latent, Noise };
  std::vector<Kind> kind;
  std::vector<double> log_base;
  std::vector<std::vector<double>> loadings;  // [metric][latent]
  std::vector<double> vcpu_exponent;
  std::vector<double> penalty_exponent;
  std::vector<std::array<double, 4>> interference_shift;
};

class Oracle {
 public:
  static constexpr std::size_t kLatentDims = 6;
  static constexpr double kReferenceSpan = 30.0;
  static constexpr double kNoiseAtReference = 0.08;

  Oracle(std::uint64_t seed, int n_systems, double poor_fraction);

  std::uint64_t seed() const { return seed_; }
  double poor_fraction() const { return poor_fraction_; }
  const std::vector<SystemSpec>& systems() const { return systems_; }
  const SystemSpec& system(const std::string& id) const;
  const EmissionModel& emission(const std::string& system_id) const;
  // Name of the metric that tracks ideal parallel speedup on this system.
  const std::string& scaling_signal_metric(const std::string& system_id) const;

  // Draws an archetype of the requested class; the closed-form times agree
  // with the class on every system (margin 5%).
  AppArchetype make_app(const std::string& app_id, std::uint64_t app_seed, Scalability intended) const;
  // Class drawn with probability poor_fraction.
  AppArchetype make_app(const std::string& app_id, std::uint64_t app_seed) const;

  std::vector<double> noise_free_metrics(const AppArchetype& app, const ConfigurationSpec& config,
                                         Interference kind) const;
  // Noise-free values times mean-one lognormal noise whose log-sd shrinks as
  // 1/sqrt(span).
  std::vector<double> emit_metrics(const AppArchetype& app, const ConfigurationSpec& config,
                                   Interference kind, double span_seconds, std::uint64_t seed) const;

  // Partial (30 s or less, interference None) runs on every configuration,
  // and Complete runs on every configuration under every interference kind.
  std::vector<RunRecord> runs_for(const AppArchetype& app, bool with_complete = true,
                                  bool with_interference = true) const;

  double true_speedup(const AppArchetype& app, const TargetKey& target, const ConfigId& baseline) const;

 private:
  const ConfigurationSpec& config(const ConfigId& id) const;

  std::uint64_t seed_;
  double poor_fraction_;
  std::vector<SystemSpec> systems_;
  std::vector<EmissionModel> emission_;
  std::vector<std::vector<double>> affinity_loadings_;  // [system][latent]
  std::vector<double> system_speed_;
};

struct Corpus {
  Oracle oracle;
  std::vector<AppArchetype> apps;
  Dataset dataset;

  const AppArchetype& app(const std::string& app_id) const;
};

// n_systems systems on the 1, 8, 16, ... vCPU grid (8-9 configurations each,
// 40-60 metrics each) and n_apps applications, round(poor_fraction·n_apps) of
// them poorly scaling.
Corpus generate_corpus(int n_systems, int n_apps, std::uint64_t seed, double poor_fraction = 0.13);

// JSON document with every archetype's parameters and closed-form times.
std::string oracle_to_json(const Corpus& corpus);

}  // namespace perfcost
