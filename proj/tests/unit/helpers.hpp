#pragma once

#include <string>
#include <vector>

#include "perfcost/dataset.hpp"
#include "perfcost/learners.hpp"
#include "perfcost/synthoracle.hpp"

namespace perfcost::testing {

inline SystemSpec make_system(const std::string& id, const std::vector<int>& vcpus,
                              const std::vector<std::string>& catalog, double price_per_vcpu = 0.05) {
  SystemSpec s;
  s.system_id = id;
  for (int v : vcpus) s.configurations.push_back({id, v, 4.0 * v, price_per_vcpu * v});
  s.metric_catalog = catalog;
  return s;
}

inline RunRecord partial_run(const std::string& app, const std::string& sys, int v, std::vector<double> metrics,
                             double span = 30.0) {
  RunRecord r;
  r.app_id = app;
  r.system_id = sys;
  r.vcpus = v;
  r.run_kind = RunKind::Partial;
  r.span_seconds = span;
  r.metrics = std::move(metrics);
  return r;
}

inline RunRecord complete_run(const std::string& app, const std::string& sys, int v, double wall,
                              std::vector<double> metrics, Interference kind = Interference::None) {
  RunRecord r;
  r.app_id = app;
  r.system_id = sys;
  r.vcpus = v;
  r.interference = kind;
  r.run_kind = RunKind::Complete;
  r.span_seconds = wall;
  r.wall_time_seconds = wall;
  r.metrics = std::move(metrics);
  return r;
}

// Small corpus with cheap models, for tests that exercise the whole pipeline.
inline const Corpus& small_corpus() {
  static const Corpus c = generate_corpus(2, 24, 17);
  return c;
}

inline HyperParams cheap(int trees) {
  HyperParams p;
  p.n_trees = trees;
  p.max_depth = 3;
  p.learning_rate = 0.3;
  p.max_bins = 16;
  return p;
}

}  // namespace perfcost::testing
