#include "perfcost/performance.hpp"

#include <cmath>
#include <limits>

namespace perfcost {

bool PerformanceMatrix::covered(const std::string& app_id, const TargetKey& target) const {
  auto app = cells_.find(app_id);
  return app != cells_.end() && app->second.count(target) > 0;
}

double PerformanceMatrix::speedup(const std::string& app_id, const TargetKey& target) const {
  auto app = cells_.find(app_id);
  if (app != cells_.end()) {
    auto cell = app->second.find(target);
    if (cell != app->second.end()) return cell->second;
  }
  throw ArgumentError("no ground truth for app '" + app_id + "' at " + to_string(target));
}

double PerformanceMatrix::speedup_or_nan(const std::string& app_id, const TargetKey& target) const {
  auto app = cells_.find(app_id);
  if (app != cells_.end()) {
    auto cell = app->second.find(target);
    if (cell != app->second.end()) return cell->second;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

PerformanceMatrix derive_performance_matrix(const Dataset& dataset, const ConfigId& baseline) {
  if (!dataset.has_config(baseline)) {
    throw ArgumentError("baseline " + to_string(baseline) + " is not a declared configuration");
  }
  PerformanceMatrix out;
  out.baseline_ = baseline;
  for (const auto& app : dataset.apps()) {
    const auto* base = dataset.complete_run(app, baseline, Interference::None);
    if (base == nullptr) {
      out.unusable_.push_back(app);
      continue;
    }
    out.apps_.push_back(app);
    auto& row = out.cells_[app];
    const double base_time = *base->wall_time_seconds;
    for (const auto& config : dataset.all_configs()) {
      for (auto kind : kAllInterference) {
        const auto* run = dataset.complete_run(app, config, kind);
        if (run == nullptr) continue;
        row[TargetKey{config, kind}] =
            (config == baseline && kind == Interference::None) ? 1.0
                                                               : base_time / *run->wall_time_seconds;
      }
    }
  }
  return out;
}

Scalability label_from_ratios(const std::vector<double>& ratios) {
  std::size_t slow = 0;
  for (double r : ratios) {
    if (r < 1.0) ++slow;
  }
  return 2 * slow > ratios.size() ? Scalability::ScalesPoorly : Scalability::ScalesWell;
}

Scalability label_scalability(const PerformanceMatrix& matrix, const Dataset& dataset,
                              const std::string& app_id) {
  std::vector<double> ratios;
  std::vector<std::string> missing;
  for (const auto& system : dataset.systems()) {
    const auto lo = system.min_config().id();
    const auto hi = system.max_config().id();
    const bool have_lo = matrix.covered(app_id, lo);
    const bool have_hi = matrix.covered(app_id, hi);
    if (!have_lo) missing.push_back(to_string(lo));
    if (!have_hi) missing.push_back(to_string(hi));
    if (have_lo && have_hi) ratios.push_back(matrix.speedup(app_id, hi) / matrix.speedup(app_id, lo));
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    throw LabelingError("cannot label app '" + app_id + "': uncovered " + list);
  }
  return label_from_ratios(ratios);
}

std::optional<Scalability> label_scalability_sparse(const PerformanceMatrix& matrix,
                                                    const Dataset& dataset,
                                                    const std::string& app_id) {
  std::vector<double> ratios;
  for (const auto& system : dataset.systems()) {
    const ConfigurationSpec* lo = nullptr;
    const ConfigurationSpec* hi = nullptr;
    for (const auto& config : system.configurations) {
      if (!matrix.covered(app_id, config.id())) continue;
      if (lo == nullptr) lo = &config;
      hi = &config;
    }
    if (lo == nullptr || lo == hi) continue;
    ratios.push_back(matrix.speedup(app_id, hi->id()) / matrix.speedup(app_id, lo->id()));
  }
  if (ratios.empty()) return std::nullopt;
  return label_from_ratios(ratios);
}

}  // namespace perfcost
