#pragma once

#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "perfcost/types.hpp"

namespace perfcost {

// 200·|p − a| / (|p| + |a|), with the p = a = 0 term defined as 0.
double smape_term(double predicted, double actual);

// Mean of smape_term over paired entries, in [0, 200]. Throws ArgumentError on
// empty input, length mismatch, or negative values.
double smape(std::span<const double> predicted, std::span<const double> actual);

// One (app, target) error term from a cross-validation run.
struct SmapeTerm {
  std::string app_id;
  TargetKey target;
  double smape = 0.0;
};

// Aggregated prediction error.
//   mean_smape   mean over every (app, target) term
//   median_smape median of the per-app means
//   per_app      mean of that app's terms
//   per_target   mean over apps for that target
struct ErrorSummary {
  double mean_smape = 0.0;
  double median_smape = 0.0;
  std::map<std::string, double> per_app;
  std::map<TargetKey, double> per_target;
  std::vector<SmapeTerm> terms;

  // Mean over the terms of one interference kind (NaN if none).
  double mean_for(Interference kind) const;
};

ErrorSummary summarize(std::vector<SmapeTerm> terms);

struct TradeoffPoint {
  std::string system_id;
  int vcpus = 0;
  Interference interference = Interference::None;
  double speedup = 1.0;
  double relative_time = 1.0;
  double relative_cost = 1.0;
  bool pareto_optimal = false;

  ConfigId config() const { return {system_id, vcpus}; }
  bool operator==(const TradeoffPoint&) const = default;
};

// Indices (ascending) of points not dominated by any other point: j dominates
// i when time_j <= time_i and cost_j <= cost_i with at least one strict.
// Coordinates must be finite and non-negative.
std::vector<std::size_t> pareto_frontier(std::span<const std::pair<double, double>> points);

// relative_time = 1/speedup, relative_cost = relative_time · price/price(baseline),
// with Pareto flags over (relative_time, relative_cost).
std::vector<TradeoffPoint> derive_tradeoff(const std::vector<std::pair<TargetKey, double>>& speedups,
                                           const std::vector<SystemSpec>& systems,
                                           const ConfigId& baseline);

}  // namespace perfcost
