#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "perfcost/dataset.hpp"
#include "perfcost/types.hpp"

namespace perfcost {

// Ground-truth speedups over a baseline configuration, derived from the wall
// times of Complete runs. Cells without a Complete run are uncovered.
class PerformanceMatrix {
 public:
  const ConfigId& baseline() const { return baseline_; }

  bool covered(const std::string& app_id, const TargetKey& target) const;
  bool covered(const std::string& app_id, const ConfigId& config,
               Interference kind = Interference::None) const {
    return covered(app_id, TargetKey{config, kind});
  }
  // Throws ArgumentError on an uncovered cell.
  double speedup(const std::string& app_id, const TargetKey& target) const;
  double speedup(const std::string& app_id, const ConfigId& config,
                 Interference kind = Interference::None) const {
    return speedup(app_id, TargetKey{config, kind});
  }
  // Speedup or NaN if uncovered.
  double speedup_or_nan(const std::string& app_id, const TargetKey& target) const;

  // Apps with a baseline Complete run (sorted).
  const std::vector<std::string>& apps() const { return apps_; }
  // Apps that had runs but no baseline Complete run under InterferenceKind None.
  const std::vector<std::string>& unusable_apps() const { return unusable_; }

 private:
  friend PerformanceMatrix derive_performance_matrix(const Dataset&, const ConfigId&);

  ConfigId baseline_;
  std::map<std::string, std::map<TargetKey, double>, std::less<>> cells_;
  std::vector<std::string> apps_;
  std::vector<std::string> unusable_;
};

// speedup(app, c, k) = wall(app, baseline, None) / wall(app, c, k).
PerformanceMatrix derive_performance_matrix(const Dataset& dataset, const ConfigId& baseline);

// Per-system speedup ratio between the most- and fewest-resource
// configurations under no interference.
struct SystemScaling {
  std::string system_id;
  double ratio = 1.0;  // speedup(max) / speedup(min)
};

// ScalesPoorly iff the app slows down (ratio < 1) on a strict majority of
// systems. Throws LabelingError when a system's min/max cells are uncovered.
Scalability label_scalability(const PerformanceMatrix& matrix, const Dataset& dataset,
                              const std::string& app_id);

// Majority rule applied directly to per-system ratios.
Scalability label_from_ratios(const std::vector<double>& ratios);

// Labeling that tolerates sparse coverage: on each system the fewest- and
// most-resource *covered* configurations stand in for the declared extremes,
// and systems with fewer than two covered configurations abstain. Returns
// nullopt if no system can vote.
std::optional<Scalability> label_scalability_sparse(const PerformanceMatrix& matrix,
                                                    const Dataset& dataset,
                                                    const std::string& app_id);

}  // namespace perfcost
