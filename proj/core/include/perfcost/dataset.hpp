#pragma once

#include <functional>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "perfcost/types.hpp"

namespace perfcost {

// Validated, immutable collection of systems and profiled runs.
//
// Construction checks every invariant (declared systems and configurations,
// metric vectors matching catalogs, finite non-negative metrics, wall time
// present exactly for Complete runs, at most one Complete run per
// (app, configuration, interference)). Copies share storage.
class Dataset {
 public:
  Dataset() = default;

  static Dataset create(std::vector<SystemSpec> systems, std::vector<RunRecord> runs);

  const std::vector<SystemSpec>& systems() const { return data_->systems; }
  const std::vector<RunRecord>& runs() const { return data_->runs; }
  // Sorted, unique.
  const std::vector<std::string>& apps() const { return data_->apps; }
  bool has_app(std::string_view app_id) const;

  const SystemSpec& system(std::string_view system_id) const;
  const SystemSpec* find_system(std::string_view system_id) const;
  const ConfigurationSpec& config(const ConfigId& id) const;
  bool has_config(const ConfigId& id) const;
  // Every declared configuration, ordered by (system_id, vcpus).
  std::vector<ConfigId> all_configs() const;

  const RunRecord* complete_run(std::string_view app_id, const ConfigId& config,
                                Interference kind = Interference::None) const;
  // Preferred Partial run: longest span, then smallest record identity.
  const RunRecord* partial_run(std::string_view app_id, const ConfigId& config,
                               Interference kind = Interference::None) const;

  Dataset restrict_apps(const std::set<std::string>& keep) const;
  Dataset filter_runs(const std::function<bool(const RunRecord&)>& keep) const;
  // Dataset with additional runs appended (revalidated).
  Dataset with_runs(const std::vector<RunRecord>& extra) const;

 private:
  using RunKey = std::tuple<std::string, ConfigId, Interference>;

  struct Storage {
    std::vector<SystemSpec> systems;
    std::vector<RunRecord> runs;
    std::vector<std::string> apps;
    std::map<RunKey, std::size_t, std::less<>> complete;
    std::map<RunKey, std::size_t, std::less<>> partial;
  };

  std::shared_ptr<const Storage> data_ = std::make_shared<Storage>();
};

}  // namespace perfcost
