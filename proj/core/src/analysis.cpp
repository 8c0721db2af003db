#include "perfcost/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace perfcost {

double smape_term(double predicted, double actual) {
  const double denom = std::abs(predicted) + std::abs(actual);
  if (denom == 0.0) return 0.0;
  return 200.0 * std::abs(predicted - actual) / denom;
}

double smape(std::span<const double> predicted, std::span<const double> actual) {
  if (predicted.size() != actual.size()) {
    throw ArgumentError("smape: length mismatch (" + std::to_string(predicted.size()) + " vs " +
                        std::to_string(actual.size()) + ")");
  }
  if (predicted.empty()) throw ArgumentError("smape: empty input");
  double total = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (!(predicted[i] >= 0.0) || !(actual[i] >= 0.0)) {
      throw ArgumentError("smape: values must be non-negative");
    }
    total += smape_term(predicted[i], actual[i]);
  }
  return total / static_cast<double>(predicted.size());
}

double ErrorSummary::mean_for(Interference kind) const {
  double total = 0.0;
  std::size_t n = 0;
  for (const auto& t : terms) {
    if (t.target.interference != kind) continue;
    total += t.smape;
    ++n;
  }
  return n == 0 ? std::numeric_limits<double>::quiet_NaN() : total / static_cast<double>(n);
}

ErrorSummary summarize(std::vector<SmapeTerm> terms) {
  ErrorSummary out;
  if (terms.empty()) return out;
  std::map<std::string, std::pair<double, std::size_t>> apps;
  std::map<TargetKey, std::pair<double, std::size_t>> targets;
  double total = 0.0;
  for (const auto& t : terms) {
    total += t.smape;
    auto& a = apps[t.app_id];
    a.first += t.smape;
    ++a.second;
    auto& g = targets[t.target];
    g.first += t.smape;
    ++g.second;
  }
  out.mean_smape = total / static_cast<double>(terms.size());
  std::vector<double> app_means;
  for (const auto& [app, acc] : apps) {
    const double mean = acc.first / static_cast<double>(acc.second);
    out.per_app[app] = mean;
    app_means.push_back(mean);
  }
  for (const auto& [target, acc] : targets) {
    out.per_target[target] = acc.first / static_cast<double>(acc.second);
  }
  std::sort(app_means.begin(), app_means.end());
  const std::size_t n = app_means.size();
  out.median_smape = n % 2 == 1 ? app_means[n / 2] : 0.5 * (app_means[n / 2 - 1] + app_means[n / 2]);
  std::sort(terms.begin(), terms.end(), [](const SmapeTerm& a, const SmapeTerm& b) {
    return std::tie(a.app_id, a.target) < std::tie(b.app_id, b.target);
  });
  out.terms = std::move(terms);
  return out;
}

std::vector<std::size_t> pareto_frontier(std::span<const std::pair<double, double>> points) {
  for (const auto& [t, c] : points) {
    if (!std::isfinite(t) || !std::isfinite(c) || t < 0.0 || c < 0.0) {
      throw ArgumentError("pareto_frontier: coordinates must be finite and non-negative");
    }
  }
  std::vector<std::size_t> order(points.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return points[a] < points[b];
  });

  // Sweep in ascending time. A point survives iff its cost is the minimum of
  // its equal-time group and strictly below every cost at smaller time.
  std::vector<std::size_t> keep;
  double best_before = std::numeric_limits<double>::infinity();
  std::size_t g = 0;
  while (g < order.size()) {
    std::size_t end = g;
    const double time = points[order[g]].first;
    while (end < order.size() && points[order[end]].first == time) ++end;
    const double group_min = points[order[g]].second;  // sorted by cost within the group
    if (group_min < best_before) {
      for (std::size_t k = g; k < end && points[order[k]].second == group_min; ++k) {
        keep.push_back(order[k]);
      }
    }
    best_before = std::min(best_before, group_min);
    g = end;
  }
  std::sort(keep.begin(), keep.end());
  return keep;
}

std::vector<TradeoffPoint> derive_tradeoff(const std::vector<std::pair<TargetKey, double>>& speedups,
                                           const std::vector<SystemSpec>& systems,
                                           const ConfigId& baseline) {
  auto price_of = [&](const ConfigId& id) -> double {
    for (const auto& s : systems) {
      if (s.system_id != id.system_id) continue;
      if (const auto* c = s.find(id.vcpus)) return c->price_per_hour;
    }
    throw ConfigurationError("configuration " + to_string(id) + " is not declared");
  };
  const double base_price = price_of(baseline);
  if (!(base_price > 0.0)) {
    throw ConfigurationError("baseline " + to_string(baseline) + " has zero price");
  }

  std::vector<TradeoffPoint> points;
  std::vector<std::pair<double, double>> coords;
  for (const auto& [target, speedup] : speedups) {
    if (!(speedup > 0.0) || !std::isfinite(speedup)) {
      throw ArgumentError("speedup for " + to_string(target) + " must be positive and finite");
    }
    TradeoffPoint p;
    p.system_id = target.config.system_id;
    p.vcpus = target.config.vcpus;
    p.interference = target.interference;
    p.speedup = speedup;
    p.relative_time = 1.0 / speedup;
    p.relative_cost = p.relative_time * price_of(target.config) / base_price;
    coords.emplace_back(p.relative_time, p.relative_cost);
    points.push_back(p);
  }
  for (auto i : pareto_frontier(coords)) points[i].pareto_optimal = true;
  return points;
}

}  // namespace perfcost
