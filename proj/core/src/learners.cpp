#include "perfcost/learners.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "perfcost/parallel.hpp"
#include "perfcost/random.hpp"

namespace perfcost {

void Matrix::append_row(std::span<const double> values) {
  if (rows == 0 && cols == 0) cols = values.size();
  if (values.size() != cols) {
    throw ArgumentError("row has " + std::to_string(values.size()) + " columns, matrix has " +
                        std::to_string(cols));
  }
  data.insert(data.end(), values.begin(), values.end());
  ++rows;
}

void HyperParams::validate() const {
  if (n_trees < 0) throw ArgumentError("n_trees must be >= 0");
  if (max_depth < 0) throw ArgumentError("max_depth must be >= 0");
  if (!(learning_rate > 0.0 && learning_rate <= 1.0)) {
    throw ArgumentError("learning_rate must be in (0, 1]");
  }
  if (min_samples_leaf < 1) throw ArgumentError("min_samples_leaf must be >= 1");
  if (!(subsample_fraction > 0.0 && subsample_fraction <= 1.0)) {
    throw ArgumentError("subsample_fraction must be in (0, 1]");
  }
  if (!(colsample_fraction > 0.0 && colsample_fraction <= 1.0)) {
    throw ArgumentError("colsample_fraction must be in (0, 1]");
  }
  if (max_bins < 2 || max_bins > 256) throw ArgumentError("max_bins must be in [2, 256]");
}

double DecisionTree::predict(std::span<const double> x) const {
  if (nodes.empty()) return 0.0;
  std::size_t at = 0;
  while (!nodes[at].is_leaf()) {
    const auto& n = nodes[at];
    at = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left
                                                                                        : n.right);
  }
  return nodes[at].value;
}

std::size_t DecisionTree::split_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return !n.is_leaf(); }));
}

namespace {

// Quantile-binned copy of a feature matrix, column-major codes. A split after
// bin b sends code <= b left, which is x <= cuts[f][b] on raw values.
struct BinnedMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> codes;
  std::vector<std::vector<double>> cuts;

  std::uint8_t code(std::size_t r, std::size_t f) const { return codes[f * rows + r]; }
};

double midpoint(double lo, double hi) {
  const double m = lo + (hi - lo) / 2.0;
  return m < hi ? m : lo;
}

BinnedMatrix bin_features(const Matrix& x, int max_bins) {
  BinnedMatrix out;
  out.rows = x.rows;
  out.cols = x.cols;
  out.codes.resize(x.rows * x.cols);
  out.cuts.resize(x.cols);
  std::vector<double> column(x.rows);
  for (std::size_t f = 0; f < x.cols; ++f) {
    for (std::size_t r = 0; r < x.rows; ++r) column[r] = x.at(r, f);
    std::vector<double> sorted = column;
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> uniq;
    std::vector<std::size_t> counts;
    for (double v : sorted) {
      if (uniq.empty() || uniq.back() != v) {
        uniq.push_back(v);
        counts.push_back(0);
      }
      ++counts.back();
    }
    auto& cuts = out.cuts[f];
    if (uniq.size() <= static_cast<std::size_t>(max_bins)) {
      for (std::size_t k = 0; k + 1 < uniq.size(); ++k) cuts.push_back(midpoint(uniq[k], uniq[k + 1]));
    } else {
      std::size_t cum = 0;
      for (std::size_t k = 0; k + 1 < uniq.size(); ++k) {
        cum += counts[k];
        const std::size_t target = (cuts.size() + 1) * x.rows / static_cast<std::size_t>(max_bins);
        if (cum >= target && cuts.size() + 1 < static_cast<std::size_t>(max_bins)) {
          cuts.push_back(midpoint(uniq[k], uniq[k + 1]));
        }
      }
    }
    for (std::size_t r = 0; r < x.rows; ++r) {
      out.codes[f * x.rows + r] = static_cast<std::uint8_t>(
          std::lower_bound(cuts.begin(), cuts.end(), column[r]) - cuts.begin());
    }
  }
  return out;
}

void check_finite(const Matrix& x, const char* what) {
  for (double v : x.data) {
    if (!std::isfinite(v)) throw ValidationError(std::string(what) + " contain non-finite entries");
  }
}

enum class Criterion { Variance, Gini };

// Grows one CART tree over weighted rows. Each row carries (weight, value):
// for regression value = residual with weight 1, for classification
// value = weight·[ScalesPoorly]. Leaves store value-sum / weight-sum.
class TreeBuilder {
 public:
  TreeBuilder(const BinnedMatrix& x, const std::vector<double>& weight,
              const std::vector<double>& value, Criterion criterion, const HyperParams& params)
      : x_(x), weight_(weight), value_(value), criterion_(criterion), params_(params) {
    // Regression rows all weigh 1, so node weights are counts.
    if (criterion_ == Criterion::Variance) {
      inverse_.resize(x.rows + 1, 0.0);
      for (std::size_t k = 1; k <= x.rows; ++k) inverse_[k] = 1.0 / static_cast<double>(k);
    }
  }

  // features_for_node() yields ascending candidate feature indices.
  template <typename FeatureFn>
  DecisionTree build(std::vector<std::uint32_t> rows, FeatureFn&& features_for_node) {
    begin();
    fixed_ = false;
    grow(rows, 0, features_for_node, nullptr);
    return std::move(tree_);
  }

  // Same candidate features at every node; child histograms are derived by
  // subtraction from the parent's.
  DecisionTree build_fixed(std::vector<std::uint32_t> rows, const std::vector<int>& features) {
    begin();
    fixed_ = true;
    set_layout(features);
    auto same = [&]() -> const std::vector<int>& { return features; };
    grow(rows, 0, same, nullptr);
    return std::move(tree_);
  }

  // Bin of each internal node's split, parallel to the tree's nodes.
  const std::vector<int>& split_bins() const { return split_bins_; }

 private:
  struct Best {
    int feature = -1;
    int bin = -1;
    double gain = 0.0;
  };

  // Per-node histogram over the candidate features, flattened by offset_.
  struct Hist {
    std::vector<double> w;
    std::vector<double> a;
  };

  void begin() {
    tree_ = DecisionTree{};
    tree_.max_depth = params_.max_depth;
    tree_.min_samples_leaf = params_.min_samples_leaf;
    split_bins_.clear();
  }

  void set_layout(const std::vector<int>& features) {
    offset_.assign(features.size() + 1, 0);
    for (std::size_t i = 0; i < features.size(); ++i) {
      offset_[i + 1] = offset_[i] + x_.cuts[static_cast<std::size_t>(features[i])].size() + 1;
    }
  }

  double score(double w, double a) const {
    if (w <= 0.0) return 0.0;
    if (criterion_ == Criterion::Variance) return a * a / w;
    const double b = w - a;
    return (a * a + b * b) / w;
  }

  bool may_split(double w, int depth) const {
    return depth < params_.max_depth && w >= 2.0 * params_.min_samples_leaf;
  }

  Hist histogram(const std::vector<std::uint32_t>& rows, const std::vector<int>& features) {
    Hist h;
    h.w.assign(offset_.back(), 0.0);
    h.a.assign(offset_.back(), 0.0);
    wbuf_.resize(rows.size());
    abuf_.resize(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      wbuf_[i] = weight_[rows[i]];
      abuf_[i] = value_[rows[i]];
    }
    for (std::size_t k = 0; k < features.size(); ++k) {
      const std::uint8_t* codes = x_.codes.data() + static_cast<std::size_t>(features[k]) * x_.rows;
      double* hw = h.w.data() + offset_[k];
      double* ha = h.a.data() + offset_[k];
      for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto b = codes[rows[i]];
        hw[b] += wbuf_[i];
        ha[b] += abuf_[i];
      }
    }
    return h;
  }

  template <typename FeatureFn>
  int grow(std::vector<std::uint32_t>& rows, int depth, FeatureFn& features_for_node, Hist* given) {
    const int idx = static_cast<int>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    split_bins_.push_back(-1);

    double w = 0.0, a = 0.0, sq = 0.0;
    for (auto r : rows) {
      w += weight_[r];
      a += value_[r];
      sq += value_[r] * value_[r];
    }
    tree_.nodes[static_cast<std::size_t>(idx)].value = w > 0.0 ? a / w : 0.0;

    const double min_leaf = params_.min_samples_leaf;
    bool splittable = may_split(w, depth);
    double min_gain = 1e-12;
    if (criterion_ == Criterion::Variance) {
      const double sse = sq - a * a / w;
      if (!(sse > 1e-12 * sq)) splittable = false;
      min_gain = std::max(1e-9 * sse, 1e-300);
    } else if (a <= 0.0 || a >= w) {
      splittable = false;  // pure node
    }
    if (!splittable) return idx;

    const std::vector<int>& features = features_for_node();
    if (!fixed_) set_layout(features);
    Hist hist = given != nullptr ? std::move(*given) : histogram(rows, features);
    const Best best = find_split(hist, features, w, a, min_leaf, min_gain);
    if (best.feature < 0) return idx;

    std::vector<std::uint32_t> left, right;
    for (auto r : rows) {
      (x_.code(r, static_cast<std::size_t>(best.feature)) <= best.bin ? left : right).push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();

    {
      auto& node = tree_.nodes[static_cast<std::size_t>(idx)];
      node.feature = best.feature;
      node.threshold = x_.cuts[static_cast<std::size_t>(best.feature)][static_cast<std::size_t>(best.bin)];
      node.gain = best.gain;
      node.value = 0.0;  // only leaves carry outputs
      split_bins_[static_cast<std::size_t>(idx)] = best.bin;
    }

    Hist lh, rh;
    Hist* lp = nullptr;
    Hist* rp = nullptr;
    if (fixed_ && depth + 1 < params_.max_depth) {
      const bool left_small = left.size() <= right.size();
      Hist& small = left_small ? lh : rh;
      Hist& large = left_small ? rh : lh;
      small = histogram(left_small ? left : right, features);
      large = std::move(hist);
      for (std::size_t i = 0; i < large.w.size(); ++i) {
        large.w[i] -= small.w[i];
        large.a[i] -= small.a[i];
      }
      lp = &lh;
      rp = &rh;
    }
    const int l = grow(left, depth + 1, features_for_node, lp);
    const int r = grow(right, depth + 1, features_for_node, rp);
    tree_.nodes[static_cast<std::size_t>(idx)].left = l;
    tree_.nodes[static_cast<std::size_t>(idx)].right = r;
    return idx;
  }

  Best find_split(const Hist& hist, const std::vector<int>& features, double w, double a, double min_leaf,
                  double min_gain) const {
    Best best;
    best.gain = min_gain;
    const double parent = score(w, a);
    for (std::size_t k = 0; k < features.size(); ++k) {
      const std::size_t nb = offset_[k + 1] - offset_[k];
      if (nb < 2) continue;
      const double* hw = hist.w.data() + offset_[k];
      const double* ha = hist.a.data() + offset_[k];
      double wl = 0.0, al = 0.0;
      for (std::size_t b = 0; b + 1 < nb; ++b) {
        wl += hw[b];
        al += ha[b];
        if (hw[b] <= 0.0 || wl < min_leaf) continue;
        const double wr = w - wl;
        if (wr < min_leaf) break;
        const double gain =
            criterion_ == Criterion::Variance
                ? al * al * inverse_[static_cast<std::size_t>(wl)] +
                      (a - al) * (a - al) * inverse_[static_cast<std::size_t>(wr)] - parent
                : score(wl, al) + score(wr, a - al) - parent;
        if (gain > best.gain) {
          best.feature = features[k];
          best.bin = static_cast<int>(b);
          best.gain = gain;
        }
      }
    }
    return best;
  }

  const BinnedMatrix& x_;
  const std::vector<double>& weight_;
  const std::vector<double>& value_;
  Criterion criterion_;
  const HyperParams& params_;
  bool fixed_ = false;
  std::vector<std::size_t> offset_;
  std::vector<double> wbuf_, abuf_;
  std::vector<double> inverse_;
  DecisionTree tree_;
  std::vector<int> split_bins_;
};

std::size_t fraction_count(double fraction, std::size_t n) {
  const auto k = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n) - 1e-9));
  return std::clamp<std::size_t>(k, 1, std::max<std::size_t>(n, 1));
}

// First k entries of a partial Fisher-Yates shuffle of `items`.
template <typename T>
std::vector<T> sample_without_replacement(std::vector<T> items, std::size_t k, Rng& rng) {
  for (std::size_t i = 0; i < k && i < items.size(); ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(items.size() - i));
    std::swap(items[i], items[j]);
  }
  items.resize(std::min(k, items.size()));
  return items;
}

// Leaf reached by binned row r.
std::size_t route(const DecisionTree& tree, const std::vector<int>& bins, const BinnedMatrix& x,
                  std::size_t r) {
  std::size_t at = 0;
  while (!tree.nodes[at].is_leaf()) {
    const auto& n = tree.nodes[at];
    at = static_cast<std::size_t>(x.code(r, static_cast<std::size_t>(n.feature)) <= bins[at] ? n.left
                                                                                             : n.right);
  }
  return at;
}

void check_width(std::size_t got, std::size_t want) {
  if (got != want) {
    throw SchemaError("fingerprint has " + std::to_string(got) + " features; model expects " +
                      std::to_string(want));
  }
}

}  // namespace

ForestClassifier fit_forest_classifier(const Matrix& features, const std::vector<Scalability>& labels,
                                       const HyperParams& params, std::uint64_t seed) {
  params.validate();
  if (features.rows == 0 || labels.empty()) throw ArgumentError("classifier: empty training set");
  if (features.rows != labels.size()) {
    throw ArgumentError("classifier: " + std::to_string(features.rows) + " rows but " +
                        std::to_string(labels.size()) + " labels");
  }
  check_finite(features, "classifier features");

  ForestClassifier model;
  model.n_trees = params.n_trees;
  model.feature_count = features.cols;
  model.seed = seed;
  model.trees.resize(static_cast<std::size_t>(params.n_trees));

  const auto binned = bin_features(features, params.max_bins);
  const std::size_t n = features.rows;
  std::vector<int> all_features(features.cols);
  std::iota(all_features.begin(), all_features.end(), 0);
  const std::size_t per_split = fraction_count(params.colsample_fraction, features.cols);

  parallel_for(model.trees.size(), [&](std::size_t t) {
    Rng rng(derive_seed(seed, t));
    std::vector<double> weight(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) weight[rng.below(n)] += 1.0;
    std::vector<double> value(n);
    std::vector<std::uint32_t> rows;
    for (std::size_t r = 0; r < n; ++r) {
      value[r] = labels[r] == Scalability::ScalesPoorly ? weight[r] : 0.0;
      if (weight[r] > 0.0) rows.push_back(static_cast<std::uint32_t>(r));
    }
    TreeBuilder builder(binned, weight, value, Criterion::Gini, params);
    model.trees[t] = builder.build(std::move(rows), [&] {
      auto chosen = sample_without_replacement(all_features, per_split, rng);
      std::sort(chosen.begin(), chosen.end());
      return chosen;
    });
  });
  return model;
}

BoostedRegressor fit_boosted_regressor(const Matrix& features, const Matrix& raw_targets,
                                       const HyperParams& params, std::uint64_t seed,
                                       const std::vector<std::uint8_t>* observed,
                                       std::vector<std::string> output_labels) {
  params.validate();
  Matrix logged;
  if (params.log_targets) {
    logged = raw_targets;
    for (std::size_t i = 0; i < logged.data.size(); ++i) {
      if (observed != nullptr && i < observed->size() && (*observed)[i] == 0) continue;
      const double v = logged.data[i];
      if (!(v > 0.0)) throw ValidationError("regressor: log targets require positive values");
      logged.data[i] = std::log(v);
    }
  }
  const Matrix& targets = params.log_targets ? logged : raw_targets;
  if (features.rows == 0) throw ArgumentError("regressor: empty training set");
  if (features.rows != targets.rows) {
    throw ArgumentError("regressor: " + std::to_string(features.rows) + " feature rows but " +
                        std::to_string(targets.rows) + " target rows");
  }
  if (targets.cols == 0) throw ArgumentError("regressor: at least one output required");
  if (observed != nullptr && observed->size() != targets.data.size()) {
    throw ArgumentError("regressor: observation mask shape mismatch");
  }
  check_finite(features, "regressor features");
  auto is_observed = [&](std::size_t r, std::size_t o) {
    return observed == nullptr || (*observed)[r * targets.cols + o] != 0;
  };
  for (std::size_t r = 0; r < targets.rows; ++r) {
    for (std::size_t o = 0; o < targets.cols; ++o) {
      if (is_observed(r, o) && !std::isfinite(targets.at(r, o))) {
        throw ValidationError("regressor: non-finite target at row " + std::to_string(r) +
                              ", output " + std::to_string(o));
      }
    }
  }
  if (output_labels.empty()) {
    for (std::size_t o = 0; o < targets.cols; ++o) output_labels.push_back(std::to_string(o));
  }
  if (output_labels.size() != targets.cols) throw ArgumentError("regressor: label count mismatch");
  {
    auto sorted = output_labels;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      throw ArgumentError("regressor: output labels must be unique");
    }
  }

  BoostedRegressor model;
  model.output_labels = std::move(output_labels);
  model.feature_count = features.cols;
  model.seed = seed;
  model.log_targets = params.log_targets;
  model.chains.resize(targets.cols);

  const auto binned = bin_features(features, params.max_bins);
  std::vector<int> all_features(features.cols);
  std::iota(all_features.begin(), all_features.end(), 0);
  const std::size_t per_tree = fraction_count(params.colsample_fraction, features.cols);

  parallel_for(targets.cols, [&](std::size_t o) {
    Rng rng(derive_seed(seed, o));
    std::vector<std::uint32_t> rows;
    double sum = 0.0;
    for (std::size_t r = 0; r < targets.rows; ++r) {
      if (!is_observed(r, o)) continue;
      rows.push_back(static_cast<std::uint32_t>(r));
      sum += targets.at(r, o);
    }
    auto& chain = model.chains[o];
    if (rows.empty()) return;
    chain.base_score = sum / static_cast<double>(rows.size());
    if (rows.size() < 2 * static_cast<std::size_t>(params.min_samples_leaf)) return;

    std::vector<double> prediction(targets.rows, chain.base_score);
    std::vector<double> weight(targets.rows, 1.0);
    std::vector<double> residual(targets.rows, 0.0);
    const std::size_t per_stage = fraction_count(params.subsample_fraction, rows.size());
    TreeBuilder builder(binned, weight, residual, Criterion::Variance, params);
    for (int s = 0; s < params.n_trees; ++s) {
      for (auto r : rows) residual[r] = targets.at(r, o) - prediction[r];
      auto sample = per_stage == rows.size() ? rows : sample_without_replacement(rows, per_stage, rng);
      std::sort(sample.begin(), sample.end());
      auto chosen = sample_without_replacement(all_features, per_tree, rng);
      std::sort(chosen.begin(), chosen.end());
      DecisionTree tree = builder.build_fixed(std::move(sample), chosen);

      // Leaf values are re-estimated over every observed row, so each stage
      // can only lower the training squared error.
      const auto& bins = builder.split_bins();
      std::vector<double> leaf_sum(tree.nodes.size(), 0.0), leaf_count(tree.nodes.size(), 0.0);
      std::vector<std::size_t> leaf_of(targets.rows, 0);
      for (auto r : rows) {
        const auto leaf = route(tree, bins, binned, r);
        leaf_of[r] = leaf;
        leaf_sum[leaf] += residual[r];
        leaf_count[leaf] += 1.0;
      }
      for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
        if (tree.nodes[i].is_leaf() && leaf_count[i] > 0.0) tree.nodes[i].value = leaf_sum[i] / leaf_count[i];
      }
      for (auto r : rows) prediction[r] += params.learning_rate * tree.nodes[leaf_of[r]].value;
      chain.stages.push_back({std::move(tree), params.learning_rate});
    }
  });
  return model;
}

BoostedRegressor constant_regressor(std::vector<double> values, std::vector<std::string> output_labels,
                                    std::size_t feature_count) {
  if (values.size() != output_labels.size()) throw ArgumentError("constant_regressor: size mismatch");
  BoostedRegressor model;
  model.feature_count = feature_count;
  model.output_labels = std::move(output_labels);
  for (double v : values) model.chains.push_back({v, {}});
  return model;
}

std::vector<Scalability> classifier_votes(const ForestClassifier& model, std::span<const double> x) {
  check_width(x.size(), model.feature_count);
  std::vector<Scalability> votes;
  votes.reserve(model.trees.size());
  for (const auto& tree : model.trees) {
    votes.push_back(tree.predict(x) > 0.5 ? Scalability::ScalesPoorly : Scalability::ScalesWell);
  }
  return votes;
}

Scalability predict_classifier(const ForestClassifier& model, std::span<const double> x) {
  std::size_t poor = 0;
  const auto votes = classifier_votes(model, x);
  for (auto v : votes) poor += v == Scalability::ScalesPoorly ? 1 : 0;
  return 2 * poor > votes.size() ? Scalability::ScalesPoorly : Scalability::ScalesWell;
}

Scalability predict_classifier(const ForestClassifier& model, const Fingerprint& fingerprint) {
  const auto row = fingerprint.feature_row();
  return predict_classifier(model, row);
}

double predict_chain(const BoostChain& chain, std::span<const double> x, std::size_t stages) {
  double y = chain.base_score;
  const std::size_t n = std::min(stages, chain.stages.size());
  for (std::size_t s = 0; s < n; ++s) {
    y += chain.stages[s].learning_rate * chain.stages[s].tree.predict(x);
  }
  return y;
}

std::vector<double> predict_regressor(const BoostedRegressor& model, std::span<const double> x) {
  check_width(x.size(), model.feature_count);
  std::vector<double> out;
  out.reserve(model.chains.size());
  for (const auto& chain : model.chains) {
    const double y = predict_chain(chain, x, chain.stages.size());
    out.push_back(model.log_targets ? std::exp(y) : y);
  }
  return out;
}

std::map<std::string, double> predict_regressor(const BoostedRegressor& model,
                                                const Fingerprint& fingerprint) {
  const auto row = fingerprint.feature_row();
  const auto values = predict_regressor(model, row);
  std::map<std::string, double> out;
  for (std::size_t i = 0; i < values.size(); ++i) out[model.output_labels[i]] = values[i];
  return out;
}

namespace {

void accumulate_gains(const DecisionTree& tree, std::vector<double>& into) {
  for (const auto& node : tree.nodes) {
    if (!node.is_leaf()) into[static_cast<std::size_t>(node.feature)] += node.gain;
  }
}

void normalize(std::vector<double>& v) {
  const double total = std::accumulate(v.begin(), v.end(), 0.0);
  if (total > 0.0) {
    for (auto& x : v) x /= total;
  }
}

}  // namespace

std::vector<double> feature_importances(const ForestClassifier& model) {
  std::vector<double> out(model.feature_count, 0.0);
  for (const auto& tree : model.trees) accumulate_gains(tree, out);
  normalize(out);
  return out;
}

std::vector<double> feature_importances(const BoostedRegressor& model) {
  std::vector<double> out(model.feature_count, 0.0);
  for (const auto& chain : model.chains) {
    for (const auto& stage : chain.stages) accumulate_gains(stage.tree, out);
  }
  normalize(out);
  return out;
}

}  // namespace perfcost
