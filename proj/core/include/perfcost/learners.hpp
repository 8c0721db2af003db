#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "perfcost/fingerprint.hpp"
#include "perfcost/types.hpp"

namespace perfcost {

// Dense row-major matrix of doubles.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
  void append_row(std::span<const double> values);
};

struct HyperParams {
  int n_trees = 200;  // trees (classifier) or boosting stages (regressor)
  int max_depth = 6;
  double learning_rate = 0.1;
  int min_samples_leaf = 2;
  double subsample_fraction = 0.8;
  double colsample_fraction = 0.8;
  int max_bins = 64;  // candidate thresholds per feature
  // Regressor only: fit log(target) and exponentiate predictions. Targets
  // must then be positive.
  bool log_targets = false;

  static HyperParams classifier_defaults() { return {}; }
  static HyperParams regressor_defaults() {
    HyperParams p;
    p.n_trees = 300;
    p.log_targets = true;
    return p;
  }
  // Throws ArgumentError when a field is out of range.
  void validate() const;
  bool operator==(const HyperParams&) const = default;
};

struct TreeNode {
  int feature = -1;  // -1 for leaves
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;  // leaf output
  double gain = 0.0;   // impurity/loss reduction of the split

  bool is_leaf() const { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

// Binary tree in preorder; x[feature] <= threshold goes left.
struct DecisionTree {
  std::vector<TreeNode> nodes;
  int max_depth = 0;
  int min_samples_leaf = 1;

  double predict(std::span<const double> x) const;
  std::size_t split_count() const;
  bool operator==(const DecisionTree&) const = default;
};

// Bagged CART classifier, Gini criterion. Leaves hold P(ScalesPoorly); each
// tree votes for its argmax (0.5 votes ScalesWell) and the majority wins, ties
// going to ScalesWell.
struct ForestClassifier {
  std::vector<DecisionTree> trees;
  int n_trees = 0;
  std::size_t feature_count = 0;
  std::uint64_t seed = 0;

  bool operator==(const ForestClassifier&) const = default;
};

struct BoostStage {
  DecisionTree tree;
  double learning_rate = 0.1;
  bool operator==(const BoostStage&) const = default;
};

// Independent squared-error boosting chain for one output.
struct BoostChain {
  double base_score = 0.0;
  std::vector<BoostStage> stages;
  bool operator==(const BoostChain&) const = default;
};

struct BoostedRegressor {
  std::vector<BoostChain> chains;  // one per output
  std::vector<std::string> output_labels;
  std::size_t feature_count = 0;
  std::uint64_t seed = 0;
  bool log_targets = false;  // chains predict log(target)

  bool operator==(const BoostedRegressor&) const = default;
};

ForestClassifier fit_forest_classifier(const Matrix& features, const std::vector<Scalability>& labels,
                                       const HyperParams& params, std::uint64_t seed);

// targets: rows = samples, cols = outputs. When `observed` is given
// (row-major, same shape), only observed cells train their output's chain.
// Output labels default to "0", "1", ...; they must be unique.
BoostedRegressor fit_boosted_regressor(const Matrix& features, const Matrix& targets,
                                       const HyperParams& params, std::uint64_t seed,
                                       const std::vector<std::uint8_t>* observed = nullptr,
                                       std::vector<std::string> output_labels = {});

// A regressor with no stages that predicts the given constant per output.
BoostedRegressor constant_regressor(std::vector<double> values, std::vector<std::string> output_labels,
                                    std::size_t feature_count);

Scalability predict_classifier(const ForestClassifier& model, std::span<const double> x);
Scalability predict_classifier(const ForestClassifier& model, const Fingerprint& fingerprint);
// Per-tree votes, in tree order.
std::vector<Scalability> classifier_votes(const ForestClassifier& model, std::span<const double> x);

// Outputs aligned with model.output_labels.
std::vector<double> predict_regressor(const BoostedRegressor& model, std::span<const double> x);
std::map<std::string, double> predict_regressor(const BoostedRegressor& model,
                                                const Fingerprint& fingerprint);
// Prediction of one output using only the first `stages` stages, on the
// chain's own scale (log scale when the model has log_targets).
double predict_chain(const BoostChain& chain, std::span<const double> x, std::size_t stages);

// Normalized total split gain per feature; all zeros if the model never splits.
std::vector<double> feature_importances(const ForestClassifier& model);
std::vector<double> feature_importances(const BoostedRegressor& model);

// Self-describing JSON dumps; decimals are written as exact round-trip strings.
std::string to_json(const ForestClassifier& model);
std::string to_json(const BoostedRegressor& model);
ForestClassifier forest_from_json(const std::string& text);
BoostedRegressor regressor_from_json(const std::string& text);

}  // namespace perfcost
