#include <json.hpp>

#include "perfcost/learners.hpp"
#include "perfcost/numfmt.hpp"

namespace perfcost {

using nlohmann::json;

namespace {

constexpr int kModelFormatVersion = 1;

// Internal node: [feature, "threshold", left, right, "gain"]; leaf: ["value"].
json tree_to_json(const DecisionTree& tree) {
  json nodes = json::array();
  for (const auto& n : tree.nodes) {
    if (n.is_leaf()) {
      nodes.push_back(json::array({format_exact(n.value)}));
    } else {
      nodes.push_back(json::array(
          {n.feature, format_exact(n.threshold), n.left, n.right, format_exact(n.gain)}));
    }
  }
  return json{{"max_depth", tree.max_depth},
              {"min_samples_leaf", tree.min_samples_leaf},
              {"nodes", std::move(nodes)}};
}

DecisionTree tree_from_json(const json& j, std::size_t feature_count) {
  DecisionTree tree;
  tree.max_depth = j.at("max_depth").get<int>();
  tree.min_samples_leaf = j.at("min_samples_leaf").get<int>();
  const auto& nodes = j.at("nodes");
  const int count = static_cast<int>(nodes.size());
  for (const auto& n : nodes) {
    TreeNode node;
    if (n.size() == 1) {
      node.value = parse_exact(n.at(0).get<std::string>());
    } else if (n.size() == 5) {
      node.feature = n.at(0).get<int>();
      node.threshold = parse_exact(n.at(1).get<std::string>());
      node.left = n.at(2).get<int>();
      node.right = n.at(3).get<int>();
      node.gain = parse_exact(n.at(4).get<std::string>());
      if (node.feature < 0 || static_cast<std::size_t>(node.feature) >= feature_count ||
          node.left <= 0 || node.right <= 0 || node.left >= count || node.right >= count) {
        throw SchemaError("tree node references an invalid feature or child");
      }
    } else {
      throw SchemaError("tree node must have 1 or 5 entries");
    }
    tree.nodes.push_back(node);
  }
  // Preorder layout: children always follow their parent, so the tree is acyclic.
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    const auto& n = tree.nodes[i];
    if (!n.is_leaf() && (n.left <= static_cast<int>(i) || n.right <= static_cast<int>(i))) {
      throw SchemaError("tree nodes are not in preorder");
    }
  }
  return tree;
}

void expect_format(const json& j, const char* tag) {
  if (j.value("format", "") != tag) {
    throw SchemaError(std::string("expected model format '") + tag + "'");
  }
  if (j.value("version", 0) != kModelFormatVersion) {
    throw SchemaError("unsupported model format version " + std::to_string(j.value("version", 0)));
  }
}

json parse(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw SchemaError(std::string("malformed model JSON: ") + e.what());
  }
}

}  // namespace

std::string to_json(const ForestClassifier& model) {
  json trees = json::array();
  for (const auto& t : model.trees) trees.push_back(tree_to_json(t));
  json j{{"format", "perfcost-forest-classifier"},
         {"version", kModelFormatVersion},
         {"node_schema", "internal=[feature,threshold,left,right,gain] leaf=[value]"},
         {"feature_count", model.feature_count},
         {"n_trees", model.n_trees},
         {"seed", std::to_string(model.seed)},
         {"trees", std::move(trees)}};
  return j.dump() + "\n";
}

std::string to_json(const BoostedRegressor& model) {
  json outputs = json::array();
  for (std::size_t o = 0; o < model.chains.size(); ++o) {
    const auto& chain = model.chains[o];
    json stages = json::array();
    for (const auto& s : chain.stages) {
      stages.push_back(json{{"learning_rate", format_exact(s.learning_rate)},
                            {"tree", tree_to_json(s.tree)}});
    }
    outputs.push_back(json{{"label", model.output_labels[o]},
                           {"base_score", format_exact(chain.base_score)},
                           {"stages", std::move(stages)}});
  }
  json j{{"format", "perfcost-boosted-regressor"},
         {"version", kModelFormatVersion},
         {"node_schema", "internal=[feature,threshold,left,right,gain] leaf=[value]"},
         {"feature_count", model.feature_count},
         {"seed", std::to_string(model.seed)},
         {"target_scale", model.log_targets ? "log" : "linear"},
         {"outputs", std::move(outputs)}};
  return j.dump() + "\n";
}

ForestClassifier forest_from_json(const std::string& text) {
  const auto j = parse(text);
  try {
    expect_format(j, "perfcost-forest-classifier");
    ForestClassifier model;
    model.feature_count = j.at("feature_count").get<std::size_t>();
    model.n_trees = j.at("n_trees").get<int>();
    model.seed = std::stoull(j.at("seed").get<std::string>());
    for (const auto& t : j.at("trees")) model.trees.push_back(tree_from_json(t, model.feature_count));
    return model;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("invalid classifier model: ") + e.what());
  }
}

BoostedRegressor regressor_from_json(const std::string& text) {
  const auto j = parse(text);
  try {
    expect_format(j, "perfcost-boosted-regressor");
    BoostedRegressor model;
    model.feature_count = j.at("feature_count").get<std::size_t>();
    model.seed = std::stoull(j.at("seed").get<std::string>());
    const auto scale = j.value("target_scale", "linear");
    if (scale != "linear" && scale != "log") throw SchemaError("unknown target_scale '" + scale + "'");
    model.log_targets = scale == "log";
    for (const auto& out : j.at("outputs")) {
      model.output_labels.push_back(out.at("label").get<std::string>());
      BoostChain chain;
      chain.base_score = parse_exact(out.at("base_score").get<std::string>());
      for (const auto& s : out.at("stages")) {
        chain.stages.push_back({tree_from_json(s.at("tree"), model.feature_count),
                                parse_exact(s.at("learning_rate").get<std::string>())});
      }
      model.chains.push_back(std::move(chain));
    }
    return model;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("invalid regressor model: ") + e.what());
  }
}

}  // namespace perfcost
