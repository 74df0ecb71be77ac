#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "sqem/dataset.hpp"
#include "sqem/regression.hpp"

namespace sqem {

struct TreeParams {
  /// Unset means max(4, ceil(0.1 * n)).
  std::optional<std::size_t> min_leaf_size;
  double sd_stop_fraction = 0.05;
};

struct TreeNode {
  bool leaf = true;
  std::size_t n = 0;
  double mean = 0.0;
  double sd = 0.0;  // population sd of the response at this node
  std::size_t depth = 0;

  // Internal nodes.
  std::string variable;
  bool categorical = false;
  double threshold = 0.0;                 // numeric: x >= threshold goes right
  std::vector<std::string> left_labels;   // categorical: these go left
  double sdr = 0.0;
  int left = -1;
  int right = -1;

  // Leaves.
  LinearModel model;
  double rss = 0.0;
};

/// M5-style model tree: SDR splitting with an OLS model at every leaf.
struct ModelTree {
  std::string response;
  Transform response_transform = Transform::none;
  std::vector<std::string> predictors;
  std::size_t min_leaf_size = 0;
  double sd_stop_fraction = 0.05;
  double root_sd = 0.0;
  /// Quantifications used for categorical predictors in leaf models.
  QuantificationSet quantifications;
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  std::size_t leaf_count() const;
  /// Index of the leaf `row` routes to.
  std::size_t route(const Row& row) const;
};

std::size_t default_min_leaf_size(std::size_t n);

/// Rows missing the response or any predictor are dropped first.
ModelTree build_model_tree(const Dataset& ds, const std::string& response,
                           const std::vector<std::string>& predictors, const TreeParams& params = {},
                           const QuantificationSet& quantifications = {});

/// Leaf model prediction on the modeling scale unless `back_transform`.
double tree_predict(const ModelTree& tree, const Row& row, bool back_transform = false);

/// Standard-deviation reduction of splitting `parent` into `left` and `right`.
double sd_reduction(std::span<const double> parent, std::span<const double> left, std::span<const double> right);

struct TreeVariableUse {
  std::string variable;
  std::string role;  // "split" or "leaf-model"
  double max_abs_standardized = 0.0;
};

/// Each variable used anywhere in the tree once; split outranks leaf-model.
std::vector<TreeVariableUse> tree_variable_report(const ModelTree& tree);

std::string render_tree(const ModelTree& tree, int decimals = 4);
nlohmann::json to_json(const ModelTree& tree);

}  // namespace sqem
