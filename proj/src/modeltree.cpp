#include "sqem/modeltree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "detail.hpp"
#include "sqem/error.hpp"
#include "sqem/numerics.hpp"
#include "sqem/transform.hpp"

namespace sqem {

std::size_t ModelTree::leaf_count() const {
  return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.leaf; }));
}

std::size_t ModelTree::route(const Row& row) const {
  std::size_t at = 0;
  while (!nodes[at].leaf) {
    const auto& node = nodes[at];
    const auto it = row.find(node.variable);
    if (it == row.end()) throw ConfigError("row lacks tree split variable '" + node.variable + "'");
    bool go_left = false;
    if (node.categorical) {
      const auto* label = std::get_if<std::string>(&it->second);
      if (!label) throw ConfigError("tree split variable '" + node.variable + "' expects a category label");
      go_left = std::find(node.left_labels.begin(), node.left_labels.end(), *label) != node.left_labels.end();
    } else {
      const auto* x = std::get_if<double>(&it->second);
      if (!x) throw ConfigError("tree split variable '" + node.variable + "' expects a number");
      go_left = *x < node.threshold;
    }
    at = static_cast<std::size_t>(go_left ? node.left : node.right);
  }
  return at;
}

std::size_t default_min_leaf_size(std::size_t n) {
  const auto tenth = (n + 9) / 10;
  return std::max<std::size_t>(4, tenth);
}

double sd_reduction(std::span<const double> parent, std::span<const double> left, std::span<const double> right) {
  const double n = static_cast<double>(parent.size());
  return detail::population_sd(parent) - static_cast<double>(left.size()) / n * detail::population_sd(left) -
         static_cast<double>(right.size()) / n * detail::population_sd(right);
}

namespace {

struct Candidate {
  bool found = false;
  std::size_t predictor = 0;
  bool categorical = false;
  double threshold = 0.0;
  std::vector<std::size_t> left_categories;
  double sdr = 0.0;
};

struct Builder {
  const Dataset& ds;  // complete rows only
  const ModelTree& tree;
  std::vector<std::size_t> predictor_cols;
  std::size_t response_col;
  QuantificationSet effective;

  std::vector<double> response_of(std::span<const std::size_t> rows) const {
    std::vector<double> y;
    y.reserve(rows.size());
    for (auto r : rows) y.push_back(ds.value(response_col, r));
    return y;
  }

  void consider(Candidate& best, std::size_t predictor, bool categorical, double threshold,
                std::vector<std::size_t> left_categories, std::span<const double> parent,
                std::span<const double> left, std::span<const double> right) const {
    const double sdr = sd_reduction(parent, left, right);
    // Strict improvement keeps the lowest predictor index, then the lowest threshold.
    if (!(sdr > 0.0)) return;
    if (best.found && !(sdr > best.sdr)) return;
    best = {true, predictor, categorical, threshold, std::move(left_categories), sdr};
  }

  Candidate best_split(std::span<const std::size_t> rows) const {
    Candidate best;
    const auto parent = response_of(rows);
    const std::size_t min_leaf = tree.min_leaf_size;
    for (std::size_t p = 0; p < predictor_cols.size(); ++p) {
      const auto col = predictor_cols[p];
      if (ds.spec(col).is_categorical()) {
        // Breiman ordering: categories sorted by response mean, then prefix splits.
        const std::size_t k = ds.spec(col).categories.size();
        std::vector<double> sum(k, 0.0);
        std::vector<std::size_t> count(k, 0);
        for (auto r : rows) {
          sum[ds.category(col, r)] += ds.value(response_col, r);
          ++count[ds.category(col, r)];
        }
        std::vector<std::size_t> present;
        for (std::size_t c = 0; c < k; ++c) {
          if (count[c] > 0) present.push_back(c);
        }
        std::stable_sort(present.begin(), present.end(), [&](std::size_t a, std::size_t b) {
          return sum[a] / static_cast<double>(count[a]) < sum[b] / static_cast<double>(count[b]);
        });
        for (std::size_t cut = 1; cut < present.size(); ++cut) {
          std::vector<std::size_t> left_set(present.begin(), present.begin() + static_cast<std::ptrdiff_t>(cut));
          std::vector<double> left, right;
          for (auto r : rows) {
            const bool in_left =
                std::find(left_set.begin(), left_set.end(), ds.category(col, r)) != left_set.end();
            (in_left ? left : right).push_back(ds.value(response_col, r));
          }
          if (left.size() < min_leaf || right.size() < min_leaf) continue;
          std::sort(left_set.begin(), left_set.end());
          consider(best, p, true, static_cast<double>(cut), std::move(left_set), parent, left, right);
        }
        continue;
      }
      std::vector<double> xs;
      for (auto r : rows) xs.push_back(ds.value(col, r));
      std::sort(xs.begin(), xs.end());
      xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
      for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
        const double threshold = xs[i] + 0.5 * (xs[i + 1] - xs[i]);
        std::vector<double> left, right;
        for (auto r : rows) (ds.value(col, r) < threshold ? left : right).push_back(ds.value(response_col, r));
        if (left.size() < min_leaf || right.size() < min_leaf) continue;
        consider(best, p, false, threshold, {}, parent, left, right);
      }
    }
    return best;
  }

  LinearModel fit_leaf(std::span<const std::size_t> rows, double& rss) const {
    const Dataset leaf = ds.select_rows(rows);
    const std::size_t n = rows.size();
    const auto y = encoded_column(leaf, tree.response, {});
    if (n <= 1) {
      LinearModel m;
      m.response = tree.response;
      m.response_transform = tree.response_transform;
      m.intercept = n == 1 ? y[0] : 0.0;
      m.n = n;
      rss = 0.0;
      return m;
    }
    // Forward pass keeping only columns that raise the rank, with one residual df to spare.
    std::vector<std::string> chosen;
    Eigen::MatrixXd design = Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(n), 1);
    for (const auto& name : tree.predictors) {
      if (chosen.size() + 2 >= n) break;
      // Multi-level categoricals without a quantification only split.
      if (leaf.spec(name).is_categorical() && !find_quantification(effective, name)) continue;
      const auto x = encoded_column(leaf, name, effective);
      Eigen::MatrixXd trial(design.rows(), design.cols() + 1);
      trial.leftCols(design.cols()) = design;
      for (std::size_t r = 0; r < n; ++r) trial(static_cast<Eigen::Index>(r), design.cols()) = x[r];
      if (numerics::numerical_rank(trial) == trial.cols()) {
        design = std::move(trial);
        chosen.push_back(name);
      }
    }
    LinearModel m = ols_fit(leaf, tree.response, chosen, effective);
    rss = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      const double e = y[r] - model_predict(m, effective, leaf.row(r), false);
      rss += e * e;
    }
    return m;
  }

  std::size_t grow(std::vector<TreeNode>& nodes, std::vector<std::size_t> rows, std::size_t depth) const {
    const auto y = response_of(rows);
    TreeNode node;
    node.n = rows.size();
    node.mean = y.empty() ? 0.0 : detail::mean(y);
    node.sd = y.empty() ? 0.0 : detail::population_sd(y);
    node.depth = depth;
    const std::size_t index = nodes.size();
    nodes.push_back(node);

    const bool too_small = rows.size() < 2 * tree.min_leaf_size;
    const bool homogeneous = node.sd < tree.sd_stop_fraction * tree.root_sd || node.sd == 0.0;
    Candidate split;
    if (!too_small && !homogeneous) split = best_split(rows);
    if (!split.found) {
      nodes[index].model = fit_leaf(rows, nodes[index].rss);
      return index;
    }
    const auto col = predictor_cols[split.predictor];
    std::vector<std::size_t> left_rows, right_rows;
    for (auto r : rows) {
      bool go_left = false;
      if (split.categorical) {
        go_left = std::find(split.left_categories.begin(), split.left_categories.end(), ds.category(col, r)) !=
                  split.left_categories.end();
      } else {
        go_left = ds.value(col, r) < split.threshold;
      }
      (go_left ? left_rows : right_rows).push_back(r);
    }
    auto& at = nodes[index];
    at.leaf = false;
    at.variable = tree.predictors[split.predictor];
    at.categorical = split.categorical;
    at.threshold = split.categorical ? 0.0 : split.threshold;
    for (auto c : split.left_categories) at.left_labels.push_back(ds.spec(col).categories[c]);
    at.sdr = split.sdr;
    const auto l = grow(nodes, std::move(left_rows), depth + 1);
    const auto r = grow(nodes, std::move(right_rows), depth + 1);
    nodes[index].left = static_cast<int>(l);
    nodes[index].right = static_cast<int>(r);
    return index;
  }
};

}  // namespace

ModelTree build_model_tree(const Dataset& ds, const std::string& response, const std::vector<std::string>& predictors,
                           const TreeParams& params, const QuantificationSet& quantifications) {
  if (ds.spec(response).is_categorical()) throw ConfigError("model tree: response '" + response + "' is not numeric");
  if (!(params.sd_stop_fraction >= 0.0)) throw ConfigError("model tree: sd_stop_fraction must be >= 0");
  if (params.min_leaf_size && *params.min_leaf_size == 0) throw ConfigError("model tree: min_leaf_size must be >= 1");
  for (const auto& p : predictors) {
    if (p == response) throw ConfigError("model tree: response '" + response + "' listed as a predictor");
    ds.column_index(p);
  }
  std::vector<std::string> vars{response};
  vars.insert(vars.end(), predictors.begin(), predictors.end());
  const Dataset complete = listwise_complete(ds, vars);
  if (complete.row_count() == 0) throw DataError("model tree: no complete rows");

  ModelTree tree;
  tree.response = response;
  tree.response_transform = ds.spec(response).transform;
  tree.predictors = predictors;
  tree.min_leaf_size = params.min_leaf_size.value_or(default_min_leaf_size(complete.row_count()));
  tree.sd_stop_fraction = params.sd_stop_fraction;
  tree.quantifications = quantifications;
  tree.root_sd = detail::population_sd(complete.values(complete.column_index(response)));

  Builder builder{complete, tree, {}, complete.column_index(response),
                  effective_quantifications(complete, predictors, quantifications)};
  for (const auto& p : predictors) builder.predictor_cols.push_back(complete.column_index(p));
  std::vector<std::size_t> rows(complete.row_count());
  std::iota(rows.begin(), rows.end(), 0);
  std::vector<TreeNode> nodes;
  builder.grow(nodes, std::move(rows), 0);
  tree.nodes = std::move(nodes);
  tree.quantifications = builder.effective;
  return tree;
}

double tree_predict(const ModelTree& tree, const Row& row, bool back_transform) {
  const auto& leaf = tree.nodes[tree.route(row)];
  const double value = model_predict(leaf.model, tree.quantifications, row, false);
  return back_transform ? inverse_transform(value, tree.response_transform) : value;
}

std::vector<TreeVariableUse> tree_variable_report(const ModelTree& tree) {
  std::vector<TreeVariableUse> out;
  for (const auto& name : tree.predictors) {
    bool split = false;
    bool in_leaf = false;
    double strongest = 0.0;
    for (const auto& node : tree.nodes) {
      if (!node.leaf) {
        split = split || node.variable == name;
      } else if (const auto* t = node.model.term(name)) {
        in_leaf = true;
        strongest = std::max(strongest, std::fabs(t->standardized));
      }
    }
    if (!split && !in_leaf) continue;
    out.push_back({name, split ? "split" : "leaf-model", strongest});
  }
  return out;
}

namespace {

void render_node(const ModelTree& tree, std::size_t at, int decimals, std::size_t indent, int& leaf_no,
                 std::ostringstream& out) {
  const auto& node = tree.nodes[at];
  const std::string pad(indent * 3, ' ');
  if (node.leaf) {
    out << pad << "LM" << ++leaf_no << " (n=" << node.n << "): " << render_formula(node.model, decimals) << "\n";
    return;
  }
  if (node.categorical) {
    std::string labels;
    for (const auto& l : node.left_labels) labels += (labels.empty() ? "" : ", ") + l;
    out << pad << node.variable << " in {" << labels << "}\n";
    render_node(tree, static_cast<std::size_t>(node.left), decimals, indent + 1, leaf_no, out);
    out << pad << node.variable << " not in {" << labels << "}\n";
  } else {
    const auto t = detail::format_fixed(node.threshold, decimals);
    out << pad << node.variable << " < " << t << "\n";
    render_node(tree, static_cast<std::size_t>(node.left), decimals, indent + 1, leaf_no, out);
    out << pad << node.variable << " >= " << t << "\n";
  }
  render_node(tree, static_cast<std::size_t>(node.right), decimals, indent + 1, leaf_no, out);
}

nlohmann::json node_json(const ModelTree& tree, std::size_t at) {
  const auto& node = tree.nodes[at];
  nlohmann::json j{{"n", node.n}, {"mean", node.mean}, {"sd", node.sd}};
  if (node.leaf) {
    j["model"] = to_json(node.model);
    j["rss"] = node.rss;
    return j;
  }
  j["variable"] = node.variable;
  if (node.categorical) {
    j["left_labels"] = node.left_labels;
  } else {
    j["threshold"] = node.threshold;
  }
  j["sdr"] = node.sdr;
  j["left"] = node_json(tree, static_cast<std::size_t>(node.left));
  j["right"] = node_json(tree, static_cast<std::size_t>(node.right));
  return j;
}

}  // namespace

std::string render_tree(const ModelTree& tree, int decimals) {
  std::ostringstream out;
  out << "model tree (M5-style reconstruction: SDR splits, OLS leaves, no smoothing or pruning)\n";
  out << "min_leaf_size=" << tree.min_leaf_size << " sd_stop_fraction=" << detail::format_double(tree.sd_stop_fraction)
      << " leaves=" << tree.leaf_count() << "\n\n";
  int leaf_no = 0;
  render_node(tree, 0, decimals, 0, leaf_no, out);
  return out.str();
}

nlohmann::json to_json(const ModelTree& tree) {
  nlohmann::json vars = nlohmann::json::array();
  for (const auto& v : tree_variable_report(tree)) {
    vars.push_back({{"variable", v.variable}, {"role", v.role}, {"max_abs_beta", v.max_abs_standardized}});
  }
  return {{"algorithm", "M5-style reconstruction (SDR splitting, OLS leaves)"},
          {"min_leaf_size", tree.min_leaf_size},
          {"sd_stop_fraction", tree.sd_stop_fraction},
          {"leaves", tree.leaf_count()},
          {"variables", std::move(vars)},
          {"root", node_json(tree, 0)}};
}

}  // namespace sqem
