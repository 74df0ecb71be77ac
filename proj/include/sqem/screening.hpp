#pragma once

#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "sqem/dataset.hpp"

namespace sqem {

struct CorrelationResult {
  std::string variable;
  double rho = 0.0;
  std::size_t n = 0;
  double p_two_sided = 1.0;
};

/// Spearman rank correlation on complete pairs.
///
/// rho is the Pearson correlation of tie-averaged ranks; the two-sided p-value
/// uses t = rho * sqrt((n - 2) / (1 - rho^2)) on n - 2 degrees of freedom.
/// Throws DataError for n < 3 or a constant column.
CorrelationResult spearman(std::span<const double> x, std::span<const double> y,
                           std::string variable = {});

/// Pairwise-complete Spearman between two numeric columns of `ds`.
CorrelationResult spearman(const Dataset& ds, const std::string& x, const std::string& y);

/// Observations of a response split by group label. Empty groups are kept
/// here and ignored by the tests below.
struct GroupedSample {
  std::vector<std::string> labels;
  std::vector<std::vector<double>> groups;
};

/// Groups `response` by the categories of `group` (categorical column).
GroupedSample group_by_category(const Dataset& ds, const std::string& response,
                                const std::string& group);
/// Groups `response` by the distinct observed values of a numeric column.
GroupedSample group_by_value(const Dataset& ds, const std::string& response,
                             const std::string& group);

struct AnovaResult {
  std::string variable;
  double f_value = 0.0;  // +inf when the within-group sum of squares is zero
  std::size_t df_between = 0;
  std::size_t df_within = 0;
  double p = 1.0;
  double ss_between = 0.0;
  double ss_within = 0.0;
  /// Groups with a single observation (allowed, but flagged).
  std::vector<std::string> singleton_groups;
};

AnovaResult anova_oneway(const GroupedSample& sample, std::string variable = {});

struct TukeyPair {
  std::string group_i;
  std::string group_j;
  double mean_difference = 0.0;  // mean_i - mean_j
  double q = 0.0;
  double p_adjusted = 1.0;
  bool significant = false;
};

/// Tukey-Kramer pairwise comparisons over the nonempty groups, in label order.
std::vector<TukeyPair> tukey_hsd(const GroupedSample& sample, double alpha = 0.05);

/// Merges each group of labels into one category named by joining the
/// members with '+' in declared order, placed at the first member's position.
/// A variable left with two categories becomes binary.
VariableSpec merge_categories(const VariableSpec& var,
                              std::span<const std::vector<std::string>> groups);

/// Applies merge_categories to a column and remaps its category indices.
Dataset merge_categories(const Dataset& ds, const std::string& variable,
                         std::span<const std::vector<std::string>> groups);

nlohmann::json to_json(const CorrelationResult& r);
nlohmann::json to_json(const AnovaResult& r);
nlohmann::json to_json(const TukeyPair& r);

}  // namespace sqem
