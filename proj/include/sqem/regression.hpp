#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "sqem/dataset.hpp"

namespace sqem {

enum class ScalingLevel { nominal, ordinal };

std::string_view to_string(ScalingLevel level);
ScalingLevel parse_scaling_level(std::string_view text);

/// Numeric values assigned to the categories of a qualitative variable.
struct Quantification {
  std::string variable;
  std::vector<std::string> labels;
  std::vector<double> values;
  ScalingLevel level = ScalingLevel::nominal;

  std::optional<double> value_of(std::string_view label) const;
  friend bool operator==(const Quantification&, const Quantification&) = default;
};

using QuantificationSet = std::vector<Quantification>;

const Quantification* find_quantification(const QuantificationSet& set, std::string_view variable);

/// 0/1 coding of a binary variable in declared category order.
Quantification binary_coding(const VariableSpec& spec);

/// `base` plus a 0/1 coding for every binary variable in `variables` that has
/// no quantification yet.
QuantificationSet effective_quantifications(const Dataset& ds, std::span<const std::string> variables,
                                            const QuantificationSet& base = {});

/// Numeric model input for one cell: numeric values pass through; categorical
/// labels map through `quantifications` (binary variables default to 0/1).
double encode_cell(const VariableSpec& spec, const CellValue& cell, const QuantificationSet& quantifications);

/// Encoded column over all rows; throws DataError on a missing cell.
std::vector<double> encoded_column(const Dataset& ds, std::string_view variable,
                                   const QuantificationSet& quantifications);

struct ModelTerm {
  std::string variable;
  Transform transform = Transform::none;
  double coefficient = 0.0;    // B
  double standardized = 0.0;   // Beta = B * sd(x) / sd(y), sample sd
  double std_error = 0.0;
  double t_value = 0.0;
  double p_value = 1.0;
};

struct LinearModel {
  std::string response;
  Transform response_transform = Transform::none;
  double intercept = 0.0;
  double intercept_std_error = 0.0;
  double intercept_p_value = 1.0;
  std::vector<ModelTerm> terms;
  double r_squared = 0.0;
  double residual_sd = 0.0;
  std::size_t n = 0;

  const ModelTerm* term(std::string_view variable) const;
  std::vector<std::string> variables() const;
};

/// Ordinary least squares with t-based significance for every term.
///
/// Rows with a missing response or predictor are dropped first. Categorical
/// predictors need a quantification unless they are binary.
LinearModel ols_fit(const Dataset& ds, const std::string& response,
                    std::span<const std::string> predictors,
                    const QuantificationSet& quantifications = {});

struct StepwiseStep {
  enum class Action { enter, remove };
  Action action;
  std::string variable;
  double p_value;
};

struct StepwiseTrace {
  std::vector<StepwiseStep> steps;
  LinearModel final_model;
  bool hit_iteration_cap = false;
};

/// Forward entry by smallest p below `p_enter`, followed by backward removal
/// of the largest p above `p_remove`, until neither applies.
StepwiseTrace stepwise_fit(const Dataset& ds, const std::string& response,
                           std::span<const std::string> candidates, double p_enter = 0.05,
                           double p_remove = 0.10, const QuantificationSet& quantifications = {});

struct CatregOptions {
  std::size_t max_iterations = 500;
  double tolerance = 1e-8;
};

struct CatregResult {
  LinearModel model;
  /// One entry per categorical predictor, standardized over the training rows
  /// (weighted mean 0, weighted mean square 1).
  QuantificationSet quantifications;
  /// R² after every OLS pass; nondecreasing.
  std::vector<double> r_squared_trace;
  std::size_t iterations = 0;
  bool converged = false;
};

/// Categorical regression by alternating least squares (optimal scaling).
///
/// Numeric predictors enter as-is. Each categorical predictor starts from its
/// standardized integer coding; ordinal ones stay monotone in declared order.
CatregResult catreg_fit(const Dataset& ds, const std::string& response,
                        std::span<const std::string> predictors,
                        const std::map<std::string, ScalingLevel, std::less<>>& levels = {},
                        const CatregOptions& options = {});

/// Linear prediction on the modeling scale; `back_transform` inverts the
/// response transform (exp for ln).
double model_predict(const LinearModel& model, const QuantificationSet& quantifications,
                     const Row& row, bool back_transform);

/// "ln(Defects) = -5.939 + 0.704*ln(FP) + ..." with `decimals` places.
std::string render_formula(const LinearModel& model, int decimals = 3);

/// Pool-adjacent-violators: weighted least-squares nondecreasing fit.
std::vector<double> isotonic_regression(std::span<const double> values, std::span<const double> weights);

nlohmann::json to_json(const LinearModel& model);
LinearModel linear_model_from_json(const nlohmann::json& j);
nlohmann::json to_json(const StepwiseTrace& trace);
nlohmann::json to_json(const CatregResult& result);
/// {variable: {label: value}}
nlohmann::json quantifications_to_json(const QuantificationSet& set);
QuantificationSet quantifications_from_json(const nlohmann::json& j);

}  // namespace sqem
