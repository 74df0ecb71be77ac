#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "sqem/dataset.hpp"
#include "sqem/modeltree.hpp"
#include "sqem/recalibration.hpp"
#include "sqem/regression.hpp"
#include "sqem/synthetic.hpp"

namespace sqem {

struct DataSource {
  bool synthetic = false;
  std::filesystem::path path;  // resolved against the config directory
  SyntheticConfig generator;
};

struct ScreeningConfig {
  double alpha = 0.05;
  std::vector<std::string> correlation;  // Spearman against the response
  std::vector<std::string> anova;
  std::vector<std::string> tukey;
  std::vector<std::pair<std::string, std::string>> predictor_pairs;
  std::vector<std::string> qq;  // variables whose QQ correlation is reported
  std::map<std::string, std::vector<std::vector<std::string>>> merges;
};

struct TreeConfig {
  bool enabled = true;
  std::vector<std::string> predictors;
  TreeParams params;
};

enum class FitMethod { ols, stepwise, catreg };

struct RegressionConfig {
  std::vector<std::string> candidates;
  double p_enter = 0.05;
  double p_remove = 0.10;
  FitMethod method = FitMethod::stepwise;
  std::map<std::string, ScalingLevel, std::less<>> scaling;
};

struct RecalibrationSettings {
  std::vector<std::string> variables;
  RecalibrationConfig training;
};

struct EvaluationConfig {
  std::vector<std::size_t> folds{8, 4};
  std::vector<double> fractions{0.6, 0.7, 0.8};
  std::size_t repetitions = 10;
  std::vector<double> pred_levels{0.25};
  std::size_t min_pred_fold = 10;
  bool resubstitution = true;
};

struct PipelineConfig {
  DataSource data;
  std::vector<VariableSpec> schema;
  std::vector<FilterRule> filters;
  ScreeningConfig screening;
  TreeConfig tree;
  RegressionConfig regression;
  RecalibrationSettings recalibration;
  EvaluationConfig evaluation;
  std::optional<std::uint64_t> seed;
  std::string output_dir = "sqem_out";
  nlohmann::json source;  // the parsed document, for hashing
};

/// Validates structure and cross references; relative data paths resolve
/// against `base_dir`. Throws ConfigError naming the offending key or variable.
PipelineConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
PipelineConfig load_config(const std::filesystem::path& path);

std::string_view to_string(FitMethod method);

/// FNV-1a 64 over the compact dump of `j`, as 16 hex digits.
std::string config_hash(const nlohmann::json& j);

/// True when any configured step consumes random numbers.
bool needs_seed(const PipelineConfig& config);

}  // namespace sqem
