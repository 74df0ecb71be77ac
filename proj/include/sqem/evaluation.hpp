#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "sqem/dataset.hpp"
#include "sqem/recalibration.hpp"
#include "sqem/regression.hpp"

namespace sqem {

/// Mean of |actual - prediction| / actual. Actuals must be positive.
double mmre(std::span<const double> actuals, std::span<const double> predictions);

/// Fraction of rows whose relative error is at most `m`.
double pred_at(std::span<const double> actuals, std::span<const double> predictions, double m);

struct EvalMetrics {
  double mmre = 0.0;
  std::map<double, double> pred;  // m -> Pred(m)
  std::size_t n = 0;
};

EvalMetrics evaluate_metrics(std::span<const double> actuals, std::span<const double> predictions,
                             std::span<const double> pred_levels);

struct FoldPlan {
  std::size_t k = 0;
  std::vector<std::size_t> assignment;  // row -> fold
  std::uint64_t seed = 0;

  std::vector<std::size_t> test_rows(std::size_t fold) const;
  std::vector<std::size_t> train_rows(std::size_t fold) const;
  std::vector<std::size_t> fold_sizes() const;
};

/// Seeded shuffle, then round-robin fold assignment.
FoldPlan kfold_plan(std::size_t n, std::size_t k, std::uint64_t seed);

/// round(fraction * n), halves rounded up.
std::size_t train_size(std::size_t n, double fraction);

struct SplitPlan {
  std::vector<std::size_t> train;  // ascending
  std::vector<std::size_t> test;   // ascending
};

SplitPlan random_split(std::size_t n, double train_fraction, std::uint64_t seed);

/// What an experiment refits on every training partition.
struct ModelingSpec {
  std::string response;
  std::vector<std::string> predictors;
  /// Initial quantifications of categorical predictors (binary ones default to 0/1).
  QuantificationSet quantifications;
  /// Variables routed through an NFA. Categorical model terms always get one.
  std::vector<std::string> recalibrate;
  RecalibrationConfig recalibration;
  std::vector<double> pred_levels{0.25};
  /// Pred(m) is reported only for evaluation sets at least this large.
  std::size_t min_pred_fold = 10;
};

struct ExperimentRow {
  std::string label;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  std::vector<std::size_t> test_rows;  // row indices of the evaluation set
  double baseline_mmre = 0.0;
  double recalibrated_mmre = 0.0;
  double improvement = 0.0;  // percent
  std::optional<std::map<double, double>> baseline_pred;
  std::optional<std::map<double, double>> recalibrated_pred;
};

struct ExperimentReport {
  std::string kind;  // cross_validation | random_split | resubstitution
  std::size_t folds = 0;
  double train_fraction = 0.0;
  std::uint64_t seed = 0;
  std::vector<ExperimentRow> rows;
  double average_baseline_mmre = 0.0;
  double average_recalibrated_mmre = 0.0;
  double average_improvement = 0.0;  // mean of the per-row improvements
};

/// (baseline - recalibrated) / baseline * 100; 0 when the baseline is 0.
double improvement_percent(double baseline, double recalibrated);

/// Fits the regression and trains the NFAs on `train`, then scores both on
/// `test`. The dataset must already be on the modeling scale.
ExperimentRow run_split(const Dataset& ds, const ModelingSpec& spec, std::span<const std::size_t> train,
                        std::span<const std::size_t> test, std::string label);

ExperimentReport cross_validate(const Dataset& ds, const ModelingSpec& spec, std::size_t k, std::uint64_t seed);
ExperimentReport random_split_experiment(const Dataset& ds, const ModelingSpec& spec, double train_fraction,
                                         std::size_t repetitions, std::uint64_t seed);
/// Train and evaluate on every row.
ExperimentReport resubstitution(const Dataset& ds, const ModelingSpec& spec);

nlohmann::json to_json(const ExperimentReport& report);
/// Aligned table: label, Regression MMRE, Recalibrated MMRE, Improvement.
std::string render_report(const ExperimentReport& report);

}  // namespace sqem
