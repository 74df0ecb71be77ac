#include "sqem/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "detail.hpp"
#include "sqem/error.hpp"
#include "sqem/numerics.hpp"
#include "sqem/transform.hpp"

namespace sqem {
namespace {

void check_pairs(std::span<const double> actuals, std::span<const double> predictions) {
  if (actuals.empty()) throw DataError("MMRE: no observations");
  if (actuals.size() != predictions.size()) throw ConfigError("MMRE: actuals and predictions differ in length");
  for (std::size_t i = 0; i < actuals.size(); ++i) {
    if (!(actuals[i] > 0.0)) {
      throw DataError("MMRE: actual value at row " + std::to_string(i + 1) + " is not positive");
    }
  }
}

double relative_error(double actual, double prediction) { return std::fabs(actual - prediction) / actual; }

}  // namespace

double mmre(std::span<const double> actuals, std::span<const double> predictions) {
  check_pairs(actuals, predictions);
  double sum = 0.0;
  for (std::size_t i = 0; i < actuals.size(); ++i) sum += relative_error(actuals[i], predictions[i]);
  return sum / static_cast<double>(actuals.size());
}

double pred_at(std::span<const double> actuals, std::span<const double> predictions, double m) {
  check_pairs(actuals, predictions);
  if (!(m >= 0.0)) throw ConfigError("Pred(m): m must be >= 0");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < actuals.size(); ++i) hits += relative_error(actuals[i], predictions[i]) <= m ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(actuals.size());
}

EvalMetrics evaluate_metrics(std::span<const double> actuals, std::span<const double> predictions,
                             std::span<const double> pred_levels) {
  EvalMetrics out;
  out.mmre = mmre(actuals, predictions);
  out.n = actuals.size();
  for (double m : pred_levels) out.pred[m] = pred_at(actuals, predictions, m);
  return out;
}

std::vector<std::size_t> FoldPlan::test_rows(std::size_t fold) const {
  std::vector<std::size_t> out;
  for (std::size_t r = 0; r < assignment.size(); ++r) {
    if (assignment[r] == fold) out.push_back(r);
  }
  return out;
}

std::vector<std::size_t> FoldPlan::train_rows(std::size_t fold) const {
  std::vector<std::size_t> out;
  for (std::size_t r = 0; r < assignment.size(); ++r) {
    if (assignment[r] != fold) out.push_back(r);
  }
  return out;
}

std::vector<std::size_t> FoldPlan::fold_sizes() const {
  std::vector<std::size_t> sizes(k, 0);
  for (auto f : assignment) ++sizes[f];
  return sizes;
}

FoldPlan kfold_plan(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw ConfigError("k-fold: k must be at least 2, got " + std::to_string(k));
  if (k > n) throw ConfigError("k-fold: k = " + std::to_string(k) + " exceeds the " + std::to_string(n) + " rows");
  numerics::Prng rng(seed);
  const auto order = numerics::shuffled_indices(n, rng);
  FoldPlan plan;
  plan.k = k;
  plan.seed = seed;
  plan.assignment.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) plan.assignment[order[i]] = i % k;
  return plan;
}

std::size_t train_size(std::size_t n, double fraction) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw ConfigError("train fraction must lie in (0, 1)");
  return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n) + 0.5));
}

SplitPlan random_split(std::size_t n, double train_fraction, std::uint64_t seed) {
  const auto n_train = train_size(n, train_fraction);
  if (n_train == 0 || n_train >= n) {
    throw ConfigError("random split: fraction leaves an empty training or evaluation set");
  }
  numerics::Prng rng(seed);
  const auto order = numerics::shuffled_indices(n, rng);
  SplitPlan plan;
  plan.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  plan.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  std::sort(plan.train.begin(), plan.train.end());
  std::sort(plan.test.begin(), plan.test.end());
  return plan;
}

double improvement_percent(double baseline, double recalibrated) {
  if (baseline == 0.0) return 0.0;
  return (baseline - recalibrated) / baseline * 100.0;
}

ExperimentRow run_split(const Dataset& ds, const ModelingSpec& spec, std::span<const std::size_t> train,
                        std::span<const std::size_t> test, std::string label) {
  if (!ds.transformed()) throw ConfigError("evaluation expects a dataset on the modeling scale");
  std::vector<std::string> vars{spec.response};
  vars.insert(vars.end(), spec.predictors.begin(), spec.predictors.end());
  const Dataset train_ds = listwise_complete(ds.select_rows(train), vars);
  const Dataset test_ds = listwise_complete(ds.select_rows(test), vars);
  if (test_ds.row_count() == 0) throw DataError(label + ": no complete evaluation rows");

  LinearModel model;
  try {
    model = ols_fit(train_ds, spec.response, spec.predictors, spec.quantifications);
  } catch (const DataError& e) {
    throw DataError(label + ": experiment aborted: " + e.what());
  }
  const auto quants = effective_quantifications(train_ds, spec.predictors, spec.quantifications);
  std::vector<Nfa> nfas;
  for (const auto& t : model.terms) {
    const auto& vspec = train_ds.spec(t.variable);
    const bool listed = std::find(spec.recalibrate.begin(), spec.recalibrate.end(), t.variable) != spec.recalibrate.end();
    if (vspec.is_categorical()) {
      const auto* q = find_quantification(quants, t.variable);
      if (!q) throw ConfigError("no quantification for categorical variable '" + t.variable + "'");
      nfas.push_back(init_nfa(*q));
    } else if (listed) {
      nfas.push_back(init_nfa(distinct_value_quantification(train_ds, t.variable)));
    }
  }
  const auto trained = train_recalibration(model, std::move(nfas), train_ds, quants, spec.recalibration);

  const auto rt = test_ds.spec(spec.response).transform;
  const auto y = encoded_column(test_ds, spec.response, {});
  std::vector<double> actual, baseline, recalibrated;
  for (std::size_t r = 0; r < test_ds.row_count(); ++r) {
    const Row row = test_ds.row(r);
    actual.push_back(inverse_transform(y[r], rt));
    baseline.push_back(model_predict(model, quants, row, true));
    recalibrated.push_back(recalibrated_predict(model, trained.nfas, quants, row, true));
  }

  ExperimentRow out;
  out.label = std::move(label);
  out.n_train = train_ds.row_count();
  out.n_test = test_ds.row_count();
  out.test_rows.assign(test.begin(), test.end());
  out.baseline_mmre = mmre(actual, baseline);
  out.recalibrated_mmre = mmre(actual, recalibrated);
  out.improvement = improvement_percent(out.baseline_mmre, out.recalibrated_mmre);
  if (out.n_test >= spec.min_pred_fold) {
    out.baseline_pred = evaluate_metrics(actual, baseline, spec.pred_levels).pred;
    out.recalibrated_pred = evaluate_metrics(actual, recalibrated, spec.pred_levels).pred;
  }
  return out;
}

namespace {

void finish(ExperimentReport& report) {
  const double n = static_cast<double>(report.rows.size());
  double b = 0.0, r = 0.0, i = 0.0;
  for (const auto& row : report.rows) {
    b += row.baseline_mmre;
    r += row.recalibrated_mmre;
    i += row.improvement;
  }
  report.average_baseline_mmre = b / n;
  report.average_recalibrated_mmre = r / n;
  report.average_improvement = i / n;
}

}  // namespace

ExperimentReport cross_validate(const Dataset& ds, const ModelingSpec& spec, std::size_t k, std::uint64_t seed) {
  const auto plan = kfold_plan(ds.row_count(), k, seed);
  ExperimentReport report;
  report.kind = "cross_validation";
  report.folds = k;
  report.seed = seed;
  for (std::size_t f = 0; f < k; ++f) {
    report.rows.push_back(
        run_split(ds, spec, plan.train_rows(f), plan.test_rows(f), "Experiment " + std::to_string(f + 1)));
  }
  finish(report);
  return report;
}

ExperimentReport random_split_experiment(const Dataset& ds, const ModelingSpec& spec, double train_fraction,
                                         std::size_t repetitions, std::uint64_t seed) {
  if (repetitions == 0) throw ConfigError("random split: repetitions must be positive");
  ExperimentReport report;
  report.kind = "random_split";
  report.train_fraction = train_fraction;
  report.seed = seed;
  for (std::size_t i = 0; i < repetitions; ++i) {
    const auto plan = random_split(ds.row_count(), train_fraction, numerics::Prng::derive_seed(seed, i));
    report.rows.push_back(run_split(ds, spec, plan.train, plan.test, "Experiment " + std::to_string(i + 1)));
  }
  finish(report);
  return report;
}

ExperimentReport resubstitution(const Dataset& ds, const ModelingSpec& spec) {
  std::vector<std::size_t> all(ds.row_count());
  std::iota(all.begin(), all.end(), 0);
  ExperimentReport report;
  report.kind = "resubstitution";
  report.rows.push_back(run_split(ds, spec, all, all, "All data"));
  finish(report);
  return report;
}

namespace {

nlohmann::json pred_json(const std::map<double, double>& pred) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [m, v] : pred) j[detail::format_double(m)] = v;
  return j;
}

}  // namespace

nlohmann::json to_json(const ExperimentReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : report.rows) {
    nlohmann::json j{{"label", row.label},
                     {"n_train", row.n_train},
                     {"n_test", row.n_test},
                     {"test_rows", row.test_rows},
                     {"regression_mmre", row.baseline_mmre},
                     {"recalibrated_mmre", row.recalibrated_mmre},
                     {"improvement_percent", row.improvement}};
    if (row.baseline_pred) {
      j["regression_pred"] = pred_json(*row.baseline_pred);
      j["recalibrated_pred"] = pred_json(*row.recalibrated_pred);
    }
    rows.push_back(std::move(j));
  }
  nlohmann::json j{{"kind", report.kind}, {"seed", report.seed}, {"rows", std::move(rows)}};
  if (report.kind == "cross_validation") j["folds"] = report.folds;
  if (report.kind == "random_split") j["train_fraction"] = report.train_fraction;
  j["average"] = {{"regression_mmre", report.average_baseline_mmre},
                  {"recalibrated_mmre", report.average_recalibrated_mmre},
                  {"improvement_percent", report.average_improvement}};
  return j;
}

std::string render_report(const ExperimentReport& report) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "%-14s %18s %18s %12s\n", "", "Regression (MMRE)", "Recalibrated (MMRE)",
                "Improvement");
  out << line;
  const auto emit = [&](const std::string& label, double b, double r, double i) {
    std::snprintf(line, sizeof line, "%-14s %18.4f %18.4f %11.2f%%\n", label.c_str(), b, r, i);
    out << line;
  };
  for (const auto& row : report.rows) emit(row.label, row.baseline_mmre, row.recalibrated_mmre, row.improvement);
  emit("Average", report.average_baseline_mmre, report.average_recalibrated_mmre, report.average_improvement);
  return out.str();
}

}  // namespace sqem
