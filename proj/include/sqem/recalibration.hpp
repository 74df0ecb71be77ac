#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "sqem/dataset.hpp"
#include "sqem/regression.hpp"

namespace sqem {

/// Neuro-fuzzy agency: a single-input, zero-order Sugeno ANFIS that maps a
/// qualitative variable's quantification to a recalibrated value.
///
/// One rule per category level. Rule k fires with a triangular membership
/// centred on anchor k that reaches 1/2 at distance width_k and zero at
/// 2*width_k. Firing strengths are normalized; the output is the weighted
/// sum of the consequents. Where every membership is zero (far outside the
/// anchors, or in a wide gap) the nearest anchor takes full weight, so the
/// normalized strengths always sum to one.
struct Nfa {
  std::string variable;
  /// The quantification the agency was built from (label -> input value).
  Quantification source;
  std::vector<double> anchors;       // initial quantifications, strictly increasing
  std::vector<double> centers;
  std::vector<double> widths;
  std::vector<double> consequents;
  bool trained = false;

  std::size_t size() const { return anchors.size(); }
  /// Normalized firing strengths at `x`; sums to 1.
  std::vector<double> firing(double x) const;
  double eval(double x) const;
  /// Recalibrated value of every source label.
  Quantification to_quantification() const;
};

/// Anchors at the distinct quantification values, widths of half the gap to
/// the nearest neighbour (1 for a single anchor), consequents equal to anchors.
Nfa init_nfa(const Quantification& quantification);

double nfa_eval(const Nfa& nfa, double value);

/// Quantification of a numeric variable treated as qualitative: one category
/// per distinct observed value, labelled by its shortest round-trip text.
Quantification distinct_value_quantification(const Dataset& ds, const std::string& variable);

struct RecalibrationConfig {
  double learning_rate = 0.01;
  std::size_t max_epochs = 1000;
  double tolerance = 1e-6;  // relative change of epoch MSE
  bool rate_halving = true;
};

struct TrainingTrace {
  std::vector<double> epoch_mse;  // MSE before each accepted step, then the final MSE
  std::vector<double> learning_rates;
  double initial_gradient_norm = 0.0;
  std::size_t epochs = 0;
  bool converged = false;
};

struct RecalibrationResult {
  std::vector<Nfa> nfas;
  TrainingTrace trace;
};

/// Batch gradient descent on the ln-scale MSE of the linear model with each
/// NFA variable routed through its agency. Only consequents move; membership
/// parameters stay at their initial values.
///
/// Every categorical model term needs an NFA; numeric terms may have one.
/// `quantifications` supplies the NFA inputs for categorical variables.
RecalibrationResult train_recalibration(const LinearModel& model, std::vector<Nfa> nfas,
                                        const Dataset& ds, const QuantificationSet& quantifications,
                                        const RecalibrationConfig& config = {});

/// MSE of the recalibrated ln-scale predictions on `ds`.
double recalibration_loss(const LinearModel& model, std::span<const Nfa> nfas, const Dataset& ds,
                          const QuantificationSet& quantifications);

/// Analytic gradient of recalibration_loss with respect to every consequent,
/// one vector per NFA.
std::vector<std::vector<double>> recalibration_gradient(const LinearModel& model, std::span<const Nfa> nfas,
                                                        const Dataset& ds,
                                                        const QuantificationSet& quantifications);

/// model_predict with each NFA variable replaced by nfa_eval of its input.
double recalibrated_predict(const LinearModel& model, std::span<const Nfa> nfas,
                            const QuantificationSet& quantifications, const Row& row, bool back_transform);

nlohmann::json to_json(const Nfa& nfa);
nlohmann::json to_json(const TrainingTrace& trace);

}  // namespace sqem
