#include "sqem/recalibration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "detail.hpp"
#include "sqem/error.hpp"
#include "sqem/transform.hpp"

namespace sqem {

std::vector<double> Nfa::firing(double x) const {
  const std::size_t k = anchors.size();
  std::vector<double> w(k, 0.0);
  if (k == 1) {
    w[0] = 1.0;
    return w;
  }
  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    w[i] = std::max(0.0, 1.0 - std::fabs(x - centers[i]) / (2.0 * widths[i]));
    total += w[i];
  }
  if (total > 0.0) {
    for (auto& v : w) v /= total;
    return w;
  }
  // Outside every support: the nearest centre(s) take the full weight.
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < k; ++i) best = std::min(best, std::fabs(x - centers[i]));
  std::size_t ties = 0;
  for (std::size_t i = 0; i < k; ++i) ties += std::fabs(x - centers[i]) == best ? 1 : 0;
  for (std::size_t i = 0; i < k; ++i) w[i] = std::fabs(x - centers[i]) == best ? 1.0 / static_cast<double>(ties) : 0.0;
  return w;
}

double Nfa::eval(double x) const {
  const auto w = firing(x);
  double out = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) out += w[i] * consequents[i];
  return out;
}

Quantification Nfa::to_quantification() const {
  Quantification q = source;
  for (auto& v : q.values) v = eval(v);
  return q;
}

Nfa init_nfa(const Quantification& quantification) {
  if (quantification.labels.empty() || quantification.labels.size() != quantification.values.size()) {
    throw ConfigError("init_nfa: empty or inconsistent quantification for '" + quantification.variable + "'");
  }
  Nfa nfa;
  nfa.variable = quantification.variable;
  nfa.source = quantification;
  nfa.anchors = quantification.values;
  std::sort(nfa.anchors.begin(), nfa.anchors.end());
  nfa.anchors.erase(std::unique(nfa.anchors.begin(), nfa.anchors.end()), nfa.anchors.end());
  nfa.centers = nfa.anchors;
  const std::size_t k = nfa.anchors.size();
  nfa.widths.assign(k, 1.0);
  if (k > 1) {
    for (std::size_t i = 0; i < k; ++i) {
      double gap = std::numeric_limits<double>::infinity();
      if (i > 0) gap = std::min(gap, nfa.anchors[i] - nfa.anchors[i - 1]);
      if (i + 1 < k) gap = std::min(gap, nfa.anchors[i + 1] - nfa.anchors[i]);
      nfa.widths[i] = 0.5 * gap;
    }
  }
  nfa.consequents = nfa.anchors;
  return nfa;
}

double nfa_eval(const Nfa& nfa, double value) { return nfa.eval(value); }

Quantification distinct_value_quantification(const Dataset& ds, const std::string& variable) {
  const auto col = ds.numeric_column(variable);
  std::vector<double> values = col.present();
  if (values.empty()) throw DataError("no observed values for '" + variable + "'");
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  Quantification q;
  q.variable = variable;
  q.level = ScalingLevel::ordinal;
  for (double v : values) {
    q.labels.push_back(detail::format_double(v));
    q.values.push_back(v);
  }
  return q;
}

namespace {

// Per-row pieces that stay fixed while consequents are trained.
struct Problem {
  std::vector<double> target;      // ln-scale response
  std::vector<double> fixed_part;  // intercept + terms without an NFA
  struct Routed {
    std::size_t nfa;
    double coefficient;
    std::vector<std::vector<double>> firing;  // per row
  };
  std::vector<Routed> routed;
};

Problem build_problem(const LinearModel& model, std::span<const Nfa> nfas, const Dataset& ds,
                      const QuantificationSet& quantifications) {
  std::vector<std::string> vars{model.response};
  for (const auto& t : model.terms) vars.push_back(t.variable);
  const Dataset complete = listwise_complete(ds, vars);
  const std::size_t n = complete.row_count();

  std::map<std::string, std::size_t, std::less<>> nfa_of;
  for (std::size_t i = 0; i < nfas.size(); ++i) {
    if (!model.term(nfas[i].variable)) {
      throw ConfigError("NFA for '" + nfas[i].variable + "' does not match any model term");
    }
    if (!nfa_of.emplace(nfas[i].variable, i).second) {
      throw ConfigError("more than one NFA for '" + nfas[i].variable + "'");
    }
  }

  Problem p;
  p.target = encoded_column(complete, model.response, {});
  p.fixed_part.assign(n, model.intercept);
  const auto effective = effective_quantifications(complete, model.variables(), quantifications);
  for (const auto& t : model.terms) {
    const auto& spec = complete.spec(t.variable);
    const auto it = nfa_of.find(t.variable);
    if (it == nfa_of.end() && spec.is_categorical()) {
      throw ConfigError("categorical model term '" + t.variable + "' has no NFA");
    }
    const auto x = encoded_column(complete, t.variable, effective);
    if (it == nfa_of.end()) {
      for (std::size_t r = 0; r < n; ++r) p.fixed_part[r] += t.coefficient * x[r];
      continue;
    }
    Problem::Routed routed{it->second, t.coefficient, {}};
    routed.firing.reserve(n);
    for (std::size_t r = 0; r < n; ++r) routed.firing.push_back(nfas[it->second].firing(x[r]));
    p.routed.push_back(std::move(routed));
  }
  return p;
}

std::vector<double> predictions(const Problem& p, std::span<const Nfa> nfas) {
  std::vector<double> out = p.fixed_part;
  for (const auto& routed : p.routed) {
    const auto& q = nfas[routed.nfa].consequents;
    for (std::size_t r = 0; r < out.size(); ++r) {
      double v = 0.0;
      for (std::size_t k = 0; k < q.size(); ++k) v += routed.firing[r][k] * q[k];
      out[r] += routed.coefficient * v;
    }
  }
  return out;
}

double mse(const Problem& p, std::span<const Nfa> nfas) {
  const auto pred = predictions(p, nfas);
  if (pred.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t r = 0; r < pred.size(); ++r) s += (p.target[r] - pred[r]) * (p.target[r] - pred[r]);
  return s / static_cast<double>(pred.size());
}

std::vector<std::vector<double>> gradient(const Problem& p, std::span<const Nfa> nfas) {
  std::vector<std::vector<double>> g(nfas.size());
  for (std::size_t i = 0; i < nfas.size(); ++i) g[i].assign(nfas[i].size(), 0.0);
  const auto pred = predictions(p, nfas);
  const double n = static_cast<double>(pred.size());
  if (pred.empty()) return g;
  for (const auto& routed : p.routed) {
    auto& gi = g[routed.nfa];
    for (std::size_t r = 0; r < pred.size(); ++r) {
      const double scale = -2.0 / n * (p.target[r] - pred[r]) * routed.coefficient;
      for (std::size_t k = 0; k < gi.size(); ++k) gi[k] += scale * routed.firing[r][k];
    }
  }
  return g;
}

double max_abs(const std::vector<std::vector<double>>& g) {
  double m = 0.0;
  for (const auto& v : g) {
    for (double x : v) m = std::max(m, std::fabs(x));
  }
  return m;
}

}  // namespace

double recalibration_loss(const LinearModel& model, std::span<const Nfa> nfas, const Dataset& ds,
                          const QuantificationSet& quantifications) {
  return mse(build_problem(model, nfas, ds, quantifications), nfas);
}

std::vector<std::vector<double>> recalibration_gradient(const LinearModel& model, std::span<const Nfa> nfas,
                                                        const Dataset& ds,
                                                        const QuantificationSet& quantifications) {
  return gradient(build_problem(model, nfas, ds, quantifications), nfas);
}

RecalibrationResult train_recalibration(const LinearModel& model, std::vector<Nfa> nfas, const Dataset& ds,
                                        const QuantificationSet& quantifications,
                                        const RecalibrationConfig& config) {
  if (!(config.learning_rate > 0.0)) throw ConfigError("recalibration: learning rate must be positive");
  if (!(config.tolerance > 0.0)) throw ConfigError("recalibration: tolerance must be positive");
  if (config.max_epochs == 0) throw ConfigError("recalibration: max_epochs must be positive");
  const Problem problem = build_problem(model, nfas, ds, quantifications);

  RecalibrationResult result;
  TrainingTrace& trace = result.trace;
  double rate = config.learning_rate;
  double current = mse(problem, nfas);
  auto grad = gradient(problem, nfas);
  trace.initial_gradient_norm = 0.0;
  for (const auto& v : grad) {
    for (double x : v) trace.initial_gradient_norm += x * x;
  }
  trace.initial_gradient_norm = std::sqrt(trace.initial_gradient_norm);
  trace.epoch_mse.push_back(current);

  constexpr double kGradientFloor = 1e-14;
  constexpr int kMaxHalvings = 60;
  while (trace.epochs < config.max_epochs) {
    if (current == 0.0 || max_abs(grad) < kGradientFloor) {
      trace.converged = true;
      break;
    }
    std::vector<Nfa> trial = nfas;
    double next = 0.0;
    int halvings = 0;
    while (true) {
      for (std::size_t i = 0; i < trial.size(); ++i) {
        for (std::size_t k = 0; k < trial[i].size(); ++k) {
          trial[i].consequents[k] = nfas[i].consequents[k] - rate * grad[i][k];
        }
      }
      next = mse(problem, trial);
      if (!config.rate_halving || next <= current) break;
      if (++halvings > kMaxHalvings) break;
      rate *= 0.5;
    }
    if (config.rate_halving && next > current) {
      // No descent step exists at representable rates.
      trace.converged = true;
      break;
    }
    nfas = std::move(trial);
    ++trace.epochs;
    trace.learning_rates.push_back(rate);
    const double change = std::fabs(current - next) / std::max(current, 1e-300);
    current = next;
    trace.epoch_mse.push_back(current);
    grad = gradient(problem, nfas);
    if (change < config.tolerance) {
      trace.converged = true;
      break;
    }
  }
  for (auto& nfa : nfas) nfa.trained = true;
  result.nfas = std::move(nfas);
  return result;
}

double recalibrated_predict(const LinearModel& model, std::span<const Nfa> nfas,
                            const QuantificationSet& quantifications, const Row& row, bool back_transform) {
  double value = model.intercept;
  for (const auto& t : model.terms) {
    const auto it = row.find(t.variable);
    if (it == row.end()) throw ConfigError("row lacks model variable '" + t.variable + "'");
    double x = 0.0;
    if (const auto* label = std::get_if<std::string>(&it->second)) {
      const auto* q = find_quantification(quantifications, t.variable);
      if (!q) throw ConfigError("no quantification for categorical variable '" + t.variable + "'");
      const auto v = q->value_of(*label);
      if (!v) throw ConfigError("no quantification for category '" + *label + "' of '" + t.variable + "'");
      x = *v;
    } else {
      x = std::get<double>(it->second);
    }
    const auto nfa = std::find_if(nfas.begin(), nfas.end(), [&](const Nfa& f) { return f.variable == t.variable; });
    if (nfa != nfas.end()) x = nfa->eval(x);
    value += t.coefficient * x;
  }
  return back_transform ? inverse_transform(value, model.response_transform) : value;
}

nlohmann::json to_json(const Nfa& nfa) {
  return {{"variable", nfa.variable},
          {"anchors", nfa.anchors},
          {"centers", nfa.centers},
          {"widths", nfa.widths},
          {"consequents", nfa.consequents},
          {"trained", nfa.trained},
          {"membership", "triangular"}};
}

nlohmann::json to_json(const TrainingTrace& trace) {
  return {{"epochs", trace.epochs},
          {"converged", trace.converged},
          {"initial_gradient_norm", trace.initial_gradient_norm},
          {"initial_mse", trace.epoch_mse.front()},
          {"final_mse", trace.epoch_mse.back()},
          {"final_learning_rate", trace.learning_rates.empty() ? 0.0 : trace.learning_rates.back()}};
}

}  // namespace sqem
