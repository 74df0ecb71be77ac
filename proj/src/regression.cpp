#include "sqem/regression.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "detail.hpp"
#include "sqem/error.hpp"
#include "sqem/numerics.hpp"
#include "sqem/transform.hpp"

namespace sqem {

std::string_view to_string(ScalingLevel level) {
  return level == ScalingLevel::ordinal ? "ordinal" : "nominal";
}

ScalingLevel parse_scaling_level(std::string_view text) {
  if (text == "nominal") return ScalingLevel::nominal;
  if (text == "ordinal") return ScalingLevel::ordinal;
  throw ConfigError("unknown scaling level '" + std::string(text) + "'");
}

std::optional<double> Quantification::value_of(std::string_view label) const {
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == label) return values[i];
  }
  return std::nullopt;
}

const Quantification* find_quantification(const QuantificationSet& set, std::string_view variable) {
  for (const auto& q : set) {
    if (q.variable == variable) return &q;
  }
  return nullptr;
}

Quantification binary_coding(const VariableSpec& spec) {
  if (spec.kind != Kind::binary) throw ConfigError("binary_coding: '" + spec.name + "' is not binary");
  return Quantification{spec.name, spec.categories, {0.0, 1.0}, ScalingLevel::nominal};
}

QuantificationSet effective_quantifications(const Dataset& ds, std::span<const std::string> variables,
                                            const QuantificationSet& base) {
  QuantificationSet out = base;
  for (const auto& v : variables) {
    const auto& spec = ds.spec(v);
    if (spec.kind == Kind::binary && !find_quantification(out, v)) out.push_back(binary_coding(spec));
  }
  return out;
}

double encode_cell(const VariableSpec& spec, const CellValue& cell, const QuantificationSet& quantifications) {
  if (!spec.is_categorical()) {
    if (const auto* v = std::get_if<double>(&cell)) return *v;
    throw ConfigError("variable '" + spec.name + "' expects a numeric value");
  }
  const auto* label = std::get_if<std::string>(&cell);
  if (!label) throw ConfigError("variable '" + spec.name + "' expects a category label");
  if (const auto* q = find_quantification(quantifications, spec.name)) {
    if (auto v = q->value_of(*label)) return *v;
    throw ConfigError("no quantification for category '" + *label + "' of '" + spec.name + "'");
  }
  if (spec.kind == Kind::binary) {
    const auto idx = spec.category_index(*label);
    if (!idx) throw ConfigError("unknown category '" + *label + "' of '" + spec.name + "'");
    return static_cast<double>(*idx);
  }
  throw ConfigError("categorical variable '" + spec.name + "' needs a quantification");
}

std::vector<double> encoded_column(const Dataset& ds, std::string_view variable,
                                   const QuantificationSet& quantifications) {
  const auto c = ds.column_index(variable);
  const auto& spec = ds.spec(c);
  std::vector<double> out(ds.row_count());
  const Quantification* q = spec.is_categorical() ? find_quantification(quantifications, spec.name) : nullptr;
  if (spec.is_categorical() && !q && spec.kind != Kind::binary) {
    throw ConfigError("categorical variable '" + spec.name + "' needs a quantification");
  }
  std::vector<double> lookup;
  if (spec.is_categorical()) {
    lookup.resize(spec.categories.size());
    for (std::size_t k = 0; k < spec.categories.size(); ++k) {
      if (!q) {
        lookup[k] = static_cast<double>(k);
      } else if (auto v = q->value_of(spec.categories[k])) {
        lookup[k] = *v;
      } else {
        lookup[k] = std::nan("");
      }
    }
  }
  for (std::size_t r = 0; r < ds.row_count(); ++r) {
    if (ds.is_missing(c, r)) {
      throw DataError("missing value for '" + spec.name + "' at row " + std::to_string(r + 1));
    }
    if (!spec.is_categorical()) {
      out[r] = ds.value(c, r);
      continue;
    }
    out[r] = lookup[ds.category(c, r)];
    if (std::isnan(out[r])) {
      throw ConfigError("no quantification for category '" + ds.label(c, r) + "' of '" + spec.name + "'");
    }
  }
  return out;
}

const ModelTerm* LinearModel::term(std::string_view variable) const {
  for (const auto& t : terms) {
    if (t.variable == variable) return &t;
  }
  return nullptr;
}

std::vector<std::string> LinearModel::variables() const {
  std::vector<std::string> out;
  for (const auto& t : terms) out.push_back(t.variable);
  return out;
}

namespace {

double two_sided_p(double t, double df) {
  if (std::isnan(t)) return 1.0;
  if (std::isinf(t)) return 0.0;
  return std::clamp(2.0 * (1.0 - numerics::t_cdf(std::fabs(t), df)), 0.0, 1.0);
}

std::vector<std::string> with_response(const std::string& response, std::span<const std::string> predictors) {
  std::vector<std::string> vars{response};
  vars.insert(vars.end(), predictors.begin(), predictors.end());
  return vars;
}

// OLS on already-encoded columns.
LinearModel fit_encoded(const Dataset& ds, const std::string& response, std::span<const std::string> predictors,
                        const std::vector<std::vector<double>>& columns, std::span<const double> y) {
  const std::size_t n = y.size();
  const std::size_t p = predictors.size();
  if (n <= p + 1) {
    throw DataError("ols: " + std::to_string(n) + " complete rows is too few for " + std::to_string(p) +
                    " predictors plus intercept");
  }
  Eigen::MatrixXd design(n, p + 1);
  Eigen::VectorXd target(n);
  for (std::size_t r = 0; r < n; ++r) {
    design(r, 0) = 1.0;
    for (std::size_t j = 0; j < p; ++j) design(r, j + 1) = columns[j][r];
    target(r) = y[r];
  }
  std::vector<std::string> names{"(intercept)"};
  names.insert(names.end(), predictors.begin(), predictors.end());
  const auto sol = numerics::solve_least_squares(design, target, names);

  LinearModel m;
  m.response = response;
  m.response_transform = ds.spec(response).transform;
  m.n = n;
  const double df = static_cast<double>(n - p - 1);
  const double sigma2 = sol.residual_sum_squares / df;
  const double sst = detail::centered_sum_squares(y);
  m.r_squared = sst > 0.0 ? std::clamp(1.0 - sol.residual_sum_squares / sst, 0.0, 1.0) : 0.0;
  m.residual_sd = std::sqrt(sigma2);
  const double sd_y = detail::sample_sd(y);

  m.intercept = sol.coefficients(0);
  m.intercept_std_error = std::sqrt(sigma2 * sol.unscaled_covariance(0, 0));
  m.intercept_p_value = two_sided_p(m.intercept / m.intercept_std_error, df);
  for (std::size_t j = 0; j < p; ++j) {
    ModelTerm t;
    t.variable = predictors[j];
    t.transform = ds.spec(predictors[j]).transform;
    t.coefficient = sol.coefficients(static_cast<Eigen::Index>(j + 1));
    const auto jj = static_cast<Eigen::Index>(j + 1);
    t.std_error = std::sqrt(sigma2 * sol.unscaled_covariance(jj, jj));
    t.t_value = t.coefficient / t.std_error;
    t.p_value = two_sided_p(t.t_value, df);
    t.standardized = sd_y > 0.0 ? t.coefficient * detail::sample_sd(columns[j]) / sd_y : 0.0;
    m.terms.push_back(std::move(t));
  }
  return m;
}

}  // namespace

LinearModel ols_fit(const Dataset& ds, const std::string& response, std::span<const std::string> predictors,
                    const QuantificationSet& quantifications) {
  std::set<std::string_view> seen;
  for (const auto& p : predictors) {
    if (p == response) throw ConfigError("ols: response '" + response + "' listed as a predictor");
    if (!seen.insert(p).second) throw ConfigError("ols: predictor '" + p + "' listed twice");
  }
  if (ds.spec(response).is_categorical()) throw ConfigError("ols: response '" + response + "' is not numeric");
  const auto vars = with_response(response, predictors);
  const Dataset complete = listwise_complete(ds, vars);
  std::vector<std::vector<double>> columns;
  for (const auto& p : predictors) columns.push_back(encoded_column(complete, p, quantifications));
  const auto y = encoded_column(complete, response, {});
  return fit_encoded(complete, response, predictors, columns, y);
}

StepwiseTrace stepwise_fit(const Dataset& ds, const std::string& response, std::span<const std::string> candidates,
                           double p_enter, double p_remove, const QuantificationSet& quantifications) {
  if (!(p_enter > 0.0 && p_enter <= p_remove && p_remove < 1.0)) {
    throw ConfigError("stepwise: need 0 < p_enter <= p_remove < 1");
  }
  // Fit on rows complete for every candidate so p-values are comparable across steps.
  const Dataset complete = listwise_complete(ds, with_response(response, candidates));

  StepwiseTrace trace;
  std::vector<std::string> included;
  const std::size_t cap = 2 * candidates.size();
  std::size_t iterations = 0;
  while (true) {
    bool acted = false;
    // Entry
    // Smallest p; underflowed p-values fall back to the larger |t|.
    std::optional<std::pair<std::string, double>> best;
    double best_t = 0.0;
    for (const auto& c : candidates) {
      if (std::find(included.begin(), included.end(), c) != included.end()) continue;
      auto trial = included;
      trial.push_back(c);
      try {
        const auto m = ols_fit(complete, response, trial, quantifications);
        const double p = m.term(c)->p_value;
        const double t = std::fabs(m.term(c)->t_value);
        if (!best || p < best->second || (p == best->second && t > best_t)) {
          best = std::make_pair(c, p);
          best_t = t;
        }
      } catch (const NumericalError&) {
      } catch (const DataError&) {
      }
    }
    if (best && best->second < p_enter) {
      if (iterations == cap) {
        trace.hit_iteration_cap = true;
        break;
      }
      included.push_back(best->first);
      trace.steps.push_back({StepwiseStep::Action::enter, best->first, best->second});
      ++iterations;
      acted = true;
    }
    // Removal
    if (!included.empty()) {
      const auto m = ols_fit(complete, response, included, quantifications);
      const ModelTerm* worst = nullptr;
      for (const auto& t : m.terms) {
        if (!worst || t.p_value > worst->p_value) worst = &t;
      }
      if (worst && worst->p_value > p_remove) {
        if (iterations == cap) {
          trace.hit_iteration_cap = true;
          break;
        }
        const std::string name = worst->variable;
        trace.steps.push_back({StepwiseStep::Action::remove, name, worst->p_value});
        included.erase(std::find(included.begin(), included.end(), name));
        ++iterations;
        acted = true;
      }
    }
    if (!acted) break;
  }
  // Keep final terms in candidate order.
  std::vector<std::string> ordered;
  for (const auto& c : candidates) {
    if (std::find(included.begin(), included.end(), c) != included.end()) ordered.push_back(c);
  }
  trace.final_model = ols_fit(complete, response, ordered, quantifications);
  return trace;
}

std::vector<double> isotonic_regression(std::span<const double> values, std::span<const double> weights) {
  if (values.size() != weights.size()) throw ConfigError("isotonic_regression: size mismatch");
  struct Block {
    double value;
    double weight;
    std::size_t count;
  };
  std::vector<Block> blocks;
  for (std::size_t i = 0; i < values.size(); ++i) {
    blocks.push_back({values[i], weights[i], 1});
    while (blocks.size() > 1 && blocks[blocks.size() - 2].value > blocks.back().value) {
      const Block b = blocks.back();
      blocks.pop_back();
      Block& a = blocks.back();
      const double w = a.weight + b.weight;
      a.value = w > 0.0 ? (a.value * a.weight + b.value * b.weight) / w : 0.5 * (a.value + b.value);
      a.weight = w;
      a.count += b.count;
    }
  }
  std::vector<double> out;
  for (const auto& b : blocks) out.insert(out.end(), b.count, b.value);
  return out;
}

namespace {

// Weighted standardization over rows: returns false when the values are constant.
bool standardize(std::vector<double>& q, std::span<const double> counts, double& mean, double& scale) {
  const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
  mean = 0.0;
  for (std::size_t c = 0; c < q.size(); ++c) mean += counts[c] * q[c];
  mean /= total;
  double ms = 0.0;
  for (std::size_t c = 0; c < q.size(); ++c) ms += counts[c] * (q[c] - mean) * (q[c] - mean);
  ms /= total;
  if (!(ms > 1e-24)) return false;
  scale = std::sqrt(ms);
  for (auto& v : q) v = (v - mean) / scale;
  return true;
}

}  // namespace

CatregResult catreg_fit(const Dataset& ds, const std::string& response, std::span<const std::string> predictors,
                        const std::map<std::string, ScalingLevel, std::less<>>& levels, const CatregOptions& options) {
  for (const auto& [name, _] : levels) {
    if (std::find(predictors.begin(), predictors.end(), name) == predictors.end()) {
      throw ConfigError("catreg: scaling level given for non-predictor '" + name + "'");
    }
  }
  const Dataset complete = listwise_complete(ds, with_response(response, predictors));
  const std::size_t n = complete.row_count();
  const auto y = encoded_column(complete, response, {});

  // Categorical predictors in schema order.
  std::vector<std::size_t> cat_positions;
  for (std::size_t j = 0; j < predictors.size(); ++j) {
    if (complete.spec(predictors[j]).is_categorical()) cat_positions.push_back(j);
  }
  std::sort(cat_positions.begin(), cat_positions.end(), [&](std::size_t a, std::size_t b) {
    return complete.column_index(predictors[a]) < complete.column_index(predictors[b]);
  });

  struct CatState {
    std::size_t position;
    std::size_t column;
    ScalingLevel level;
    std::vector<double> counts;
    std::vector<double> q;
  };
  std::vector<CatState> cats;
  for (auto j : cat_positions) {
    CatState st;
    st.position = j;
    st.column = complete.column_index(predictors[j]);
    const auto& spec = complete.spec(st.column);
    const auto it = levels.find(spec.name);
    st.level = it == levels.end() ? ScalingLevel::nominal : it->second;
    st.counts.assign(spec.categories.size(), 0.0);
    for (std::size_t r = 0; r < n; ++r) st.counts[complete.category(st.column, r)] += 1.0;
    for (std::size_t k = 0; k < st.counts.size(); ++k) {
      if (st.counts[k] == 0.0) {
        throw DataError("catreg: category '" + spec.categories[k] + "' of '" + spec.name + "' has no training rows");
      }
    }
    st.q.resize(spec.categories.size());
    std::iota(st.q.begin(), st.q.end(), 0.0);
    double m = 0.0, s = 1.0;
    standardize(st.q, st.counts, m, s);
    cats.push_back(std::move(st));
  }

  const auto current_quantifications = [&] {
    QuantificationSet set;
    for (const auto& st : cats) {
      const auto& spec = complete.spec(st.column);
      set.push_back({spec.name, spec.categories, st.q, st.level});
    }
    return set;
  };

  CatregResult result;
  std::vector<std::vector<double>> columns(predictors.size());
  for (std::size_t j = 0; j < predictors.size(); ++j) {
    if (!complete.spec(predictors[j]).is_categorical()) columns[j] = encoded_column(complete, predictors[j], {});
  }
  const auto refresh_categorical_columns = [&] {
    for (const auto& st : cats) {
      auto& col = columns[st.position];
      col.resize(n);
      for (std::size_t r = 0; r < n; ++r) col[r] = st.q[complete.category(st.column, r)];
    }
  };

  refresh_categorical_columns();
  LinearModel model = fit_encoded(complete, response, predictors, columns, y);
  result.r_squared_trace.push_back(model.r_squared);
  if (cats.empty()) {
    result.model = std::move(model);
    result.converged = true;
    return result;
  }

  while (result.iterations < options.max_iterations) {
    ++result.iterations;
    // Fitted values and residuals from the current model.
    std::vector<double> fitted(n, model.intercept);
    for (std::size_t j = 0; j < predictors.size(); ++j) {
      for (std::size_t r = 0; r < n; ++r) fitted[r] += model.terms[j].coefficient * columns[j][r];
    }
    std::vector<double> residual(n);
    for (std::size_t r = 0; r < n; ++r) residual[r] = y[r] - fitted[r];

    for (auto& st : cats) {
      double b = model.terms[st.position].coefficient;
      if (std::fabs(b) < 1e-14) continue;
      const std::size_t k = st.q.size();
      // Working target: residual plus this variable's own contribution.
      std::vector<double> sums(k, 0.0);
      for (std::size_t r = 0; r < n; ++r) {
        const auto c = complete.category(st.column, r);
        sums[c] += residual[r] + b * st.q[c];
      }
      std::vector<double> updated(k);
      for (std::size_t c = 0; c < k; ++c) updated[c] = sums[c] / st.counts[c] / b;
      if (st.level == ScalingLevel::ordinal) updated = isotonic_regression(updated, st.counts);

      std::vector<double> standardized = updated;
      double m = 0.0, s = 1.0;
      if (!standardize(standardized, st.counts, m, s)) continue;
      // Contribution b*updated = (b*s)*standardized + b*m; residuals follow the unstandardized update.
      for (std::size_t r = 0; r < n; ++r) {
        const auto c = complete.category(st.column, r);
        residual[r] += b * st.q[c] - b * updated[c];
      }
      st.q = std::move(standardized);
      model.terms[st.position].coefficient = b * s;
      model.intercept += b * m;
    }

    refresh_categorical_columns();
    const double previous = model.r_squared;
    model = fit_encoded(complete, response, predictors, columns, y);
    result.r_squared_trace.push_back(model.r_squared);
    if (model.r_squared - previous < options.tolerance) {
      result.converged = true;
      break;
    }
  }
  result.model = std::move(model);
  result.quantifications = current_quantifications();
  return result;
}

double model_predict(const LinearModel& model, const QuantificationSet& quantifications, const Row& row,
                     bool back_transform) {
  double value = model.intercept;
  for (const auto& t : model.terms) {
    const auto it = row.find(t.variable);
    if (it == row.end()) throw ConfigError("row lacks model variable '" + t.variable + "'");
    double x = 0.0;
    if (const auto* label = std::get_if<std::string>(&it->second)) {
      if (const auto* q = find_quantification(quantifications, t.variable)) {
        const auto v = q->value_of(*label);
        if (!v) throw ConfigError("no quantification for category '" + *label + "' of '" + t.variable + "'");
        x = *v;
      } else {
        throw ConfigError("no quantification for categorical variable '" + t.variable + "'");
      }
    } else {
      x = std::get<double>(it->second);
    }
    value += t.coefficient * x;
  }
  return back_transform ? inverse_transform(value, model.response_transform) : value;
}

std::string render_formula(const LinearModel& model, int decimals) {
  const auto wrap = [](const std::string& name, Transform t) {
    switch (t) {
      case Transform::ln: return "ln(" + name + ")";
      case Transform::ln1p: return "ln(1+" + name + ")";
      case Transform::none: break;
    }
    return name;
  };
  std::string out = wrap(model.response, model.response_transform) + " = " +
                    detail::format_fixed(model.intercept, decimals);
  for (const auto& t : model.terms) {
    const bool negative = t.coefficient < 0.0;
    out += negative ? " - " : " + ";
    out += detail::format_fixed(std::fabs(t.coefficient), decimals) + "*" + wrap(t.variable, t.transform);
  }
  return out;
}

nlohmann::json to_json(const LinearModel& model) {
  nlohmann::json terms = nlohmann::json::array();
  for (const auto& t : model.terms) {
    terms.push_back({{"variable", t.variable},
                     {"transform", to_string(t.transform)},
                     {"B", t.coefficient},
                     {"beta", t.standardized},
                     {"std_error", t.std_error},
                     {"t", t.t_value},
                     {"sig", t.p_value}});
  }
  return {{"response", model.response},
          {"response_transform", to_string(model.response_transform)},
          {"intercept", {{"B", model.intercept}, {"std_error", model.intercept_std_error}, {"sig", model.intercept_p_value}}},
          {"terms", std::move(terms)},
          {"r_squared", model.r_squared},
          {"residual_sd", model.residual_sd},
          {"n", model.n},
          {"formula", render_formula(model)}};
}

LinearModel linear_model_from_json(const nlohmann::json& j) {
  try {
    LinearModel m;
    m.response = j.at("response").get<std::string>();
    m.response_transform = parse_transform(j.at("response_transform").get<std::string>());
    m.intercept = j.at("intercept").at("B").get<double>();
    m.intercept_std_error = j.at("intercept").at("std_error").get<double>();
    m.intercept_p_value = j.at("intercept").at("sig").get<double>();
    for (const auto& t : j.at("terms")) {
      ModelTerm term;
      term.variable = t.at("variable").get<std::string>();
      term.transform = parse_transform(t.at("transform").get<std::string>());
      term.coefficient = t.at("B").get<double>();
      term.standardized = t.at("beta").get<double>();
      term.std_error = t.at("std_error").get<double>();
      term.t_value = t.at("t").is_number() ? t.at("t").get<double>() : 0.0;
      term.p_value = t.at("sig").get<double>();
      m.terms.push_back(std::move(term));
    }
    m.r_squared = j.at("r_squared").get<double>();
    m.residual_sd = j.at("residual_sd").get<double>();
    m.n = j.at("n").get<std::size_t>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid model JSON: ") + e.what());
  }
}

nlohmann::json to_json(const StepwiseTrace& trace) {
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& s : trace.steps) {
    steps.push_back({{"action", s.action == StepwiseStep::Action::enter ? "enter" : "remove"},
                     {"variable", s.variable},
                     {"p", s.p_value}});
  }
  return {{"steps", std::move(steps)},
          {"final", to_json(trace.final_model)},
          {"hit_iteration_cap", trace.hit_iteration_cap}};
}

nlohmann::json quantifications_to_json(const QuantificationSet& set) {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& q : set) {
    nlohmann::json m = nlohmann::json::object();
    for (std::size_t i = 0; i < q.labels.size(); ++i) m[q.labels[i]] = q.values[i];
    out[q.variable] = std::move(m);
  }
  return out;
}

QuantificationSet quantifications_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("quantifications JSON must be an object");
  QuantificationSet set;
  for (const auto& [var, mapping] : j.items()) {
    if (!mapping.is_object()) throw ConfigError("quantification for '" + var + "' must be an object");
    Quantification q;
    q.variable = var;
    for (const auto& [label, value] : mapping.items()) {
      if (!value.is_number()) throw ConfigError("quantification '" + var + "/" + label + "' is not a number");
      q.labels.push_back(label);
      q.values.push_back(value.get<double>());
    }
    set.push_back(std::move(q));
  }
  return set;
}

nlohmann::json to_json(const CatregResult& result) {
  return {{"model", to_json(result.model)},
          {"quantifications", quantifications_to_json(result.quantifications)},
          {"r_squared_trace", result.r_squared_trace},
          {"iterations", result.iterations},
          {"converged", result.converged}};
}

}  // namespace sqem
