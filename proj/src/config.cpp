#include "sqem/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>

#include "sqem/error.hpp"

namespace sqem {
namespace {

using nlohmann::json;

void only_keys(const json& j, std::string_view where, std::initializer_list<std::string_view> keys) {
  if (!j.is_object()) throw ConfigError(std::string(where) + " must be an object");
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (auto k : keys) ok = ok || k == key;
    if (!ok) throw ConfigError(std::string(where) + ": unknown key '" + key + "'");
  }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback, std::string_view where) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string(where) + "." + key + " has the wrong type");
  }
}

FilterRule parse_filter(const json& j) {
  only_keys(j, "filters[]", {"variable", "in_set", "non_missing", "range"});
  FilterRule rule;
  rule.variable = get_or<std::string>(j, "variable", "", "filters[]");
  if (rule.variable.empty()) throw ConfigError("filters[]: 'variable' is required");
  const int kinds = static_cast<int>(j.contains("in_set")) + static_cast<int>(j.contains("non_missing")) +
                    static_cast<int>(j.contains("range"));
  if (kinds != 1) throw ConfigError("filters[] for '" + rule.variable + "' needs exactly one of in_set, non_missing, range");
  if (j.contains("in_set")) {
    rule.predicate = InSet{get_or<std::vector<std::string>>(j, "in_set", {}, "filters[]")};
  } else if (j.contains("non_missing")) {
    rule.predicate = NonMissing{};
  } else {
    const auto r = get_or<std::vector<double>>(j, "range", {}, "filters[]");
    if (r.size() != 2 || !(r[0] <= r[1])) throw ConfigError("filters[].range must be [lo, hi] with lo <= hi");
    rule.predicate = Range{r[0], r[1]};
  }
  return rule;
}

struct Names {
  std::set<std::string, std::less<>> all;
  std::string response;

  void require(const std::string& name, std::string_view where) const {
    if (!all.count(name)) throw ConfigError(std::string(where) + " references unknown variable '" + name + "'");
  }
  void require_predictor(const std::string& name, std::string_view where) const {
    require(name, where);
    if (name == response) throw ConfigError(std::string(where) + " lists the response '" + name + "'");
  }
};

}  // namespace

std::string_view to_string(FitMethod method) {
  switch (method) {
    case FitMethod::ols: return "ols";
    case FitMethod::stepwise: return "stepwise";
    case FitMethod::catreg: return "catreg";
  }
  return "stepwise";
}

PipelineConfig parse_config(const json& j, const std::filesystem::path& base_dir) {
  only_keys(j, "config",
            {"data", "schema", "filters", "screening", "tree", "regression", "recalibration", "evaluation", "seed",
             "output_dir", "description"});
  PipelineConfig c;
  c.source = j;

  if (!j.contains("data")) throw ConfigError("config: 'data' is required");
  const auto& data = j.at("data");
  only_keys(data, "data", {"source", "synthetic"});
  const auto source = get_or<std::string>(data, "source", "", "data");
  if (source.empty()) throw ConfigError("data.source is required (a CSV path or \"synthetic\")");
  if (source == "synthetic") {
    c.data.synthetic = true;
    if (data.contains("synthetic")) c.data.generator = synthetic_config_from_json(data.at("synthetic"));
  } else {
    if (data.contains("synthetic")) throw ConfigError("data.synthetic is only valid with source \"synthetic\"");
    std::filesystem::path p(source);
    c.data.path = p.is_absolute() || base_dir.empty() ? p : base_dir / p;
  }

  if (j.contains("schema")) {
    if (!j.at("schema").is_array()) throw ConfigError("schema must be an array");
    for (const auto& v : j.at("schema")) c.schema.push_back(variable_spec_from_json(v));
  } else if (c.data.synthetic) {
    c.schema = synthetic_schema();
  } else {
    throw ConfigError("schema is required for CSV data");
  }
  validate_schema(c.schema, true);

  Names names;
  for (const auto& v : c.schema) {
    names.all.insert(v.name);
    if (v.role == Role::response) names.response = v.name;
  }

  if (j.contains("filters")) {
    if (!j.at("filters").is_array()) throw ConfigError("filters must be an array");
    for (const auto& f : j.at("filters")) {
      c.filters.push_back(parse_filter(f));
      names.require(c.filters.back().variable, "filters");
    }
  }

  std::vector<std::string> default_predictors;
  for (const auto& v : c.schema) {
    if (v.role == Role::predictor) default_predictors.push_back(v.name);
  }

  const json empty = json::object();
  const auto& reg = j.contains("regression") ? j.at("regression") : empty;
  only_keys(reg, "regression", {"candidates", "p_enter", "p_remove", "method", "scaling"});
  c.regression.candidates = get_or(reg, "candidates", default_predictors, "regression");
  c.regression.p_enter = get_or(reg, "p_enter", c.regression.p_enter, "regression");
  c.regression.p_remove = get_or(reg, "p_remove", c.regression.p_remove, "regression");
  const auto method = get_or<std::string>(reg, "method", "stepwise", "regression");
  if (method == "ols") {
    c.regression.method = FitMethod::ols;
  } else if (method == "stepwise") {
    c.regression.method = FitMethod::stepwise;
  } else if (method == "catreg") {
    c.regression.method = FitMethod::catreg;
  } else {
    throw ConfigError("regression.method must be ols, stepwise or catreg, got '" + method + "'");
  }
  if (!(c.regression.p_enter > 0.0 && c.regression.p_enter <= c.regression.p_remove && c.regression.p_remove < 1.0)) {
    throw ConfigError("regression: need 0 < p_enter <= p_remove < 1");
  }
  if (reg.contains("scaling")) {
    for (const auto& [name, level] : reg.at("scaling").items()) {
      names.require(name, "regression.scaling");
      try {
        c.regression.scaling[name] = parse_scaling_level(level.get<std::string>());
      } catch (const json::exception&) {
        throw ConfigError("regression.scaling." + name + " must be a string");
      }
    }
  }
  if (c.regression.candidates.empty()) throw ConfigError("regression.candidates is empty");
  for (const auto& v : c.regression.candidates) names.require_predictor(v, "regression.candidates");

  const auto& scr = j.contains("screening") ? j.at("screening") : empty;
  only_keys(scr, "screening", {"alpha", "correlation", "anova", "tukey", "predictor_pairs", "qq", "merges"});
  c.screening.alpha = get_or(scr, "alpha", c.screening.alpha, "screening");
  if (!(c.screening.alpha > 0.0 && c.screening.alpha < 1.0)) throw ConfigError("screening.alpha must lie in (0, 1)");
  c.screening.correlation = get_or(scr, "correlation", std::vector<std::string>{}, "screening");
  c.screening.anova = get_or(scr, "anova", std::vector<std::string>{}, "screening");
  c.screening.tukey = get_or(scr, "tukey", std::vector<std::string>{}, "screening");
  c.screening.qq = get_or(scr, "qq", std::vector<std::string>{}, "screening");
  for (const auto& pair : get_or(scr, "predictor_pairs", std::vector<std::vector<std::string>>{}, "screening")) {
    if (pair.size() != 2) throw ConfigError("screening.predictor_pairs entries must name two variables");
    names.require(pair[0], "screening.predictor_pairs");
    names.require(pair[1], "screening.predictor_pairs");
    c.screening.predictor_pairs.emplace_back(pair[0], pair[1]);
  }
  for (const auto* list : {&c.screening.correlation, &c.screening.anova, &c.screening.tukey}) {
    for (const auto& v : *list) names.require_predictor(v, "screening");
  }
  for (const auto& v : c.screening.qq) names.require(v, "screening.qq");
  if (scr.contains("merges")) {
    if (!scr.at("merges").is_object()) throw ConfigError("screening.merges must be an object");
    for (const auto& [name, groups] : scr.at("merges").items()) {
      names.require(name, "screening.merges");
      try {
        c.screening.merges[name] = groups.get<std::vector<std::vector<std::string>>>();
      } catch (const json::exception&) {
        throw ConfigError("screening.merges." + name + " must be a list of label lists");
      }
    }
  }

  const auto& tree = j.contains("tree") ? j.at("tree") : empty;
  only_keys(tree, "tree", {"enabled", "predictors", "min_leaf_size", "sd_stop_fraction"});
  c.tree.enabled = get_or(tree, "enabled", true, "tree");
  c.tree.predictors = get_or(tree, "predictors", c.regression.candidates, "tree");
  for (const auto& v : c.tree.predictors) names.require_predictor(v, "tree.predictors");
  if (tree.contains("min_leaf_size") && !tree.at("min_leaf_size").is_null()) {
    const auto m = get_or<long long>(tree, "min_leaf_size", 0, "tree");
    if (m < 1) throw ConfigError("tree.min_leaf_size must be >= 1");
    c.tree.params.min_leaf_size = static_cast<std::size_t>(m);
  }
  c.tree.params.sd_stop_fraction = get_or(tree, "sd_stop_fraction", c.tree.params.sd_stop_fraction, "tree");
  if (!(c.tree.params.sd_stop_fraction >= 0.0)) throw ConfigError("tree.sd_stop_fraction must be >= 0");

  const auto& rec = j.contains("recalibration") ? j.at("recalibration") : empty;
  only_keys(rec, "recalibration", {"variables", "learning_rate", "max_epochs", "tolerance", "rate_halving"});
  c.recalibration.variables = get_or(rec, "variables", std::vector<std::string>{}, "recalibration");
  for (const auto& v : c.recalibration.variables) names.require_predictor(v, "recalibration.variables");
  auto& t = c.recalibration.training;
  t.learning_rate = get_or(rec, "learning_rate", t.learning_rate, "recalibration");
  const auto epochs = get_or<long long>(rec, "max_epochs", static_cast<long long>(t.max_epochs), "recalibration");
  t.tolerance = get_or(rec, "tolerance", t.tolerance, "recalibration");
  t.rate_halving = get_or(rec, "rate_halving", t.rate_halving, "recalibration");
  if (!(t.learning_rate > 0.0)) throw ConfigError("recalibration.learning_rate must be positive");
  if (epochs < 1) throw ConfigError("recalibration.max_epochs must be positive");
  t.max_epochs = static_cast<std::size_t>(epochs);
  if (!(t.tolerance > 0.0)) throw ConfigError("recalibration.tolerance must be positive");

  const auto& ev = j.contains("evaluation") ? j.at("evaluation") : empty;
  only_keys(ev, "evaluation", {"folds", "fractions", "repetitions", "pred_levels", "min_pred_fold", "resubstitution"});
  auto& e = c.evaluation;
  e.folds = get_or(ev, "folds", e.folds, "evaluation");
  e.fractions = get_or(ev, "fractions", e.fractions, "evaluation");
  e.repetitions = get_or(ev, "repetitions", e.repetitions, "evaluation");
  e.pred_levels = get_or(ev, "pred_levels", e.pred_levels, "evaluation");
  e.min_pred_fold = get_or(ev, "min_pred_fold", e.min_pred_fold, "evaluation");
  e.resubstitution = get_or(ev, "resubstitution", e.resubstitution, "evaluation");
  for (auto k : e.folds) {
    if (k < 2) throw ConfigError("evaluation.folds entries must be >= 2");
  }
  for (double f : e.fractions) {
    if (!(f > 0.0 && f < 1.0)) throw ConfigError("evaluation.fractions entries must lie in (0, 1)");
  }
  if (!e.fractions.empty() && e.repetitions == 0) throw ConfigError("evaluation.repetitions must be positive");
  for (double m : e.pred_levels) {
    if (!(m >= 0.0)) throw ConfigError("evaluation.pred_levels entries must be >= 0");
  }

  if (j.contains("seed")) {
    const auto& seed = j.at("seed");
    if (!seed.is_number_integer() || (!seed.is_number_unsigned() && seed.get<std::int64_t>() < 0))
      throw ConfigError("seed must be a nonnegative integer");
    c.seed = j.at("seed").get<std::uint64_t>();
  }
  c.output_dir = get_or(j, "output_dir", c.output_dir, "config");
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return parse_config(j, path.parent_path());
}

std::string config_hash(const json& j) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : j.dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

bool needs_seed(const PipelineConfig& c) {
  return c.data.synthetic || !c.evaluation.folds.empty() || !c.evaluation.fractions.empty();
}

}  // namespace sqem
