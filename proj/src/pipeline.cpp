#include "sqem/pipeline.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "sqem/error.hpp"
#include "sqem/evaluation.hpp"
#include "sqem/modeltree.hpp"
#include "sqem/numerics.hpp"
#include "sqem/recalibration.hpp"
#include "sqem/regression.hpp"
#include "sqem/screening.hpp"
#include "sqem/synthetic.hpp"
#include "sqem/transform.hpp"

#ifndef SQEM_VERSION
#define SQEM_VERSION "0.0.0"
#endif

namespace sqem {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Seed streams; fixed so stages and the full pipeline draw the same numbers.
constexpr std::uint64_t kStreamSynthetic = 0;
constexpr std::uint64_t kStreamFolds = 100;
constexpr std::uint64_t kStreamSplits = 200;

template <typename F>
auto step(const char* name, F&& f) -> decltype(f()) {
  const std::string prefix = std::string(name) + ": ";
  try {
    return f();
  } catch (const ConfigError& e) {
    throw ConfigError(prefix + e.what());
  } catch (const DataError& e) {
    throw DataError(prefix + e.what());
  } catch (const NumericalError& e) {
    throw NumericalError(prefix + e.what());
  }
}

struct Context {
  const PipelineConfig& cfg;
  const RunOptions& opt;
  std::uint64_t seed = 0;
  fs::path out;
  json provenance;
  std::string response;
};

struct Loaded {
  Dataset raw;
  json source;
};

struct Prepared {
  Dataset filtered;   // raw units
  Dataset modeling;   // transformed, categories as loaded
  Dataset merged;     // transformed, configured merges applied
  json section;
  QQResult response_qq;
};

struct Fitted {
  FitMethod method = FitMethod::stepwise;
  LinearModel model;
  QuantificationSet quantifications;
};

Context make_context(const PipelineConfig& cfg, const RunOptions& opt, std::string_view stage) {
  Context ctx{cfg, opt, 0, resolve_output_dir(cfg, opt), {}, {}};
  const auto seed = opt.seed ? opt.seed : cfg.seed;
  if (!seed && needs_seed(cfg)) throw ConfigError("config: a seed is required (set \"seed\" or pass --seed)");
  ctx.seed = seed.value_or(0);
  for (const auto& v : cfg.schema) {
    if (v.role == Role::response) ctx.response = v.name;
  }
  ctx.provenance = {{"tool", "sqem"},
                    {"version", SQEM_VERSION},
                    {"config_hash", config_hash(cfg.source)},
                    {"seed", ctx.seed},
                    {"stage", stage}};
  return ctx;
}

Loaded load_data(Context& ctx) {
  return step("load", [&] {
    Loaded l{Dataset(ctx.cfg.schema), {}};
    if (ctx.opt.data_path) {
      l.raw = load_csv_file(ctx.opt.data_path->string(), ctx.cfg.schema);
      l.source = {{"kind", "csv"}, {"path", ctx.opt.data_path->string()}};
    } else if (ctx.cfg.data.synthetic) {
      auto s = generate_synthetic(ctx.cfg.data.generator, numerics::Prng::derive_seed(ctx.seed, kStreamSynthetic));
      if (s.data.schema() != ctx.cfg.schema) {
        // Allow a config schema that only re-declares roles/transforms of the generated columns.
        std::vector<std::vector<double>> cols;
        std::vector<std::vector<std::uint8_t>> miss;
        for (const auto& spec : ctx.cfg.schema) {
          const auto c = s.data.column_index(spec.name);
          if (s.data.spec(c).kind != spec.kind || (spec.is_categorical() && s.data.spec(c).categories != spec.categories)) {
            throw ConfigError("schema entry '" + spec.name + "' does not match the synthetic generator");
          }
          cols.emplace_back(s.data.values(c).begin(), s.data.values(c).end());
          miss.emplace_back(s.data.missing_mask(c).begin(), s.data.missing_mask(c).end());
        }
        s.data = Dataset(ctx.cfg.schema, std::move(cols), std::move(miss));
      }
      l.raw = std::move(s.data);
      l.source = {{"kind", "synthetic"}, {"generator", s.metadata}};
    } else {
      l.raw = load_csv_file(ctx.cfg.data.path.string(), ctx.cfg.schema);
      l.source = {{"kind", "csv"}, {"path", ctx.cfg.data.path.string()}};
    }
    ctx.provenance["data"] = l.source;
    return l;
  });
}

std::vector<std::string> referenced_variables(const Context& ctx) {
  std::vector<std::string> out{ctx.response};
  const auto add = [&](const std::vector<std::string>& names) {
    for (const auto& n : names) {
      if (std::find(out.begin(), out.end(), n) == out.end()) out.push_back(n);
    }
  };
  add(ctx.cfg.regression.candidates);
  if (ctx.cfg.tree.enabled) add(ctx.cfg.tree.predictors);
  add(ctx.cfg.recalibration.variables);
  return out;
}

Prepared prepare(Context& ctx, const Loaded& loaded) {
  return step("prepare", [&] {
    Prepared p{apply_filters(loaded.raw, ctx.cfg.filters), Dataset(ctx.cfg.schema), Dataset(ctx.cfg.schema), {}, {}};
    const auto vars = referenced_variables(ctx);
    const std::size_t after_filters = p.filtered.row_count();
    p.filtered = listwise_complete(p.filtered, vars);
    if (p.filtered.row_count() == 0) throw DataError("no rows left after filters and listwise deletion");
    p.modeling = apply_transforms(p.filtered);
    p.merged = p.modeling;
    for (const auto& [name, groups] : ctx.cfg.screening.merges) p.merged = merge_categories(p.merged, name, groups);

    json qq = json::object();
    auto qq_vars = ctx.cfg.screening.qq;
    if (qq_vars.empty()) qq_vars.push_back(ctx.response);
    for (const auto& v : qq_vars) {
      const auto r = qq_normal(p.modeling.numeric_column(v).present());
      qq[v] = {{"n", r.points.size()}, {"correlation", r.correlation}, {"scale", to_string(p.modeling.spec(v).transform)}};
      if (v == ctx.response) p.response_qq = r;
    }
    if (p.response_qq.points.empty()) p.response_qq = qq_normal(p.modeling.numeric_column(ctx.response).present());
    p.section = {{"rows_loaded", loaded.raw.row_count()},
                 {"rows_after_filters", after_filters},
                 {"rows_complete", p.filtered.row_count()},
                 {"filters", ctx.cfg.filters.size()},
                 {"summary", to_json(summarize(p.filtered))},
                 {"qq", std::move(qq)}};
    return p;
  });
}

std::vector<std::string> categorical_candidates(const Context& ctx, const Dataset& ds, std::size_t min_categories) {
  std::vector<std::string> out;
  for (const auto& v : ctx.cfg.regression.candidates) {
    const auto& spec = ds.spec(v);
    if (spec.is_categorical() && spec.categories.size() >= min_categories) out.push_back(v);
  }
  return out;
}

json screen(Context& ctx, const Prepared& p) {
  return step("screen", [&] {
    const auto& ds = p.modeling;
    auto corr_vars = ctx.cfg.screening.correlation;
    if (corr_vars.empty()) {
      for (const auto& v : ctx.cfg.regression.candidates) {
        if (!ds.spec(v).is_categorical()) corr_vars.push_back(v);
      }
    }
    json correlation = json::array();
    for (const auto& v : corr_vars) correlation.push_back(to_json(spearman(ds, v, ctx.response)));

    auto anova_vars = ctx.cfg.screening.anova;
    if (anova_vars.empty()) anova_vars = categorical_candidates(ctx, ds, 2);
    json anova = json::array();
    for (const auto& v : anova_vars) {
      const auto sample = ds.spec(v).is_categorical() ? group_by_category(ds, ctx.response, v)
                                                      : group_by_value(ds, ctx.response, v);
      anova.push_back(to_json(anova_oneway(sample, v)));
    }

    auto tukey_vars = ctx.cfg.screening.tukey;
    if (tukey_vars.empty()) tukey_vars = categorical_candidates(ctx, ds, 3);
    json pairs = json::object();
    for (const auto& v : tukey_vars) {
      const auto sample = ds.spec(v).is_categorical() ? group_by_category(ds, ctx.response, v)
                                                      : group_by_value(ds, ctx.response, v);
      json list = json::array();
      for (const auto& pair : tukey_hsd(sample, ctx.cfg.screening.alpha)) list.push_back(to_json(pair));
      pairs[v] = std::move(list);
    }
    json merged = json::object();
    for (const auto& [name, groups] : ctx.cfg.screening.merges) {
      merged[name] = {{"groups", groups}, {"categories", p.merged.spec(name).categories},
                      {"kind", to_string(p.merged.spec(name).kind)}};
    }
    return json{{"correlation", std::move(correlation)},
                {"anova", std::move(anova)},
                {"multiple_comparisons", {{"alpha", ctx.cfg.screening.alpha}, {"pairs", std::move(pairs)},
                                          {"merged", std::move(merged)}}}};
  });
}

std::pair<json, std::string> grow_tree(Context& ctx, const Prepared& p) {
  return step("tree", [&] {
    const auto tree = build_model_tree(p.merged, ctx.response, ctx.cfg.tree.predictors, ctx.cfg.tree.params);
    return std::make_pair(to_json(tree), render_tree(tree));
  });
}

void require_codable(const Dataset& ds, const std::vector<std::string>& vars) {
  for (const auto& v : vars) {
    const auto& spec = ds.spec(v);
    if (spec.kind == Kind::categorical && spec.categories.size() > 2) {
      throw ConfigError("categorical predictor '" + v + "' has " + std::to_string(spec.categories.size()) +
                        " categories; merge it to binary or use regression.method \"catreg\"");
    }
  }
}

std::pair<json, Fitted> fit(Context& ctx, const Prepared& p) {
  return step("fit", [&] {
    const auto& ds = p.merged;
    const auto& rc = ctx.cfg.regression;
    Fitted f;
    f.method = rc.method;
    json section;
    QuantificationSet base;
    if (rc.method == FitMethod::catreg) {
      const auto cat = catreg_fit(ds, ctx.response, rc.candidates, rc.scaling);
      section["catreg"] = to_json(cat);
      base = cat.quantifications;
      f.model = cat.model;
    } else {
      require_codable(ds, rc.candidates);
    }
    const auto full = ols_fit(ds, ctx.response, rc.candidates, base);
    section["ols_model"] = to_json(full);
    const auto trace = stepwise_fit(ds, ctx.response, rc.candidates, rc.p_enter, rc.p_remove, base);
    section["stepwise"] = to_json(trace);
    json pc = json::array();
    for (const auto& [a, b] : ctx.cfg.screening.predictor_pairs) {
      auto r = spearman(ds, a, b);
      r.variable = a + " vs " + b;
      pc.push_back(to_json(r));
    }
    section["predictor_correlation"] = std::move(pc);
    if (rc.method == FitMethod::ols) f.model = full;
    if (rc.method == FitMethod::stepwise) f.model = trace.final_model;
    if (f.model.terms.empty()) throw NumericalError("no predictor was selected; nothing to recalibrate or evaluate");
    f.quantifications = effective_quantifications(ds, f.model.variables(), base);
    section["final_model"] = to_json(f.model);
    section["final_model"]["method"] = to_string(f.method);
    return std::make_pair(std::move(section), std::move(f));
  });
}

json model_document(const Fitted& f) {
  json predictors = json::array();
  for (const auto& v : f.model.variables()) predictors.push_back(v);
  return {{"format", "sqem-model"},
          {"version", SQEM_VERSION},
          {"method", to_string(f.method)},
          {"predictors", std::move(predictors)},
          {"model", to_json(f.model)},
          {"quantifications", quantifications_to_json(f.quantifications)}};
}

Fitted read_model(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read model '" + path.string() + "'");
  try {
    const auto j = json::parse(in);
    Fitted f;
    const auto method = j.at("method").get<std::string>();
    f.method = method == "ols" ? FitMethod::ols : method == "catreg" ? FitMethod::catreg : FitMethod::stepwise;
    f.model = linear_model_from_json(j.at("model"));
    f.quantifications = quantifications_from_json(j.at("quantifications"));
    return f;
  } catch (const json::exception& e) {
    throw ConfigError("model '" + path.string() + "' is malformed: " + e.what());
  }
}

struct Recalibrated {
  json section;
  json quantifications;
};

Recalibrated recalibrate(Context& ctx, const Prepared& p, const Fitted& f) {
  return step("recalibrate", [&] {
    const auto& ds = p.merged;
    std::vector<Nfa> nfas;
    json skipped = json::array();
    for (const auto& t : f.model.terms) {
      const auto& spec = ds.spec(t.variable);
      const auto& listed = ctx.cfg.recalibration.variables;
      if (spec.is_categorical()) {
        const auto* q = find_quantification(f.quantifications, t.variable);
        if (!q) throw ConfigError("no quantification for categorical variable '" + t.variable + "'");
        nfas.push_back(init_nfa(*q));
      } else if (std::find(listed.begin(), listed.end(), t.variable) != listed.end()) {
        nfas.push_back(init_nfa(distinct_value_quantification(ds, t.variable)));
      }
    }
    for (const auto& v : ctx.cfg.recalibration.variables) {
      if (!f.model.term(v)) skipped.push_back(v);
    }
    const auto result = train_recalibration(f.model, nfas, ds, f.quantifications, ctx.cfg.recalibration.training);
    QuantificationSet before, after;
    json agencies = json::array();
    for (std::size_t i = 0; i < result.nfas.size(); ++i) {
      before.push_back(nfas[i].source);
      after.push_back(result.nfas[i].to_quantification());
      agencies.push_back(to_json(result.nfas[i]));
    }
    Recalibrated r;
    r.quantifications = quantifications_to_json(after);
    r.section = {{"agencies", std::move(agencies)},
                 {"training", to_json(result.trace)},
                 {"loss", "ln-scale mean squared error"},
                 {"trained_parameters", "consequents only (premise parameters frozen)"},
                 {"quantifications_before", quantifications_to_json(before)},
                 {"quantifications_after", r.quantifications},
                 {"not_in_model", std::move(skipped)}};
    return r;
  });
}

ModelingSpec modeling_spec(const Context& ctx, const Fitted& f) {
  ModelingSpec spec;
  spec.response = ctx.response;
  spec.predictors = f.model.variables();
  spec.quantifications = f.quantifications;
  spec.recalibrate = ctx.cfg.recalibration.variables;
  spec.recalibration = ctx.cfg.recalibration.training;
  spec.pred_levels = ctx.cfg.evaluation.pred_levels;
  spec.min_pred_fold = ctx.cfg.evaluation.min_pred_fold;
  return spec;
}

json evaluate(Context& ctx, const Prepared& p, const Fitted& f) {
  return step("evaluate", [&] {
    const auto spec = modeling_spec(ctx, f);
    const auto& e = ctx.cfg.evaluation;
    json section = json::object();
    if (e.resubstitution) section["resubstitution"] = to_json(resubstitution(p.merged, spec));
    json cv = json::array();
    for (auto k : e.folds) {
      cv.push_back(to_json(cross_validate(p.merged, spec, k, numerics::Prng::derive_seed(ctx.seed, kStreamFolds + k))));
    }
    section["cross_validation"] = std::move(cv);
    json splits = json::array();
    for (std::size_t i = 0; i < e.fractions.size(); ++i) {
      splits.push_back(to_json(random_split_experiment(p.merged, spec, e.fractions[i], e.repetitions,
                                                       numerics::Prng::derive_seed(ctx.seed, kStreamSplits + i))));
    }
    section["random_splits"] = std::move(splits);
    return section;
  });
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

void write_output(Context& ctx, RunResult& result, const std::string& name, std::string_view contents) {
  step("write", [&] {
    std::error_code ec;
    fs::create_directories(ctx.out, ec);
    if (ec) throw ConfigError("cannot create output directory '" + ctx.out.string() + "': " + ec.message());
    write_file_atomic(ctx.out / name, contents);
    result.written.push_back(ctx.out / name);
    return 0;
  });
}

void write_report(Context& ctx, RunResult& result) {
  result.report["provenance"] = ctx.provenance;
  write_output(ctx, result, "report.json", dump(result.report));
}

std::string csv_text(const Dataset& ds) {
  std::ostringstream out;
  write_csv(out, ds);
  return out.str();
}

std::string qq_text(const QQResult& qq) {
  std::ostringstream out;
  write_qq_csv(out, qq);
  return out.str();
}

// Summary lines quote numbers exactly as they are serialized in report.json.
std::string summarize_run(const json& report) {
  std::ostringstream s;
  const auto& prov = report.at("provenance");
  s << "sqem " << prov.at("version").get<std::string>() << "  seed " << prov.at("seed").dump() << "  config "
    << prov.at("config_hash").get<std::string>() << "\n";
  if (report.contains("data_preparation")) {
    const auto& d = report.at("data_preparation");
    s << "rows: " << d.at("rows_loaded").dump() << " loaded, " << d.at("rows_complete").dump() << " used\n";
  }
  if (report.contains("model_tree")) s << "model tree leaves: " << report.at("model_tree").at("leaves").dump() << "\n";
  if (report.contains("final_model")) {
    const auto& m = report.at("final_model");
    s << "model (" << m.at("method").get<std::string>() << "): " << m.at("formula").get<std::string>() << "\n";
    s << "R^2: " << m.at("r_squared").dump() << "  n: " << m.at("n").dump() << "\n";
  }
  if (report.contains("recalibration")) {
    const auto& t = report.at("recalibration").at("training");
    s << "recalibration MSE: " << t.at("initial_mse").dump() << " -> " << t.at("final_mse").dump() << " after "
      << t.at("epochs").dump() << " epochs\n";
  }
  const auto line = [&](const std::string& head, const json& r) {
    const auto& a = r.at("average");
    s << head << " MMRE: " << a.at("regression_mmre").dump() << " -> " << a.at("recalibrated_mmre").dump() << " ("
      << a.at("improvement_percent").dump() << "%)\n";
  };
  if (report.contains("resubstitution")) line("resubstitution", report.at("resubstitution"));
  if (report.contains("cross_validation")) {
    for (const auto& r : report.at("cross_validation")) line("cross-validation k=" + r.at("folds").dump(), r);
  }
  if (report.contains("random_splits")) {
    for (const auto& r : report.at("random_splits")) line("random splits " + r.at("train_fraction").dump(), r);
  }
  return s.str();
}

void merge_into(json& target, const json& source) {
  for (const auto& [k, v] : source.items()) target[k] = v;
}

}  // namespace

const std::vector<std::string>& stage_names() {
  static const std::vector<std::string> names{"prepare", "screen", "tree", "fit", "recalibrate", "evaluate", "synth"};
  return names;
}

fs::path resolve_output_dir(const PipelineConfig& config, const RunOptions& options) {
  if (options.out_dir) return *options.out_dir;
  if (const char* env = std::getenv("SQEM_OUT_DIR"); env && *env) return env;
  return config.output_dir;
}

void write_file_atomic(const fs::path& path, std::string_view contents) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write '" + tmp.string() + "'");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw ConfigError("failed writing '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw ConfigError("cannot move output into place at '" + path.string() + "'");
  }
}

RunResult run_pipeline(const PipelineConfig& config, const RunOptions& options) {
  Context ctx = make_context(config, options, "pipeline");
  RunResult result;
  const auto loaded = load_data(ctx);
  const auto prepared = prepare(ctx, loaded);
  result.report["data_preparation"] = prepared.section;
  merge_into(result.report, screen(ctx, prepared));
  std::string tree_text;
  if (config.tree.enabled) {
    auto [tree_json, text] = grow_tree(ctx, prepared);
    result.report["model_tree"] = std::move(tree_json);
    tree_text = std::move(text);
  }
  const auto [fit_section, fitted] = fit(ctx, prepared);
  merge_into(result.report, fit_section);
  const auto recal = recalibrate(ctx, prepared, fitted);
  result.report["recalibration"] = recal.section;
  merge_into(result.report, evaluate(ctx, prepared, fitted));
  result.report["provenance"] = ctx.provenance;

  write_output(ctx, result, "prepared.csv", csv_text(prepared.filtered));
  write_output(ctx, result, "qq.csv", qq_text(prepared.response_qq));
  if (config.tree.enabled) write_output(ctx, result, "tree.txt", tree_text);
  write_output(ctx, result, "model.json", dump(model_document(fitted)));
  write_output(ctx, result, "quantifications.json", dump(recal.quantifications));
  write_report(ctx, result);
  result.summary = summarize_run(result.report);
  return result;
}

RunResult run_stage(std::string_view stage, const PipelineConfig& config, const RunOptions& options) {
  const auto& names = stage_names();
  if (std::find(names.begin(), names.end(), stage) == names.end()) {
    std::string valid;
    for (const auto& n : names) valid += (valid.empty() ? "" : ", ") + n;
    throw ConfigError("unknown stage '" + std::string(stage) + "'; valid stages: " + valid);
  }
  Context ctx = make_context(config, options, stage);
  RunResult result;

  if (stage == "synth") {
    step("synth", [&] {
      if (!config.data.synthetic) throw ConfigError("stage 'synth' needs data.source \"synthetic\"");
      return 0;
    });
    RunOptions no_override = options;
    no_override.data_path.reset();
    Context gen = make_context(config, no_override, stage);
    const auto loaded = load_data(gen);
    ctx.provenance = gen.provenance;
    result.report["synthetic"] = loaded.source.at("generator");
    write_output(ctx, result, "synthetic.csv", csv_text(loaded.raw));
    write_report(ctx, result);
    result.summary = summarize_run(result.report);
    return result;
  }

  const auto loaded = load_data(ctx);
  const auto prepared = prepare(ctx, loaded);
  if (stage == "prepare") {
    result.report["data_preparation"] = prepared.section;
    write_output(ctx, result, "prepared.csv", csv_text(prepared.filtered));
    write_output(ctx, result, "qq.csv", qq_text(prepared.response_qq));
  } else if (stage == "screen") {
    merge_into(result.report, screen(ctx, prepared));
  } else if (stage == "tree") {
    auto [tree_json, text] = grow_tree(ctx, prepared);
    result.report["model_tree"] = std::move(tree_json);
    write_output(ctx, result, "tree.txt", text);
  } else if (stage == "fit") {
    const auto [fit_section, fitted] = fit(ctx, prepared);
    merge_into(result.report, fit_section);
    write_output(ctx, result, "model.json", dump(model_document(fitted)));
  } else {
    Fitted fitted;
    if (options.model_path) {
      fitted = step(std::string(stage) == "recalibrate" ? "recalibrate" : "evaluate",
                    [&] { return read_model(*options.model_path); });
    } else if (stage == "recalibrate") {
      throw ConfigError("recalibrate: missing input artifact; pass --model <model.json> from the fit stage");
    } else {
      fitted = fit(ctx, prepared).second;
    }
    if (stage == "recalibrate") {
      const auto recal = recalibrate(ctx, prepared, fitted);
      result.report["recalibration"] = recal.section;
      write_output(ctx, result, "quantifications.json", dump(recal.quantifications));
    } else {
      merge_into(result.report, evaluate(ctx, prepared, fitted));
    }
  }
  write_report(ctx, result);
  result.summary = summarize_run(result.report);
  return result;
}

}  // namespace sqem
