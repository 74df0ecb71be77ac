#include "sqem/fixtures.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "detail.hpp"
#include "sqem/config.hpp"
#include "sqem/error.hpp"
#include "sqem/evaluation.hpp"
#include "sqem/numerics.hpp"
#include "sqem/pipeline.hpp"
#include "sqem/screening.hpp"
#include "sqem/transform.hpp"

namespace sqem {
namespace fs = std::filesystem;
using nlohmann::json;

bool FixtureResult::pass() const {
  if (!error.empty() || fields.empty()) return false;
  for (const auto& f : fields) {
    if (!f.pass) return false;
  }
  return true;
}

namespace {

json predict(const json& in) {
  const auto rt = parse_transform(in.value("response_transform", "ln"));
  double value = in.at("intercept").get<double>();
  const auto& transforms = in.contains("transforms") ? in.at("transforms") : json::object();
  for (const auto& [name, b] : in.at("coefficients").items()) {
    double x = in.at("row").at(name).get<double>();
    const auto t = parse_transform(transforms.value(name, "none"));
    if (t != Transform::none) {
      NumericColumn c{{x}, {0}};
      x = ln_transform(c, t).values[0];
    }
    value += b.get<double>() * x;
  }
  return {{"ln_prediction", value}, {"prediction", inverse_transform(value, rt)}};
}

json vaf(const json& in) {
  const auto ratings = in.at("ratings").get<std::vector<int>>();
  return {{"vaf", compute_vaf(GscVector(ratings))}};
}

json metrics(const json& in) {
  const auto a = in.at("actuals").get<std::vector<double>>();
  const auto p = in.at("predictions").get<std::vector<double>>();
  return {{"mmre", mmre(a, p)}, {"pred", pred_at(a, p, in.value("m", 0.25))}};
}

json kfold(const json& in) {
  const auto plan = kfold_plan(in.at("n").get<std::size_t>(), in.at("k").get<std::size_t>(),
                               in.value("seed", std::uint64_t{0}));
  const auto sizes = plan.fold_sizes();
  return {{"folds", plan.k},
          {"min_fold_size", *std::min_element(sizes.begin(), sizes.end())},
          {"max_fold_size", *std::max_element(sizes.begin(), sizes.end())}};
}

json spearman_cmd(const json& in) {
  const auto x = in.at("x").get<std::vector<double>>();
  const auto y = in.at("y").get<std::vector<double>>();
  const auto r = spearman(x, y, "x");
  return {{"rho", r.rho}, {"p", r.p_two_sided}};
}

json anova_cmd(const json& in) {
  GroupedSample s;
  s.groups = in.at("groups").get<std::vector<std::vector<double>>>();
  for (std::size_t i = 0; i < s.groups.size(); ++i) s.labels.push_back(std::to_string(i + 1));
  const auto r = anova_oneway(s, "groups");
  return {{"f", r.f_value}, {"p", r.p}, {"df_between", r.df_between}, {"df_within", r.df_within}};
}

json pipeline_cmd(const json& in, const fs::path& base_dir) {
  const auto config = load_config(base_dir / in.at("config").get<std::string>());
  RunOptions opt;
  opt.out_dir = fs::temp_directory_path() /
                ("sqem_golden_" + config_hash(config.source) + "_" + std::to_string(std::random_device{}()));
  const auto result = run_pipeline(config, opt);
  std::error_code ec;
  fs::remove_all(*opt.out_dir, ec);
  return result.report;
}

const json* lookup(const json& observed, const std::string& field) {
  if (!field.empty() && field.front() == '/') {
    const json::json_pointer ptr(field);
    return observed.contains(ptr) ? &observed.at(ptr) : nullptr;
  }
  return observed.contains(field) ? &observed.at(field) : nullptr;
}

}  // namespace

json run_fixture(const json& fixture, const fs::path& base_dir) {
  const auto command = fixture.at("command").get<std::string>();
  const auto& in = fixture.contains("inputs") ? fixture.at("inputs") : json::object();
  if (command == "predict") return predict(in);
  if (command == "vaf") return vaf(in);
  if (command == "metrics") return metrics(in);
  if (command == "kfold") return kfold(in);
  if (command == "spearman") return spearman_cmd(in);
  if (command == "anova") return anova_cmd(in);
  if (command == "pipeline") return pipeline_cmd(in, base_dir);
  throw ConfigError("unknown fixture command '" + command + "'");
}

std::vector<FixtureResult> verify_goldens(const json& manifest, const fs::path& base_dir) {
  std::vector<FixtureResult> out;
  for (const auto& fixture : manifest.at("fixtures")) {
    FixtureResult r;
    r.name = fixture.value("name", "(unnamed)");
    json observed;
    try {
      observed = run_fixture(fixture, base_dir);
    } catch (const std::exception& e) {
      r.error = e.what();
      out.push_back(std::move(r));
      continue;
    }
    if (!fixture.contains("expected") || fixture.at("expected").empty()) r.error = "no expected fields";
    const auto expected = fixture.value("expected", json::object());
    for (const auto& [field, spec] : expected.items()) {
      FieldCheck c;
      c.field = field;
      c.expected = spec.value("value", json());
      c.tolerance = spec.value("tolerance", 0.0);
      c.source = spec.value("source", "");
      const json* seen = lookup(observed, field);
      c.observed = seen ? *seen : json();
      const bool tagged = c.source == "published" || c.source == "derived" || c.source == "trivial";
      if (seen && c.expected.is_number() && seen->is_number()) {
        c.delta = std::fabs(seen->get<double>() - c.expected.get<double>());
        c.pass = tagged && c.delta <= c.tolerance;
      } else {
        c.pass = tagged && seen && *seen == c.expected;
      }
      r.fields.push_back(std::move(c));
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<FixtureResult> verify_goldens(const fs::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw ConfigError("cannot read manifest '" + manifest_path.string() + "'");
  json manifest;
  try {
    manifest = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("manifest '" + manifest_path.string() + "' is not valid JSON: " + e.what());
  }
  return verify_goldens(manifest, manifest_path.parent_path());
}

std::string render_results(const std::vector<FixtureResult>& results) {
  std::ostringstream out;
  for (const auto& r : results) {
    if (!r.error.empty()) out << "FAIL " << r.name << ": " << r.error << "\n";
    for (const auto& f : r.fields) {
      out << (f.pass ? "PASS " : "FAIL ") << r.name << "." << f.field << " expected=" << f.expected.dump()
          << " observed=" << f.observed.dump();
      if (f.expected.is_number() && f.observed.is_number()) {
        out << " delta=" << detail::format_double(f.delta) << " tol=" << detail::format_double(f.tolerance);
      }
      if (f.source.empty()) out << " (untagged)";
      out << "\n";
    }
  }
  return out.str();
}

}  // namespace sqem
