#include "sqem/synthetic.hpp"

#include <cmath>
#include <numbers>
#include <set>

#include "sqem/error.hpp"
#include "sqem/numerics.hpp"
#include "sqem/screening.hpp"
#include "sqem/transform.hpp"

namespace sqem {
namespace {

constexpr const char* kDevTypes[] = {"New Development", "Re-development", "Enhancement"};

int gsc_total_for(double vaf) {
  const double units = (vaf - 0.65) * 100.0;
  const long total = std::lround(units);
  if (total < 0 || total > 70 || std::fabs(units - static_cast<double>(total)) > 1e-9) {
    throw ConfigError("synthetic: VAF level " + std::to_string(vaf) +
                      " is not 0.65 + 0.01*k for an integer k in 0..70");
  }
  return static_cast<int>(total);
}

GscVector random_gsc(int total, numerics::Prng& rng) {
  std::array<int, GscVector::kSize> ratings{};
  for (int unit = 0; unit < total; ++unit) {
    std::vector<std::size_t> open;
    for (std::size_t i = 0; i < ratings.size(); ++i) {
      if (ratings[i] < 5) open.push_back(i);
    }
    ++ratings[open[rng.below(open.size())]];
  }
  return GscVector(ratings);
}

std::size_t pick(std::span<const double> weights, numerics::Prng& rng) {
  double total = 0.0;
  for (double w : weights) total += w;
  double u = rng.uniform() * total;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (u < weights[i]) return i;
    u -= weights[i];
  }
  return weights.size() - 1;
}

}  // namespace

void validate(const SyntheticConfig& c) {
  if (c.n < 3) throw ConfigError("synthetic: n must be at least 3");
  if (!(c.noise_sd >= 0.0)) throw ConfigError("synthetic: noise_sd must be >= 0");
  if (!(c.ln_fp_sd >= 0.0) || !(c.ln_efforts_sd >= 0.0)) throw ConfigError("synthetic: spreads must be >= 0");
  if (c.vaf_levels.empty()) throw ConfigError("synthetic: vaf_levels is empty");
  std::set<double> seen;
  for (double v : c.vaf_levels) {
    gsc_total_for(v);
    if (!seen.insert(v).second) throw ConfigError("synthetic: duplicate VAF level");
  }
  if (!(c.vaf_shift_max >= 0.0)) throw ConfigError("synthetic: vaf_shift_max must be >= 0");
  if (c.dev_type_weights.size() != 3) throw ConfigError("synthetic: dev_type_weights needs 3 entries");
  double w = 0.0;
  for (double x : c.dev_type_weights) {
    if (!(x >= 0.0)) throw ConfigError("synthetic: dev_type_weights must be >= 0");
    w += x;
  }
  if (!(w > 0.0)) throw ConfigError("synthetic: dev_type_weights sum to 0");
  if (!(c.efforts_spearman > -1.0 && c.efforts_spearman < 1.0)) {
    throw ConfigError("synthetic: efforts_spearman must lie in (-1, 1)");
  }
  for (double f : {c.low_quality_fraction, c.missing_defects_fraction}) {
    if (!(f >= 0.0 && f < 1.0)) throw ConfigError("synthetic: fractions must lie in [0, 1)");
  }
}

std::vector<VariableSpec> synthetic_schema() {
  const std::vector<std::string> grades{"A", "B", "C", "D"};
  return {
      {"ProjectId", Role::identifier, Kind::numeric, Transform::none, {}},
      {"DataQuality", Role::excluded, Kind::categorical, Transform::none, grades},
      {"FpRating", Role::excluded, Kind::categorical, Transform::none, grades},
      {"Defects", Role::response, Kind::numeric, Transform::ln, {}},
      {"FunctionPoints", Role::predictor, Kind::numeric, Transform::ln, {}},
      {"VAF", Role::predictor, Kind::numeric, Transform::none, {}},
      {"Efforts", Role::predictor, Kind::numeric, Transform::ln, {}},
      {"MaxTeamSize", Role::predictor, Kind::numeric, Transform::none, {}},
      {"DevType", Role::predictor, Kind::categorical, Transform::none, {kDevTypes[0], kDevTypes[1], kDevTypes[2]}},
      {"Platform", Role::predictor, Kind::categorical, Transform::none, {"Mainframe", "Midrange", "PC"}},
  };
}

SyntheticData generate_synthetic(const SyntheticConfig& c, std::uint64_t seed) {
  validate(c);
  auto schema = synthetic_schema();
  const std::size_t cols = schema.size();
  std::vector<std::vector<double>> values(cols, std::vector<double>(c.n, 0.0));
  std::vector<std::vector<std::uint8_t>> missing(cols, std::vector<std::uint8_t>(c.n, 0));

  numerics::Prng rng(seed);
  SyntheticData out{Dataset(schema), {}, {}};
  for (std::size_t l = 0; l < c.vaf_levels.size(); ++l) {
    out.vaf_shifts.push_back(c.vaf_shift_max > 0.0 ? (2.0 * rng.uniform() - 1.0) * c.vaf_shift_max : 0.0);
  }
  // Pearson correlation of a Gaussian pair with the requested Spearman correlation.
  const double rho = 2.0 * std::sin(std::numbers::pi * c.efforts_spearman / 6.0);
  const double spread = std::sqrt(1.0 - rho * rho);

  for (std::size_t r = 0; r < c.n; ++r) {
    const double z_fp = rng.normal();
    const double z_effort = rho * z_fp + spread * rng.normal();
    const double z_team = rng.normal();
    const double eps = rng.normal();
    const std::size_t level = rng.below(c.vaf_levels.size());
    const GscVector gsc = random_gsc(gsc_total_for(c.vaf_levels[level]), rng);
    const std::size_t dev = pick(c.dev_type_weights, rng);
    const bool low_quality = rng.uniform() < c.low_quality_fraction;
    const bool low_rating = rng.uniform() < c.low_quality_fraction;
    const std::size_t quality_grade = rng.below(2);
    const std::size_t rating_grade = rng.below(2);
    const bool no_defects = rng.uniform() < c.missing_defects_fraction;
    const std::size_t platform = rng.below(3);

    const double ln_fp = c.ln_fp_mean + c.ln_fp_sd * z_fp;
    const double vaf = compute_vaf(gsc);
    const double ln_defects = c.model.intercept + c.model.ln_fp * ln_fp +
                              c.model.vaf * (vaf + out.vaf_shifts[level]) +
                              (dev == 2 ? c.model.enhancement : 0.0) + c.noise_sd * eps;
    const double team = std::max(1.0, std::round(std::exp(1.5 + c.team_link * z_effort + 0.5 * z_team)));

    values[0][r] = static_cast<double>(r + 1);
    values[1][r] = static_cast<double>((low_quality ? 2 : 0) + quality_grade);
    values[2][r] = static_cast<double>((low_rating ? 2 : 0) + rating_grade);
    values[3][r] = std::exp(ln_defects);
    missing[3][r] = no_defects ? 1 : 0;
    if (no_defects) values[3][r] = 0.0;
    values[4][r] = std::exp(ln_fp);
    values[5][r] = vaf;
    values[6][r] = std::exp(c.ln_efforts_mean + c.ln_efforts_sd * z_effort);
    values[7][r] = team;
    values[8][r] = static_cast<double>(dev);
    values[9][r] = static_cast<double>(platform);
  }
  out.data = Dataset(std::move(schema), std::move(values), std::move(missing));

  nlohmann::json meta{{"generator", "defect-model synthetic"},
                      {"seed", seed},
                      {"config", to_json(c)},
                      {"efforts_pearson_latent", rho},
                      {"vaf_shifts", out.vaf_shifts}};
  const auto achieved = spearman(out.data, "FunctionPoints", "Efforts");
  meta["achieved_spearman_fp_efforts"] = achieved.rho;
  out.metadata = std::move(meta);
  return out;
}

SyntheticConfig synthetic_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("synthetic config must be an object");
  static const std::set<std::string> known{"n",
                                           "noise_sd",
                                           "ln_fp_mean",
                                           "ln_fp_sd",
                                           "vaf_levels",
                                           "vaf_shift_max",
                                           "dev_type_weights",
                                           "efforts_spearman",
                                           "ln_efforts_mean",
                                           "ln_efforts_sd",
                                           "team_link",
                                           "low_quality_fraction",
                                           "missing_defects_fraction",
                                           "model"};
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw ConfigError("synthetic config: unknown key '" + key + "'");
  }
  SyntheticConfig c;
  try {
    c.n = j.value("n", c.n);
    c.noise_sd = j.value("noise_sd", c.noise_sd);
    c.ln_fp_mean = j.value("ln_fp_mean", c.ln_fp_mean);
    c.ln_fp_sd = j.value("ln_fp_sd", c.ln_fp_sd);
    c.vaf_levels = j.value("vaf_levels", c.vaf_levels);
    c.vaf_shift_max = j.value("vaf_shift_max", c.vaf_shift_max);
    c.dev_type_weights = j.value("dev_type_weights", c.dev_type_weights);
    c.efforts_spearman = j.value("efforts_spearman", c.efforts_spearman);
    c.ln_efforts_mean = j.value("ln_efforts_mean", c.ln_efforts_mean);
    c.ln_efforts_sd = j.value("ln_efforts_sd", c.ln_efforts_sd);
    c.team_link = j.value("team_link", c.team_link);
    c.low_quality_fraction = j.value("low_quality_fraction", c.low_quality_fraction);
    c.missing_defects_fraction = j.value("missing_defects_fraction", c.missing_defects_fraction);
    if (j.contains("model")) {
      const auto& m = j.at("model");
      c.model.intercept = m.value("intercept", c.model.intercept);
      c.model.ln_fp = m.value("ln_fp", c.model.ln_fp);
      c.model.vaf = m.value("vaf", c.model.vaf);
      c.model.enhancement = m.value("enhancement", c.model.enhancement);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("synthetic config: ") + e.what());
  }
  validate(c);
  return c;
}

nlohmann::json to_json(const SyntheticConfig& c) {
  return {{"n", c.n},
          {"noise_sd", c.noise_sd},
          {"ln_fp_mean", c.ln_fp_mean},
          {"ln_fp_sd", c.ln_fp_sd},
          {"vaf_levels", c.vaf_levels},
          {"vaf_shift_max", c.vaf_shift_max},
          {"dev_type_weights", c.dev_type_weights},
          {"efforts_spearman", c.efforts_spearman},
          {"ln_efforts_mean", c.ln_efforts_mean},
          {"ln_efforts_sd", c.ln_efforts_sd},
          {"team_link", c.team_link},
          {"low_quality_fraction", c.low_quality_fraction},
          {"missing_defects_fraction", c.missing_defects_fraction},
          {"model",
           {{"intercept", c.model.intercept},
            {"ln_fp", c.model.ln_fp},
            {"vaf", c.model.vaf},
            {"enhancement", c.model.enhancement}}}};
}

}  // namespace sqem
