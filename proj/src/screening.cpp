#include "sqem/screening.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "detail.hpp"
#include "sqem/error.hpp"
#include "sqem/numerics.hpp"
#include "sqem/transform.hpp"

namespace sqem {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

CorrelationResult spearman(std::span<const double> x, std::span<const double> y, std::string variable) {
  if (x.size() != y.size()) throw ConfigError("spearman: columns differ in length");
  if (x.size() < 3) {
    throw DataError("spearman: need at least 3 complete pairs, got " + std::to_string(x.size()));
  }
  const auto rx = rank_average(x);
  const auto ry = rank_average(y);
  const double rho = detail::pearson(rx, ry);
  if (std::isnan(rho)) throw DataError("spearman: zero variance in ranked column");

  CorrelationResult out;
  out.variable = std::move(variable);
  out.rho = std::clamp(rho, -1.0, 1.0);
  out.n = x.size();
  if (std::fabs(out.rho) >= 1.0) {
    out.p_two_sided = 0.0;
  } else {
    const double df = static_cast<double>(out.n - 2);
    const double t = out.rho * std::sqrt(df / (1.0 - out.rho * out.rho));
    out.p_two_sided = std::clamp(2.0 * (1.0 - numerics::t_cdf(std::fabs(t), df)), 0.0, 1.0);
  }
  return out;
}

CorrelationResult spearman(const Dataset& ds, const std::string& x, const std::string& y) {
  const auto cx = ds.numeric_column(x);
  const auto cy = ds.numeric_column(y);
  std::vector<double> px, py;
  for (std::size_t i = 0; i < cx.size(); ++i) {
    if (cx.missing[i] || cy.missing[i]) continue;
    px.push_back(cx.values[i]);
    py.push_back(cy.values[i]);
  }
  return spearman(px, py, x);
}

GroupedSample group_by_category(const Dataset& ds, const std::string& response, const std::string& group) {
  const auto rc = ds.column_index(response);
  const auto gc = ds.column_index(group);
  const auto& gspec = ds.spec(gc);
  if (!gspec.is_categorical()) throw ConfigError("variable '" + group + "' is not categorical");
  if (ds.spec(rc).is_categorical()) throw ConfigError("response '" + response + "' is not numeric");
  GroupedSample out;
  out.labels = gspec.categories;
  out.groups.resize(out.labels.size());
  for (std::size_t r = 0; r < ds.row_count(); ++r) {
    if (ds.is_missing(rc, r) || ds.is_missing(gc, r)) continue;
    out.groups[ds.category(gc, r)].push_back(ds.value(rc, r));
  }
  return out;
}

GroupedSample group_by_value(const Dataset& ds, const std::string& response, const std::string& group) {
  const auto rc = ds.column_index(response);
  const auto gc = ds.column_index(group);
  if (ds.spec(gc).is_categorical()) throw ConfigError("variable '" + group + "' is not numeric");
  std::map<double, std::vector<double>> by_value;
  for (std::size_t r = 0; r < ds.row_count(); ++r) {
    if (ds.is_missing(rc, r) || ds.is_missing(gc, r)) continue;
    by_value[ds.value(gc, r)].push_back(ds.value(rc, r));
  }
  GroupedSample out;
  for (auto& [value, obs] : by_value) {
    out.labels.push_back(detail::format_double(value));
    out.groups.push_back(std::move(obs));
  }
  return out;
}

namespace {

struct GroupStats {
  std::vector<std::size_t> index;  // nonempty groups
  std::vector<double> mean;
  std::vector<std::size_t> n;
  std::size_t total = 0;
  double grand_mean = 0.0;
  double ss_between = 0.0;
  double ss_within = 0.0;
};

GroupStats group_stats(const GroupedSample& sample) {
  GroupStats s;
  double sum = 0.0;
  for (std::size_t g = 0; g < sample.groups.size(); ++g) {
    const auto& obs = sample.groups[g];
    if (obs.empty()) continue;
    s.index.push_back(g);
    s.mean.push_back(detail::mean(obs));
    s.n.push_back(obs.size());
    s.total += obs.size();
    for (double v : obs) sum += v;
  }
  if (s.index.size() < 2) throw DataError("ANOVA needs at least 2 nonempty groups");
  if (s.total <= s.index.size()) {
    throw DataError("ANOVA needs more observations (" + std::to_string(s.total) + ") than groups (" +
                    std::to_string(s.index.size()) + ")");
  }
  s.grand_mean = sum / static_cast<double>(s.total);
  for (std::size_t i = 0; i < s.index.size(); ++i) {
    const double d = s.mean[i] - s.grand_mean;
    s.ss_between += static_cast<double>(s.n[i]) * d * d;
    for (double v : sample.groups[s.index[i]]) s.ss_within += (v - s.mean[i]) * (v - s.mean[i]);
  }
  return s;
}

}  // namespace

AnovaResult anova_oneway(const GroupedSample& sample, std::string variable) {
  if (sample.labels.size() != sample.groups.size()) throw ConfigError("anova: labels/groups mismatch");
  const auto s = group_stats(sample);
  AnovaResult out;
  out.variable = std::move(variable);
  out.df_between = s.index.size() - 1;
  out.df_within = s.total - s.index.size();
  out.ss_between = s.ss_between;
  out.ss_within = s.ss_within;
  for (std::size_t i = 0; i < s.index.size(); ++i) {
    if (s.n[i] == 1) out.singleton_groups.push_back(sample.labels[s.index[i]]);
  }
  const double msb = s.ss_between / static_cast<double>(out.df_between);
  const double msw = s.ss_within / static_cast<double>(out.df_within);
  if (s.ss_within == 0.0) {
    out.f_value = s.ss_between > 0.0 ? kInf : 0.0;
    out.p = s.ss_between > 0.0 ? 0.0 : 1.0;
    return out;
  }
  out.f_value = msb / msw;
  out.p = std::clamp(1.0 - numerics::f_cdf(out.f_value, static_cast<double>(out.df_between),
                                           static_cast<double>(out.df_within)),
                     0.0, 1.0);
  return out;
}

std::vector<TukeyPair> tukey_hsd(const GroupedSample& sample, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("tukey_hsd: alpha must lie in (0, 1)");
  const auto s = group_stats(sample);
  const int k = static_cast<int>(s.index.size());
  const double df_within = static_cast<double>(s.total - s.index.size());
  const double msw = s.ss_within / df_within;
  std::vector<TukeyPair> out;
  for (std::size_t i = 0; i < s.index.size(); ++i) {
    for (std::size_t j = i + 1; j < s.index.size(); ++j) {
      TukeyPair pair;
      pair.group_i = sample.labels[s.index[i]];
      pair.group_j = sample.labels[s.index[j]];
      pair.mean_difference = s.mean[i] - s.mean[j];
      const double se = std::sqrt(0.5 * msw * (1.0 / static_cast<double>(s.n[i]) +
                                               1.0 / static_cast<double>(s.n[j])));
      const double diff = std::fabs(pair.mean_difference);
      if (diff == 0.0) {
        pair.q = 0.0;
        pair.p_adjusted = 1.0;
      } else if (se == 0.0) {
        pair.q = kInf;
        pair.p_adjusted = 0.0;
      } else {
        pair.q = diff / se;
        pair.p_adjusted =
            std::clamp(1.0 - numerics::studentized_range_cdf(pair.q, k, df_within), 0.0, 1.0);
      }
      pair.significant = pair.p_adjusted < alpha;
      out.push_back(std::move(pair));
    }
  }
  return out;
}

namespace {

// Category index -> merged index, plus the new label list.
std::pair<std::vector<std::size_t>, std::vector<std::string>> merge_plan(
    const VariableSpec& var, std::span<const std::vector<std::string>> groups) {
  if (!var.is_categorical()) throw ConfigError("merge_categories: '" + var.name + "' is not categorical");
  const std::size_t k = var.categories.size();
  std::vector<int> cluster(k, -1);
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (groups[g].size() < 2) throw ConfigError("merge_categories: a merge group needs at least 2 labels");
    for (const auto& label : groups[g]) {
      const auto idx = var.category_index(label);
      if (!idx) throw ConfigError("merge_categories: unknown label '" + label + "' in '" + var.name + "'");
      if (cluster[*idx] != -1) {
        throw ConfigError("merge_categories: label '" + label + "' appears in overlapping merge groups");
      }
      cluster[*idx] = static_cast<int>(g);
    }
  }
  std::vector<std::size_t> remap(k);
  std::vector<std::string> labels;
  std::map<int, std::size_t> placed;
  for (std::size_t c = 0; c < k; ++c) {
    if (cluster[c] == -1) {
      remap[c] = labels.size();
      labels.push_back(var.categories[c]);
      continue;
    }
    const auto it = placed.find(cluster[c]);
    if (it != placed.end()) {
      remap[c] = it->second;
      labels[it->second] += "+" + var.categories[c];
    } else {
      placed[cluster[c]] = labels.size();
      remap[c] = labels.size();
      labels.push_back(var.categories[c]);
    }
  }
  if (labels.size() < 2) throw ConfigError("merge_categories: merging would leave '" + var.name + "' with one category");
  return {std::move(remap), std::move(labels)};
}

}  // namespace

VariableSpec merge_categories(const VariableSpec& var, std::span<const std::vector<std::string>> groups) {
  if (groups.empty()) return var;
  auto [remap, labels] = merge_plan(var, groups);
  VariableSpec out = var;
  out.categories = std::move(labels);
  if (out.categories.size() == 2) out.kind = Kind::binary;
  return out;
}

Dataset merge_categories(const Dataset& ds, const std::string& variable,
                         std::span<const std::vector<std::string>> groups) {
  const auto c = ds.column_index(variable);
  if (groups.empty()) return ds;
  const auto& spec = ds.spec(c);
  auto [remap, labels] = merge_plan(spec, groups);
  VariableSpec merged = merge_categories(spec, groups);
  std::vector<double> values(ds.values(c).begin(), ds.values(c).end());
  std::vector<std::uint8_t> missing(ds.missing_mask(c).begin(), ds.missing_mask(c).end());
  for (std::size_t r = 0; r < values.size(); ++r) {
    if (!missing[r]) values[r] = static_cast<double>(remap[ds.category(c, r)]);
  }
  return ds.with_column(c, std::move(merged), std::move(values), std::move(missing));
}

nlohmann::json to_json(const CorrelationResult& r) {
  return {{"variable", r.variable}, {"rho", r.rho}, {"n", r.n}, {"p_two_sided", r.p_two_sided}};
}

nlohmann::json to_json(const AnovaResult& r) {
  return {{"variable", r.variable},
          {"f_value", std::isinf(r.f_value) ? nlohmann::json("inf") : nlohmann::json(r.f_value)},
          {"df_between", r.df_between},
          {"df_within", r.df_within},
          {"p", r.p},
          {"ss_between", r.ss_between},
          {"ss_within", r.ss_within},
          {"singleton_groups", r.singleton_groups}};
}

nlohmann::json to_json(const TukeyPair& r) {
  return {{"group_i", r.group_i},
          {"group_j", r.group_j},
          {"mean_difference", r.mean_difference},
          {"q", std::isinf(r.q) ? nlohmann::json("inf") : nlohmann::json(r.q)},
          {"p_adjusted", r.p_adjusted},
          {"significant", r.significant}};
}

}  // namespace sqem
