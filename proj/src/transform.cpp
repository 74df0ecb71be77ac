#include "sqem/transform.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <string>

#include "detail.hpp"
#include "sqem/error.hpp"
#include "sqem/numerics.hpp"

namespace sqem {

NumericColumn ln_transform(const NumericColumn& column, Transform mode) {
  NumericColumn out = column;
  if (mode == Transform::none) return out;
  for (std::size_t i = 0; i < column.size(); ++i) {
    if (column.missing[i]) continue;
    const double v = column.values[i];
    if (mode == Transform::ln) {
      if (!(v > 0.0)) {
        throw DataError("ln transform needs positive values; row " + std::to_string(i + 1) +
                        " has " + detail::format_double(v));
      }
      out.values[i] = std::log(v);
    } else {
      if (!(v >= 0.0)) {
        throw DataError("ln1p transform needs nonnegative values; row " + std::to_string(i + 1) +
                        " has " + detail::format_double(v));
      }
      out.values[i] = std::log1p(v);
    }
  }
  return out;
}

double inverse_transform(double value, Transform mode) {
  switch (mode) {
    case Transform::ln: return std::exp(value);
    case Transform::ln1p: return std::expm1(value);
    case Transform::none: break;
  }
  return value;
}

Dataset apply_transforms(const Dataset& ds) {
  if (ds.transformed()) throw ConfigError("apply_transforms: dataset is already transformed");
  Dataset out = ds.with_transformed(true);
  for (std::size_t c = 0; c < ds.column_count(); ++c) {
    const auto& spec = ds.spec(c);
    if (spec.transform == Transform::none) continue;
    NumericColumn transformed;
    try {
      transformed = ln_transform(ds.numeric_column(spec.name), spec.transform);
    } catch (const DataError& e) {
      throw DataError("variable '" + spec.name + "': " + e.what());
    }
    out = out.with_column(c, spec, std::move(transformed.values), std::move(transformed.missing));
  }
  return out;
}

GscVector::GscVector(std::span<const int> ratings) {
  if (ratings.size() != kSize) {
    throw ConfigError("GSC vector needs exactly 14 ratings, got " + std::to_string(ratings.size()));
  }
  for (std::size_t i = 0; i < kSize; ++i) {
    if (ratings[i] < 0 || ratings[i] > 5) {
      throw ConfigError("GSC rating " + std::to_string(i + 1) + " out of range 0..5: " +
                        std::to_string(ratings[i]));
    }
    ratings_[i] = ratings[i];
  }
}

int GscVector::total() const { return std::accumulate(ratings_.begin(), ratings_.end(), 0); }

double compute_vaf(const GscVector& gsc) {
  // Integer numerator keeps the endpoints exact: 65/100 and 135/100.
  return static_cast<double>(65 + gsc.total()) / 100.0;
}

QQResult qq_normal(std::span<const double> values) {
  if (values.size() < 3) {
    throw DataError("qq_normal needs at least 3 values, got " + std::to_string(values.size()));
  }
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  QQResult out;
  std::vector<double> theo(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    theo[i] = numerics::normal_quantile((static_cast<double>(i + 1) - 0.375) / (n + 0.25));
    out.points.emplace_back(theo[i], sorted[i]);
  }
  const double r = detail::pearson(theo, sorted);
  out.correlation = std::isnan(r) ? 0.0 : std::clamp(r, -1.0, 1.0);
  return out;
}

nlohmann::json to_json(const QQResult& qq) {
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& [t, s] : qq.points) pts.push_back({t, s});
  return {{"correlation", qq.correlation}, {"points", std::move(pts)}};
}

void write_qq_csv(std::ostream& out, const QQResult& qq) {
  out << "theoretical,sample\n";
  for (const auto& [t, s] : qq.points) {
    out << detail::format_double(t) << ',' << detail::format_double(s) << '\n';
  }
}

std::vector<double> rank_average(std::span<const double> values) {
  if (values.empty()) throw ConfigError("rank_average: empty input");
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    // positions i..j share ranks i+1..j+1
    const double avg = 0.5 * static_cast<double>(i + j + 2);
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = avg;
    i = j + 1;
  }
  return ranks;
}

}  // namespace sqem
