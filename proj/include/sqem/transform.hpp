#pragma once

#include <array>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "json.hpp"
#include "sqem/dataset.hpp"

namespace sqem {

/// Elementwise ln or ln(1+x); missing cells stay missing.
/// Throws DataError naming the first offending row (1-based) when a value is
/// outside the domain (x <= 0 for ln, x < 0 for ln1p).
NumericColumn ln_transform(const NumericColumn& column, Transform mode);

/// Inverse of the declared transform (exp or expm1).
double inverse_transform(double value, Transform mode);

/// Applies every variable's declared transform; errors name the variable and row.
Dataset apply_transforms(const Dataset& ds);

/// The 14 General System Characteristic ratings, each in 0..5.
class GscVector {
 public:
  static constexpr std::size_t kSize = 14;
  explicit GscVector(std::span<const int> ratings);

  const std::array<int, kSize>& ratings() const { return ratings_; }
  int total() const;

 private:
  std::array<int, kSize> ratings_{};
};

/// Value adjustment factor 0.65 + 0.01 * (sum of ratings), in [0.65, 1.35].
double compute_vaf(const GscVector& gsc);

struct QQResult {
  /// (theoretical normal quantile, sample order statistic), sorted by the first.
  std::vector<std::pair<double, double>> points;
  double correlation = 0.0;
};

/// Normal QQ pairs using Blom plotting positions (i - 0.375) / (n + 0.25).
QQResult qq_normal(std::span<const double> values);

nlohmann::json to_json(const QQResult& qq);
void write_qq_csv(std::ostream& out, const QQResult& qq);

/// Ranks 1..n with ties sharing the average of their rank span.
std::vector<double> rank_average(std::span<const double> values);

}  // namespace sqem
