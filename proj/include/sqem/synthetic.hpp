#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "json.hpp"
#include "sqem/dataset.hpp"

namespace sqem {

/// ln(Defects) = intercept + fp*ln(FP) + vaf*VAF + enhancement*[Enhancement]
struct DefectModel {
  double intercept = -5.939;
  double ln_fp = 0.704;
  double vaf = 6.011;
  double enhancement = -1.480;
};

struct SyntheticConfig {
  std::size_t n = 64;
  double noise_sd = 0.3;
  double ln_fp_mean = 5.5;
  double ln_fp_sd = 1.0;
  std::vector<double> vaf_levels{0.65, 0.90, 1.00, 1.10, 1.35};
  /// Each level's effect in the true model is shifted by U(-max, max).
  double vaf_shift_max = 0.0;
  /// New Development, Re-development, Enhancement.
  std::vector<double> dev_type_weights{0.45, 0.15, 0.40};
  double efforts_spearman = 0.62;
  double ln_efforts_mean = 8.0;
  double ln_efforts_sd = 1.0;
  /// Loading of ln(MaxTeamSize) on the standardized effort score.
  double team_link = 0.3;
  /// Share of rows rated C or D for data quality and FP counting.
  double low_quality_fraction = 0.0;
  /// Share of rows with no defect count.
  double missing_defects_fraction = 0.0;
  DefectModel model;
};

void validate(const SyntheticConfig& config);

struct SyntheticData {
  Dataset data;  // raw units, transforms declared but not applied
  nlohmann::json metadata;
  std::vector<double> vaf_shifts;  // per level
};

/// Schema: ProjectId, DataQuality, FpRating, Defects, FunctionPoints, VAF,
/// Efforts, MaxTeamSize, DevType, Platform. Platform has no effect on Defects.
SyntheticData generate_synthetic(const SyntheticConfig& config, std::uint64_t seed);

std::vector<VariableSpec> synthetic_schema();

SyntheticConfig synthetic_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SyntheticConfig& config);

}  // namespace sqem
