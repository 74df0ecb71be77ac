#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace sqem {

struct FieldCheck {
  std::string field;
  nlohmann::json expected;
  nlohmann::json observed;
  double tolerance = 0.0;
  double delta = 0.0;  // |observed - expected| for numbers
  std::string source;  // published | derived | trivial
  bool pass = false;
};

struct FixtureResult {
  std::string name;
  std::vector<FieldCheck> fields;
  std::string error;  // set when the fixture could not run or is malformed
  bool pass() const;
};

/// Evaluates one fixture's command and returns its observable fields.
///
/// Commands: predict, vaf, metrics, kfold, spearman, anova, pipeline.
nlohmann::json run_fixture(const nlohmann::json& fixture, const std::filesystem::path& base_dir);

/// Re-runs every fixture in the manifest and compares each expected field
/// within its tolerance. Fields without a source tag fail.
std::vector<FixtureResult> verify_goldens(const nlohmann::json& manifest, const std::filesystem::path& base_dir);
std::vector<FixtureResult> verify_goldens(const std::filesystem::path& manifest_path);

/// One line per field: PASS/FAIL, fixture.field, expected, observed, delta.
std::string render_results(const std::vector<FixtureResult>& results);

}  // namespace sqem
