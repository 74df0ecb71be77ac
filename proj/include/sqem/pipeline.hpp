#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "sqem/config.hpp"

namespace sqem {

struct RunOptions {
  std::optional<std::filesystem::path> data_path;   // overrides the config's data source
  std::optional<std::filesystem::path> out_dir;     // overrides env and config
  std::optional<std::filesystem::path> model_path;  // model.json for recalibrate/evaluate
  std::optional<std::uint64_t> seed;
};

struct RunResult {
  nlohmann::json report;
  std::string summary;
  std::vector<std::filesystem::path> written;
};

const std::vector<std::string>& stage_names();

/// --out, then $SQEM_OUT_DIR, then the config's output_dir.
std::filesystem::path resolve_output_dir(const PipelineConfig& config, const RunOptions& options);

/// prepare -> screen -> tree -> fit -> recalibrate -> evaluate. Writes
/// report.json, model.json, quantifications.json, qq.csv, tree.txt and
/// prepared.csv. Errors carry the failing step in their message.
RunResult run_pipeline(const PipelineConfig& config, const RunOptions& options = {});

/// Runs one stage; unknown names raise ConfigError listing the valid ones.
RunResult run_stage(std::string_view stage, const PipelineConfig& config, const RunOptions& options = {});

/// Writes via a temporary file and rename.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace sqem
