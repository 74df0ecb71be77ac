// sqem: batch driver for the defect-model pipeline.
//
//   sqem --config cfg.json                 full pipeline
//   sqem --config cfg.json --stage screen  one stage
//
// Exit codes: 0 ok, 1 usage/config, 2 data, 3 numerical.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "sqem/config.hpp"
#include "sqem/error.hpp"
#include "sqem/pipeline.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Software quality estimation pipeline"};
  std::string config_path;
  std::optional<std::string> data, out, stage, model;
  std::optional<std::uint64_t> seed;
  bool quiet = false;

  std::string stages;
  for (const auto& s : sqem::stage_names()) stages += (stages.empty() ? "" : " | ") + s;

  app.add_option("--config", config_path, "Pipeline config (JSON)")->required();
  app.add_option("--data", data, "CSV data file; overrides the config's data source");
  app.add_option("--out", out, "Output directory (overrides $SQEM_OUT_DIR and the config)");
  app.add_option("--seed", seed, "Master seed (overrides the config)");
  app.add_option("--stage", stage, "Run a single stage: " + stages);
  app.add_option("--model", model, "model.json from the fit stage (recalibrate, evaluate)");
  app.add_flag("-q,--quiet", quiet, "Do not print the summary");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    const auto config = sqem::load_config(config_path);
    sqem::RunOptions options;
    if (data) options.data_path = *data;
    if (out) options.out_dir = *out;
    if (model) options.model_path = *model;
    options.seed = seed;
    const auto result = stage ? sqem::run_stage(*stage, config, options) : sqem::run_pipeline(config, options);
    if (!quiet) std::cout << result.summary;
    return 0;
  } catch (const sqem::ConfigError& e) {
    std::cerr << "sqem: config error: " << e.what() << "\n";
    return 1;
  } catch (const sqem::DataError& e) {
    std::cerr << "sqem: data error: " << e.what() << "\n";
    return 2;
  } catch (const sqem::NumericalError& e) {
    std::cerr << "sqem: numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "sqem: " << e.what() << "\n";
    return 1;
  }
}
