// Re-runs every golden fixture in a manifest and reports per-field deltas.

#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "sqem/error.hpp"
#include "sqem/fixtures.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Verify golden fixtures"};
  std::string manifest = "fixtures/manifest.json";
  app.add_option("manifest", manifest, "Fixture manifest (JSON)");
  CLI11_PARSE(app, argc, argv);

  try {
    const auto results = sqem::verify_goldens(manifest);
    std::cout << sqem::render_results(results);
    std::size_t failed = 0;
    for (const auto& r : results) failed += r.pass() ? 0 : 1;
    std::cout << results.size() - failed << "/" << results.size() << " fixtures passed\n";
    return failed == 0 ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "sqem_goldens: " << e.what() << "\n";
    return 1;
  }
}
