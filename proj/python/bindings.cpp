#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "sqem/config.hpp"
#include "sqem/error.hpp"
#include "sqem/evaluation.hpp"
#include "sqem/fixtures.hpp"
#include "sqem/numerics.hpp"
#include "sqem/pipeline.hpp"
#include "sqem/screening.hpp"
#include "sqem/synthetic.hpp"
#include "sqem/transform.hpp"

namespace py = pybind11;
using namespace sqem;

namespace {

std::string run(const std::filesystem::path& config, std::optional<std::string> stage,
                std::optional<std::filesystem::path> out_dir, std::optional<std::filesystem::path> data,
                std::optional<std::filesystem::path> model, std::optional<std::uint64_t> seed) {
  const auto cfg = load_config(config);
  RunOptions options{data, out_dir, model, seed};
  const auto result = stage ? run_stage(*stage, cfg, options) : run_pipeline(cfg, options);
  return nlohmann::json{{"report", result.report}, {"summary", result.summary}}.dump();
}

std::string goldens(const std::filesystem::path& manifest) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : verify_goldens(manifest)) {
    nlohmann::json fields = nlohmann::json::array();
    for (const auto& f : r.fields) {
      fields.push_back({{"field", f.field}, {"expected", f.expected}, {"observed", f.observed}, {"delta", f.delta},
                        {"tolerance", f.tolerance}, {"source", f.source}, {"pass", f.pass}});
    }
    out.push_back({{"name", r.name}, {"pass", r.pass()}, {"error", r.error}, {"fields", fields}});
  }
  return out.dump();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.attr("__version__") = SQEM_VERSION;

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<DataError>(m, "DataError", base.ptr());
  py::register_exception<NumericalError>(m, "NumericalError", base.ptr());

  m.def("compute_vaf", [](const std::vector<int>& ratings) { return compute_vaf(GscVector(ratings)); },
        py::arg("ratings"));
  m.def("mmre", [](const std::vector<double>& a, const std::vector<double>& p) { return mmre(a, p); },
        py::arg("actual"), py::arg("predicted"));
  m.def("pred", [](const std::vector<double>& a, const std::vector<double>& p, double level) {
    return pred_at(a, p, level);
  }, py::arg("actual"), py::arg("predicted"), py::arg("m") = 0.25);
  m.def("improvement_percent", &improvement_percent, py::arg("baseline"), py::arg("recalibrated"));
  m.def("kfold_assignment", [](std::size_t n, std::size_t k, std::uint64_t seed) {
    return kfold_plan(n, k, seed).assignment;
  }, py::arg("n"), py::arg("k"), py::arg("seed"));
  m.def("train_size", &train_size, py::arg("n"), py::arg("fraction"));

  m.def("spearman", [](const std::vector<double>& x, const std::vector<double>& y) {
    const auto r = spearman(x, y, "x");
    return py::make_tuple(r.rho, r.p_two_sided);
  }, py::arg("x"), py::arg("y"), "(rho, two-sided p)");
  m.def("anova", [](const std::vector<std::vector<double>>& groups) {
    GroupedSample s;
    s.groups = groups;
    for (std::size_t i = 0; i < groups.size(); ++i) s.labels.push_back(std::to_string(i + 1));
    const auto r = anova_oneway(s);
    return py::make_tuple(r.f_value, r.p, r.df_between, r.df_within);
  }, py::arg("groups"), "(F, p, df_between, df_within)");
  m.def("t_cdf", &numerics::t_cdf, py::arg("x"), py::arg("df"));
  m.def("f_cdf", &numerics::f_cdf, py::arg("x"), py::arg("df1"), py::arg("df2"));
  m.def("studentized_range_cdf", &numerics::studentized_range_cdf, py::arg("q"), py::arg("k"), py::arg("df"));
  m.def("derive_seed", &numerics::Prng::derive_seed, py::arg("parent"), py::arg("index"));

  m.def("stage_names", &stage_names);
  m.def("_run", &run, py::arg("config"), py::arg("stage") = py::none(), py::arg("out_dir") = py::none(),
        py::arg("data") = py::none(), py::arg("model") = py::none(), py::arg("seed") = py::none(),
        py::call_guard<py::gil_scoped_release>());
  m.def("_verify_goldens", &goldens, py::arg("manifest"));
}
