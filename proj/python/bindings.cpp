#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "json.hpp"
#include "llp/analysis.hpp"
#include "llp/inner_solver.hpp"
#include "llp/runner.hpp"

namespace py = pybind11;
using nlohmann::json;

namespace {

llp::Vector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const llp::Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<double> column(const llp::RunResult& r, double (*get)(const llp::RoundRecord&)) {
  std::vector<double> out;
  out.reserve(r.records.size());
  for (const auto& rec : r.records) out.push_back(get(rec));
  return out;
}

py::dict result_dict(const llp::RunConfig& config, const llp::RunResult& r) {
  py::dict d;
  d["summary"] = llp::summarize(config, r).dump();
  d["t"] = column(r, [](const llp::RoundRecord& x) { return double(x.t); });
  d["f_value"] = column(r, [](const llp::RoundRecord& x) { return x.f_value; });
  d["lambda_norm"] = column(r, [](const llp::RoundRecord& x) { return x.lambda.norm(); });
  d["a_t"] = column(r, [](const llp::RoundRecord& x) { return x.a; });
  d["sigma_cum"] = column(r, [](const llp::RoundRecord& x) { return x.sigma_cum; });
  d["h"] = column(r, [](const llp::RoundRecord& x) { return x.h; });
  d["xi"] = column(r, [](const llp::RoundRecord& x) { return x.xi; });
  d["cum_cost"] = r.metrics.cum_cost;
  d["regret"] = r.metrics.regret;
  d["violation"] = r.metrics.violation;
  d["bound_B_t"] = r.bound_path;
  std::vector<std::vector<double>> xs;
  for (const auto& rec : r.records) xs.emplace_back(rec.x.data(), rec.x.data() + rec.x.size());
  d["x"] = xs;
  return d;
}

}  // namespace

PYBIND11_MODULE(_llp, m) {
  py::register_exception<llp::ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<llp::UnsupportedScenarioError>(m, "UnsupportedScenarioError",
                                                        PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const json::exception& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    }
  });

  m.def("run_json", [](const std::string& text) {
    const llp::RunConfig config = llp::parse_run_config(json::parse(text));
    llp::RunResult result;
    {
      py::gil_scoped_release release;
      result = llp::execute(config);
    }
    if (!config.output.path.empty()) llp::write_run_outputs(config, result);
    return result_dict(config, result);
  });

  m.def("normalize_config_json", [](const std::string& text) {
    return llp::to_json(llp::parse_run_config(json::parse(text))).dump();
  });

  m.def("sweep_json", [](const std::string& text, int workers) {
    const llp::SweepConfig config = llp::parse_sweep_config(json::parse(text));
    llp::SweepResult result;
    {
      py::gil_scoped_release release;
      result = llp::run_sweep(config, workers);
    }
    return py::make_tuple(llp::render_sweep_csv(result), llp::render_fits_csv(result));
  }, py::arg("text"), py::arg("workers") = 0);

  m.def("compare_json", [](const std::vector<std::string>& texts, int record_every,
                           int workers) {
    std::vector<llp::RunConfig> configs;
    for (const auto& t : texts) configs.push_back(llp::parse_run_config(json::parse(t)));
    llp::CompareResult result;
    {
      py::gil_scoped_release release;
      result = llp::run_compare(configs, workers);
    }
    return py::make_tuple(result.labels, llp::render_compare_csv(result, record_every));
  }, py::arg("texts"), py::arg("record_every") = 1, py::arg("workers") = 0);

  m.def("dual_closed_form", [](double rate, const std::vector<double>& cumulative,
                               const std::vector<double>& predicted) {
    const llp::Vector l = llp::dual_closed_form(rate, to_vector(cumulative), to_vector(predicted));
    return std::vector<double>(l.data(), l.data() + l.size());
  });

  m.def("fit_growth_exponent",
        [](const std::vector<std::pair<double, double>>& samples, double fraction) {
          const llp::GrowthFit f = llp::fit_growth_exponent(samples, fraction);
          py::dict d;
          d["exponent"] = f.exponent;
          d["intercept"] = f.intercept;
          d["r_squared"] = f.r_squared;
          d["used"] = f.used;
          d["dropped"] = f.dropped;
          return d;
        },
        py::arg("samples"), py::arg("fraction") = 0.5);
}
