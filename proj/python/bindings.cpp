#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "tscp/harness.hpp"
#include "tscp/report.hpp"

namespace py = pybind11;
using namespace tscp;

namespace {

TimeSeries make_series(const std::string& id, const std::vector<double>& values, const std::string& freq) {
  return TimeSeries(id, Timestamp{}, Frequency::parse(freq), values);
}

std::vector<double> to_vector(const ConformityScores& scores) {
  return {scores.scores().begin(), scores.scores().end()};
}

py::dict row_dict(const harness::ResultRow& r) {
  py::dict d;
  d["dataset"] = r.dataset;
  d["horizon"] = r.horizon_label;
  d["estimator"] = r.estimator;
  d["mase"] = r.mase;
  d["mcr"] = r.mcr;
  d["iw"] = r.iw;
  d["msiw"] = r.msiw;
  d["n_units"] = r.n_units;
  d["failures"] = r.failures;
  return d;
}

}  // namespace

PYBIND11_MODULE(_tscp, m) {
  m.doc() = "Conformal prediction intervals for time series forecasters";
  py::register_exception<Error>(m, "TscpError", PyExc_RuntimeError);

  py::class_<UncertaintyThreshold>(m, "UncertaintyThreshold")
      .def_readonly("q_hat", &UncertaintyThreshold::q_hat)
      .def_readonly("level", &UncertaintyThreshold::level)
      .def_readonly("calibration_size", &UncertaintyThreshold::calibration_size)
      .def("__repr__", [](const UncertaintyThreshold& t) {
        return "UncertaintyThreshold(q_hat=" + std::to_string(t.q_hat) + ", level=" +
               std::to_string(t.level) + ", n=" + std::to_string(t.calibration_size) + ")";
      });

  m.def("corrected_rank",
        [](std::size_t n, double alpha) { return conformal::corrected_rank(n, MiscoverageRate(alpha)); },
        py::arg("n"), py::arg("alpha") = 0.1);

  m.def("uncertainty_threshold",
        [](const std::vector<double>& scores, double alpha) {
          return conformal::uncertainty_threshold(std::span<const double>(scores), MiscoverageRate(alpha));
        },
        py::arg("scores"), py::arg("alpha") = 0.1);

  m.def("conformity_scores",
        [](const std::vector<double>& predicted, const std::vector<double>& actual) {
          return to_vector(conformal::conformity_scores(Forecast(predicted), actual));
        },
        py::arg("predicted"), py::arg("actual"));

  m.def("build_interval",
        [](const std::vector<double>& center, double q_hat) {
          UncertaintyThreshold t;
          t.q_hat = q_hat;
          const auto iv = conformal::build_interval(Forecast(center), t);
          return py::make_tuple(iv.lower, iv.upper);
        },
        py::arg("center"), py::arg("q_hat"), "Returns (lower, upper).");

  m.def("rolling_window_count", &conformal::rolling_window_count, py::arg("n"), py::arg("context_length"),
        py::arg("horizon"));

  m.def("rolling_calibrate",
        [](const std::vector<double>& values, const std::string& forecaster, std::size_t context_length,
           int horizon, const std::string& freq, int season_length) {
          const auto series = make_series("series", values, freq);
          auto handle = forecasters::ForecasterHandle::make(forecaster, forecasters::parse_forecaster_kind(forecaster));
          auto model = harness::make_forecaster(handle);
          return to_vector(conformal::rolling_calibrate(series, *model, context_length, horizon, season_length));
        },
        py::arg("values"), py::arg("forecaster") = "naive", py::arg("context_length") = 1,
        py::arg("horizon") = 1, py::arg("freq") = "H", py::arg("season_length") = 0,
        "Rolling-window conformity scores for a built-in forecaster.");

  m.def("coverage_rate",
        [](const std::vector<double>& actual, const std::vector<double>& lower, const std::vector<double>& upper) {
          PredictionInterval iv{lower, upper, Forecast(std::vector<double>(actual.size(), 0.0))};
          return metrics::coverage_rate(actual, iv);
        },
        py::arg("actual"), py::arg("lower"), py::arg("upper"));

  m.def("mase_msiw",
        [](const std::vector<std::tuple<double, double>>& model, const std::vector<std::tuple<double, double>>& naive) {
          // (iw, mae) per unit, paired by position.
          std::vector<metrics::EvaluationRecord> a;
          std::vector<metrics::EvaluationRecord> b;
          for (std::size_t i = 0; i < model.size(); ++i) {
            a.push_back({"u" + std::to_string(i), 0.0, std::get<0>(model[i]), std::get<1>(model[i])});
          }
          for (std::size_t i = 0; i < naive.size(); ++i) {
            b.push_back({"u" + std::to_string(i), 0.0, std::get<0>(naive[i]), std::get<1>(naive[i])});
          }
          return py::make_tuple(metrics::mase(a, b), metrics::msiw(a, b));
        },
        py::arg("model"), py::arg("naive"), "Takes lists of (iw, mae) per unit; returns (mase, msiw).");

  m.def("run_experiment",
        [](const std::filesystem::path& config_path, std::optional<std::filesystem::path> data,
           std::optional<std::string> threshold, std::optional<std::uint64_t> seed) {
          auto config = harness::ExperimentConfig::load(config_path);
          if (data) config.dataset.path = *data;
          if (threshold) config.threshold_mode = conformal::parse_threshold_mode(*threshold);
          if (seed) config.override_seed(*seed);
          harness::ExperimentResult result;
          {
            py::gil_scoped_release release;
            result = harness::run_experiment(config);
          }
          py::list rows;
          for (const auto& r : result.rows) rows.append(row_dict(r));
          return rows;
        },
        py::arg("config"), py::arg("data") = py::none(), py::arg("threshold") = py::none(),
        py::arg("seed") = py::none(), "Runs a config file and returns one dict per result row.");

  m.def("read_results", [](const std::filesystem::path& path) {
    py::list rows;
    for (const auto& r : report::read_results_json(path)) rows.append(row_dict(r));
    return rows;
  });
}
