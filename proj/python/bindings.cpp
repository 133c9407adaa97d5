#include <cmath>
#include <limits>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ltce/experiment.hpp"

namespace py = pybind11;
using namespace ltce;

namespace {

using KeyValues = std::map<std::string, std::string>;

// Python values arrive as strings so they go through the same parser as
// config files.
KeyValues to_key_values(const py::dict& options) {
  KeyValues kv;
  for (const auto& [k, v] : options) {
    kv[py::str(k)] = py::isinstance<py::bool_>(v) ? (v.cast<bool>() ? "true" : "false") : std::string(py::str(v));
  }
  return kv;
}

// Stage columns with NaN marking a missing value.
Matrix dense_outcomes(const LongTermDataset& ds) {
  Matrix m(ds.size(), ds.stages());
  for (int t = 1; t <= ds.stages(); ++t) {
    const auto& col = ds.outcome(t);
    for (Index i = 0; i < ds.size(); ++i) {
      const auto& v = col[static_cast<std::size_t>(i)];
      m(i, t - 1) = v ? *v : std::numeric_limits<double>::quiet_NaN();
    }
  }
  return m;
}

LongTermDataset from_dense(const Matrix& x, const IntVector& a, const Matrix& outcomes) {
  if (outcomes.rows() != x.rows()) throw std::invalid_argument("outcomes and covariates differ in rows");
  std::vector<OutcomeColumn> cols(static_cast<std::size_t>(outcomes.cols()));
  for (Index t = 0; t < outcomes.cols(); ++t) {
    auto& c = cols[static_cast<std::size_t>(t)];
    c.resize(static_cast<std::size_t>(outcomes.rows()));
    for (Index i = 0; i < outcomes.rows(); ++i) {
      if (!std::isnan(outcomes(i, t))) c[static_cast<std::size_t>(i)] = outcomes(i, t);
    }
  }
  return LongTermDataset::from_outcomes(x, a, std::move(cols));
}

py::dict simulate_py(const py::dict& options) {
  const ExperimentConfig cfg = build_config(to_key_values(options), false);
  const SyntheticSample s = simulate(cfg.dgp_at(cfg.grid().front()));
  py::dict out;
  out["x"] = s.data.covariates();
  out["a"] = s.data.treatment();
  out["outcomes"] = dense_outcomes(s.data);
  out["observed"] = s.data.observed().cast<int>().eval();
  out["potential_y"] = s.truth.long_term;
  out["tau_x"] = s.truth.tau_x;
  out["tau"] = s.truth.tau;
  out["propensity"] = s.propensity;
  return out;
}

py::dict estimate_py(const std::string& method, const Matrix& x, const IntVector& a, const Matrix& outcomes,
                     std::uint64_t seed, const py::dict& options) {
  const ExperimentConfig cfg = build_config(to_key_values(options), false);
  EstimatorConfig est = cfg.estimators_at(cfg.grid().front());
  est.seed = seed;
  const LongTermDataset ds = from_dense(x, a, outcomes);
  EffectEstimate e;
  {
    py::gil_scoped_release release;
    e = estimate(method, ds, nullptr, est);
  }
  py::dict out;
  out["method"] = e.method;
  out["tau_hat"] = e.tau_hat;
  out["cate_hat"] = e.cate_hat;
  out["diagnostics"] = e.diagnostics;
  return out;
}

py::dict t_test_py(const std::vector<double>& a, const std::vector<double>& b) {
  const TTest t = paired_t_test(a, b);
  py::dict out;
  out["t"] = t.t;
  out["p"] = t.p;
  out["df"] = t.df;
  out["degenerate"] = t.degenerate;
  return out;
}

std::size_t run_py(const std::string& config, const std::string& out, const std::vector<std::string>& overrides,
                   int jobs) {
  const ExperimentConfig cfg = load_config(config, overrides);
  RunOptions opts;
  opts.jobs = jobs;
  py::gil_scoped_release release;
  return run_experiment(cfg, out, opts).size();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Long-term treatment effects under monotone missing outcomes";
  m.attr("__version__") = LTCE_VERSION;
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);

  m.def("methods", &method_tags, "Estimator tags accepted by estimate().");
  m.def("simulate", &simulate_py, py::arg("options") = py::dict(),
        "Draw one synthetic panel. Options use the config-file keys (style, n, gamma, seed, ...).\n"
        "Returns x, a, outcomes (NaN where missing), observed, potential_y, tau_x, tau and propensity.");
  m.def("estimate", &estimate_py, py::arg("method"), py::arg("x"), py::arg("a"), py::arg("outcomes"),
        py::arg("seed") = 0, py::arg("options") = py::dict(),
        "Fit one estimator. `outcomes` is n x T with NaN for missing values; options use the config-file keys.");
  m.def("eps_ate", &eps_ate, py::arg("cate_hat"), py::arg("true_diff"));
  m.def("eps_cate", &eps_cate, py::arg("cate_hat"), py::arg("tau_x"));
  m.def("paired_t_test", &t_test_py, py::arg("a"), py::arg("b"));
  m.def("run", &run_py, py::arg("config"), py::arg("out"), py::arg("overrides") = std::vector<std::string>{},
        py::arg("jobs") = 1, "Run an experiment config; returns the number of result records.");
}
