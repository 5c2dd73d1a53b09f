#include <sstream>

#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "isosr/config.hpp"
#include "isosr/runner.hpp"

namespace py = pybind11;
using namespace isosr;

namespace {

py::object limit_value(const LimitValue& v) {
  switch (v.kind) {
    case LimitValue::Kind::Finite:
      return py::float_(v.value);
    case LimitValue::Kind::PlusInfinity:
      return py::float_(std::numeric_limits<double>::infinity());
    case LimitValue::Kind::MinusInfinity:
      return py::float_(-std::numeric_limits<double>::infinity());
    default:
      return py::none();
  }
}

py::dict verdict_dict(const ConstraintVerdict& v) {
  py::dict d;
  d["c1"] = v.c1_pass;
  d["c2"] = v.c2_pass;
  d["c3"] = v.c3_pass;
  d["timed_out"] = py::make_tuple(v.timed_out[0], v.timed_out[1], v.timed_out[2]);
  d["value_limit"] = limit_value(v.value_limit);
  d["slope_limit"] = limit_value(v.slope_limit);
  return d;
}

py::list front_list(const ParetoFront& f) {
  py::list out;
  for (const auto& [c, m] : f.entries()) {
    py::dict d;
    d["complexity"] = c;
    d["loss"] = m.loss;
    d["canonical"] = m.canonical;
    d["expression"] = render(m.expr);
    d["params"] = m.params;
    d["canonical_params"] = m.canonical_params;
    if (m.verdict) d["verdict"] = verdict_dict(*m.verdict);
    out.append(d);
  }
  return out;
}

Dataset make_dataset(const std::vector<double>& pressures, const std::vector<double>& loadings,
                     const std::string& name) {
  if (pressures.size() != loadings.size()) throw std::invalid_argument("pressures and loadings differ in length");
  std::ostringstream csv;
  csv.precision(17);
  csv << "pressure,loading\n";
  for (std::size_t i = 0; i < pressures.size(); ++i) csv << pressures[i] << "," << loadings[i] << "\n";
  std::istringstream in(csv.str());
  return read_csv(in, name);
}

}  // namespace

PYBIND11_MODULE(_isosr, m) {
  m.doc() = "Constrained symbolic regression for adsorption isotherms";
  m.attr("__version__") = ISOSR_VERSION;

  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<DatasetError>(m, "DatasetError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  py::class_<Expr>(m, "Expr")
      .def(py::init([](const std::string& text) { return parse(text); }), py::arg("text"))
      .def("__str__", [](const Expr& e) { return render(e); })
      .def("__repr__", [](const Expr& e) { return "Expr('" + render(e) + "')"; })
      .def("__eq__", [](const Expr& a, const Expr& b) { return a == b; })
      .def_property_readonly("complexity", [](const Expr& e) { return complexity(e); })
      .def_property_readonly("parameters", [](const Expr& e) { return e.max_param_index(); })
      .def(
          "__call__",
          [](const Expr& e, const std::vector<double>& params, double p) -> py::object {
            auto v = evaluate(e, params, p);
            return v ? py::object(py::float_(*v)) : py::none();
          },
          py::arg("params"), py::arg("p"))
      .def("derivative", [](const Expr& e) { return differentiate(e); })
      .def("simplified", [](const Expr& e) { return simplify(e); });

  m.def("parse", &parse, py::arg("text"));

  m.def(
      "canonical_form",
      [](const Expr& e, std::optional<std::vector<double>> params) {
        CanonicalForm c = params ? canonical_form(e, std::span<const double>(*params)) : canonical_form(e);
        py::dict d;
        d["text"] = c.text;
        d["expr"] = c.tree;
        d["complexity"] = c.complexity;
        d["parameters"] = c.parameter_count;
        d["rational"] = c.rational;
        d["unreliable"] = c.unreliable;
        d["coefficients"] = c.coefficients;
        d["exact_coefficients"] = c.exact_coefficients;
        return d;
      },
      py::arg("expr"), py::arg("params") = py::none());

  m.def(
      "check",
      [](const Expr& e, const std::vector<double>& params, double start, double stop, double budget_ms) {
        MonotonicityOptions range;
        range.start = start;
        range.stop = stop;
        py::gil_scoped_release release;
        auto v = check_all(e, params, std::chrono::microseconds(static_cast<long long>(budget_ms * 1000)), range);
        py::gil_scoped_acquire acquire;
        return verdict_dict(v);
      },
      py::arg("expr"), py::arg("params") = std::vector<double>{}, py::arg("start") = 1e-8, py::arg("stop") = 1e3,
      py::arg("budget_ms") = 100.0);

  m.def(
      "catalog",
      [] {
        py::list out;
        for (const auto& model : catalog()) {
          py::dict d;
          d["name"] = model.name;
          d["literature"] = model.literature;
          d["sr_form"] = render(model.sr_form);
          d["complexity"] = model.complexity;
          out.append(d);
        }
        return out;
      });

  m.def(
      "synthesize",
      [](const std::string& model, const std::vector<double>& params, double sigma, std::uint64_t seed, double lo,
         double hi, int count) {
        Rng rng(seed);
        const Dataset d = synthesize(catalog_model(model), params, GridSpec{lo, hi, count, true}, sigma, rng);
        return py::make_tuple(d.pressures(), d.loadings());
      },
      py::arg("model") = "langmuir", py::arg("params") = std::vector<double>{5.0, 2.0}, py::arg("sigma") = 0.0,
      py::arg("seed") = 7, py::arg("lo") = 0.01, py::arg("hi") = 100.0, py::arg("count") = 20);

  m.def(
      "fit",
      [](const Expr& e, const std::vector<double>& pressures, const std::vector<double>& loadings, int restarts,
         std::uint64_t seed) {
        const Dataset d = make_dataset(pressures, loadings, "data");
        FitOptions o;
        o.restarts = restarts;
        Rng rng(seed);
        FitResult r;
        {
          py::gil_scoped_release release;
          r = fit_constants(e, d, rng, o);
        }
        py::dict out;
        out["params"] = r.params;
        out["loss"] = r.loss;
        out["converged"] = r.converged;
        return out;
      },
      py::arg("expr"), py::arg("pressures"), py::arg("loadings"), py::arg("restarts") = 8, py::arg("seed") = 1);

  m.def("default_config", [] { return format_config(RunConfig{}); });

  m.def(
      "search",
      [](const std::string& config_text, std::optional<std::string> out_dir) {
        std::istringstream in(config_text);
        RunConfig cfg = parse_config(in);
        SearchResult r;
        {
          py::gil_scoped_release release;
          const Dataset d = load_dataset(cfg.dataset);
          r = run_search(cfg, d);
          if (out_dir) {
            cfg.out_dir = *out_dir;
            write_outputs(cfg, r, format_config(cfg));
          }
        }
        py::dict out;
        out["merged"] = front_list(r.merged);
        py::list runs;
        for (const auto& f : r.fronts) runs.append(front_list(f));
        out["runs"] = runs;
        py::dict rates;
        rates["expressions"] = r.rates.expressions;
        rates["c1"] = r.rates.c1_fraction();
        rates["c2"] = r.rates.c2_fraction();
        rates["c3"] = r.rates.c3_fraction();
        rates["constraints_active"] = r.rates.constraints_active;
        out["pass_rates"] = rates;
        return out;
      },
      py::arg("config"), py::arg("out_dir") = py::none(),
      "Run a search from INI text (the format written to manifest.ini).");
}
