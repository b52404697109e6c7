#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <optional>

#include "wfbm/errors.hpp"
#include "wfbm/experiment.hpp"
#include "wfbm/malliavin.hpp"
#include "wfbm/sdde.hpp"
#include "wfbm/skorokhod.hpp"

namespace py = pybind11;
using namespace wfbm;

namespace {

PiecewiseConstantFn pcf(std::vector<double> grid, std::vector<double> values) {
  PiecewiseConstantFn f{std::move(grid), std::move(values)};
  f.validate();
  return f;
}

Scheme scheme_of(const std::string& s) {
  if (s == "euler") return Scheme::euler;
  if (s == "stepwise") return Scheme::stepwise;
  throw DomainError("scheme must be 'euler' or 'stepwise'");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Weighted fractional Brownian motion: kernel, sampler, delay equation solver";

  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DegenerateSampleError>(m, "DegenerateSampleError", PyExc_ValueError);

  py::class_<WfbmParams>(m, "Params")
      .def(py::init<double, double>(), py::arg("a"), py::arg("b"))
      .def_property_readonly("a", &WfbmParams::a)
      .def_property_readonly("b", &WfbmParams::b)
      .def_property_readonly("hurst", &WfbmParams::hurst)
      .def("__repr__", [](const WfbmParams& p) {
        return "Params(a=" + std::to_string(p.a()) + ", b=" + std::to_string(p.b()) + ")";
      });

  m.def("covariance", [](double t, double s, double a, double b) { return kernel::covariance(t, s, WfbmParams(a, b)); },
        py::arg("t"), py::arg("s"), py::arg("a"), py::arg("b"));
  m.def("variance", [](double t, double a, double b) { return kernel::variance(t, WfbmParams(a, b)); },
        py::arg("t"), py::arg("a"), py::arg("b"));
  m.def("phi", [](double t, double s, double a, double b) { return kernel::phi(t, s, WfbmParams(a, b)); },
        py::arg("t"), py::arg("s"), py::arg("a"), py::arg("b"));
  m.def(
      "hilbert_inner",
      [](std::vector<double> ug, std::vector<double> uv, std::vector<double> vg, std::vector<double> vv, double a,
         double b) {
        return kernel::hilbert_inner(pcf(std::move(ug), std::move(uv)), pcf(std::move(vg), std::move(vv)),
                                     WfbmParams(a, b));
      },
      py::arg("u_grid"), py::arg("u_values"), py::arg("v_grid"), py::arg("v_values"), py::arg("a"), py::arg("b"));

  m.def(
      "sample",
      [](double a, double b, double tau, int steps_per_delay, double T, std::size_t n_paths, std::uint64_t seed,
         unsigned threads) {
        const TimeGrid g(tau, steps_per_delay, T);
        const WfbmParams p(a, b);
        RowMatrix paths;
        {
          py::gil_scoped_release nogil;
          paths = sampler::sample(g, p, n_paths, seed, threads).paths;
        }
        return py::make_tuple(g.times(), paths);
      },
      py::arg("a"), py::arg("b"), py::arg("tau"), py::arg("steps_per_delay"), py::arg("T"), py::arg("n_paths"),
      py::arg("seed"), py::arg("threads") = 0, "Returns (times, paths) with paths of shape (n_paths, N+1).");

  m.def(
      "solve",
      [](double a, double b, double tau, int steps_per_delay, double T, double A, double B, const std::string& f,
         const std::string& sigma, double xi0, std::size_t n_paths, std::uint64_t seed, const std::string& scheme,
         const std::string& representation, unsigned threads) {
        const TimeGrid g(tau, steps_per_delay, T);
        const WfbmParams p(a, b);
        const auto spec = SddeSpec::make(A, B, ScalarFunction::parse(f), ScalarFunction::parse(sigma), tau, xi0, T);
        spec.validate(seed);
        SolverOptions o;
        o.workers = threads;
        if (representation == "paper") o.representation = Representation::paper;
        else if (representation != "wick") throw DomainError("representation must be 'wick' or 'paper'");
        const Scheme s = scheme_of(scheme);
        std::optional<SolveResult> r;
        {
          py::gil_scoped_release nogil;
          const auto e = sampler::sample(g, p, n_paths, seed, threads);
          r = sdde::solve(s, e, spec, p, o);
        }
        py::dict out;
        out["t"] = g.times();
        out["x"] = r->solution.x;
        out["psi"] = r->solution.psi;
        out["gamma"] = r->derivative.gamma;
        return out;
      },
      py::arg("a"), py::arg("b"), py::arg("tau"), py::arg("steps_per_delay"), py::arg("T"), py::arg("A"), py::arg("B"),
      py::arg("f") = "const(0)", py::arg("sigma") = "const(0)", py::arg("xi0") = 1.0, py::arg("n_paths") = 1000,
      py::arg("seed") = 1, py::arg("scheme") = "euler", py::arg("representation") = "wick", py::arg("threads") = 0,
      "Solves the delay equation on sampled paths; returns a dict with t, x, psi and the Malliavin covariance gamma.");

  m.def("list_functions", [] {
    py::list out;
    for (const auto& e : list_functions()) {
      py::dict d;
      d["name"] = e.name;
      d["signature"] = e.signature;
      d["lipschitz_sq"] = e.lipschitz_sq;
      d["growth"] = e.growth;
      d["sigma_floor"] = e.sigma_floor;
      out.append(d);
    }
    return out;
  });

  m.def(
      "run",
      [](const std::string& config_text, const std::filesystem::path& output_dir, std::optional<std::uint64_t> seed,
         unsigned threads) {
        auto cfg = ExperimentConfig::parse(config_text);
        cfg.output_dir = output_dir;
        if (seed) cfg.seed = *seed;
        cfg.threads = threads;
        ExperimentReport r;
        {
          py::gil_scoped_release nogil;
          r = experiment::run(cfg);
        }
        py::list checks;
        for (const auto& c : r.checks) {
          py::dict d;
          d["name"] = c.name;
          d["verdict"] = to_string(c.verdict);
          d["value"] = c.value;
          d["detail"] = c.detail;
          checks.append(d);
        }
        py::dict out;
        out["experiment"] = r.experiment;
        out["ok"] = r.ok();
        out["checks"] = checks;
        out["files"] = r.files;
        return out;
      },
      py::arg("config"), py::arg("output_dir"), py::arg("seed") = py::none(), py::arg("threads") = 0,
      "Runs an experiment from config text and writes its artifacts into output_dir.");
}
