#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <span>
#include <string>

#include "ness/config_file.hpp"
#include "ness/errors.hpp"
#include "ness/evolve.hpp"
#include "ness/experiment.hpp"
#include "ness/io.hpp"
#include "ness/potentials.hpp"

namespace py = pybind11;
using namespace ness;

namespace {

template <class T>
py::array_t<T> to_array(std::span<const T> values) {
  py::array_t<T> out(static_cast<py::ssize_t>(values.size()));
  std::copy(values.begin(), values.end(), out.mutable_data());
  return out;
}

template <class T>
py::array_t<T> to_array(const std::vector<T>& values) {
  return to_array(std::span<const T>(values));
}

Overrides to_overrides(const std::map<std::string, std::string>& values) {
  return Overrides(values.begin(), values.end());
}

py::dict series_dict(const TimeSeries& s) {
  py::dict d;
  d["t"] = to_array(s.t);
  d["norm"] = to_array(s.norm);
  d["x_c"] = to_array(s.x_c);
  d["peak_density"] = to_array(s.peak_density);
  d["peak_amplitude"] = to_array(s.peak_amplitude);
  d["sigma_t"] = to_array(s.sigma_t);
  if (!s.gain_rate.empty()) d["gain_rate"] = to_array(s.gain_rate);
  return d;
}

py::dict analysis_dict(const Analysis& a) {
  py::dict d;
  d["fate"] = std::string(to_string(a.fate.fate));
  d["fate_slope"] = a.fate.slope;
  d["late_mean_peak_amplitude"] = a.late_mean_peak_amplitude;
  d["residual_period"] = a.residual_period ? py::cast(*a.residual_period) : py::none();
  d["max_norm_balance_error"] = a.max_norm_balance_error;
  if (a.decay) d["xi_c"] = a.decay->rate;
  if (a.relaxation) {
    d["A0"] = a.relaxation->A0;
    d["beta"] = a.relaxation->beta;
    d["gamma_fit"] = a.relaxation->gamma_fit;
  }
  return d;
}

py::dict run_config_file(const std::filesystem::path& path, const std::map<std::string, std::string>& overrides) {
  const auto cfg = load_experiment(path, to_overrides(overrides));
  RunResult result;
  Analysis analysis;
  {
    py::gil_scoped_release release;
    result = run(cfg.run);
    analysis = analyze(result, cfg.analysis);
  }
  py::dict d;
  d["config_hash"] = config_hash(cfg.run);
  d["series"] = series_dict(result.series);
  d["analysis"] = analysis_dict(analysis);
  d["abort"] = result.abort ? py::cast(std::string(to_string(*result.abort))) : py::none();
  py::list expectations;
  for (const auto& e : check_expectations(cfg.expect, result, analysis)) {
    py::dict item;
    item["name"] = e.name;
    item["passed"] = e.passed;
    item["expected"] = e.expected;
    item["measured"] = e.measured;
    expectations.append(item);
  }
  d["expectations"] = expectations;
  return d;
}

std::string run_to_directory(const std::filesystem::path& path, const std::filesystem::path& out_dir,
                             const std::map<std::string, std::string>& overrides) {
  const auto cfg = load_experiment(path, to_overrides(overrides));
  py::gil_scoped_release release;
  return run_experiment(cfg, out_dir).to_json();
}

py::dict solve_config_file(const std::filesystem::path& path, const std::map<std::string, std::string>& overrides) {
  const auto cfg = load_eigen(path, to_overrides(overrides));
  SolveReport report;
  {
    py::gil_scoped_release release;
    report = run_solve(cfg, {});
  }
  const auto& r = report.result;
  py::dict d;
  d["config_hash"] = report.config_hash;
  d["omega"] = r.omega;
  d["omega_unshifted"] = r.omega_unshifted ? py::cast(*r.omega_unshifted) : py::none();
  d["residual"] = r.residual;
  d["iterations"] = r.iterations;
  d["residual_history"] = to_array(r.residual_history);
  d["x"] = to_array(r.amplitude.grid->x());
  d["amplitude"] = to_array(r.amplitude.values);
  return d;
}

py::dict damped_trap_arrays(double omega0, double a1, double a2, double x_min, double x_max, std::size_t n) {
  const auto grid = make_grid(x_min, x_max, n);
  const auto trap = damped_trap({omega0, a1, a2}, grid);
  py::dict d;
  d["x"] = to_array(grid->x());
  d["v"] = to_array(trap.potential.v);
  d["w"] = to_array(trap.potential.w);
  d["theta"] = to_array(*trap.potential.theta);
  d["omega"] = trap.omega;
  d["stationary_state"] = to_array(stationary_state({omega0, a1, a2}, grid).values);
  return d;
}

py::tuple load_snapshot(const std::filesystem::path& path) {
  const auto snap = read_snapshot(path);
  return py::make_tuple(snap.time, to_array(snap.field.grid->x()), to_array(snap.field.values));
}

py::tuple load_time_series(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string hash;
  const auto series = read_time_series(in, &hash);
  return py::make_tuple(series_dict(series), hash);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Bindings of the ness C++ simulator.";

  static py::exception<Error> base(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());
  py::register_exception<DomainError>(m, "DomainError", base.ptr());
  py::register_exception<SingularMappingError>(m, "SingularMappingError", base.ptr());
  py::register_exception<NumericalError>(m, "NumericalError", base.ptr());
  py::register_exception<ConvergenceError>(m, "ConvergenceError", base.ptr());
  py::register_exception<InsufficientDataError>(m, "InsufficientDataError", base.ptr());
  py::register_exception<DegenerateStateError>(m, "DegenerateStateError", base.ptr());

  m.def("code_version", &code_version);

  m.def("run", &run_config_file, py::arg("config"), py::arg("overrides") = std::map<std::string, std::string>{},
        "Run an experiment config in memory. Returns the sampled series, the analysis, the abort reason and "
        "the outcome of each expectation.");
  m.def("run_to_directory", &run_to_directory, py::arg("config"), py::arg("out_dir"),
        py::arg("overrides") = std::map<std::string, std::string>{},
        "Run an experiment config, write its outputs to out_dir and return the manifest as JSON text.");
  m.def("solve", &solve_config_file, py::arg("config"), py::arg("overrides") = std::map<std::string, std::string>{},
        "Solve a stationary eigenproblem config.");
  m.def("damped_trap", &damped_trap_arrays, py::arg("omega0"), py::arg("a1"), py::arg("a2"), py::arg("x_min") = -20.0,
        py::arg("x_max") = 20.0, py::arg("n_points") = 1024,
        "V, W, theta, the eigenvalue and the stationary state of the damped trap on a grid.");
  m.def(
      "sigma_of_t",
      [](double sigma0, double t0, double omega, double gamma, py::array_t<double> t) {
        const NMSchedule schedule{sigma0, t0, omega, gamma};
        schedule.validate();
        return py::vectorize([&](double s) { return ness::sigma_of_t(schedule, s); })(t);
      },
      py::arg("sigma0"), py::arg("t0"), py::arg("omega"), py::arg("gamma"), py::arg("t"));
  m.def("read_snapshot", &load_snapshot, py::arg("path"), "Returns (time, x, psi).");
  m.def("read_time_series", &load_time_series, py::arg("path"), "Returns (series, config_hash).");
}
