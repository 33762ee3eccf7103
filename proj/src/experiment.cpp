#include "ness/experiment.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "ness/errors.hpp"
#include "ness/io.hpp"

#ifndef NESS_CODE_VERSION
#define NESS_CODE_VERSION "unknown"
#endif

namespace ness {
namespace fs = std::filesystem;
using nlohmann::json;

std::string code_version() { return NESS_CODE_VERSION; }

namespace {

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string show(double v) {
  std::ostringstream s;
  s.precision(10);
  s << v;
  return s.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out || !(out << text)) throw IoError("cannot write '" + path.string() + "'");
}

json to_json(const Analysis& a) {
  json j;
  j["fate"] = std::string(to_string(a.fate.fate));
  j["fate_slope"] = a.fate.slope;
  j["late_mean_peak_amplitude"] = a.late_mean_peak_amplitude;
  j["max_norm_balance_error"] = a.max_norm_balance_error;
  j["residual_period"] = a.residual_period ? json(*a.residual_period) : json(nullptr);
  if (a.decay) {
    j["decay_fit"] = {{"rate", a.decay->rate},
                      {"amplitude", a.decay->amplitude},
                      {"rms_residual", a.decay->rms_residual},
                      {"extrema", a.decay->extremum_t.size()}};
  } else if (!a.decay_error.empty()) {
    j["decay_fit"] = {{"error", a.decay_error}};
  }
  if (a.relaxation) {
    const auto& r = *a.relaxation;
    j["relaxation_fit"] = {{"A0", r.A0},
                           {"beta", r.beta},
                           {"gamma_fit", r.gamma_fit},
                           {"asymptote", r.asymptote()},
                           {"rms_residual", r.rms_residual},
                           {"degenerate", r.degenerate}};
  } else if (!a.relaxation_error.empty()) {
    j["relaxation_fit"] = {{"error", a.relaxation_error}};
  }
  return j;
}

json to_json(const ExpectationOutcome& e) {
  return {{"name", e.name}, {"passed", e.passed}, {"expected", e.expected}, {"measured", e.measured}};
}

}  // namespace

Analysis analyze(const RunResult& result, const AnalysisSpec& spec) {
  Analysis a;
  const auto& s = result.series;
  a.fate = classify_fate(s, spec.fate, result.abort == AbortReason::collapse);
  const auto balance = norm_balance_errors(s);
  if (!balance.empty()) a.max_norm_balance_error = *std::ranges::max_element(balance);

  if (spec.decay_window) {
    try {
      a.decay = fit_envelope_decay(s, *spec.decay_window);
    } catch (const Error& e) {
      a.decay_error = e.what();
    }
  }
  if (spec.relaxation_window) {
    try {
      a.relaxation = fit_peak_relaxation(s, *spec.relaxation_window, spec.smoothing_period);
    } catch (const FitError& e) {
      a.relaxation_error = e.what();
    } catch (const Error& e) {
      a.relaxation_error = e.what();
    }
  }

  if (s.size() >= 2) {
    const double t_end = s.t.back();
    const double trim = 0.5 * spec.smoothing_period;
    const double begin = std::max(t_end - spec.fate.window_fraction * (t_end - s.t.front()), s.t.front() + trim);
    const auto smooth = moving_average(s.t, s.peak_amplitude, spec.smoothing_period);
    std::vector<double> t;
    std::vector<double> raw;
    double sum = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s.t[i] < begin || s.t[i] > t_end - trim) continue;
      t.push_back(s.t[i]);
      raw.push_back(s.peak_amplitude[i]);
      sum += smooth[i];
    }
    if (!t.empty()) a.late_mean_peak_amplitude = sum / static_cast<double>(t.size());
    if (t.size() >= 3) {
      try {
        a.residual_period = oscillation_period(t, raw);
      } catch (const InsufficientDataError&) {
      }
    }
  }
  return a;
}

std::optional<double> metric_value(const std::string& m, const RunResult& r, const Analysis& a) {
  const auto& s = r.series;
  if (m == "xi_c") return a.decay ? std::optional(a.decay->rate) : std::nullopt;
  if (a.relaxation && !a.relaxation->degenerate) {
    if (m == "beta") return a.relaxation->beta;
    if (m == "gamma_fit") return a.relaxation->gamma_fit;
  }
  if (a.relaxation) {
    if (m == "A0") return a.relaxation->A0;
    if (m == "asymptote") return a.relaxation->asymptote();
  }
  if (!s.empty()) {
    if (m == "final_peak_density") return s.peak_density.back();
    if (m == "final_peak_amplitude") return s.peak_amplitude.back();
    if (m == "final_norm") return s.norm.back();
  }
  if (m == "late_mean_peak_amplitude") return a.late_mean_peak_amplitude;
  if (m == "fate_slope") return a.fate.slope;
  if (m == "max_norm_balance_error") return a.max_norm_balance_error;
  if (m == "residual_period") return a.residual_period;
  return std::nullopt;
}

std::vector<ExpectationOutcome> check_expectations(const ExpectBlock& expect, const RunResult& result,
                                                   const Analysis& analysis) {
  std::vector<ExpectationOutcome> out;
  if (expect.fate) {
    const auto got = to_string(analysis.fate.fate);
    out.push_back({"fate", analysis.fate.fate == *expect.fate, std::string(to_string(*expect.fate)),
                   std::string(got)});
  }
  if (expect.abort) {
    const std::string got = result.abort ? std::string(to_string(*result.abort)) : "none";
    out.push_back({"abort", got == *expect.abort, *expect.abort, got});
  }
  for (const auto& e : expect.metrics) {
    const auto v = metric_value(e.metric, result, analysis);
    out.push_back({e.metric, v && e.accepts(*v), e.text, v ? show(*v) : "unavailable"});
  }
  return out;
}

bool RunManifest::expectations_met() const {
  return std::ranges::all_of(expectations, [](const auto& e) { return e.passed; });
}

std::string RunManifest::to_json() const {
  json j;
  j["config_hash"] = config_hash;
  j["code_version"] = code_version;
  j["source"] = source;
  j["started"] = started;
  j["finished"] = finished;
  j["fate"] = fate;
  j["fate_slope"] = fate_slope;
  j["abort"] = abort ? json(*abort) : json(nullptr);
  j["analysis"] = ness::to_json(analysis);
  j["expectations"] = json::array();
  for (const auto& e : expectations) j["expectations"].push_back(ness::to_json(e));
  j["warnings"] = warnings;
  j["outputs"] = outputs;
  j["config"] = resolved_config;
  return j.dump(2) + "\n";
}

RunManifest run_experiment(const ExperimentConfig& config, const fs::path& out_dir) {
  RunManifest m;
  m.config_hash = config_hash(config.run);
  m.code_version = ness::code_version();
  m.source = config.source;
  m.resolved_config = canonical_text(config.run);
  m.started = utc_now();
  const RunResult result = run(config.run);
  m.analysis = analyze(result, config.analysis);
  m.finished = utc_now();
  m.fate = std::string(to_string(m.analysis.fate.fate));
  m.fate_slope = m.analysis.fate.slope;
  if (result.abort) m.abort = std::string(to_string(*result.abort));
  m.warnings = result.warnings;
  m.expectations = check_expectations(config.expect, result, m.analysis);

  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    write_time_series(out_dir / "timeseries.csv", result.series, m.config_hash);
    m.outputs.push_back("timeseries.csv");
    for (std::size_t i = 0; i < result.snapshots.size(); ++i) {
      const auto name = "snapshot_" + std::to_string(i) + ".ness";
      write_snapshot(out_dir / name, result.snapshots[i].field, result.snapshots[i].t);
      m.outputs.push_back(name);
    }
    m.outputs.push_back("manifest.json");
    write_text(out_dir / "manifest.json", m.to_json());
  }
  return m;
}

int status_for_current_exception(std::string& message) {
  try {
    throw;
  } catch (const ConfigError& e) {
    message = e.what();
    return 1;
  } catch (const DomainError& e) {
    message = e.what();
    return 1;
  } catch (const IoError& e) {
    message = e.what();
    return 1;
  } catch (const std::exception& e) {
    message = e.what();
    return 2;
  }
}

std::vector<SweepEntry> run_sweep(const SweepSpec& spec, const fs::path& out_dir, std::size_t parallelism,
                                  const Overrides& overrides) {
  const auto points = sweep_points(spec);
  std::vector<SweepEntry> entries(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    entries[i].index = i;
    entries[i].parameters = points[i];
    char name[32];
    std::snprintf(name, sizeof name, "run_%04zu", i);
    entries[i].directory = name;
  }

  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < entries.size(); i = next++) {
      auto& e = entries[i];
      try {
        Overrides all = e.parameters;
        all.insert(all.end(), overrides.begin(), overrides.end());
        const auto cfg = load_experiment(spec.base, all);
        e.manifest = run_experiment(cfg, out_dir / e.directory);
        e.status = e.manifest->expectations_met() ? 0 : 3;
        if (e.manifest->abort == "edge-leak") e.status = 2;
      } catch (...) {
        e.status = status_for_current_exception(e.error);
      }
    }
  };
  fs::create_directories(out_dir);
  const std::size_t n_workers = std::clamp<std::size_t>(parallelism, 1, std::max<std::size_t>(1, entries.size()));
  std::vector<std::jthread> pool;
  for (std::size_t w = 1; w < n_workers; ++w) pool.emplace_back(worker);
  worker();
  pool.clear();

  write_text(out_dir / "index.json", sweep_index_json(entries));
  return entries;
}

std::string sweep_index_json(const std::vector<SweepEntry>& entries) {
  json runs = json::array();
  for (const auto& e : entries) {
    json j;
    j["index"] = e.index;
    j["directory"] = e.directory.string();
    json params = json::object();
    for (const auto& [k, v] : e.parameters) params[k] = v;
    j["parameters"] = params;
    j["status"] = e.status;
    if (e.manifest) {
      j["config_hash"] = e.manifest->config_hash;
      j["fate"] = e.manifest->fate;
      j["fate_slope"] = e.manifest->fate_slope;
      j["abort"] = e.manifest->abort ? json(*e.manifest->abort) : json(nullptr);
      j["analysis"] = to_json(e.manifest->analysis);
      j["expectations"] = json::array();
      for (const auto& x : e.manifest->expectations) j["expectations"].push_back(to_json(x));
    } else {
      j["error"] = e.error;
    }
    runs.push_back(std::move(j));
  }
  return json{{"runs", runs}}.dump(2) + "\n";
}

std::string SolveReport::to_json() const {
  json j;
  j["config_hash"] = config_hash;
  j["code_version"] = ness::code_version();
  j["omega"] = result.omega;
  j["residual"] = result.residual;
  j["iterations"] = result.iterations;
  j["omega_unshifted"] = result.omega_unshifted ? json(*result.omega_unshifted) : json(nullptr);
  j["outputs"] = outputs;
  return j.dump(2) + "\n";
}

SolveReport run_solve(const EigenConfig& c, const fs::path& out_dir) {
  const auto grid = make_grid(c.grid.x_min, c.grid.x_max, c.grid.n_points);
  EigenProblem problem{grid, std::vector<double>(grid->size()), c.sigma, PolynomialFunctional{c.c},
                       c.target_norm};
  for (std::size_t j = 0; j < grid->size(); ++j) problem.v[j] = 0.5 * c.omega0 * c.omega0 * grid->x(j) * grid->x(j);
  SolveReport report;
  report.config_hash = config_hash(c);
  report.result = solve_self_consistent(problem, c.tol, c.max_iter, c.mixing, c.unshifted);
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    write_snapshot(out_dir / "amplitude.ness", report.result.amplitude, 0.0);
    report.outputs = {"amplitude.ness", "solve.json"};
    write_text(out_dir / "solve.json", report.to_json());
  }
  return report;
}

}  // namespace ness
