#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ness/config_file.hpp"
#include "ness/evolve.hpp"
#include "ness/observables.hpp"
#include "ness/stationary.hpp"

namespace ness {

/// Build identifier recorded in manifests.
std::string code_version();

/// Derived quantities of one run. Fits that fail leave their optional empty and
/// record the reason instead.
struct Analysis {
  FateResult fate;
  std::optional<DecayFit> decay;
  std::string decay_error;
  std::optional<PeakRelaxationFit> relaxation;
  std::string relaxation_error;
  /// Mean of the smoothed peak amplitude over the fate window.
  double late_mean_peak_amplitude = 0.0;
  /// Period of the residual oscillation of the peak amplitude in the fate window.
  std::optional<double> residual_period;
  double max_norm_balance_error = 0.0;
};

Analysis analyze(const RunResult& result, const AnalysisSpec& spec);

/// Value of a named expectation metric; nullopt when the run did not produce it.
std::optional<double> metric_value(const std::string& metric, const RunResult& result, const Analysis& analysis);

struct ExpectationOutcome {
  std::string name;
  bool passed = false;
  std::string expected;
  std::string measured;
};

std::vector<ExpectationOutcome> check_expectations(const ExpectBlock& expect, const RunResult& result,
                                                   const Analysis& analysis);

struct RunManifest {
  std::string config_hash;
  std::string code_version;
  std::string source;
  std::string started;
  std::string finished;
  std::string fate;
  double fate_slope = 0.0;
  std::optional<std::string> abort;
  Analysis analysis;
  std::vector<ExpectationOutcome> expectations;
  std::vector<std::string> warnings;
  std::vector<std::string> outputs;
  std::string resolved_config;

  bool expectations_met() const;
  /// Pretty-printed JSON document.
  std::string to_json() const;
};

/// Runs one experiment. With a non-empty `out_dir` writes timeseries.csv,
/// snapshot_<i>.ness for each requested snapshot and manifest.json.
RunManifest run_experiment(const ExperimentConfig& config, const std::filesystem::path& out_dir);

/// Exit status for the exception currently being handled: 1 for config, IO and
/// domain errors, 2 for numerical failures. Stores the message.
int status_for_current_exception(std::string& message);

struct SweepEntry {
  std::size_t index = 0;
  Overrides parameters;
  std::filesystem::path directory;
  std::optional<RunManifest> manifest;
  std::string error;
  /// Process-style status of this run: 0 ok, 1 config, 2 numerical, 3 expectation mismatch.
  int status = 0;
};

/// Runs every grid point of the sweep on `parallelism` worker threads, each
/// into out_dir/run_<index>, and writes out_dir/index.json. Per-run failures
/// are recorded in their entry.
std::vector<SweepEntry> run_sweep(const SweepSpec& spec, const std::filesystem::path& out_dir,
                                  std::size_t parallelism, const Overrides& overrides = {});

std::string sweep_index_json(const std::vector<SweepEntry>& entries);

struct SolveReport {
  EigenResult result;
  std::string config_hash;
  std::vector<std::string> outputs;
  std::string to_json() const;
};

/// Solves the configured eigenproblem; with a non-empty `out_dir` writes
/// amplitude.ness and solve.json.
SolveReport run_solve(const EigenConfig& config, const std::filesystem::path& out_dir);

}  // namespace ness
