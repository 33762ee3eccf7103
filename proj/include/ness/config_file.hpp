#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ness/evolve.hpp"
#include "ness/observables.hpp"
#include "ness/run_config.hpp"
#include "ness/stationary.hpp"

namespace ness {

/// `section.key = value` assignments applied on top of a parsed file.
using Overrides = std::vector<std::pair<std::string, std::string>>;

/// Parses "section.key=value".
std::pair<std::string, std::string> parse_override(const std::string& text);

struct AnalysisSpec {
  std::optional<Interval> decay_window;
  std::optional<Interval> relaxation_window;
  /// Moving-average period for the relaxation fit and the fate trend.
  double smoothing_period = 0.0;
  FateThresholds fate;
};

/// One numeric expectation from an `expect` block:
///   metric = 0.036 +/- 20%   relative band
///   metric = 0.5 +/- 1e-8    absolute band
///   metric = < 1e-3          upper bound
///   metric = > 0             lower bound
struct Expectation {
  enum class Kind { band, at_most, at_least };
  std::string metric;
  Kind kind = Kind::band;
  double value = 0.0;
  double tolerance = 0.0;  // absolute half-width of the band
  std::string text;        // as written in the config

  bool accepts(double measured) const noexcept;
};

struct ExpectBlock {
  std::optional<Fate> fate;
  /// "none", "collapse" or "edge-leak".
  std::optional<std::string> abort;
  std::vector<Expectation> metrics;

  bool empty() const noexcept { return !fate && !abort && metrics.empty(); }
};

struct ExperimentConfig {
  RunConfig run;
  AnalysisSpec analysis;
  ExpectBlock expect;
  std::string source;  // file name, for diagnostics
};

/// Metric names accepted in `expect` blocks.
const std::vector<std::string>& expectation_metrics();

/// Parses an INI-style experiment config with sections grid, potential,
/// initial, evolve, nm, analysis, output and expect. `output.snapshot_every`
/// expands into evenly spaced entries of snapshot_times. Unknown sections or keys
/// and malformed values raise ConfigError naming the line and field.
ExperimentConfig parse_experiment(std::istream& in, const std::string& source = "<config>",
                                  const Overrides& overrides = {});
ExperimentConfig load_experiment(const std::filesystem::path& path, const Overrides& overrides = {});

/// Sorted `key=value` lines covering every resolved RunConfig field, doubles
/// printed with 17 significant digits.
std::string canonical_text(const RunConfig& config);

/// Hex SHA-256 of canonical_text.
std::string config_hash(const RunConfig& config);

struct EigenConfig {
  GridSpec grid;
  double omega0 = 1.0;
  double sigma = 0.0;
  std::vector<double> c;
  double target_norm = 1.0;
  double tol = 1e-10;
  std::size_t max_iter = 1000;
  double mixing = 0.3;
  bool unshifted = false;
  std::string source;
};

/// Sections grid, problem (omega0, sigma, c, target_norm) and solver
/// (tol, max_iter, mixing, unshifted).
EigenConfig parse_eigen(std::istream& in, const std::string& source = "<config>",
                        const Overrides& overrides = {});
EigenConfig load_eigen(const std::filesystem::path& path, const Overrides& overrides = {});
std::string config_hash(const EigenConfig& config);

struct SweepSpec {
  std::filesystem::path base;
  /// Parameter axes in file order; the sweep covers their cartesian product.
  std::vector<std::pair<std::string, std::vector<std::string>>> axes;
};

/// Section `sweep` holds `base = <config path>` (relative to the sweep file);
/// section `vary` lists `section.key = v1 v2 ...`. No axes, or an axis with
/// no values, yields an empty sweep.
SweepSpec load_sweep(const std::filesystem::path& path);

/// Grid points of the cartesian product, last axis varying fastest.
std::vector<Overrides> sweep_points(const SweepSpec& spec);

}  // namespace ness
