// Command-line runner: run, sweep, solve and verify experiment configs.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "ness/config_file.hpp"
#include "ness/experiment.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kMismatch = 3;

struct CommonOptions {
  std::string out_dir;
  std::optional<double> dt;
  std::optional<std::size_t> n_points;
  std::optional<long long> seed;
  std::vector<std::string> set;
};

void add_overrides(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--dt", o.dt, "Override evolve.dt")->check(CLI::PositiveNumber);
  cmd->add_option("--n-points", o.n_points, "Override grid.n_points");
  cmd->add_option("--seed", o.seed, "Reserved; the model has no stochastic terms");
  cmd->add_option("--set", o.set, "Override any field, e.g. --set nm.gamma=1.5");
}

ness::Overrides collect(const CommonOptions& o) {
  ness::Overrides out;
  for (const auto& s : o.set) out.push_back(ness::parse_override(s));
  if (o.dt) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", *o.dt);
    out.emplace_back("evolve.dt", buf);
  }
  if (o.n_points) out.emplace_back("grid.n_points", std::to_string(*o.n_points));
  return out;
}

void print_manifest(const ness::RunManifest& m) {
  std::printf("config_hash %s\n", m.config_hash.c_str());
  std::printf("fate        %s (slope %.3e)\n", m.fate.c_str(), m.fate_slope);
  if (m.abort) std::printf("abort       %s\n", m.abort->c_str());
  const auto& a = m.analysis;
  if (a.decay) std::printf("xi_c        %.6g\n", a.decay->rate);
  if (!a.decay_error.empty()) std::printf("xi_c        failed: %s\n", a.decay_error.c_str());
  if (a.relaxation) {
    std::printf("relaxation  A0 %.6g beta %.6g gamma_fit %.6g asymptote %.6g\n", a.relaxation->A0,
                a.relaxation->beta, a.relaxation->gamma_fit, a.relaxation->asymptote());
  }
  if (!a.relaxation_error.empty()) std::printf("relaxation  failed: %s\n", a.relaxation_error.c_str());
  std::printf("late mean   peak amplitude %.6g\n", a.late_mean_peak_amplitude);
  std::printf("balance     max relative error %.3e\n", a.max_norm_balance_error);
  for (const auto& w : m.warnings) std::printf("warning     %s\n", w.c_str());
  for (const auto& e : m.expectations) {
    std::printf("%s %-24s expected %s, got %s\n", e.passed ? "PASS" : "FAIL", e.name.c_str(), e.expected.c_str(),
                e.measured.c_str());
  }
}

int status_of(const ness::RunManifest& m) {
  if (m.abort == "edge-leak") return 2;
  return m.expectations_met() ? kOk : kMismatch;
}

template <typename Fn>
int guarded(Fn&& fn) {
  try {
    return fn();
  } catch (...) {
    std::string message;
    const int status = ness::status_for_current_exception(message);
    std::fprintf(stderr, "error: %s\n", message.c_str());
    return status;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Split-step simulator for nonlinear Schroedinger dynamics in complex traps"};
  app.require_subcommand(1);
  app.set_version_flag("--version", ness::code_version());

  CommonOptions opts;
  std::string path;
  std::size_t parallelism = 1;

  auto* run_cmd = app.add_subcommand("run", "Run one experiment config");
  run_cmd->add_option("config", path, "Experiment config")->required();
  run_cmd->add_option("--out-dir", opts.out_dir, "Output directory")->required();
  add_overrides(run_cmd, opts);

  auto* verify_cmd = app.add_subcommand("verify", "Run a config and check its expect block");
  verify_cmd->add_option("config", path, "Experiment config")->required();
  verify_cmd->add_option("--out-dir", opts.out_dir, "Also write outputs here");
  add_overrides(verify_cmd, opts);

  auto* sweep_cmd = app.add_subcommand("sweep", "Run the cartesian grid of a sweep file");
  sweep_cmd->add_option("sweep", path, "Sweep file")->required();
  sweep_cmd->add_option("--out-dir", opts.out_dir, "Output directory")->required();
  sweep_cmd->add_option("--parallelism", parallelism, "Worker threads")->check(CLI::PositiveNumber);
  add_overrides(sweep_cmd, opts);

  auto* solve_cmd = app.add_subcommand("solve", "Solve a stationary eigenproblem config");
  solve_cmd->add_option("config", path, "Eigenproblem config")->required();
  solve_cmd->add_option("--out-dir", opts.out_dir, "Output directory");
  solve_cmd->add_option("--n-points", opts.n_points, "Override grid.n_points");
  solve_cmd->add_option("--set", opts.set, "Override any field, e.g. --set problem.sigma=1");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  if (run_cmd->parsed() || verify_cmd->parsed()) {
    const bool verify = verify_cmd->parsed();
    return guarded([&] {
      const auto cfg = ness::load_experiment(path, collect(opts));
      if (verify && cfg.expect.empty()) {
        std::fprintf(stderr, "error: %s has no expect block\n", path.c_str());
        return kUsage;
      }
      const auto manifest = ness::run_experiment(cfg, opts.out_dir);
      print_manifest(manifest);
      return status_of(manifest);
    });
  }

  if (sweep_cmd->parsed()) {
    return guarded([&] {
      const auto spec = ness::load_sweep(path);
      const auto entries = ness::run_sweep(spec, opts.out_dir, parallelism, collect(opts));
      int worst = kOk;
      for (const auto& e : entries) {
        std::string params;
        for (const auto& [k, v] : e.parameters) params += k + "=" + v + " ";
        if (e.manifest) {
          std::printf("%s %s-> %s\n", e.directory.c_str(), params.c_str(), e.manifest->fate.c_str());
        } else {
          std::printf("%s %s-> error: %s\n", e.directory.c_str(), params.c_str(), e.error.c_str());
        }
        if (!e.manifest) worst = std::max(worst, e.status);
      }
      std::printf("%zu runs, index written to %s/index.json\n", entries.size(), opts.out_dir.c_str());
      return worst;
    });
  }

  return guarded([&] {
    const auto cfg = ness::load_eigen(path, collect(opts));
    const auto report = ness::run_solve(cfg, opts.out_dir);
    const auto& r = report.result;
    std::printf("omega      %.15g\nresidual   %.3e\niterations %zu\n", r.omega, r.residual, r.iterations);
    if (r.omega_unshifted) std::printf("unshifted  %.15g\n", *r.omega_unshifted);
    return kOk;
  });
}
