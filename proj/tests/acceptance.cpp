// Runs every acceptance criterion on the bundled configs and prints one
// PASS/FAIL line per criterion. Exits nonzero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "ness/config_file.hpp"
#include "ness/evolve.hpp"
#include "ness/experiment.hpp"
#include "ness/observables.hpp"
#include "ness/potentials.hpp"

using namespace ness;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigDir = NESS_CONFIG_DIR;

struct Outcome {
  RunResult result;
  Analysis analysis;
  double seconds = 0.0;
};

// Runs are keyed on their resolved config without snapshot times, so configs
// that differ only in output share one propagation.
class RunCache {
 public:
  const Outcome& get(const std::string& label, const fs::path& file, const Overrides& overrides = {}) {
    auto cfg = load_experiment(file, overrides);
    cfg.run.snapshot_times.clear();
    const auto key = canonical_text(cfg.run);
    labels_[key].push_back(label);
    if (auto it = runs_.find(key); it != runs_.end()) return it->second;
    std::cerr << "running " << label << " ..." << std::flush;
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    out.result = run(cfg.run);
    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out.analysis = analyze(out.result, cfg.analysis);
    std::cerr << " " << out.seconds << " s\n";
    return runs_.emplace(key, std::move(out)).first->second;
  }

  template <class F>
  void for_each(F&& f) const {
    for (const auto& [key, outcome] : runs_) f(labels_.at(key).front(), outcome);
  }

 private:
  std::map<std::string, Outcome> runs_;
  std::map<std::string, std::vector<std::string>> labels_;
};

class Report {
 public:
  void line(bool pass, const std::string& name, const std::string& detail) {
    std::cout << (pass ? "PASS " : "FAIL ") << name << ": " << detail << std::endl;
    failures_ += pass ? 0 : 1;
  }
  int failures() const { return failures_; }

 private:
  int failures_ = 0;
};

std::string fmt(double v, int digits = 6) {
  std::ostringstream s;
  s.precision(digits);
  s << v;
  return s.str();
}

bool within_relative(double value, double target, double rel) { return std::abs(value - target) <= rel * std::abs(target); }

std::string fate_of(const Outcome& o) { return std::string(to_string(o.analysis.fate.fate)); }

double l2_distance(const WaveField& a, const WaveField& b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) s += std::norm(a.values[j] - b.values[j]);
  return std::sqrt(s * a.grid->dx());
}

WaveField propagate(const ComplexPotential& pot, const NMSchedule& schedule, WaveField field, double dt,
                    double t_final) {
  const Propagator prop(pot, schedule, dt);
  PropagatorState state{std::move(field), 0.0, 0, std::nullopt};
  prop.advance(state, static_cast<std::size_t>(std::llround(t_final / dt)));
  return state.field;
}

double strang_order(double sigma) {
  const auto grid = make_grid(-20.0, 20.0, 1024);
  const DampedTrapParams params{1.0, -0.02, -0.02};
  const auto pot = damped_trap(params, grid).potential;
  const auto initial = stationary_state(params, grid, 0.5);
  const auto schedule = NMSchedule::constant(sigma);
  const auto coarse = propagate(pot, schedule, initial, 0.01, 10.0);
  const auto fine = propagate(pot, schedule, initial, 0.005, 10.0);
  const auto reference = propagate(pot, schedule, initial, 0.00125, 10.0);
  return std::log2(l2_distance(coarse, reference) / l2_distance(fine, reference));
}

double pt_peak_slope(double c0) {
  const auto grid = make_grid(-20.0, 20.0, 1024);
  const Propagator prop(pt_symmetric_trap(1.0, c0, grid), NMSchedule::constant(0.0), 1e-3);
  PropagatorState state{pt_stationary_state(1.0, c0, grid), 0.0, 0, std::nullopt};
  std::vector<double> t{0.0};
  std::vector<double> peak{peak_density(state.field)};
  for (int i = 0; i < 100; ++i) {
    prop.advance(state, 1000);
    t.push_back(state.t);
    peak.push_back(peak_density(state.field));
  }
  return linear_slope(t, peak);
}

// sqrt(sum (a - b)^2 / sum b^2) over samples with t <= t_max.
double relative_l2(const TimeSeries& a, const TimeSeries& b, double t_max) {
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < std::min(a.size(), b.size()) && b.t[i] <= t_max + 1e-9; ++i) {
    num += (a.x_c[i] - b.x_c[i]) * (a.x_c[i] - b.x_c[i]);
    den += b.x_c[i] * b.x_c[i];
  }
  return std::sqrt(num / den);
}

}  // namespace

int main() {
  RunCache cache;
  Report report;

  // Linear relaxation in the weakly damped trap.
  const auto& fig1 = cache.get("fig1", kConfigDir / "fig1.cfg");
  {
    const bool has = fig1.analysis.decay.has_value();
    const double xi = has ? fig1.analysis.decay->rate : std::nan("");
    report.line(has && within_relative(xi, 0.036, 0.20) && fig1.seconds < 60.0, "fig1 damping rate",
                "xi_c = " + fmt(xi) + " (target 0.036 +/- 20%), runtime " + fmt(fig1.seconds, 3) + " s (target < 60 s)");

    const double peak = fig1.result.series.peak_density.back();
    const double target = 1.0 / std::sqrt(std::numbers::pi);
    const bool fit = fig1.analysis.relaxation.has_value();
    const double beta = fit ? fig1.analysis.relaxation->beta : std::nan("");
    report.line(within_relative(peak, target, 0.005) && fit && within_relative(beta, 0.08, 0.25),
                "fig1 asymptote",
                "final peak density " + fmt(peak) + " (target " + fmt(target) + " +/- 0.5%), beta = " + fmt(beta) +
                    " (target 0.08 +/- 25%)");
  }

  {
    const double slope = pt_peak_slope(0.1);
    report.line(std::abs(slope) < 1e-8, "PT stationarity",
                "peak density slope " + fmt(slope, 3) + " per unit time over t = 100 (target < 1e-8)");
  }

  // Fate dichotomy, including the refinement checks.
  const auto& linear = cache.get("fig2_linear", kConfigDir / "fig2_linear.cfg");
  const auto& repulsive = cache.get("fig2_repulsive", kConfigDir / "fig2_repulsive.cfg");
  const auto& attractive = cache.get("fig2_attractive", kConfigDir / "fig2_attractive.cfg");
  {
    const std::vector<std::pair<std::string, std::string>> cases{
        {"fig2_linear.cfg", "NESS"}, {"fig2_repulsive.cfg", "decay"}, {"fig2_attractive.cfg", "collapse"}};
    bool pass = true;
    std::string detail;
    for (const auto& [file, expected] : cases) {
      const auto stem = fs::path(file).stem().string();
      const auto& base = cache.get(stem, kConfigDir / file);
      const auto& half_dt = cache.get(stem + " dt/2", kConfigDir / file, {{"evolve.dt", "5e-4"}, {"evolve.sample_every", "200"}});
      const auto& fine = cache.get(stem + " n=2048", kConfigDir / file, {{"grid.n_points", "2048"}});
      const bool ok = fate_of(base) == expected && fate_of(half_dt) == expected && fate_of(fine) == expected;
      pass = pass && ok;
      detail += stem + " " + fate_of(base) + "/" + fate_of(half_dt) + "/" + fate_of(fine) + " (target " + expected + ") ";
    }
    report.line(pass, "fate dichotomy", detail + "[base/dt-half/n-2048]");
  }

  {
    const double rep = relative_l2(repulsive.result.series, linear.result.series, 100.0);
    const double att = relative_l2(attractive.result.series, linear.result.series, 100.0);
    report.line(rep < 0.10 && att < 0.10, "transient universality",
                "relative L2 of x_c for t <= 100: sigma=+1 " + fmt(rep, 3) + ", sigma=-1 " + fmt(att, 3) +
                    " (target < 0.1)");
  }

  // Nonlinearity management.
  const double linear_level = linear.analysis.late_mean_peak_amplitude;
  const auto& nm_att = cache.get("fig4_attractive", kConfigDir / "fig4_attractive.cfg");
  const auto& nm_rep = cache.get("fig4_repulsive", kConfigDir / "fig4_repulsive.cfg");
  {
    bool pass = true;
    std::string detail = "linear level " + fmt(linear_level) + "; ";
    for (const auto* o : {&nm_att, &nm_rep}) {
      const double mean = o->analysis.late_mean_peak_amplitude;
      const double dev = (mean - linear_level) / linear_level;
      pass = pass && fate_of(*o) == "NESS" && std::abs(dev) <= 0.05;
      detail += std::string(o == &nm_att ? "attractive " : "repulsive ") + fate_of(*o) + " mean " + fmt(mean) + " (" +
                fmt(100.0 * dev, 3) + "%); ";
    }
    std::vector<double> slopes;
    for (const char* g : {"0.5", "1.0", "1.5"})
      slopes.push_back(cache.get(std::string("fig4_attractive gamma=") + g, kConfigDir / "fig4_attractive.cfg",
                                 {{"nm.gamma", g}})
                           .analysis.fate.slope);
    const bool monotone = slopes[0] > slopes[1] && slopes[1] > slopes[2];
    detail += "attractive slopes at gamma 0.5/1/1.5: " + fmt(slopes[0], 3) + " " + fmt(slopes[1], 3) + " " +
              fmt(slopes[2], 3) + " (target decreasing); targets NESS, mean within 5%";
    report.line(pass && monotone, "management stabilization", detail);
  }

  {
    bool pass = true;
    std::string detail;
    for (const char* stem : {"fig4_attractive", "fig4_repulsive"}) {
      const auto& slow = cache.get(stem, kConfigDir / (std::string(stem) + ".cfg"));
      const auto& fast = cache.get(std::string(stem) + " omega=0.4", kConfigDir / (std::string(stem) + ".cfg"),
                                   {{"nm.omega", "0.4"}});
      const double m0 = slow.analysis.late_mean_peak_amplitude;
      const double m1 = fast.analysis.late_mean_peak_amplitude;
      const double p0 = slow.analysis.residual_period.value_or(std::nan(""));
      const double p1 = fast.analysis.residual_period.value_or(std::nan(""));
      const double ratio = p1 / p0;
      const bool ok = fate_of(slow) == fate_of(fast) && within_relative(m1, m0, 0.02) && within_relative(ratio, 0.5, 0.1);
      pass = pass && ok;
      detail += std::string(stem) + " " + fate_of(slow) + "->" + fate_of(fast) + ", mean " + fmt(m0) + "->" + fmt(m1) +
                ", period ratio " + fmt(ratio, 3) + "; ";
    }
    report.line(pass, "modulation frequency doubling",
                detail + "targets same fate, mean within 2%, period ratio 0.5 +/- 10%");
  }

  {
    const auto lin = run_solve(load_eigen(kConfigDir / "eigen_linear.cfg"), {}).result;
    const auto c0 = run_solve(load_eigen(kConfigDir / "eigen_c0.cfg"), {}).result;
    const double c = 0.1;
    const double order_linear = strang_order(0.0);
    const double order_nonlinear = strang_order(-1.0);
    const bool pass = std::abs(lin.omega - 0.5) <= 1e-8 && std::abs(c0.omega - (0.5 + 0.5 * c * c)) <= 1e-8 &&
                      std::abs(order_linear - 2.0) <= 0.2 && std::abs(order_nonlinear - 2.0) <= 0.2;
    report.line(pass, "solver and propagator",
                "omega = " + fmt(lin.omega, 12) + " (target 0.5 +/- 1e-8), C0 = 0.1 omega = " + fmt(c0.omega, 12) +
                    " (target 0.505 +/- 1e-8), Strang order " + fmt(order_linear, 3) + " linear, " +
                    fmt(order_nonlinear, 3) + " sigma=-1 (target 2.0 +/- 0.2)");
  }

  // Every bundled run, plus the refinements above.
  for (const auto& entry : fs::directory_iterator(kConfigDir)) {
    const auto& p = entry.path();
    const auto name = p.filename().string();
    if (name.starts_with("eigen")) continue;
    if (p.extension() == ".sweep") {
      const auto spec = load_sweep(p);
      for (const auto& point : sweep_points(spec)) {
        std::string label = p.stem().string();
        for (const auto& [k, v] : point) label += " " + k + "=" + v;
        cache.get(label, spec.base, point);
      }
    } else if (p.extension() == ".cfg") {
      cache.get(p.stem().string(), p);
    }
  }
  {
    double worst = 0.0;
    std::string worst_label;
    std::size_t count = 0;
    cache.for_each([&](const std::string& label, const Outcome& o) {
      ++count;
      if (o.analysis.max_norm_balance_error > worst) {
        worst = o.analysis.max_norm_balance_error;
        worst_label = label;
      }
    });
    report.line(worst < 1e-3, "norm balance",
                "max error " + fmt(worst, 3) + " over " + std::to_string(count) + " runs (worst " + worst_label +
                    ", target < 1e-3)");
  }

  std::cout << report.failures() << " criteria failed" << std::endl;
  return report.failures() == 0 ? 0 : 1;
}
