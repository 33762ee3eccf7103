#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ness/core.hpp"
#include "ness/errors.hpp"

namespace ness {

/// Observables sampled along one trajectory.
///
/// `gain_rate[i]` is the time average of 2 * integral(W |psi|^2 dx) over the
/// interval (t[i-1], t[i]]; for i = 0 it is the instantaneous value. It is the
/// right-hand side of the norm balance dN/dt = 2 integral(W |psi|^2 dx).
struct TimeSeries {
  std::vector<double> t;
  std::vector<double> norm;
  std::vector<double> x_c;
  std::vector<double> peak_density;
  std::vector<double> peak_amplitude;
  std::vector<double> sigma_t;
  std::vector<double> gain_rate;

  std::size_t size() const noexcept { return t.size(); }
  bool empty() const noexcept { return t.empty(); }
  void reserve(std::size_t n);
};

struct Interval {
  double begin = 0.0;
  double end = 0.0;
};

double center_of_mass(const WaveField& field);
double peak_density(const WaveField& field);

/// E = integral( |psi_x|^2 / 2 + V |psi|^2 + sigma |psi|^4 / 2 ) dx, kinetic part spectral.
double energy(const WaveField& field, std::span<const double> v, double sigma);

/// Per-interval relative violation of the norm balance,
/// |dN/dt - gain| / max(|dN/dt|, floor), with dN/dt the forward difference of
/// the sampled norm and gain the interval-averaged gain_rate.
std::vector<double> norm_balance_errors(const TimeSeries& series, double floor = 1e-12);

struct DecayFit {
  double rate = 0.0;
  double amplitude = 0.0;
  double rms_residual = 0.0;
  std::vector<double> extremum_t;
  std::vector<double> extremum_value;
};

/// Fits log|x_c| at the successive extrema of the center-of-mass oscillation
/// inside `window` to a line; rate is minus the slope.
DecayFit fit_envelope_decay(const TimeSeries& series, Interval window);

struct PeakRelaxationFit {
  double A0 = 0.0;
  double beta = 0.0;
  double gamma_fit = 0.0;
  double rms_residual = 0.0;
  /// True when the data carry no relaxation, so beta and gamma_fit are meaningless.
  bool degenerate = false;

  /// Asymptotic value A0 - 1/gamma_fit of the fitted model.
  double asymptote() const noexcept { return degenerate ? A0 : A0 - 1.0 / gamma_fit; }
};

/// Raised when the relaxation fit does not converge; carries the last iterate.
class FitError : public Error {
 public:
  FitError(const std::string& what, PeakRelaxationFit last) : Error(what), last_(last) {}
  const PeakRelaxationFit& last_iterate() const noexcept { return last_; }

 private:
  PeakRelaxationFit last_;
};

/// Least-squares fit of A0 + (exp(-beta t) - 1) / gamma_fit to the peak
/// density, after a centered moving average over `smoothing_period`
/// (0 disables smoothing). Time is measured from window.begin.
PeakRelaxationFit fit_peak_relaxation(const TimeSeries& series, Interval window,
                                      double smoothing_period);

/// Centered moving average over `period` (in time units) of a uniformly sampled series.
std::vector<double> moving_average(std::span<const double> t, std::span<const double> y,
                                   double period);

enum class Fate { ness, decay, collapse, undetermined };

std::string_view to_string(Fate fate);
Fate fate_from_string(std::string_view name);

struct FateThresholds {
  /// |slope| of the smoothed peak amplitude below this (per unit time) is a NESS.
  double slope_tol = 1e-6;
  /// Late window = final fraction of the run.
  double window_fraction = 0.25;
  /// Moving-average period applied before the trend fit; 0 disables smoothing.
  double smoothing_period = 0.0;
  /// Duration of the initial transient; the run must last at least twice this.
  double transient_time = 100.0;
};

struct FateResult {
  Fate fate = Fate::undetermined;
  double slope = 0.0;
};

/// Late-window linear trend of the smoothed peak amplitude. An abort on the
/// collapse threshold is reported as collapse regardless of the trend.
FateResult classify_fate(const TimeSeries& series, const FateThresholds& thresholds,
                         bool aborted_on_collapse = false);

/// Linear least-squares slope of y against t.
double linear_slope(std::span<const double> t, std::span<const double> y);

/// Mean spacing of the upward crossings of y through its linear trend, with
/// linear interpolation between samples. Needs at least two crossings.
double oscillation_period(std::span<const double> t, std::span<const double> y);

}  // namespace ness
