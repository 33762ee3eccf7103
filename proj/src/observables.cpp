#include "ness/observables.hpp"

#include <boost/math/tools/minima.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "ness/errors.hpp"
#include "ness/spectral.hpp"

namespace ness {

void TimeSeries::reserve(std::size_t n) {
  for (auto* v : {&t, &norm, &x_c, &peak_density, &peak_amplitude, &sigma_t, &gain_rate}) v->reserve(n);
}

double center_of_mass(const WaveField& field) {
  double num = 0.0;
  double den = 0.0;
  const auto x = field.grid->x();
  for (std::size_t j = 0; j < field.size(); ++j) {
    const double rho = std::norm(field.values[j]);
    num += x[j] * rho;
    den += rho;
  }
  if (!(den > 0.0)) throw DegenerateStateError("center_of_mass: field has zero norm");
  return num / den;
}

double peak_density(const WaveField& field) {
  double peak = 0.0;
  for (const auto& z : field.values) peak = std::max(peak, std::norm(z));
  return peak;
}

double energy(const WaveField& field, std::span<const double> v, double sigma) {
  const auto dpsi = spectral::derivative(std::span<const complex>(field.values), *field.grid, 1);
  double e = 0.0;
  for (std::size_t j = 0; j < field.size(); ++j) {
    const double rho = std::norm(field.values[j]);
    e += 0.5 * std::norm(dpsi[j]) + v[j] * rho + 0.5 * sigma * rho * rho;
  }
  return e * field.grid->dx();
}

std::vector<double> norm_balance_errors(const TimeSeries& s, double floor) {
  std::vector<double> out;
  for (std::size_t i = 1; i < s.size(); ++i) {
    const double dndt = (s.norm[i] - s.norm[i - 1]) / (s.t[i] - s.t[i - 1]);
    out.push_back(std::abs(dndt - s.gain_rate[i]) / std::max(std::abs(dndt), floor));
  }
  return out;
}

double linear_slope(std::span<const double> t, std::span<const double> y) {
  const auto n = static_cast<double>(t.size());
  if (t.size() < 2) throw InsufficientDataError("linear_slope needs at least two points");
  const double tm = std::accumulate(t.begin(), t.end(), 0.0) / n;
  const double ym = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sty = 0.0;
  double stt = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    sty += (t[i] - tm) * (y[i] - ym);
    stt += (t[i] - tm) * (t[i] - tm);
  }
  return sty / stt;
}

double oscillation_period(std::span<const double> t, std::span<const double> y) {
  const double slope = linear_slope(t, y);
  const auto n = static_cast<double>(t.size());
  const double tm = std::accumulate(t.begin(), t.end(), 0.0) / n;
  const double ym = std::accumulate(y.begin(), y.end(), 0.0) / n;
  const auto r = [&](std::size_t i) { return y[i] - ym - slope * (t[i] - tm); };
  std::vector<double> up;
  for (std::size_t i = 1; i < t.size(); ++i) {
    const double a = r(i - 1);
    const double b = r(i);
    if (a < 0.0 && b >= 0.0) up.push_back(t[i - 1] + (t[i] - t[i - 1]) * a / (a - b));
  }
  if (up.size() < 2) throw InsufficientDataError("oscillation_period: fewer than two upward crossings");
  return (up.back() - up.front()) / static_cast<double>(up.size() - 1);
}

std::vector<double> moving_average(std::span<const double> t, std::span<const double> y, double period) {
  std::vector<double> out(y.begin(), y.end());
  if (period <= 0.0 || t.size() < 2) return out;
  const double h = t[1] - t[0];
  const auto half = static_cast<std::ptrdiff_t>(std::llround(0.5 * period / h));
  if (half < 1) return out;
  std::vector<double> prefix(y.size() + 1, 0.0);
  for (std::size_t i = 0; i < y.size(); ++i) prefix[i + 1] = prefix[i] + y[i];
  const auto n = static_cast<std::ptrdiff_t>(y.size());
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, i - half);
    const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(n - 1, i + half);
    out[i] = (prefix[hi + 1] - prefix[lo]) / static_cast<double>(hi - lo + 1);
  }
  return out;
}

DecayFit fit_envelope_decay(const TimeSeries& series, Interval window) {
  const auto& t = series.t;
  const auto& xc = series.x_c;
  DecayFit fit;
  std::vector<double> signs;
  for (std::size_t i = 1; i + 1 < t.size(); ++i) {
    if (t[i] < window.begin || t[i] > window.end) continue;
    const double y0 = std::abs(xc[i - 1]);
    const double y1 = std::abs(xc[i]);
    const double y2 = std::abs(xc[i + 1]);
    if (!(y1 > y0 && y1 >= y2)) continue;
    // Parabola through the three samples; assumes uniform spacing.
    const double h = t[i + 1] - t[i];
    const double curv = y0 - 2.0 * y1 + y2;
    const double p = curv != 0.0 ? 0.5 * (y0 - y2) / curv : 0.0;
    fit.extremum_t.push_back(t[i] + p * h);
    fit.extremum_value.push_back(y1 - 0.25 * (y0 - y2) * p);
    signs.push_back(std::copysign(1.0, xc[i]));
  }
  if (fit.extremum_t.size() < 4) {
    throw InsufficientDataError("fit_envelope_decay: found " + std::to_string(fit.extremum_t.size()) +
                                " extrema in the window, need at least 4");
  }
  for (std::size_t i = 1; i < signs.size(); ++i) {
    if (signs[i] == signs[i - 1]) {
      std::ostringstream msg;
      msg << "fit_envelope_decay: extrema at t = " << fit.extremum_t[i - 1] << " and " << fit.extremum_t[i]
          << " do not alternate in sign";
      throw InsufficientDataError(msg.str());
    }
  }
  std::vector<double> logs(fit.extremum_value.size());
  std::ranges::transform(fit.extremum_value, logs.begin(), [](double v) { return std::log(v); });
  const double slope = linear_slope(fit.extremum_t, logs);
  const double tm = std::accumulate(fit.extremum_t.begin(), fit.extremum_t.end(), 0.0) / logs.size();
  const double lm = std::accumulate(logs.begin(), logs.end(), 0.0) / logs.size();
  const double intercept = lm - slope * tm;
  double ss = 0.0;
  for (std::size_t i = 0; i < logs.size(); ++i) {
    const double r = logs[i] - (intercept + slope * fit.extremum_t[i]);
    ss += r * r;
  }
  fit.rate = -slope;
  fit.amplitude = std::exp(intercept);
  fit.rms_residual = std::sqrt(ss / logs.size());
  return fit;
}

namespace {

struct LinearPart {
  double offset;     // A0 - 1/gamma
  double amplitude;  // 1/gamma
  double sse;
};

// For fixed beta the model offset + amplitude * exp(-beta tau) is linear.
LinearPart solve_linear(std::span<const double> tau, std::span<const double> y, double beta) {
  double s1 = 0, se = 0, see = 0, sy = 0, sey = 0;
  for (std::size_t i = 0; i < tau.size(); ++i) {
    const double e = std::exp(-beta * tau[i]);
    s1 += 1.0;
    se += e;
    see += e * e;
    sy += y[i];
    sey += e * y[i];
  }
  const double det = s1 * see - se * se;
  LinearPart out{sy / s1, 0.0, 0.0};
  if (std::abs(det) > 1e-14 * s1 * see) {
    out.amplitude = (s1 * sey - se * sy) / det;
    out.offset = (sy - out.amplitude * se) / s1;
  }
  for (std::size_t i = 0; i < tau.size(); ++i) {
    const double r = y[i] - out.offset - out.amplitude * std::exp(-beta * tau[i]);
    out.sse += r * r;
  }
  return out;
}

}  // namespace

PeakRelaxationFit fit_peak_relaxation(const TimeSeries& series, Interval window, double smoothing_period) {
  const auto smooth = moving_average(series.t, series.peak_density, smoothing_period);
  std::vector<double> tau;
  std::vector<double> y;
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (series.t[i] < window.begin || series.t[i] > window.end) continue;
    tau.push_back(series.t[i] - window.begin);
    y.push_back(smooth[i]);
  }
  if (y.size() < 4) throw InsufficientDataError("fit_peak_relaxation: fewer than 4 samples in window");

  PeakRelaxationFit fit;
  const auto [lo, hi] = std::ranges::minmax(y);
  const double mean = std::accumulate(y.begin(), y.end(), 0.0) / y.size();
  if (hi - lo <= 1e-12 * std::max(std::abs(mean), std::numeric_limits<double>::min())) {
    fit.A0 = mean;
    fit.degenerate = true;
    return fit;
  }

  // Coarse log-spaced scan, then Brent refinement around the best bracket.
  const double span = tau.back() - tau.front();
  const double u_min = std::log(1e-3 / span);
  const double u_max = std::log(1e3 / span);
  const auto sse_at = [&](double u) { return solve_linear(tau, y, std::exp(u)).sse; };
  constexpr int kScan = 240;
  int best = 0;
  double best_sse = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= kScan; ++i) {
    const double s = sse_at(u_min + (u_max - u_min) * i / kScan);
    if (s < best_sse) {
      best_sse = s;
      best = i;
    }
  }
  const double step = (u_max - u_min) / kScan;
  const double a = u_min + std::max(0, best - 1) * step;
  const double b = u_min + std::min(kScan, best + 1) * step;
  std::uintmax_t iters = 200;
  const auto [u, sse] = boost::math::tools::brent_find_minima(sse_at, a, b, 52, iters);
  const double beta = std::exp(u);
  const auto lin = solve_linear(tau, y, beta);

  fit.beta = beta;
  fit.rms_residual = std::sqrt(sse / y.size());
  if (lin.amplitude == 0.0) {
    fit.A0 = lin.offset;
    fit.degenerate = true;
    return fit;
  }
  fit.gamma_fit = 1.0 / lin.amplitude;
  fit.A0 = lin.offset + lin.amplitude;
  if (best == 0 || best == kScan || iters >= 200) {
    throw FitError("fit_peak_relaxation: beta did not converge inside [" + std::to_string(std::exp(u_min)) +
                       ", " + std::to_string(std::exp(u_max)) + "]",
                   fit);
  }
  return fit;
}

std::string_view to_string(Fate fate) {
  switch (fate) {
    case Fate::ness:
      return "NESS";
    case Fate::decay:
      return "decay";
    case Fate::collapse:
      return "collapse";
    case Fate::undetermined:
      return "undetermined";
  }
  return "undetermined";
}

Fate fate_from_string(std::string_view name) {
  for (auto f : {Fate::ness, Fate::decay, Fate::collapse, Fate::undetermined}) {
    if (to_string(f) == name) return f;
  }
  throw ConfigError("unknown fate '" + std::string(name) + "' (expected NESS, decay, collapse or undetermined)");
}

FateResult classify_fate(const TimeSeries& series, const FateThresholds& th, bool aborted_on_collapse) {
  FateResult out;
  if (series.size() < 2) {
    out.fate = aborted_on_collapse ? Fate::collapse : Fate::undetermined;
    return out;
  }
  const double t_end = series.t.back();
  const double t_start = series.t.front();
  if (aborted_on_collapse) out.fate = Fate::collapse;
  if (!aborted_on_collapse && t_end - t_start < 2.0 * th.transient_time) return out;

  const auto smooth = moving_average(series.t, series.peak_amplitude, th.smoothing_period);
  const double trim = 0.5 * th.smoothing_period;
  const double begin = std::max(t_end - th.window_fraction * (t_end - t_start), t_start + trim);
  std::vector<double> t;
  std::vector<double> y;
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (series.t[i] < begin || series.t[i] > t_end - trim) continue;
    t.push_back(series.t[i]);
    y.push_back(smooth[i]);
  }
  if (t.size() < 2) return out;
  out.slope = linear_slope(t, y);
  if (aborted_on_collapse) return out;
  if (std::abs(out.slope) < th.slope_tol) {
    out.fate = Fate::ness;
  } else {
    out.fate = out.slope < 0.0 ? Fate::decay : Fate::collapse;
  }
  return out;
}

}  // namespace ness
