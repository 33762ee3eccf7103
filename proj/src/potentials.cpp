#include "ness/potentials.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "ness/errors.hpp"
#include "ness/spectral.hpp"

namespace ness {
namespace {

constexpr double kTailFraction = 1e-12;
constexpr double kEdgeTolerance = 1e-8;

void check_edges(const WaveField& f) {
  const double left = std::abs(f.values.front());
  const double right = std::abs(f.values.back());
  if (!(left < kEdgeTolerance && right < kEdgeTolerance)) {
    std::ostringstream msg;
    msg << "domain too small: edge amplitude " << std::max(left, right) << " >= " << kEdgeTolerance;
    throw DomainError(msg.str());
  }
}

// Indices [first, last] where A^2 is large enough to divide by.
struct TrustedRange {
  std::size_t first;
  std::size_t last;
};

TrustedRange trusted_range(std::span<const double> amp) {
  double peak = 0.0;
  for (double a : amp) peak = std::max(peak, a * a);
  if (!(peak > 0.0)) throw SingularMappingError("amplitude vanishes everywhere");
  const double floor = kTailFraction * peak;
  const auto trusted = [&](double a) { return a * a >= floor; };
  std::size_t first = 0;
  while (!trusted(amp[first])) ++first;
  std::size_t last = amp.size() - 1;
  while (!trusted(amp[last])) --last;
  for (std::size_t j = first; j <= last; ++j) {
    if (!trusted(amp[j]) || amp[j] < 0.0) {
      std::ostringstream msg;
      msg << "amplitude has an interior zero near grid index " << j;
      throw SingularMappingError(msg.str());
    }
  }
  return {first, last};
}

// Replace values outside the trusted range by the tail model or by clamping.
void regularize_tails(std::vector<double>& values, TrustedRange r, const Grid& grid,
                      const TailModel& model) {
  for (std::size_t j = 0; j < values.size(); ++j) {
    if (j >= r.first && j <= r.last) continue;
    if (model) {
      values[j] = model(grid.x(j));
    } else {
      values[j] = j < r.first ? values[r.first] : values[r.last];
    }
  }
}

// Continue values linearly beyond the trusted range, using the slope over the
// outermost `span` trusted points on each side.
struct TailSlopes {
  double left = 0.0;
  double right = 0.0;
};

TailSlopes extrapolate_tails(std::vector<double>& values, TrustedRange r, const Grid& grid) {
  const std::size_t span = std::min<std::size_t>(4, (r.last - r.first) / 2);
  if (span == 0) {
    regularize_tails(values, r, grid, {});
    return {};
  }
  const double left_slope = (values[r.first + span] - values[r.first]) / (span * grid.dx());
  const double right_slope = (values[r.last] - values[r.last - span]) / (span * grid.dx());
  for (std::size_t j = 0; j < r.first; ++j) values[j] = values[r.first] + left_slope * (grid.x(j) - grid.x(r.first));
  for (std::size_t j = r.last + 1; j < values.size(); ++j)
    values[j] = values[r.last] + right_slope * (grid.x(j) - grid.x(r.last));
  return {left_slope, right_slope};
}

}  // namespace

void validate(const FunctionalSpec& spec) {
  std::visit(
      [](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, PolynomialFunctional>) {
          if (s.c.empty()) throw ConfigError("polynomial functional needs at least one coefficient");
          if (std::ranges::any_of(s.c, [](double c) { return !std::isfinite(c); }))
            throw ConfigError("polynomial functional coefficients must be finite");
          if (std::ranges::all_of(s.c, [](double c) { return c == 0.0; }))
            throw ConfigError("polynomial functional has no nonzero coefficient");
        } else {
          if (!std::isfinite(s.a1) || !std::isfinite(s.a2))
            throw ConfigError("derivative functional coefficients must be finite");
          if (s.a1 == 0.0 && s.a2 == 0.0)
            throw ConfigError("derivative functional has no nonzero coefficient");
        }
      },
      spec);
}

void DampedTrapParams::validate() const {
  if (!(omega0 > 0.0)) throw ConfigError("damped trap: omega0 must be positive");
  if (!std::isfinite(a1) || !std::isfinite(a2)) throw ConfigError("damped trap: a1, a2 must be finite");
  if (!(4.0 * a2 * a2 < 1.0)) throw ConfigError("damped trap: requires 4 a2^2 < 1");
}

WaveField gaussian_ground_state(double omega0, GridPtr grid, double x0) {
  if (!(omega0 > 0.0)) throw ConfigError("gaussian_ground_state: omega0 must be positive");
  WaveField f(grid);
  const double peak = std::pow(omega0 / std::numbers::pi, 0.25);
  for (std::size_t j = 0; j < grid->size(); ++j) {
    const double s = grid->x(j) - x0;
    f.values[j] = peak * std::exp(-0.5 * omega0 * s * s);
  }
  check_edges(f);
  return f;
}

MappedPotential map_from_functional(const WaveField& amplitude, const FunctionalSpec& spec,
                                    const TailModel& w_tail) {
  const Grid& grid = *amplitude.grid;
  const std::size_t n = grid.size();
  std::vector<double> amp(n);
  double peak = 0.0;
  for (const auto& z : amplitude.values) peak = std::max(peak, std::abs(z));
  for (std::size_t j = 0; j < n; ++j) {
    if (std::abs(amplitude.values[j].imag()) > 1e-12 * peak)
      throw SingularMappingError("map_from_functional expects a real amplitude");
    amp[j] = amplitude.values[j].real();
  }
  const TrustedRange range = trusted_range(amp);

  // Everything is expressed through A'/A and A''/A, which only divide by A.
  // The log-derivative is trusted where A^2 is not negligible and is continued
  // linearly beyond, which is exact for Gaussian tails.
  const auto da = spectral::derivative(std::span<const double>(amp), grid, 1);
  std::vector<double> log_derivative(n, 0.0);
  for (std::size_t j = range.first; j <= range.last; ++j) log_derivative[j] = da[j] / amp[j];
  const TailSlopes slopes = extrapolate_tails(log_derivative, range, grid);

  MappedPotential out;
  out.w.assign(n, 0.0);

  if (const auto* poly = std::get_if<PolynomialFunctional>(&spec)) {
    // W = F'/A^2 = (1/2) sum_n c_n (n+2) A^n (A'/A).
    std::vector<double> theta_x(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      double a_pow = 1.0;
      double order = 2.0;
      for (double c : poly->c) {
        theta_x[j] += c * a_pow;
        out.w[j] += 0.5 * c * order * a_pow * log_derivative[j];
        a_pow *= amp[j];
        order += 1.0;
      }
    }
    // theta_x is a constant plus a localized part, so the spectral antiderivative is exact.
    out.theta = spectral::antiderivative(theta_x, grid, 0.0);
  } else {
    const auto& d = std::get<DerivativeFunctional>(spec);
    // theta_x = 2 a1 + 2 a2 A'/A and W = 2 a1 A'/A + a2 (A''/A + (A'/A)^2).
    // In the tails A''/A = (A'/A)' + (A'/A)^2 with the extrapolated slope.
    const auto d2a = spectral::derivative(std::span<const double>(amp), grid, 2);
    std::vector<double> theta_x(n);
    for (std::size_t j = 0; j < n; ++j) {
      const double l = log_derivative[j];
      double curvature = 0.0;
      if (j < range.first) {
        curvature = slopes.left + l * l;
      } else if (j > range.last) {
        curvature = slopes.right + l * l;
      } else {
        curvature = d2a[j] / amp[j];
      }
      theta_x[j] = 2.0 * d.a1 + 2.0 * d.a2 * l;
      out.w[j] = 2.0 * d.a1 * l + d.a2 * (curvature + l * l);
    }
    out.theta = spectral::cumulative_trapezoid(theta_x, grid, 0.0);
  }
  if (w_tail) regularize_tails(out.w, range, grid, w_tail);
  return out;
}

ComplexPotential hermitian_trap(double omega0, GridPtr grid) {
  if (!(omega0 > 0.0)) throw ConfigError("hermitian trap: omega0 must be positive");
  ComplexPotential p(grid);
  for (std::size_t j = 0; j < grid->size(); ++j) {
    const double x = grid->x(j);
    p.v[j] = 0.5 * omega0 * omega0 * x * x;
  }
  p.theta = std::vector<double>(grid->size(), 0.0);
  return p;
}

ComplexPotential pt_symmetric_trap(double omega0, double c0, GridPtr grid) {
  ComplexPotential p = hermitian_trap(omega0, grid);
  const double w0 = c0 * omega0;
  for (std::size_t j = 0; j < grid->size(); ++j) {
    const double x = grid->x(j);
    p.w[j] = -w0 * x;
    (*p.theta)[j] = c0 * x;
  }
  return p;
}

double damped_trap_w(const DampedTrapParams& p, double x) noexcept {
  return 2.0 * p.a2 * p.omega0 * p.omega0 * x * x - 2.0 * p.a1 * p.omega0 * x - p.a2 * p.omega0;
}

namespace {
double damped_theta(const DampedTrapParams& p, double x) noexcept {
  return 2.0 * p.a1 * x - p.a2 * p.omega0 * x * x;
}
}  // namespace

DampedTrap damped_trap(const DampedTrapParams& params, GridPtr grid) {
  params.validate();
  DampedTrap out{ComplexPotential(grid), 0.5 * (params.omega0 + 4.0 * params.a1 * params.a1)};
  auto& p = out.potential;
  std::vector<double> theta(grid->size());
  const double curvature = params.omega0_shifted_sq();
  const double slope = 4.0 * params.a1 * params.a2 * params.omega0;
  for (std::size_t j = 0; j < grid->size(); ++j) {
    const double x = grid->x(j);
    p.v[j] = 0.5 * curvature * x * x + slope * x;
    p.w[j] = damped_trap_w(params, x);
    theta[j] = damped_theta(params, x);
  }
  p.theta = std::move(theta);
  return out;
}

WaveField stationary_state(const DampedTrapParams& params, GridPtr grid, double x0,
                           bool include_phase) {
  params.validate();
  WaveField f = gaussian_ground_state(params.omega0, grid, x0);
  if (include_phase) {
    for (std::size_t j = 0; j < grid->size(); ++j) {
      f.values[j] *= std::polar(1.0, damped_theta(params, grid->x(j) - x0));
    }
  }
  return f;
}

WaveField pt_stationary_state(double omega0, double c0, GridPtr grid, double x0, bool include_phase) {
  WaveField f = gaussian_ground_state(omega0, grid, x0);
  if (include_phase) {
    for (std::size_t j = 0; j < grid->size(); ++j) {
      f.values[j] *= std::polar(1.0, c0 * (grid->x(j) - x0));
    }
  }
  return f;
}

std::vector<double> absorb_into_real_potential(std::span<const double> v_tilde,
                                               const WaveField& amplitude, double c_n, int n) {
  if (n < 1) throw ConfigError("absorb_into_real_potential: n must be >= 1");
  if (v_tilde.size() != amplitude.size()) throw ConfigError("absorb_into_real_potential: size mismatch");
  std::vector<double> v(v_tilde.begin(), v_tilde.end());
  for (std::size_t j = 0; j < v.size(); ++j) {
    const double rho = std::norm(amplitude.values[j]);
    v[j] -= 0.5 * c_n * c_n * std::pow(rho, n);
  }
  return v;
}

double stationary_residual(const WaveField& psi, const ComplexPotential& potential, double omega,
                           double sigma) {
  const auto d2 = spectral::derivative(std::span<const complex>(psi.values), *psi.grid, 2);
  double worst = 0.0;
  for (std::size_t j = 0; j < psi.size(); ++j) {
    const complex z = psi.values[j];
    const complex h = -0.5 * d2[j] + complex(potential.v[j], potential.w[j]) * z +
                      sigma * std::norm(z) * z;
    worst = std::max(worst, std::abs(h - omega * z));
  }
  return worst;
}

}  // namespace ness
