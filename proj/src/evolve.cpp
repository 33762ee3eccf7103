#include "ness/evolve.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "ness/potentials.hpp"
#include "ness/run_config.hpp"
#include "ness/stationary.hpp"

namespace ness {

void NMSchedule::validate() const {
  if (!std::isfinite(sigma0) || !std::isfinite(t0) || !std::isfinite(omega_mod) || !std::isfinite(gamma))
    throw ConfigError("nm: parameters must be finite");
  if (t0 < 0.0) throw ConfigError("nm.t0 must be >= 0");
  if (gamma != 0.0 && !(omega_mod > 0.0)) throw ConfigError("nm.omega must be > 0 when nm.gamma != 0");
}

double sigma_of_t(const NMSchedule& s, double t) noexcept {
  if (t <= s.t0) return s.sigma0;
  return s.sigma0 * (1.0 - s.gamma + 0.5 * s.gamma * (1.0 + std::cos(s.omega_mod * (t - s.t0))));
}

std::string_view to_string(AbortReason reason) {
  switch (reason) {
    case AbortReason::collapse:
      return "collapse";
    case AbortReason::edge_leak:
      return "edge-leak";
  }
  return "unknown";
}

namespace {

// exp(i a). Nonlinear phase increments per step are tiny, where a short
// Taylor series is exact to rounding and much cheaper than libm sincos.
inline complex unit_phase(double a) {
  if (std::abs(a) > 0.25) return {std::cos(a), std::sin(a)};
  const double a2 = a * a;
  const double c = 1.0 + a2 * (-1.0 / 2 + a2 * (1.0 / 24 + a2 * (-1.0 / 720 + a2 * (1.0 / 40320 +
                   a2 * (-1.0 / 3628800 + a2 * (1.0 / 479001600 + a2 * (-1.0 / 87178291200.0)))))));
  const double s = a * (1.0 + a2 * (-1.0 / 6 + a2 * (1.0 / 120 + a2 * (-1.0 / 5040 + a2 * (1.0 / 362880 +
                   a2 * (-1.0 / 39916800 + a2 * (1.0 / 6227020800.0 + a2 * (-1.0 / 1307674368000.0))))))));
  return {c, s};
}

}  // namespace

Propagator::Propagator(const ComplexPotential& potential, const NMSchedule& schedule, double dt)
    : grid_(potential.grid),
      w_(potential.w),
      schedule_(schedule),
      dt_(dt),
      fft_(potential.grid->size()),
      v_(potential.v) {
  if (!(dt != 0.0) || !std::isfinite(dt)) throw ConfigError("propagator: dt must be finite and nonzero");
  const std::size_t n = grid_->size();
  const auto k = grid_->k();
  kinetic_factor_.resize(n);
  half_linear_.resize(n);
  full_linear_.resize(n);
  half_gain_.resize(n);
  full_gain_.resize(n);
  gain_increment_.resize(n);
  phase_weight_.resize(n);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t j = 0; j < n; ++j) {
    kinetic_factor_[j] = std::polar(inv_n, -0.5 * dt * k[j] * k[j]);
    half_gain_[j] = std::exp(0.5 * dt * w_[j]);
    full_gain_[j] = std::exp(dt * w_[j]);
    gain_increment_[j] = std::expm1(dt * w_[j]);
    const double z = dt * w_[j];
    phase_weight_[j] = 0.5 * dt * (z == 0.0 ? 1.0 : gain_increment_[j] / z);
    half_linear_[j] = std::polar(half_gain_[j], -0.5 * dt * v_[j]);
    full_linear_[j] = std::polar(full_gain_[j], -dt * v_[j]);
    stiffness_ = std::max(stiffness_, std::abs(dt * v_[j]));
  }
}

void Propagator::kinetic(std::span<complex> psi) const {
  fft_.forward(psi);
  for (std::size_t j = 0; j < psi.size(); ++j) psi[j] *= kinetic_factor_[j];
  fft_.backward_unscaled(psi);
}

void Propagator::local_half(std::span<complex> psi, double sigma) const {
  if (sigma == 0.0) {
    for (std::size_t j = 0; j < psi.size(); ++j) psi[j] *= half_linear_[j];
    return;
  }
  for (std::size_t j = 0; j < psi.size(); ++j) {
    psi[j] *= half_linear_[j] * unit_phase(-sigma * phase_weight_[j] * std::norm(psi[j]));
  }
}

double Propagator::gain_rate(const WaveField& field) const {
  double sum = 0.0;
  for (std::size_t j = 0; j < field.size(); ++j) sum += w_[j] * std::norm(field.values[j]);
  return 2.0 * sum * grid_->dx();
}

namespace {

bool all_finite(std::span<const complex> psi) {
  double acc = 0.0;
  for (const auto& z : psi) acc += std::norm(z);
  return std::isfinite(acc);
}

}  // namespace

void Propagator::step(PropagatorState& state) const {
  spectral::AlignedComplexVector psi(state.field.values.begin(), state.field.values.end());
  const double sigma = sigma_of_t(schedule_, state.t + 0.5 * dt_);
  local_half(psi, sigma);
  kinetic(psi);
  local_half(psi, sigma);
  if (!all_finite(psi)) {
    std::ostringstream msg;
    msg << "field blew up at t = " << state.t + dt_;
    throw BlowUpError(msg.str(), state);
  }
  std::ranges::copy(psi, state.field.values.begin());
  ++state.step_count;
  state.t = static_cast<double>(state.step_count) * dt_;
}

double Propagator::advance(PropagatorState& state, std::size_t n_steps) const {
  if (n_steps == 0) return 0.0;
  spectral::AlignedComplexVector psi(state.field.values.begin(), state.field.values.end());
  const std::size_t n = psi.size();
  const auto sigma_at = [&](std::size_t i) {
    return sigma_of_t(schedule_, static_cast<double>(state.step_count + i) * dt_ + 0.5 * dt_);
  };
  // Within a local sub-step the density evolves as rho exp(2 W tau), so the
  // gain integral over it is expm1(W dt) rho exactly.
  const auto substep_gain = [&] {
    double g = 0.0;
    for (std::size_t j = 0; j < n; ++j) g += gain_increment_[j] * std::norm(psi[j]);
    return g;
  };

  double gain = substep_gain();
  double sigma_prev = sigma_at(0);
  local_half(psi, sigma_prev);
  kinetic(psi);
  for (std::size_t i = 1; i < n_steps; ++i) {
    const double sigma_next = sigma_at(i);
    if (sigma_prev == 0.0 && sigma_next == 0.0) {
      for (std::size_t j = 0; j < n; ++j) {
        const double rho = std::norm(psi[j]);
        gain += gain_increment_[j] * (rho + rho * full_gain_[j]);
        psi[j] *= full_linear_[j];
      }
    } else {
      // Two local half-steps back to back: the second one sees the density
      // already grown by exp(W dt).
      for (std::size_t j = 0; j < n; ++j) {
        const double rho = std::norm(psi[j]);
        const double rho_mid = rho * full_gain_[j];
        gain += gain_increment_[j] * (rho + rho_mid);
        psi[j] *= full_linear_[j] * unit_phase(-phase_weight_[j] * (sigma_prev * rho + sigma_next * rho_mid));
      }
    }
    kinetic(psi);
    sigma_prev = sigma_next;
  }
  gain += substep_gain();
  local_half(psi, sigma_prev);

  if (!all_finite(psi)) {
    std::ostringstream msg;
    msg << "field blew up between t = " << state.t << " and t = "
        << static_cast<double>(state.step_count + n_steps) * dt_;
    throw BlowUpError(msg.str(), state);
  }
  std::ranges::copy(psi, state.field.values.begin());
  state.step_count += n_steps;
  state.t = static_cast<double>(state.step_count) * dt_;
  return gain * grid_->dx();
}

PropagatorState step(PropagatorState state, const ComplexPotential& potential,
                     const NMSchedule& schedule, double dt) {
  Propagator(potential, schedule, dt).step(state);
  return state;
}

namespace {

// Spectral translation psi(x) -> psi(x - shift), exact for band-limited periodic fields.
WaveField translate(const WaveField& f, double shift) {
  WaveField out = f;
  spectral::Fft fft(f.size());
  fft.forward(out.values);
  const auto k = f.grid->k();
  for (std::size_t j = 0; j < out.size(); ++j) out.values[j] *= std::polar(1.0, -k[j] * shift);
  out.values[out.size() / 2] *= std::cos(k[out.size() / 2] * shift);
  fft.backward(out.values);
  return out;
}

struct Setup {
  ComplexPotential potential;
  WaveField initial;
};

Setup build_setup(const RunConfig& cfg, GridPtr grid) {
  const auto& p = cfg.potential;
  const auto& init = cfg.initial;
  switch (p.family) {
    case PotentialFamily::hermitian_ho:
      return {hermitian_trap(p.omega0, grid), gaussian_ground_state(p.omega0, grid, init.x0)};
    case PotentialFamily::pt_ho:
      return {pt_symmetric_trap(p.omega0, p.c0, grid),
              pt_stationary_state(p.omega0, p.c0, grid, init.x0, init.include_phase)};
    case PotentialFamily::damped_ho: {
      const DampedTrapParams params{p.omega0, p.a1, p.a2};
      return {damped_trap(params, grid).potential,
              stationary_state(params, grid, init.x0, init.include_phase)};
    }
    case PotentialFamily::mapped_functional: {
      WaveField amplitude;
      ComplexPotential pot(grid);
      if (const auto* poly = std::get_if<PolynomialFunctional>(&p.functional)) {
        EigenProblem problem{grid, hermitian_trap(p.omega0, grid).v, p.mapping_sigma, *poly, p.mapping_norm};
        amplitude = solve_self_consistent(problem).amplitude;
        pot.v = problem.v;
        auto mapped = map_from_functional(amplitude, p.functional);
        pot.w = std::move(mapped.w);
        pot.theta = std::move(mapped.theta);
      } else {
        const auto& d = std::get<DerivativeFunctional>(p.functional);
        const DampedTrapParams params{p.omega0, d.a1, d.a2};
        amplitude = gaussian_ground_state(p.omega0, grid);
        pot.v = damped_trap(params, grid).potential.v;
        auto mapped = map_from_functional(amplitude, p.functional,
                                          [params](double x) { return damped_trap_w(params, x); });
        pot.w = std::move(mapped.w);
        pot.theta = std::move(mapped.theta);
      }
      WaveField psi = amplitude;
      if (init.include_phase) {
        for (std::size_t j = 0; j < psi.size(); ++j) psi.values[j] *= std::polar(1.0, (*pot.theta)[j]);
      }
      if (init.x0 != 0.0) psi = translate(psi, init.x0);
      return {std::move(pot), std::move(psi)};
    }
  }
  throw ConfigError("unknown potential family");
}

struct Sampler {
  const Propagator& prop;
  RunResult& result;
  double threshold;

  void record(const PropagatorState& s, double gain) {
    auto& ts = result.series;
    const auto& psi = s.field.values;
    double peak = 0.0;
    for (const auto& z : psi) peak = std::max(peak, std::norm(z));
    const double n = norm(s.field);
    if (!std::isfinite(n)) {
      throw BlowUpError("non-finite norm at t = " + std::to_string(s.t), s);
    }
    ts.t.push_back(s.t);
    ts.norm.push_back(n);
    ts.x_c.push_back(n > 0.0 ? center_of_mass(s.field) : 0.0);
    ts.peak_density.push_back(peak);
    ts.peak_amplitude.push_back(std::sqrt(peak));
    ts.sigma_t.push_back(sigma_of_t(prop.schedule(), s.t));
    ts.gain_rate.push_back(gain);
  }

  std::optional<AbortReason> check(const PropagatorState& s) const {
    const double peak = result.series.peak_density.back();
    if (peak > threshold) return AbortReason::collapse;
    const double edge = std::max(std::norm(s.field.values.front()), std::norm(s.field.values.back()));
    if (edge > 1e-8) return AbortReason::edge_leak;
    return std::nullopt;
  }
};

}  // namespace

RunResult run(const RunConfig& config) {
  config.validate();
  auto grid = make_grid(config.grid.x_min, config.grid.x_max, config.grid.n_points);
  Setup setup = build_setup(config, grid);
  const double n0 = norm(setup.initial);
  if (!(n0 > 0.0)) throw DegenerateStateError("initial state has zero norm");
  const double scale = std::sqrt(config.initial.norm / n0);
  for (auto& z : setup.initial.values) z *= scale;

  RunResult result;
  result.potential = setup.potential;
  result.initial = setup.initial;
  result.reference_peak_density = std::sqrt(config.potential.omega0 / std::numbers::pi);
  const double threshold = config.collapse_threshold > 0.0 ? config.collapse_threshold
                                                           : 100.0 * result.reference_peak_density;

  const Propagator prop(setup.potential, config.schedule(), config.dt);
  if (prop.stiffness() > 0.5) {
    std::ostringstream msg;
    msg << "dt * max|V| = " << prop.stiffness() << " > 0.5; phase per step is not small";
    result.warnings.push_back(msg.str());
  }

  const auto total_steps = static_cast<std::size_t>(std::llround(config.t_final / config.dt));
  std::vector<std::size_t> snapshot_steps;
  for (double ts : config.snapshot_times) {
    snapshot_steps.push_back(std::min(total_steps, static_cast<std::size_t>(std::llround(ts / config.dt))));
  }
  std::ranges::sort(snapshot_steps);
  auto next_snapshot = snapshot_steps.begin();

  PropagatorState state{setup.initial, 0.0, 0, std::nullopt};
  Sampler sampler{prop, result, threshold};
  result.series.reserve(total_steps / config.sample_every + 2);
  sampler.record(state, prop.gain_rate(state.field));
  const auto take_snapshots = [&] {
    while (next_snapshot != snapshot_steps.end() && *next_snapshot == state.step_count) {
      result.snapshots.push_back({state.t, state.field});
      ++next_snapshot;
    }
  };
  take_snapshots();

  std::size_t last_sample = 0;
  double gain_integral = 0.0;
  while (state.step_count < total_steps) {
    std::size_t target = std::min(total_steps, last_sample + config.sample_every);
    if (next_snapshot != snapshot_steps.end()) target = std::min(target, *next_snapshot);
    gain_integral += prop.advance(state, target - state.step_count);
    take_snapshots();
    if (state.step_count == last_sample + config.sample_every || state.step_count == total_steps) {
      const double span = static_cast<double>(state.step_count - last_sample) * config.dt;
      sampler.record(state, gain_integral / span);
      gain_integral = 0.0;
      last_sample = state.step_count;
      if (auto reason = sampler.check(state)) {
        state.aborted = reason;
        result.abort = reason;
        break;
      }
    }
  }
  return result;
}

}  // namespace ness
