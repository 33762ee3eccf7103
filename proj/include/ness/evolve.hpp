#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ness/core.hpp"
#include "ness/errors.hpp"
#include "ness/observables.hpp"
#include "ness/spectral.hpp"

namespace ness {

struct RunConfig;

/// Nonlinearity management: sigma(t) = sigma0 up to t0, then
/// sigma0 (1 - gamma + gamma/2 [1 + cos(omega_mod (t - t0))]).
struct NMSchedule {
  double sigma0 = 0.0;
  double t0 = 0.0;
  double omega_mod = 0.0;
  double gamma = 0.0;

  /// Constant nonlinearity, no management.
  static NMSchedule constant(double sigma0) { return {sigma0, 0.0, 0.0, 0.0}; }
  void validate() const;
};

double sigma_of_t(const NMSchedule& schedule, double t) noexcept;

enum class AbortReason { collapse, edge_leak };

std::string_view to_string(AbortReason reason);

struct PropagatorState {
  WaveField field;
  double t = 0.0;
  std::size_t step_count = 0;
  std::optional<AbortReason> aborted;
};

/// Raised when the field stops being finite; carries the last finite state.
class BlowUpError : public NumericalError {
 public:
  BlowUpError(const std::string& what, PropagatorState last_finite)
      : NumericalError(what), last_finite_(std::move(last_finite)) {}
  const PropagatorState& last_finite() const noexcept { return last_finite_; }

 private:
  PropagatorState last_finite_;
};

/// Strang split-step Fourier propagator for
///   i psi_t = -psi_xx / 2 + (V + iW) psi + sigma(t) |psi|^2 psi
/// with fixed dt. The local half-steps solve i psi_t = (V + iW + sigma |psi|^2) psi
/// exactly: the modulus grows as exp(W tau), so the nonlinear phase is
/// sigma |psi|^2 expm1(W dt) / W at fixed sigma. sigma is evaluated at the
/// step midpoint.
class Propagator {
 public:
  Propagator(const ComplexPotential& potential, const NMSchedule& schedule, double dt);

  double dt() const noexcept { return dt_; }
  const NMSchedule& schedule() const noexcept { return schedule_; }

  /// One unfused Strang step. Throws BlowUpError on a non-finite result.
  void step(PropagatorState& state) const;

  /// n_steps steps with adjacent local half-steps fused; agrees with repeated
  /// step() to rounding. Returns the time integral of 2 * integral(W |psi|^2 dx)
  /// along the split-step trajectory, integrated exactly over each local
  /// sub-step (the kinetic sub-step does not change the norm).
  double advance(PropagatorState& state, std::size_t n_steps) const;

  /// 2 * integral(W |psi|^2 dx).
  double gain_rate(const WaveField& field) const;

  /// dt * max|V|, the phase increment per step due to the real potential.
  double stiffness() const noexcept { return stiffness_; }

 private:
  void local_half(std::span<complex> psi, double sigma) const;
  void kinetic(std::span<complex> psi) const;

  GridPtr grid_;
  std::vector<double> w_;
  NMSchedule schedule_;
  double dt_;
  double stiffness_ = 0.0;
  spectral::Fft fft_;
  std::vector<complex> kinetic_factor_;  // exp(-i dt k^2/2) / n
  std::vector<complex> half_linear_;     // exp((W - iV) dt/2)
  std::vector<complex> full_linear_;     // exp((W - iV) dt)
  std::vector<double> half_gain_;        // exp(W dt/2)
  std::vector<double> full_gain_;        // exp(W dt), also the density growth per half-step
  std::vector<double> gain_increment_;   // expm1(W dt)
  std::vector<double> phase_weight_;     // (dt/2) expm1(W dt) / (W dt)
  std::vector<double> v_;
};

/// Single Strang step (builds a propagator; prefer Propagator for loops).
PropagatorState step(PropagatorState state, const ComplexPotential& potential,
                     const NMSchedule& schedule, double dt);

struct Snapshot {
  double t = 0.0;
  WaveField field;
};

struct RunResult {
  TimeSeries series;
  std::vector<Snapshot> snapshots;
  std::optional<AbortReason> abort;
  ComplexPotential potential;
  WaveField initial;
  /// Peak density of the undisplaced unit-norm stationary state, (omega0/pi)^(1/2).
  double reference_peak_density = 0.0;
  std::vector<std::string> warnings;
};

/// Propagates the configured initial state to t_final, sampling observables
/// every `sample_every` steps and stopping early on collapse or edge leak.
RunResult run(const RunConfig& config);

}  // namespace ness
