#pragma once

#include <functional>
#include <span>
#include <variant>
#include <vector>

#include "ness/core.hpp"

namespace ness {

/// F(x) = 1/2 * sum_n c[n] * A^(n+2).
struct PolynomialFunctional {
  std::vector<double> c;
};

/// F(x) = a1 * A^2 + (a2/2) * d(A^2)/dx.
struct DerivativeFunctional {
  double a1 = 0.0;
  double a2 = 0.0;
};

using FunctionalSpec = std::variant<PolynomialFunctional, DerivativeFunctional>;

/// Throws ConfigError when the coefficient list is empty, non-finite, or all zero.
void validate(const FunctionalSpec& spec);

struct DampedTrapParams {
  double omega0 = 1.0;
  double a1 = 0.0;
  double a2 = 0.0;

  /// omega0^2 (1 - 4 a2^2), the curvature of the shifted real trap.
  double omega0_shifted_sq() const noexcept { return omega0 * omega0 * (1.0 - 4.0 * a2 * a2); }
  void validate() const;
};

/// Unit-norm harmonic-oscillator ground state (omega0/pi)^(1/4) exp(-omega0 (x-x0)^2 / 2).
/// Throws DomainError if the amplitude at either edge is not below 1e-8.
WaveField gaussian_ground_state(double omega0, GridPtr grid, double x0 = 0.0);

struct MappedPotential {
  std::vector<double> w;
  std::vector<double> theta;
};

/// Optional closed form for W used where the amplitude is too small to divide by.
using TailModel = std::function<double(double x)>;

/// Gain-loss mapping: theta_x = 2F/A^2, W = (1/A^2) dF/dx, gauge theta(0) = 0.
///
/// Points with A^2 < 1e-12 max(A^2) are "tail" points: W there comes from
/// `w_tail` when given. Otherwise W and theta_x there follow from continuing
/// A'/A linearly into the tails, which is exact for Gaussian decay. Tail points
/// surrounded by trusted ones are interior zeros and raise SingularMappingError.
MappedPotential map_from_functional(const WaveField& amplitude, const FunctionalSpec& spec,
                                    const TailModel& w_tail = {});

/// V = omega0^2 x^2 / 2, W = 0.
ComplexPotential hermitian_trap(double omega0, GridPtr grid);

/// V = omega0^2 x^2 / 2, W = -c0 omega0 x, theta = c0 x.
ComplexPotential pt_symmetric_trap(double omega0, double c0, GridPtr grid);

struct DampedTrap {
  ComplexPotential potential;
  /// Real eigenvalue (omega0 + 4 a1^2) / 2 of the supported stationary state.
  double omega = 0.0;
};

/// Non-PT-symmetric damped oscillator generated by the derivative functional:
///   V = Omega0^2 x^2/2 + 4 a1 a2 omega0 x
///   W = 2 a2 omega0^2 x^2 - 2 a1 omega0 x - a2 omega0
///   theta = 2 a1 x - a2 omega0 x^2
DampedTrap damped_trap(const DampedTrapParams& params, GridPtr grid);

/// Closed-form W of the damped family at a single point.
double damped_trap_w(const DampedTrapParams& params, double x) noexcept;

/// Exact stationary state A(x - x0) exp(i theta(x - x0)) of the damped family.
/// With x0 != 0 it is the displaced initial state used for the relaxation runs.
WaveField stationary_state(const DampedTrapParams& params, GridPtr grid, double x0 = 0.0,
                           bool include_phase = true);

/// Exact stationary state of the PT-symmetric trap, A(x - x0) exp(i c0 (x - x0)).
WaveField pt_stationary_state(double omega0, double c0, GridPtr grid, double x0 = 0.0,
                              bool include_phase = true);

/// V = V_tilde - (c_n^2 / 2) A^(2n), for n >= 1.
std::vector<double> absorb_into_real_potential(std::span<const double> v_tilde,
                                               const WaveField& amplitude, double c_n, int n);

/// max_j |H psi - omega psi| with H = -1/2 d^2/dx^2 + V + iW + sigma |psi|^2,
/// derivatives taken spectrally. Vanishes for an exact stationary state.
double stationary_residual(const WaveField& psi, const ComplexPotential& potential, double omega,
                           double sigma);

}  // namespace ness
