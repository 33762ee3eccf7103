#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "ness/core.hpp"
#include "ness/potentials.hpp"

namespace ness {

/// Real nonlinear eigenvalue problem
///   { -1/2 d^2/dx^2 + V + sigma A^2 + 1/2 (sum_n c_n A^n)^2 } A = omega A
/// for the nodeless ground state A normalized to target_norm.
struct EigenProblem {
  GridPtr grid;
  std::vector<double> v;
  double sigma = 0.0;
  PolynomialFunctional functional;
  double target_norm = 1.0;
};

struct EigenResult {
  WaveField amplitude;
  double omega = 0.0;
  /// max_j |H[A] A - omega A|, second derivative taken spectrally.
  double residual = 0.0;
  std::size_t iterations = 0;
  /// Eigenvalue of the sigma = 0, c = 0 problem with the same V, when requested.
  std::optional<double> omega_unshifted;
  std::vector<double> residual_history;
};

/// Self-consistent field iteration: build V_eff from the current density,
/// take the lowest eigenpair of -1/2 d^2/dx^2 + V_eff, mix densities
/// rho <- (1 - mixing) rho + mixing rho_new, repeat until successive
/// eigenvalues differ by less than tol and the residual is below 10 tol.
///
/// Throws ConvergenceError (with the last residual) after max_iter iterations.
EigenResult solve_self_consistent(const EigenProblem& problem, double tol = 1e-10,
                                  std::size_t max_iter = 1000, double mixing = 0.3,
                                  bool compute_unshifted = false);

struct Eigenpair {
  std::vector<double> vector;  // unit-norm in the rectangle rule, positive at its peak
  double value = 0.0;
};

/// Lowest eigenpair of -1/2 d^2/dx^2 + v_eff with the spectral Laplacian.
///
/// A second-order finite-difference inverse iteration gives the starting
/// pair; shifted inverse iteration on the spectral operator then refines it,
/// each solve done by conjugate gradients preconditioned with the
/// finite-difference operator.
Eigenpair lowest_eigenpair(const Grid& grid, std::span<const double> v_eff,
                           std::span<const double> guess = {});

/// Effective potential V + sigma A^2 + 1/2 (sum_n c_n A^n)^2 for amplitude A.
std::vector<double> effective_potential(const EigenProblem& problem, std::span<const double> amplitude);

}  // namespace ness
