#include "ness/stationary.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "ness/errors.hpp"
#include "ness/spectral.hpp"

namespace ness {
namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

void normalize(std::vector<double>& x, double dx) {
  const double s = 1.0 / std::sqrt(dot(x, x) * dx);
  for (auto& v : x) v *= s;
}

// Second-order finite-difference -1/2 d^2/dx^2 + v - shift with Dirichlet ends.
class TridiagonalOperator {
 public:
  TridiagonalOperator(std::span<const double> v, double dx, double shift)
      : off_(-0.5 / (dx * dx)), diag_(v.size()) {
    for (std::size_t j = 0; j < v.size(); ++j) diag_[j] = 1.0 / (dx * dx) + v[j] - shift;
    factor();
  }

  // Thomas algorithm with the factorization done once.
  void solve(std::span<const double> rhs, std::span<double> out) const {
    const std::size_t n = diag_.size();
    out[0] = rhs[0] / pivot_[0];
    for (std::size_t j = 1; j < n; ++j) out[j] = (rhs[j] - off_ * out[j - 1]) / pivot_[j];
    for (std::size_t j = n - 1; j-- > 0;) out[j] -= upper_[j] * out[j + 1];
  }

  void apply(std::span<const double> x, std::span<double> out) const {
    const std::size_t n = diag_.size();
    for (std::size_t j = 0; j < n; ++j) {
      double s = diag_[j] * x[j];
      if (j > 0) s += off_ * x[j - 1];
      if (j + 1 < n) s += off_ * x[j + 1];
      out[j] = s;
    }
  }

 private:
  void factor() {
    const std::size_t n = diag_.size();
    pivot_.resize(n);
    upper_.resize(n);
    pivot_[0] = diag_[0];
    for (std::size_t j = 0; j + 1 < n; ++j) {
      if (pivot_[j] == 0.0 || !std::isfinite(pivot_[j]))
        throw NumericalError("finite-difference operator is singular at the chosen shift");
      upper_[j] = off_ / pivot_[j];
      pivot_[j + 1] = diag_[j + 1] - off_ * upper_[j];
    }
  }

  double off_;
  std::vector<double> diag_;
  std::vector<double> pivot_;
  std::vector<double> upper_;
};

class SpectralOperator {
 public:
  SpectralOperator(const Grid& grid, std::span<const double> v)
      : grid_(grid), v_(v), fft_(grid.size()), buf_(grid.size()) {}

  /// out = (-1/2 d^2/dx^2 + v - shift) x
  void apply(std::span<const double> x, std::span<double> out, double shift) {
    const std::size_t n = x.size();
    std::copy(x.begin(), x.end(), buf_.begin());
    fft_.forward(buf_);
    const auto k = grid_.k();
    for (std::size_t j = 0; j < n; ++j) buf_[j] *= 0.5 * k[j] * k[j];
    fft_.backward(buf_);
    for (std::size_t j = 0; j < n; ++j) out[j] = buf_[j].real() + (v_[j] - shift) * x[j];
  }

 private:
  const Grid& grid_;
  std::span<const double> v_;
  spectral::Fft fft_;
  std::vector<complex> buf_;
};

// Preconditioned conjugate gradients for (H - shift) y = b.
void pcg(SpectralOperator& op, const TridiagonalOperator& pre, double shift, std::span<const double> b,
         std::vector<double>& y) {
  const std::size_t n = b.size();
  std::vector<double> r(n), z(n), p(n), q(n);
  op.apply(y, q, shift);
  for (std::size_t j = 0; j < n; ++j) r[j] = b[j] - q[j];
  pre.solve(r, z);
  p = z;
  double rz = dot(r, z);
  const double b_norm = std::sqrt(dot(b, b));
  for (int it = 0; it < 200; ++it) {
    if (std::sqrt(dot(r, r)) <= 1e-13 * b_norm) return;
    op.apply(p, q, shift);
    const double curvature = dot(p, q);
    if (!(curvature > 0.0)) {
      throw NumericalError("spectral Hamiltonian is not positive definite above the shift");
    }
    const double alpha = rz / curvature;
    for (std::size_t j = 0; j < n; ++j) {
      y[j] += alpha * p[j];
      r[j] -= alpha * q[j];
    }
    pre.solve(r, z);
    const double rz_next = dot(r, z);
    const double beta = rz_next / rz;
    rz = rz_next;
    for (std::size_t j = 0; j < n; ++j) p[j] = z[j] + beta * p[j];
  }
}

}  // namespace

Eigenpair lowest_eigenpair(const Grid& grid, std::span<const double> v_eff, std::span<const double> guess) {
  const std::size_t n = grid.size();
  const double dx = grid.dx();
  const double v_min = *std::ranges::min_element(v_eff);
  if (!std::isfinite(v_min)) throw NumericalError("effective potential is not finite");

  std::vector<double> x(n);
  if (guess.size() == n) {
    std::copy(guess.begin(), guess.end(), x.begin());
  } else {
    for (std::size_t j = 0; j < n; ++j) x[j] = std::exp(-0.5 * std::pow(grid.x(j), 2));
  }
  normalize(x, dx);

  // Stage 1: finite-difference inverse iteration with a Rayleigh-updated shift.
  std::vector<double> y(n), hx(n);
  double lambda = 0.0;
  {
    const TridiagonalOperator h0(v_eff, dx, 0.0);
    h0.apply(x, hx);
    lambda = dot(x, hx) * dx;
    double shift = std::min(lambda, v_min) - 1.0;
    for (int it = 0; it < 200; ++it) {
      const TridiagonalOperator op(v_eff, dx, shift);
      op.solve(x, y);
      x = y;
      normalize(x, dx);
      h0.apply(x, hx);
      const double next = dot(x, hx) * dx;
      const bool done = std::abs(next - lambda) <= 1e-14 * std::max(1.0, std::abs(next));
      lambda = next;
      if (done && it > 2) break;
      if (it >= 2) shift = lambda - 1e-2 * std::max(1.0, std::abs(lambda));
    }
  }

  // Stage 2: shifted inverse iteration on the spectral operator.
  SpectralOperator hs(grid, v_eff);
  hs.apply(x, hx, 0.0);
  lambda = dot(x, hx) * dx;
  const double shift = lambda - 1e-2 * std::max(1.0, std::abs(lambda));
  const TridiagonalOperator pre(v_eff, dx, shift);
  for (int it = 0; it < 60; ++it) {
    y = x;
    pcg(hs, pre, shift, x, y);
    x = y;
    normalize(x, dx);
    hs.apply(x, hx, 0.0);
    const double next = dot(x, hx) * dx;
    const bool done = std::abs(next - lambda) <= 1e-15 * std::max(1.0, std::abs(next));
    lambda = next;
    if (done) break;
  }

  const auto peak = std::ranges::max_element(x, {}, [](double v) { return std::abs(v); });
  if (*peak < 0.0) {
    for (auto& v : x) v = -v;
  }
  return {std::move(x), lambda};
}

std::vector<double> effective_potential(const EigenProblem& problem, std::span<const double> amplitude) {
  std::vector<double> v = problem.v;
  for (std::size_t j = 0; j < v.size(); ++j) {
    const double a = amplitude[j];
    double theta_x = 0.0;
    double a_pow = 1.0;
    for (double c : problem.functional.c) {
      theta_x += c * a_pow;
      a_pow *= a;
    }
    v[j] += problem.sigma * a * a + 0.5 * theta_x * theta_x;
  }
  return v;
}

namespace {

double amplitude_residual(const Grid& grid, const EigenProblem& problem, std::span<const double> a,
                          double omega) {
  const auto d2 = spectral::derivative(a, grid, 2);
  const auto veff = effective_potential(problem, a);
  double worst = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    worst = std::max(worst, std::abs(-0.5 * d2[j] + (veff[j] - omega) * a[j]));
  }
  return worst;
}

}  // namespace

EigenResult solve_self_consistent(const EigenProblem& problem, double tol, std::size_t max_iter, double mixing,
                                  bool compute_unshifted) {
  if (!problem.grid) throw ConfigError("eigen problem has no grid");
  const Grid& grid = *problem.grid;
  const std::size_t n = grid.size();
  if (problem.v.size() != n) throw ConfigError("eigen problem: potential length does not match grid");
  if (!(tol > 0.0)) throw ConfigError("solver.tol must be > 0");
  if (!(mixing > 0.0 && mixing <= 1.0)) throw ConfigError("solver.mixing must lie in (0, 1]");
  if (!(problem.target_norm > 0.0)) throw ConfigError("problem.target_norm must be > 0");
  const double scale = std::sqrt(problem.target_norm);

  EigenResult result;
  std::vector<double> zero(n, 0.0);
  Eigenpair pair = lowest_eigenpair(grid, effective_potential(problem, zero));
  std::vector<double> rho(n);
  for (std::size_t j = 0; j < n; ++j) rho[j] = problem.target_norm * pair.vector[j] * pair.vector[j];

  std::vector<double> a(n);
  std::vector<double> a_new(n);
  double previous = pair.value;
  for (std::size_t it = 1; it <= max_iter; ++it) {
    for (std::size_t j = 0; j < n; ++j) a[j] = std::sqrt(std::max(rho[j], 0.0));
    pair = lowest_eigenpair(grid, effective_potential(problem, a), pair.vector);
    for (std::size_t j = 0; j < n; ++j) a_new[j] = scale * pair.vector[j];
    const double residual = amplitude_residual(grid, problem, a_new, pair.value);
    result.residual_history.push_back(residual);
    result.iterations = it;
    result.residual = residual;
    if (std::abs(pair.value - previous) < tol && residual < 10.0 * tol) {
      result.omega = pair.value;
      result.amplitude = WaveField(problem.grid, std::vector<complex>(a_new.begin(), a_new.end()));
      if (compute_unshifted) result.omega_unshifted = lowest_eigenpair(grid, problem.v, pair.vector).value;
      return result;
    }
    previous = pair.value;
    for (std::size_t j = 0; j < n; ++j) rho[j] = (1.0 - mixing) * rho[j] + mixing * a_new[j] * a_new[j];
  }
  std::ostringstream msg;
  msg << "self-consistent iteration did not converge in " << max_iter << " iterations (residual "
      << result.residual << ")";
  throw ConvergenceError(msg.str(), result.residual);
}

}  // namespace ness
