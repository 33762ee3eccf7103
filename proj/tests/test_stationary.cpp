#include <doctest.h>

#include <cmath>
#include <numbers>

#include "ness/errors.hpp"
#include "ness/potentials.hpp"
#include "ness/stationary.hpp"

using namespace ness;

namespace {

std::vector<double> harmonic(const Grid& grid, double omega0) {
  std::vector<double> v(grid.size());
  for (std::size_t j = 0; j < v.size(); ++j) v[j] = 0.5 * omega0 * omega0 * grid.x(j) * grid.x(j);
  return v;
}

EigenProblem harmonic_problem(GridPtr grid, double sigma, std::vector<double> c = {}) {
  EigenProblem p;
  p.grid = grid;
  p.v = harmonic(*grid, 1.0);
  p.sigma = sigma;
  p.functional = PolynomialFunctional{std::move(c)};
  return p;
}

// Newton solve of the spectrally discretized problem
//   -1/2 D2 a + (x^2/2 + sigma a^2) a = mu a,  sum a^2 dx = 1
// with a dense Laplacian assembled from an explicit DFT, so it shares no code
// with the solver. Returns mu.
double newton_oracle(double half_width, std::size_t n, double sigma) {
  const double dx = 2.0 * half_width / n;
  std::vector<double> x(n);
  std::vector<double> k2(n);
  for (std::size_t j = 0; j < n; ++j) {
    x[j] = -half_width + j * dx;
    const long m = j < n / 2 ? static_cast<long>(j) : static_cast<long>(j) - static_cast<long>(n);
    const double k = 2.0 * std::numbers::pi * m / (2.0 * half_width);
    k2[j] = k * k;
  }
  // D2[a][b] = (1/n) sum_m -k_m^2 exp(2 pi i m (a - b) / n), real by symmetry.
  std::vector<double> d2(n * n);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b) {
      double s = 0.0;
      for (std::size_t m = 0; m < n; ++m)
        s -= k2[m] * std::cos(2.0 * std::numbers::pi * double((m * ((a + n - b) % n)) % n) / double(n));
      d2[a * n + b] = s / n;
    }

  std::vector<double> u(n);
  for (std::size_t j = 0; j < n; ++j) u[j] = std::pow(std::numbers::pi, -0.25) * std::exp(-0.5 * x[j] * x[j]);
  double mu = 0.5;
  const std::size_t m = n + 1;
  for (int it = 0; it < 50; ++it) {
    std::vector<double> jac(m * m, 0.0);
    std::vector<double> rhs(m, 0.0);
    double norm = 0.0;
    for (std::size_t a = 0; a < n; ++a) {
      double r = (0.5 * x[a] * x[a] + sigma * u[a] * u[a] - mu) * u[a];
      for (std::size_t b = 0; b < n; ++b) {
        r -= 0.5 * d2[a * n + b] * u[b];
        jac[a * m + b] = -0.5 * d2[a * n + b];
      }
      jac[a * m + a] += 0.5 * x[a] * x[a] + 3.0 * sigma * u[a] * u[a] - mu;
      jac[a * m + n] = -u[a];
      jac[n * m + a] = 2.0 * u[a] * dx;
      rhs[a] = -r;
      norm += u[a] * u[a] * dx;
    }
    rhs[n] = -(norm - 1.0);
    // Gaussian elimination with partial pivoting.
    for (std::size_t c = 0; c < m; ++c) {
      std::size_t pivot = c;
      for (std::size_t r = c + 1; r < m; ++r)
        if (std::abs(jac[r * m + c]) > std::abs(jac[pivot * m + c])) pivot = r;
      if (pivot != c) {
        for (std::size_t q = 0; q < m; ++q) std::swap(jac[c * m + q], jac[pivot * m + q]);
        std::swap(rhs[c], rhs[pivot]);
      }
      for (std::size_t r = c + 1; r < m; ++r) {
        const double f = jac[r * m + c] / jac[c * m + c];
        if (f == 0.0) continue;
        for (std::size_t q = c; q < m; ++q) jac[r * m + q] -= f * jac[c * m + q];
        rhs[r] -= f * rhs[c];
      }
    }
    std::vector<double> delta(m);
    for (std::size_t r = m; r-- > 0;) {
      double s = rhs[r];
      for (std::size_t q = r + 1; q < m; ++q) s -= jac[r * m + q] * delta[q];
      delta[r] = s / jac[r * m + r];
    }
    double step = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      u[j] += delta[j];
      step = std::max(step, std::abs(delta[j]));
    }
    mu += delta[n];
    if (step < 1e-14 && std::abs(delta[n]) < 1e-14) break;
  }
  return mu;
}

}  // namespace

TEST_CASE("linear harmonic problem reproduces the Gaussian ground state") {
  const auto grid = make_grid(-20.0, 20.0, 1024);
  const auto r = solve_self_consistent(harmonic_problem(grid, 0.0));
  CHECK(std::abs(r.omega - 0.5) < 1e-8);
  double worst = 0.0;
  for (std::size_t j = 0; j < grid->size(); ++j) {
    const double exact = std::pow(1.0 / std::numbers::pi, 0.25) * std::exp(-0.5 * grid->x(j) * grid->x(j));
    worst = std::max(worst, std::abs(r.amplitude.values[j].real() - exact));
  }
  CHECK(worst < 1e-8);
  CHECK(std::abs(norm(r.amplitude) - 1.0) < 1e-12);
}

TEST_CASE("constant coefficient C0 shifts omega by C0^2/2") {
  const auto grid = make_grid(-20.0, 20.0, 1024);
  const auto r = solve_self_consistent(harmonic_problem(grid, 0.0, {0.1}), 1e-10, 1000, 0.3, true);
  CHECK(std::abs(r.omega - 0.505) < 1e-8);
  REQUIRE(r.omega_unshifted.has_value());
  CHECK(std::abs(*r.omega_unshifted - 0.5) < 1e-8);
}

TEST_CASE("repulsive problem agrees with a dense Newton oracle") {
  const double half = 10.0;
  const std::size_t n = 128;
  const double reference = newton_oracle(half, n, 1.0);

  const auto r = solve_self_consistent(harmonic_problem(make_grid(-half, half, n), 1.0));
  CHECK(std::abs(r.omega - reference) < 1e-6);
  CHECK(r.omega > 0.5);
}

TEST_CASE("weak nonlinearity matches first-order perturbation theory") {
  const auto grid = make_grid(-20.0, 20.0, 1024);
  for (double sigma : {1e-3, -1e-3}) {
    CAPTURE(sigma);
    const auto r = solve_self_consistent(harmonic_problem(grid, sigma));
    const double first_order = 0.5 + sigma / std::sqrt(2.0 * std::numbers::pi);
    CHECK(std::abs(r.omega - first_order) < 10.0 * sigma * sigma);
  }
}

TEST_CASE("residual history decreases at the end of the iteration") {
  const auto r = solve_self_consistent(harmonic_problem(make_grid(-20.0, 20.0, 512), 1.0));
  REQUIRE(r.residual_history.size() >= 10);
  const auto& h = r.residual_history;
  for (std::size_t i = h.size() - 10; i + 1 < h.size(); ++i) CHECK(h[i + 1] <= h[i]);
  CHECK(r.residual < 1e-9);
}

TEST_CASE("mapped solution is a stationary state of the complex potential") {
  const auto grid = make_grid(-20.0, 20.0, 1024);
  const double sigma = 1.0;
  const std::vector<double> c{0.1, 0.05};
  const double tol = 1e-10;
  const auto r = solve_self_consistent(harmonic_problem(grid, sigma, c), tol);
  const auto mapped = map_from_functional(r.amplitude, PolynomialFunctional{c});

  ComplexPotential pot(grid);
  pot.v = harmonic(*grid, 1.0);
  pot.w = mapped.w;
  WaveField psi(grid);
  for (std::size_t j = 0; j < grid->size(); ++j)
    psi.values[j] = r.amplitude.values[j].real() * std::polar(1.0, mapped.theta[j]);
  CHECK(stationary_residual(psi, pot, r.omega, sigma) < 10.0 * tol);
}

TEST_CASE("solver failure modes") {
  const auto grid = make_grid(-20.0, 20.0, 512);
  CHECK_THROWS_AS(solve_self_consistent(harmonic_problem(grid, 1.0), 1e-10, 2), ConvergenceError);
  try {
    solve_self_consistent(harmonic_problem(grid, 1.0), 1e-10, 2);
  } catch (const ConvergenceError& e) {
    CHECK(e.last_residual() > 0.0);
  }

  auto p = harmonic_problem(grid, 0.0);
  CHECK_THROWS_AS(solve_self_consistent(p, 0.0), ConfigError);
  CHECK_THROWS_AS(solve_self_consistent(p, 1e-10, 100, 0.0), ConfigError);
  CHECK_THROWS_AS(solve_self_consistent(p, 1e-10, 100, 1.5), ConfigError);
  p.target_norm = -1.0;
  CHECK_THROWS_AS(solve_self_consistent(p), ConfigError);
  p = harmonic_problem(grid, 0.0);
  p.v.pop_back();
  CHECK_THROWS_AS(solve_self_consistent(p), ConfigError);
}

TEST_CASE("lowest_eigenpair of the harmonic oscillator") {
  const auto grid = make_grid(-20.0, 20.0, 512);
  const auto pair = lowest_eigenpair(*grid, harmonic(*grid, 2.0));
  CHECK(std::abs(pair.value - 1.0) < 1e-9);
  double s = 0.0;
  for (double a : pair.vector) s += a * a * grid->dx();
  CHECK(std::abs(s - 1.0) < 1e-12);
  CHECK(pair.vector[grid->nearest_index(0.0)] > 0.0);
}
