#include <doctest.h>

#include <cmath>
#include <numbers>

#include "ness/errors.hpp"
#include "ness/observables.hpp"
#include "ness/potentials.hpp"

using namespace ness;

namespace {

// dx = 1/32, so integers are grid points.
GridPtr default_grid() { return make_grid(-16.0, 16.0, 1024); }

// Residual of -psi''/2 + (V + iW) psi - omega psi for psi = exp(g) with
// g' = -omega0 x + i theta'(x), g'' = -omega0 + i theta''(x), evaluated
// analytically, divided by psi.
complex analytic_residual(double omega0, double x, double theta_x, double theta_xx, double v, double w,
                          double omega) {
  const complex g1(-omega0 * x, theta_x);
  const complex g2(-omega0, theta_xx);
  return -0.5 * (g2 + g1 * g1) + complex(v, w) - omega;
}

std::vector<double> unwrapped_phase(const WaveField& f) {
  std::vector<double> out(f.size());
  double offset = 0.0;
  for (std::size_t j = 0; j < f.size(); ++j) {
    const double raw = std::arg(f.values[j]);
    if (j > 0) {
      double jump = raw + offset - out[j - 1];
      while (jump > std::numbers::pi) {
        offset -= 2.0 * std::numbers::pi;
        jump -= 2.0 * std::numbers::pi;
      }
      while (jump < -std::numbers::pi) {
        offset += 2.0 * std::numbers::pi;
        jump += 2.0 * std::numbers::pi;
      }
    }
    out[j] = raw + offset;
  }
  return out;
}

}  // namespace

TEST_CASE("gaussian_ground_state peak values") {
  const auto grid = default_grid();
  const auto f = gaussian_ground_state(1.0, grid, 0.0);
  const auto j0 = grid->nearest_index(0.0);
  CHECK(f.values[j0].real() == doctest::Approx(0.7511255444649425).epsilon(1e-12));
  CHECK(std::norm(f.values[j0]) == doctest::Approx(0.5642).epsilon(1e-4));
  CHECK(peak_density(f) == doctest::Approx(1.0 / std::sqrt(std::numbers::pi)).epsilon(1e-14));
}

TEST_CASE("gaussian_ground_state displaced by x0 = 0.5") {
  const auto grid = default_grid();
  const auto f = gaussian_ground_state(1.0, grid, 0.5);
  CHECK(center_of_mass(f) == doctest::Approx(0.5).epsilon(1e-10));
  const auto j0 = grid->nearest_index(0.5);
  CHECK(std::abs(f.values[j0]) == doctest::Approx(std::pow(1.0 / std::numbers::pi, 0.25)).epsilon(1e-12));
}

TEST_CASE("gaussian_ground_state is unit-normalized for any omega0") {
  for (double omega0 : {0.25, 0.5, 1.0, 2.0, 4.0}) {
    CAPTURE(omega0);
    CHECK(std::abs(norm(gaussian_ground_state(omega0, default_grid())) - 1.0) < 1e-12);
  }
}

TEST_CASE("gaussian_ground_state rejects a domain that cuts the tail") {
  CHECK_THROWS_AS(gaussian_ground_state(0.5, make_grid(-5.0, 5.0, 256)), DomainError);
  CHECK_THROWS_AS(gaussian_ground_state(1.0, default_grid(), 15.0), DomainError);
  CHECK_THROWS_AS(gaussian_ground_state(0.0, default_grid()), ConfigError);
}

TEST_CASE("polynomial mapping with only C0 gives W = -C0 omega0 x") {
  const auto grid = default_grid();
  const auto a = gaussian_ground_state(1.0, grid);
  const auto mapped = map_from_functional(a, PolynomialFunctional{{1.0}});
  const auto j = grid->nearest_index(2.0);
  REQUIRE(grid->x(j) == 2.0);
  CHECK(std::abs(mapped.w[j] + 2.0) < 1e-8);
  for (std::size_t i = 0; i < grid->size(); ++i) {
    if (std::abs(grid->x(i)) > 6.0) continue;
    CHECK(std::abs(mapped.w[i] + grid->x(i)) < 1e-8);
    CHECK(std::abs(mapped.theta[i] - grid->x(i)) < 1e-8);
  }
}

TEST_CASE("polynomial mapping agrees with the PT-symmetric closed form") {
  const auto grid = default_grid();
  const double omega0 = 1.5;
  const double c0 = 0.3;
  const auto mapped = map_from_functional(gaussian_ground_state(omega0, grid), PolynomialFunctional{{c0}});
  const auto pt = pt_symmetric_trap(omega0, c0, grid);
  double worst_w = 0.0;
  double worst_theta = 0.0;
  for (std::size_t i = 0; i < grid->size(); ++i) {
    worst_theta = std::max(worst_theta, std::abs(mapped.theta[i] - (*pt.theta)[i]));
    if (std::abs(grid->x(i)) < 5.0) worst_w = std::max(worst_w, std::abs(mapped.w[i] - pt.w[i]));
  }
  CHECK(worst_w < 1e-8);
  CHECK(worst_theta < 1e-8);
}

TEST_CASE("derivative mapping agrees with the damped closed form") {
  const auto grid = default_grid();
  const DampedTrapParams params{1.0, -0.02, -0.02};
  const auto a = gaussian_ground_state(params.omega0, grid);
  const auto mapped = map_from_functional(a, DerivativeFunctional{params.a1, params.a2});
  const auto j0 = grid->nearest_index(0.0);
  CHECK(mapped.w[j0] == doctest::Approx(0.02).epsilon(1e-8));
  const auto closed = damped_trap(params, grid).potential;
  for (std::size_t i = 0; i < grid->size(); ++i) {
    if (std::abs(grid->x(i)) > 5.0) continue;
    CHECK(std::abs(mapped.w[i] - closed.w[i]) < 1e-8);
    CHECK(std::abs(mapped.theta[i] - (*closed.theta)[i]) < 1e-8);
  }
}

TEST_CASE("tail model replaces W where the amplitude underflows") {
  const auto grid = default_grid();
  const DampedTrapParams params{1.0, -0.1, -0.1};
  const auto a = gaussian_ground_state(params.omega0, grid);
  const auto closed = [params](double x) { return damped_trap_w(params, x); };
  const auto mapped = map_from_functional(a, DerivativeFunctional{params.a1, params.a2}, closed);
  CHECK(mapped.w.front() == doctest::Approx(closed(grid->x(0))));
  CHECK(mapped.w.back() == doctest::Approx(closed(grid->x(grid->size() - 1))));
  // Without a model the Gaussian tail is continued exactly.
  const auto continued = map_from_functional(a, DerivativeFunctional{params.a1, params.a2});
  for (std::size_t j = 0; j < grid->size(); ++j) {
    CHECK(std::isfinite(continued.w[j]));
    CHECK(std::abs(continued.w[j] - closed(grid->x(j))) < 1e-6 * (1.0 + grid->x(j) * grid->x(j)));
  }
}

TEST_CASE("all-zero functional maps to W = 0 and constant theta") {
  const auto grid = default_grid();
  const auto mapped = map_from_functional(gaussian_ground_state(1.0, grid), PolynomialFunctional{{0.0, 0.0}});
  for (std::size_t i = 0; i < grid->size(); ++i) {
    CHECK(mapped.w[i] == 0.0);
    CHECK(mapped.theta[i] == 0.0);
  }
  CHECK_THROWS_AS(validate(PolynomialFunctional{{0.0, 0.0}}), ConfigError);
  CHECK_THROWS_AS(validate(PolynomialFunctional{}), ConfigError);
  CHECK_THROWS_AS(validate(DerivativeFunctional{0.0, 0.0}), ConfigError);
  CHECK_NOTHROW(validate(PolynomialFunctional{{0.0, 0.1}}));
}

TEST_CASE("amplitude with an interior zero is a singular mapping") {
  const auto grid = default_grid();
  WaveField a(grid);
  for (std::size_t j = 0; j < grid->size(); ++j) {
    const double x = grid->x(j);
    a.values[j] = x * std::exp(-0.5 * x * x);  // first excited state, node at x = 0
  }
  CHECK_THROWS_AS(map_from_functional(a, PolynomialFunctional{{0.1}}), SingularMappingError);
  CHECK_THROWS_AS(map_from_functional(WaveField(grid), PolynomialFunctional{{0.1}}), SingularMappingError);
}

TEST_CASE("pt_symmetric_trap examples") {
  const auto grid = default_grid();
  const auto p = pt_symmetric_trap(1.0, 0.1, grid);
  const auto at = [&](double x) { return grid->nearest_index(x); };
  CHECK(p.w[at(1.0)] == doctest::Approx(-0.1).epsilon(1e-14));
  CHECK(p.w[at(-1.0)] == doctest::Approx(0.1).epsilon(1e-14));
  for (double w : pt_symmetric_trap(1.0, 0.0, grid).w) CHECK(w == 0.0);
  // Grid points are symmetric about 0 except x_min, whose mirror is x_max.
  const std::size_t n = grid->size();
  for (std::size_t j = 1; j < n; ++j) {
    CHECK(p.w[j] == -p.w[n - j]);
    CHECK(p.v[j] == p.v[n - j]);
  }
}

TEST_CASE("damped_trap examples") {
  const auto grid = default_grid();
  const DampedTrapParams fig1{1.0, -0.02, -0.02};
  CHECK(fig1.omega0_shifted_sq() == doctest::Approx(0.9984).epsilon(1e-14));
  const auto t1 = damped_trap(fig1, grid);
  CHECK(t1.omega == doctest::Approx(0.5008).epsilon(1e-14));
  const auto j0 = grid->nearest_index(0.0);
  const auto j1 = grid->nearest_index(1.0);
  // V(1) - V(0) = Omega0^2/2 + 0.0016.
  CHECK(t1.potential.v[j1] - t1.potential.v[j0] == doctest::Approx(0.5 * 0.9984 + 0.0016).epsilon(1e-13));

  const auto t0 = damped_trap({1.0, 0.0, 0.0}, grid);
  CHECK(t0.omega == 0.5);
  for (double w : t0.potential.w) CHECK(w == 0.0);

  const auto t2 = damped_trap({1.0, -0.1, -0.1}, grid);
  CHECK(t2.potential.w[j0] == doctest::Approx(0.1).epsilon(1e-14));
  // Quadratic coefficient from the second difference at x = 0.
  const double dx = grid->dx();
  const double curvature = (t2.potential.w[j0 + 1] - 2.0 * t2.potential.w[j0] + t2.potential.w[j0 - 1]) / (dx * dx);
  CHECK(0.5 * curvature == doctest::Approx(-0.2).epsilon(1e-9));

  CHECK_THROWS_AS(damped_trap({1.0, 0.0, 0.5}, grid), ConfigError);
  CHECK_THROWS_AS(damped_trap({-1.0, 0.0, 0.0}, grid), ConfigError);
}

TEST_CASE("damped family potentials solve the stationary equation analytically") {
  const auto grid = default_grid();
  for (DampedTrapParams p : {DampedTrapParams{1.0, -0.02, -0.02}, DampedTrapParams{1.0, -0.1, -0.1},
                             DampedTrapParams{1.7, 0.05, -0.2}}) {
    const auto trap = damped_trap(p, grid);
    for (std::size_t j = 0; j < grid->size(); j += 7) {
      const double x = grid->x(j);
      const double theta_x = 2.0 * p.a1 - 2.0 * p.a2 * p.omega0 * x;
      const double theta_xx = -2.0 * p.a2 * p.omega0;
      const auto r = analytic_residual(p.omega0, x, theta_x, theta_xx, trap.potential.v[j], trap.potential.w[j],
                                       trap.omega);
      CHECK(std::abs(r) < 1e-11 * (1.0 + x * x));
    }
  }
}

TEST_CASE("PT family potentials solve the stationary equation analytically") {
  const auto grid = default_grid();
  const double omega0 = 1.3;
  const double c0 = 0.25;
  const auto p = pt_symmetric_trap(omega0, c0, grid);
  for (std::size_t j = 0; j < grid->size(); j += 5) {
    const auto r = analytic_residual(omega0, grid->x(j), c0, 0.0, p.v[j], p.w[j], 0.5 * omega0 + 0.5 * c0 * c0);
    CHECK(std::abs(r) < 1e-12 * (1.0 + grid->x(j) * grid->x(j)));
  }
}

TEST_CASE("stationary_state phases") {
  const auto grid = default_grid();
  const auto pt = pt_stationary_state(1.0, 0.1, grid);
  const auto phase = unwrapped_phase(pt);
  for (std::size_t j = 1; j < grid->size(); ++j) {
    CHECK((phase[j] - phase[j - 1]) / grid->dx() == doctest::Approx(0.1).epsilon(1e-9));
  }

  for (const auto& z : stationary_state({1.0, 0.0, 0.0}, grid).values) CHECK(z.imag() == 0.0);

  const DampedTrapParams p{1.0, -0.02, -0.02};
  const auto damped = stationary_state(p, grid);
  const auto ph = unwrapped_phase(damped);
  const auto j0 = grid->nearest_index(0.0);
  double worst = 0.0;
  for (std::size_t j = 0; j < grid->size(); ++j) {
    const double x = grid->x(j);
    const double expected = 2.0 * p.a1 * x - p.a2 * x * x;
    worst = std::max(worst, std::abs((ph[j] - ph[j0]) - expected));
  }
  CHECK(worst < 1e-10);
}

TEST_CASE("exact stationary states have a small spectral residual") {
  const auto grid = default_grid();
  const DampedTrapParams p{1.0, -0.1, -0.1};
  const auto trap = damped_trap(p, grid);
  CHECK(stationary_residual(stationary_state(p, grid), trap.potential, trap.omega, 0.0) < 1e-6);
  const auto pt = pt_symmetric_trap(1.0, 0.1, grid);
  CHECK(stationary_residual(pt_stationary_state(1.0, 0.1, grid), pt, 0.5 + 0.005, 0.0) < 1e-6);
  CHECK(stationary_residual(pt_stationary_state(1.0, 0.1, grid), pt, 0.5, 0.0) > 1e-3);
}

TEST_CASE("absorb_into_real_potential subtracts c_n^2 A^(2n) / 2") {
  const auto grid = make_grid(-10.0, 10.0, 64);
  const auto a = gaussian_ground_state(1.0, grid);
  const std::vector<double> v(grid->size(), 1.0);
  const auto out = absorb_into_real_potential(v, a, 0.2, 2);
  for (std::size_t j = 0; j < grid->size(); ++j) {
    const double rho = std::norm(a.values[j]);
    CHECK(out[j] == doctest::Approx(1.0 - 0.02 * rho * rho).epsilon(1e-15));
  }
  CHECK_THROWS_AS(absorb_into_real_potential(v, a, 0.2, 0), ConfigError);
}
