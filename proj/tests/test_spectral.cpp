#include <doctest.h>

#include <cmath>
#include <numbers>

#include "ness/spectral.hpp"

using namespace ness;

TEST_CASE("forward then backward transform is the identity") {
  spectral::Fft fft(64);
  std::vector<complex> data(64);
  for (std::size_t j = 0; j < data.size(); ++j) data[j] = {std::sin(0.3 * j), std::cos(1.7 * j)};
  const auto original = data;
  fft.forward(data);
  fft.backward(data);
  for (std::size_t j = 0; j < data.size(); ++j) CHECK(std::abs(data[j] - original[j]) < 1e-14);
}

TEST_CASE("aligned and unaligned buffers give the same transform") {
  spectral::Fft fft(32);
  spectral::AlignedComplexVector aligned(32);
  std::vector<complex> storage(33);
  std::span<complex> shifted(storage.data() + 1, 32);  // deliberately off the 64-byte boundary
  for (std::size_t j = 0; j < 32; ++j) aligned[j] = shifted[j] = {1.0 / (1.0 + j), 0.5 * j};
  fft.forward(aligned);
  fft.forward(shifted);
  for (std::size_t j = 0; j < 32; ++j) CHECK(std::abs(aligned[j] - shifted[j]) < 1e-13);
}

TEST_CASE("spectral derivative of a periodic function") {
  const auto grid = make_grid(0.0, 2.0 * std::numbers::pi, 64);
  std::vector<double> f(grid->size());
  for (std::size_t j = 0; j < f.size(); ++j) f[j] = std::sin(3.0 * grid->x(j));
  const auto d1 = spectral::derivative(std::span<const double>(f), *grid, 1);
  const auto d2 = spectral::derivative(std::span<const double>(f), *grid, 2);
  for (std::size_t j = 0; j < f.size(); ++j) {
    CHECK(d1[j] == doctest::Approx(3.0 * std::cos(3.0 * grid->x(j))).epsilon(1e-12).scale(1.0));
    CHECK(d2[j] == doctest::Approx(-9.0 * f[j]).epsilon(1e-12).scale(1.0));
  }
}

TEST_CASE("antiderivative integrates a constant plus a localized bump") {
  const auto grid = make_grid(-20.0, 20.0, 512);
  std::vector<double> g(grid->size());
  for (std::size_t j = 0; j < g.size(); ++j) g[j] = 0.25 + std::exp(-grid->x(j) * grid->x(j));
  const auto G = spectral::antiderivative(g, *grid, 0.0);
  for (std::size_t j = 0; j < g.size(); ++j) {
    const double x = grid->x(j);
    const double exact = 0.25 * x + 0.5 * std::sqrt(std::numbers::pi) * std::erf(x);
    CHECK(G[j] == doctest::Approx(exact).epsilon(1e-10).scale(1.0));
  }
}

TEST_CASE("cumulative trapezoid is exact for linear integrands") {
  const auto grid = make_grid(-4.0, 4.0, 64);
  std::vector<double> g(grid->size());
  for (std::size_t j = 0; j < g.size(); ++j) g[j] = 2.0 * grid->x(j) - 1.0;
  const auto G = spectral::cumulative_trapezoid(g, *grid, 0.0);
  for (std::size_t j = 0; j < g.size(); ++j) {
    const double x = grid->x(j);
    CHECK(G[j] == doctest::Approx(x * x - x).epsilon(1e-13).scale(1.0));
  }
}
