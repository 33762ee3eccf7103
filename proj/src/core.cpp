#include "ness/core.hpp"

#include <bit>
#include <cmath>
#include <numbers>
#include <sstream>

#include "ness/errors.hpp"

namespace ness {

Grid::Grid(double x_min, double x_max, std::size_t n_points) : x_min_(x_min), x_max_(x_max) {
  if (!std::isfinite(x_min) || !std::isfinite(x_max) || !(x_max > x_min)) {
    std::ostringstream msg;
    msg << "degenerate grid interval [" << x_min << ", " << x_max << ")";
    throw ConfigError(msg.str());
  }
  if (n_points < 16 || !std::has_single_bit(n_points)) {
    throw ConfigError("grid n_points must be a power of two >= 16, got " + std::to_string(n_points));
  }
  dx_ = (x_max - x_min) / static_cast<double>(n_points);
  x_.resize(n_points);
  k_.resize(n_points);
  const double dk = 2.0 * std::numbers::pi / (x_max - x_min);
  const auto n = static_cast<std::ptrdiff_t>(n_points);
  for (std::ptrdiff_t j = 0; j < n; ++j) {
    x_[j] = x_min + static_cast<double>(j) * dx_;
    const std::ptrdiff_t m = j < n / 2 ? j : j - n;
    k_[j] = dk * static_cast<double>(m);
  }
}

std::size_t Grid::nearest_index(double position) const noexcept {
  const double r = std::round((position - x_min_) / dx_);
  if (r <= 0.0) return 0;
  if (r >= static_cast<double>(size() - 1)) return size() - 1;
  return static_cast<std::size_t>(r);
}

GridPtr make_grid(double x_min, double x_max, std::size_t n_points) {
  return std::make_shared<const Grid>(x_min, x_max, n_points);
}

WaveField::WaveField(GridPtr g) : grid(std::move(g)), values(grid->size()) {}

WaveField::WaveField(GridPtr g, std::vector<complex> v) : grid(std::move(g)), values(std::move(v)) {
  if (values.size() != grid->size()) throw ConfigError("wavefield length does not match grid");
}

ComplexPotential::ComplexPotential(GridPtr g)
    : grid(std::move(g)), v(grid->size(), 0.0), w(grid->size(), 0.0) {}

double norm(const WaveField& field) {
  // Neumaier summation: differences of successive norms feed the balance check.
  double sum = 0.0;
  double carry = 0.0;
  for (const auto& z : field.values) {
    const double term = std::norm(z);
    const double next = sum + term;
    carry += std::abs(sum) >= term ? (sum - next) + term : (term - next) + sum;
    sum = next;
  }
  return (sum + carry) * field.grid->dx();
}

std::vector<double> density(const WaveField& field) {
  std::vector<double> rho(field.size());
  for (std::size_t j = 0; j < rho.size(); ++j) rho[j] = std::norm(field.values[j]);
  return rho;
}

}  // namespace ness
