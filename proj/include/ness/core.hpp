#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace ness {

using complex = std::complex<double>;

/// Uniform periodic 1D mesh on [x_min, x_max) with FFT-ordered wavenumbers.
///
/// Grid points are x_j = x_min + j*dx, j = 0..n-1; x_max itself is the periodic
/// image of x_min and is not stored.
class Grid {
 public:
  /// Throws ConfigError unless x_max > x_min and n_points is a power of two >= 16.
  Grid(double x_min, double x_max, std::size_t n_points);

  double x_min() const noexcept { return x_min_; }
  double x_max() const noexcept { return x_max_; }
  double length() const noexcept { return x_max_ - x_min_; }
  double dx() const noexcept { return dx_; }
  std::size_t size() const noexcept { return x_.size(); }

  std::span<const double> x() const noexcept { return x_; }
  double x(std::size_t j) const noexcept { return x_[j]; }
  /// Wavenumbers in FFT order: 0, 1, ..., n/2-1, -n/2, ..., -1 (times 2*pi/L).
  std::span<const double> k() const noexcept { return k_; }

  std::size_t nearest_index(double position) const noexcept;

  bool operator==(const Grid& other) const noexcept {
    return x_min_ == other.x_min_ && x_max_ == other.x_max_ && size() == other.size();
  }

 private:
  double x_min_;
  double x_max_;
  double dx_;
  std::vector<double> x_;
  std::vector<double> k_;
};

using GridPtr = std::shared_ptr<const Grid>;

GridPtr make_grid(double x_min, double x_max, std::size_t n_points);

struct WaveField {
  GridPtr grid;
  std::vector<complex> values;

  WaveField() = default;
  explicit WaveField(GridPtr g);
  WaveField(GridPtr g, std::vector<complex> v);

  std::size_t size() const noexcept { return values.size(); }
};

/// V(x) + i W(x) on a grid, plus the generating phase when the potential came
/// out of the gain-loss mapping.
struct ComplexPotential {
  GridPtr grid;
  std::vector<double> v;
  std::vector<double> w;
  std::optional<std::vector<double>> theta;

  ComplexPotential() = default;
  explicit ComplexPotential(GridPtr g);
};

/// Rectangle-rule norm sum |psi_j|^2 dx.
double norm(const WaveField& field);

std::vector<double> density(const WaveField& field);

}  // namespace ness
